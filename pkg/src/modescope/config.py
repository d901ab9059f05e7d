"""Run configuration for the ``simulate`` command.

A configuration is a JSON object. Parsing is strict: unknown keys, wrong
types and out-of-range values raise :class:`~modescope.errors.ConfigError`
with the dotted path of the offending field. ``resolved()`` returns the
configuration with every default filled in; that form is echoed into run
metadata and parses back to an equal configuration.

Example::

    {
      "qubit": {"t2_s": 65e-6, "t1_s": null, "freq_hz": 5.0e9},
      "modes": [{"label": "B", "freq_hz": 7.24e9, "kappa_hz": 72.4e3, "chi_hz": 3e5}],
      "drive": {"epsilon_hz": 5e5},
      "grid": {"start_hz": 5e9, "stop_hz": 16e9, "step_hz": 5e6},
      "noise": {"readout_sigma": 0.0, "t2_jitter_rel": 0.0},
      "seed": 0
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .dephasing import Environment, Mode, environment_from_modes, power_to_amplitude
from .errors import ConfigError, DomainError
from .sweep import NoiseModel
from .units import TWO_PI, AngularFrequency


def _check_keys(obj: Any, path: str, required: set[str], optional: set[str]) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path or 'config'}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - required - optional)
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown key(s) {', '.join(unknown)}")
    missing = sorted(required - set(obj))
    if missing:
        raise ConfigError(f"{path or 'config'}: missing key(s) {', '.join(missing)}")
    return obj


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _number(obj: dict, key: str, path: str, *, default=None, positive=False, nonneg=False,
            allow_none=False) -> float | None:
    where = _join(path, key)
    value = obj.get(key, default)
    if value is None:
        if allow_none:
            return None
        raise ConfigError(f"{where}: value required")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where}: must be finite")
    if positive and value <= 0:
        raise ConfigError(f"{where}: must be positive, got {value!r}")
    if nonneg and value < 0:
        raise ConfigError(f"{where}: must be non-negative, got {value!r}")
    return value


def _item(value, where: str, **checks) -> float:
    return _number({where: value}, where, "", **checks)


def _integer(obj: dict, key: str, path: str, default=None, minimum=None) -> int | None:
    where = _join(path, key)
    value = obj.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}, got {value}")
    return value


@dataclass(frozen=True)
class QubitSpec:
    t2_s: float = 65e-6
    t1_s: float | None = None
    freq_hz: float = 0.0

    @classmethod
    def parse(cls, obj: Any, path: str = "qubit") -> "QubitSpec":
        obj = _check_keys(obj, path, set(), {"t2_s", "t1_s", "freq_hz"})
        return cls(
            _number(obj, "t2_s", path, default=65e-6, positive=True),
            _number(obj, "t1_s", path, positive=True, allow_none=True),
            _number(obj, "freq_hz", path, default=0.0, nonneg=True),
        )


@dataclass(frozen=True)
class ModeSpec:
    label: str
    freq_hz: float
    kappa_hz: float
    chi_hz: float

    @classmethod
    def parse(cls, obj: Any, path: str) -> "ModeSpec":
        obj = _check_keys(obj, path, {"label", "freq_hz", "chi_hz"}, {"kappa_hz", "q_factor"})
        if ("kappa_hz" in obj) == ("q_factor" in obj):
            raise ConfigError(f"{path}: give exactly one of kappa_hz or q_factor")
        label = obj["label"]
        if not isinstance(label, str) or not label:
            raise ConfigError(f"{_join(path, 'label')}: expected a non-empty string")
        freq = _number(obj, "freq_hz", path, positive=True)
        if "kappa_hz" in obj:
            kappa = _number(obj, "kappa_hz", path, positive=True)
        else:
            kappa = freq / _number(obj, "q_factor", path, positive=True)
        chi = _number(obj, "chi_hz", path)
        return cls(label, freq, kappa, chi)

    def to_mode(self) -> Mode:
        return Mode(
            AngularFrequency.from_hz(self.freq_hz),
            AngularFrequency.from_hz(self.kappa_hz),
            AngularFrequency.from_hz(self.chi_hz),
            self.label,
        )


@dataclass(frozen=True)
class DriveSpec:
    epsilon_hz: float | None = None
    power: float | None = None
    conversion_hz2: float | None = None
    asymmetry_w: float = 0.5

    @classmethod
    def parse(cls, obj: Any, path: str = "drive") -> "DriveSpec":
        obj = _check_keys(obj, path, set(), {"epsilon_hz", "power", "conversion_hz2", "asymmetry_w"})
        eps = _number(obj, "epsilon_hz", path, nonneg=True, allow_none=True)
        power = _number(obj, "power", path, nonneg=True, allow_none=True)
        conv = _number(obj, "conversion_hz2", path, nonneg=True, allow_none=True)
        if eps is None and (power is None or conv is None):
            raise ConfigError(f"{path}: give epsilon_hz, or both power and conversion_hz2")
        if eps is not None and (power is not None or conv is not None):
            raise ConfigError(f"{path}: epsilon_hz excludes power and conversion_hz2")
        w = _number(obj, "asymmetry_w", path, default=0.5)
        if not 0.0 <= w <= 1.0:
            raise ConfigError(f"{_join(path, 'asymmetry_w')}: must lie in [0, 1], got {w!r}")
        return cls(eps, power, conv, w)

    @property
    def epsilon_rf(self) -> float:
        """Drive amplitude in rad/s."""
        if self.epsilon_hz is not None:
            return float(AngularFrequency.from_hz(self.epsilon_hz))
        return power_to_amplitude(self.power, TWO_PI**2 * self.conversion_hz2)

    @property
    def epsilon_resolved_hz(self) -> float:
        if self.epsilon_hz is not None:
            return self.epsilon_hz
        return math.sqrt(self.conversion_hz2 * self.power)


@dataclass(frozen=True)
class GridSpec:
    start_hz: float | None = None
    stop_hz: float | None = None
    step_hz: float | None = None
    freqs_hz: tuple[float, ...] | None = None

    @classmethod
    def parse(cls, obj: Any, path: str = "grid") -> "GridSpec":
        obj = _check_keys(obj, path, set(), {"start_hz", "stop_hz", "step_hz", "freqs_hz"})
        if "freqs_hz" in obj:
            if set(obj) != {"freqs_hz"}:
                raise ConfigError(f"{path}: freqs_hz excludes start_hz/stop_hz/step_hz")
            raw = obj["freqs_hz"]
            if not isinstance(raw, list) or not raw:
                raise ConfigError(f"{path}.freqs_hz: expected a non-empty list")
            freqs = tuple(
                _item(v, f"{path}.freqs_hz[{k}]", positive=True) for k, v in enumerate(raw)
            )
            if any(b <= a for a, b in zip(freqs, freqs[1:])):
                raise ConfigError(f"{path}.freqs_hz: must be strictly increasing")
            return cls(freqs_hz=freqs)
        _check_keys(obj, path, {"start_hz", "stop_hz", "step_hz"}, set())
        start = _number(obj, "start_hz", path, positive=True)
        stop = _number(obj, "stop_hz", path, positive=True)
        step = _number(obj, "step_hz", path, positive=True)
        if stop < start:
            raise ConfigError(f"{path}: stop_hz must not be below start_hz")
        return cls(start, stop, step)

    def frequencies_hz(self) -> np.ndarray:
        if self.freqs_hz is not None:
            return np.array(self.freqs_hz, dtype=float)
        # integer point count avoids accumulating the step
        n = int(math.floor((self.stop_hz - self.start_hz) / self.step_hz * (1 + 1e-12))) + 1
        return self.start_hz + self.step_hz * np.arange(n, dtype=float)

    def to_dict(self) -> dict:
        if self.freqs_hz is not None:
            return {"freqs_hz": list(self.freqs_hz)}
        return {"start_hz": self.start_hz, "stop_hz": self.stop_hz, "step_hz": self.step_hz}


@dataclass(frozen=True)
class NoiseSpec:
    readout_sigma: float = 0.0
    t2_jitter_rel: float = 0.0

    @classmethod
    def parse(cls, obj: Any, path: str = "noise") -> "NoiseSpec":
        obj = _check_keys(obj, path, set(), {"readout_sigma", "t2_jitter_rel"})
        return cls(
            _number(obj, "readout_sigma", path, default=0.0, nonneg=True),
            _number(obj, "t2_jitter_rel", path, default=0.0, nonneg=True),
        )


@dataclass(frozen=True)
class PowerSweepSpec:
    mode: str
    powers: tuple[float, ...]
    conversion_hz2: float
    drive_freq_hz: float | None = None
    thermal_offset: float = 0.0
    out: str | None = None

    @classmethod
    def parse(cls, obj: Any, path: str = "power_sweep") -> "PowerSweepSpec":
        obj = _check_keys(
            obj, path, {"mode", "powers", "conversion_hz2"},
            {"drive_freq_hz", "thermal_offset", "out"},
        )
        if not isinstance(obj["mode"], str):
            raise ConfigError(f"{path}.mode: expected a mode label")
        raw = obj["powers"]
        if not isinstance(raw, list) or len(raw) < 2:
            raise ConfigError(f"{path}.powers: expected a list of at least two powers")
        powers = tuple(_item(v, f"{path}.powers[{k}]", nonneg=True) for k, v in enumerate(raw))
        out = obj.get("out")
        if out is not None and not isinstance(out, str):
            raise ConfigError(f"{path}.out: expected a path string")
        return cls(
            obj["mode"],
            powers,
            _number(obj, "conversion_hz2", path, positive=True),
            _number(obj, "drive_freq_hz", path, positive=True, allow_none=True),
            _number(obj, "thermal_offset", path, default=0.0, nonneg=True),
            out,
        )


@dataclass(frozen=True)
class OutputSpec:
    csv: str | None = None
    metadata: str | None = None

    @classmethod
    def parse(cls, obj: Any, path: str = "output") -> "OutputSpec":
        obj = _check_keys(obj, path, set(), {"csv", "metadata"})
        for key in ("csv", "metadata"):
            if obj.get(key) is not None and not isinstance(obj[key], str):
                raise ConfigError(f"{path}.{key}: expected a path string")
        return cls(obj.get("csv"), obj.get("metadata"))


_SWEEP_MODES = ("direct", "via_traces")


@dataclass(frozen=True)
class RunConfig:
    drive: DriveSpec
    grid: GridSpec
    qubit: QubitSpec = field(default_factory=QubitSpec)
    modes: tuple[ModeSpec, ...] = ()
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    sweep_mode: str = "direct"
    n_delays: int = 64
    workers: int | None = None
    power_sweep: PowerSweepSpec | None = None
    output: OutputSpec = field(default_factory=OutputSpec)

    @classmethod
    def from_dict(cls, obj: Any) -> "RunConfig":
        obj = _check_keys(
            obj, "", {"drive", "grid"},
            {"qubit", "modes", "noise", "seed", "sweep_mode", "n_delays", "workers", "power_sweep", "output"},
        )
        raw_modes = obj.get("modes", [])
        if not isinstance(raw_modes, list):
            raise ConfigError("modes: expected a list")
        modes = tuple(ModeSpec.parse(m, f"modes[{k}]") for k, m in enumerate(raw_modes))
        labels = [m.label for m in modes]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"modes: labels must be unique, got {labels}")
        sweep_mode = obj.get("sweep_mode", "direct")
        if sweep_mode not in _SWEEP_MODES:
            raise ConfigError(f"sweep_mode: expected one of {', '.join(_SWEEP_MODES)}, got {sweep_mode!r}")
        power = PowerSweepSpec.parse(obj["power_sweep"]) if obj.get("power_sweep") is not None else None
        if power is not None and power.mode not in labels:
            raise ConfigError(f"power_sweep.mode: no mode labelled {power.mode!r}")
        config = cls(
            drive=DriveSpec.parse(obj["drive"]),
            grid=GridSpec.parse(obj["grid"]),
            qubit=QubitSpec.parse(obj.get("qubit", {})),
            modes=modes,
            noise=NoiseSpec.parse(obj.get("noise", {})),
            seed=_integer(obj, "seed", "", default=0, minimum=0),
            sweep_mode=sweep_mode,
            n_delays=_integer(obj, "n_delays", "", default=64, minimum=8),
            workers=_integer(obj, "workers", "", minimum=1),
            power_sweep=power,
            output=OutputSpec.parse(obj.get("output", {})),
        )
        try:
            config.environment()
        except DomainError as exc:
            raise ConfigError(f"qubit/modes: {exc}") from None
        return config

    @classmethod
    def from_json_text(cls, text: str, source: str = "config") -> "RunConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        return cls.from_dict(obj)

    def resolved(self) -> dict:
        out = {
            "qubit": asdict(self.qubit),
            "modes": [asdict(m) for m in self.modes],
            "drive": {k: v for k, v in asdict(self.drive).items() if v is not None},
            "grid": self.grid.to_dict(),
            "noise": asdict(self.noise),
            "seed": self.seed,
            "sweep_mode": self.sweep_mode,
            "n_delays": self.n_delays,
            "workers": self.workers,
            "output": asdict(self.output),
        }
        if self.power_sweep is not None:
            ps = asdict(self.power_sweep)
            ps["powers"] = list(ps["powers"])
            out["power_sweep"] = ps
        return out

    def with_seed(self, seed: int) -> "RunConfig":
        return RunConfig(**{**self.__dict__, "seed": seed})

    def environment(self) -> Environment:
        return environment_from_modes(
            [m.to_mode() for m in self.modes],
            self.qubit.t2_s,
            self.qubit.t1_s,
            AngularFrequency.from_hz(self.qubit.freq_hz),
        )

    def noise_model(self) -> NoiseModel:
        return NoiseModel(self.noise.readout_sigma, self.noise.t2_jitter_rel, self.seed)

    def grid_angular(self) -> list[AngularFrequency]:
        return [AngularFrequency.from_hz(float(f)) for f in self.grid.frequencies_hz()]

"""Synthetic coherence-spectroscopy data.

Echo and Ramsey decay traces under a CW tone, T2 extraction from traces, and
full frequency sweeps of the dephasing rate. Every random draw comes from a
generator seeded by ``(seed, point index)``, so sweeps are reproducible and
may be evaluated in parallel without changing a single bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .dephasing import (
    Drive,
    Environment,
    Mode,
    mean_photon_number,
    power_to_amplitude,
    stark_shift,
    total_dephasing_rate,
)
from .errors import DomainError, ExtractionError
from .units import AngularFrequency
from .lm import FitProblem, FitResult, LMOptions, lm_minimize

UNRESOLVED_FACTOR = 10.0


@dataclass(frozen=True)
class NoiseModel:
    """Noise applied by the simulators.

    ``readout_sigma`` is additive Gaussian noise on each trace point.
    ``t2_jitter_rel`` is the relative scatter of each sweep point's rate in
    ``direct`` sweeps.
    """

    readout_sigma: float = 0.0
    t2_jitter_rel: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.readout_sigma < 0 or self.t2_jitter_rel < 0:
            raise DomainError("noise levels must be non-negative")

    def rng(self, index: int | None = None) -> np.random.Generator:
        if index is None:
            return np.random.default_rng(np.random.SeedSequence(self.seed))
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(index,)))


@dataclass
class Trace:
    delays: np.ndarray
    signal: np.ndarray
    kind: Literal["echo", "ramsey"] = "echo"
    ramsey_detuning: float = 0.0

    def __post_init__(self):
        self.delays = np.asarray(self.delays, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        if self.delays.shape != self.signal.shape or self.delays.ndim != 1:
            raise DomainError("delays and signal must be 1-D arrays of equal length")
        if self.delays.size > 1 and np.any(np.diff(self.delays) <= 0):
            raise DomainError("delays must be strictly increasing")
        if self.kind not in ("echo", "ramsey"):
            raise DomainError(f"unknown trace kind {self.kind!r}")


def _freq(value) -> float:
    # an AngularFrequency keeps its exact Hz value for file output
    return value if isinstance(value, AngularFrequency) else float(value)


@dataclass(frozen=True)
class SweepRecord:
    """One sweep point. ``drive_freq`` is angular (rad/s)."""

    drive_freq: float
    t2: float
    t2_err: float
    gamma2: float

    def __post_init__(self):
        if not self.t2 > 0:
            raise DomainError(f"t2 must be positive, got {self.t2!r}")
        if not self.t2_err >= 0:
            raise DomainError(f"t2_err must be >= 0, got {self.t2_err!r}")

    @classmethod
    def from_t2(cls, drive_freq: float, t2: float, t2_err: float = 0.0) -> "SweepRecord":
        return cls(_freq(drive_freq), float(t2), float(t2_err), 1.0 / float(t2))

    @classmethod
    def from_rate(cls, drive_freq: float, gamma2: float, gamma2_err: float = 0.0) -> "SweepRecord":
        t2 = 1.0 / float(gamma2)
        return cls(_freq(drive_freq), t2, float(gamma2_err) * t2 * t2, float(gamma2))

    @property
    def gamma2_err(self) -> float:
        return self.t2_err / (self.t2 * self.t2)


@dataclass
class T2Estimate:
    t2: float
    t2_err: float
    fringe_freq: float | None
    unresolved: bool
    fit: FitResult | None = field(default=None, repr=False)

    @property
    def lower_bound(self) -> float | None:
        """Lower bound on T2 reported for unresolved traces."""
        return self.t2 if self.unresolved else None


def _as_drive(drive: Drive) -> Drive:
    if np.ndim(drive.omega_d):
        raise DomainError("trace simulation takes a single drive frequency")
    return drive


def _check_delays(delays) -> np.ndarray:
    delays = np.asarray(delays, dtype=float)
    if delays.ndim != 1 or delays.size == 0:
        raise DomainError("delays must be a non-empty 1-D sequence")
    if np.any(np.diff(delays) <= 0):
        raise DomainError("delays must be strictly increasing")
    return delays


def simulate_echo_trace(
    env: Environment,
    drive: Drive,
    delays: Sequence[float],
    noise: NoiseModel | None = None,
    asymmetry_w: float = 0.5,
    rng: np.random.Generator | None = None,
) -> Trace:
    """Spin-echo signal ``exp(-Gamma2 * tau)`` plus readout noise.

    The echo refocuses the static Stark shift, so the trace does not oscillate.
    """
    noise = noise or NoiseModel()
    delays = _check_delays(delays)
    gamma = total_dephasing_rate(env, _as_drive(drive), asymmetry_w)
    signal = np.exp(-gamma * delays)
    if noise.readout_sigma > 0:
        rng = rng or noise.rng()
        signal = signal + rng.normal(0.0, noise.readout_sigma, size=delays.size)
    return Trace(delays, signal, "echo", 0.0)


def total_stark_shift(env: Environment, drive: Drive) -> float:
    return float(sum(stark_shift(mode, drive) for mode in env.modes))


def simulate_ramsey_trace(
    env: Environment,
    drive: Drive,
    delays: Sequence[float],
    fringe_detuning: float,
    noise: NoiseModel | None = None,
    asymmetry_w: float = 0.5,
    rng: np.random.Generator | None = None,
) -> Trace:
    """Ramsey signal ``exp(-Gamma2 tau) cos((fringe_detuning + shift) tau)``.

    ``shift`` is the summed Stark shift of all modes; near a mode it moves the
    fringe frequency sharply.
    """
    noise = noise or NoiseModel()
    delays = _check_delays(delays)
    drive = _as_drive(drive)
    gamma = total_dephasing_rate(env, drive, asymmetry_w)
    omega = fringe_detuning + total_stark_shift(env, drive)
    signal = np.exp(-gamma * delays) * np.cos(omega * delays)
    if noise.readout_sigma > 0:
        rng = rng or noise.rng()
        signal = signal + rng.normal(0.0, noise.readout_sigma, size=delays.size)
    return Trace(delays, signal, "ramsey", float(fringe_detuning))


# -- T2 extraction -------------------------------------------------------------


def _echo_guess(tau, s):
    amp = s[0] if s[0] != 0 else 1.0
    usable = (s / amp > 0.1) & (s / amp < 1.5)
    if np.count_nonzero(usable) >= 2:
        slope = np.polyfit(tau[usable], np.log(np.abs(s[usable] / amp)), 1)[0]
        rate = max(-slope, 0.0)
    else:
        rate = 1.0
    return np.array([amp, rate, 0.0])


def _ramsey_guess(tau, s):
    offset = float(np.mean(s))
    centred = s - offset
    n_fft = 16 * int(2 ** math.ceil(math.log2(len(s))))
    spacing = float(np.mean(np.diff(tau)))
    spectrum = np.fft.rfft(centred, n=n_fft)
    freqs = np.fft.rfftfreq(n_fft, d=spacing / (tau[-1] - tau[0]))
    k = int(np.argmax(np.abs(spectrum[1:]))) + 1
    omega = 2.0 * math.pi * freqs[k]
    # phase of the best single sinusoid at that frequency
    basis = np.column_stack([np.cos(omega * tau), -np.sin(omega * tau)])
    (c, d), *_ = np.linalg.lstsq(basis, centred, rcond=None)
    amp = math.hypot(c, d) or 1.0
    phase = math.atan2(d, c)
    return np.array([amp, 1.0, omega, phase, offset])


def extract_t2(trace: Trace, options: LMOptions | None = None) -> T2Estimate:
    """Fit a decay trace and return T2 with its standard error.

    Echo traces are fit to ``A exp(-tau/T2) + B``; Ramsey traces to
    ``A exp(-tau/T2) cos(w tau + phi) + B`` and ``w`` is reported as
    ``fringe_freq`` (rad/s). A T2 beyond ten times the longest delay is
    marked unresolved and reported as a lower bound.

    Raises
    ------
    DomainError
        Fewer than 8 points.
    ExtractionError
        The fit did not converge; carries the final residual norm.
    """
    tau = np.asarray(trace.delays, dtype=float)
    s = np.asarray(trace.signal, dtype=float)
    if tau.size < 8:
        raise DomainError("need at least 8 points to extract T2")
    # work in units of the trace span so every parameter is O(1)
    span = tau[-1] - tau[0]
    if span <= 0:
        raise DomainError("trace delays must span a positive interval")
    x = (tau - tau[0]) / span
    options = options or LMOptions()

    if trace.kind == "echo":
        def residual(p):
            return p[0] * np.exp(-p[1] * x) + p[2] - s

        p0 = _echo_guess(x, s)
        lower = [-np.inf, 0.0, -np.inf]
        upper = [np.inf, np.inf, np.inf]
    else:
        def residual(p):
            return p[0] * np.exp(-p[1] * x) * np.cos(p[2] * x + p[3]) + p[4] - s

        p0 = _ramsey_guess(x, s)
        lower = [-np.inf, 0.0, 0.0, -np.inf, -np.inf]
        upper = [np.inf] * 5

    result = lm_minimize(FitProblem(residual, p0, lower, upper, options, x_scale=np.ones(p0.size)))
    if not result.converged:
        raise ExtractionError(
            f"T2 fit did not converge: {result.message}", result.final_residual_norm
        )
    rate = result.params[1]
    rate_err = result.std_errors[1]
    # the model is anchored at tau[0]; the decay constant does not depend on it
    if rate * UNRESOLVED_FACTOR < span / tau[-1]:
        unresolved = True
        t2 = UNRESOLVED_FACTOR * tau[-1]
        t2_err = 0.0
    else:
        unresolved = False
        t2 = span / rate
        t2_err = span * rate_err / (rate * rate)
    fringe = float(result.params[2] / span) if trace.kind == "ramsey" else None
    return T2Estimate(float(t2), float(t2_err), fringe, unresolved, result)


# -- sweeps --------------------------------------------------------------------


def _check_grid(freq_grid) -> np.ndarray:
    grid = np.asarray(freq_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("freq_grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("freq_grid must be strictly increasing")
    return grid


def _map(func, n, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, range(n)))
    return [func(i) for i in range(n)]


def generate_rate_sweep(
    env: Environment,
    epsilon_rf: float,
    freq_grid: Sequence[float],
    asymmetry_w: float = 0.5,
    noise: NoiseModel | None = None,
    mode: Literal["direct", "via_traces"] = "direct",
    *,
    n_delays: int = 64,
    delay_span: float = 3.0,
    workers: int | None = None,
) -> list[SweepRecord]:
    """Dephasing rate versus CW drive frequency.

    ``direct`` evaluates the analytic rate and scatters it by
    ``noise.t2_jitter_rel`` (relative, in rate space); the reported
    ``t2_err`` is that scatter. ``via_traces`` simulates an echo trace per
    point, with ``n_delays`` delays out to ``delay_span`` expected decay times,
    adds ``noise.readout_sigma`` and re-extracts T2 by fitting.
    """
    noise = noise or NoiseModel()
    grid = _check_grid(freq_grid)
    labels = [_freq(f) for f in freq_grid]
    gamma = np.atleast_1d(total_dephasing_rate(env, Drive(grid, epsilon_rf), asymmetry_w))
    if np.any(gamma <= 0):
        raise DomainError("sweep needs a positive dephasing rate at every point")

    if mode == "direct":
        def point(i):
            g = gamma[i]
            if noise.t2_jitter_rel > 0:
                z = noise.rng(i).standard_normal()
                g_obs = g * max(1.0 + noise.t2_jitter_rel * z, 1e-3)
                return SweepRecord.from_rate(labels[i], g_obs, noise.t2_jitter_rel * g)
            return SweepRecord.from_rate(labels[i], g)
    elif mode == "via_traces":
        def point(i):
            t2_true = 1.0 / gamma[i]
            delays = np.linspace(0.0, delay_span * t2_true, n_delays)
            trace = simulate_echo_trace(
                env, Drive(grid[i], epsilon_rf), delays, noise, asymmetry_w, rng=noise.rng(i)
            )
            est = extract_t2(trace)
            return SweepRecord.from_t2(labels[i], est.t2, est.t2_err)
    else:
        raise DomainError(f"unknown sweep mode {mode!r}")

    return _map(point, grid.size, workers)


def ramsey_map(
    env: Environment,
    epsilon_rf: float,
    freq_grid: Sequence[float],
    delays: Sequence[float],
    fringe_detuning: float,
    noise: NoiseModel | None = None,
    asymmetry_w: float = 0.5,
    workers: int | None = None,
) -> np.ndarray:
    """Ramsey signal for every drive frequency, shape ``(len(freq_grid), len(delays))``."""
    noise = noise or NoiseModel()
    grid = _check_grid(freq_grid)

    def row(i):
        return simulate_ramsey_trace(
            env, Drive(grid[i], epsilon_rf), delays, fringe_detuning, noise, asymmetry_w,
            rng=noise.rng(i),
        ).signal

    return np.vstack(_map(row, grid.size, workers))


def power_sweep(
    mode: Mode,
    conversion: float,
    power_grid: Sequence[float],
    drive_freq: float,
    thermal_offset: float = 0.0,
) -> list[tuple[float, float]]:
    """Mean cavity photon number (branch average) versus applied power.

    ``thermal_offset`` adds a power-independent occupation, as a warm cavity
    would.
    """
    out = []
    for power in power_grid:
        eps = power_to_amplitude(float(power), conversion)
        n_bar = float(mean_photon_number(mode, Drive(drive_freq, eps))) + thermal_offset
        out.append((float(power), n_bar))
    return out

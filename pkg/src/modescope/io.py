"""CSV and JSON formats.

Frequencies in files are Hz. Floats are written with ``repr`` so parsing a
written file gives back the same bits.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .detect import CatalogEntry, DetectedFeature, ModeCatalog, ModeReport
from .fitting import PARAM_NAMES, ModeFit, ModeFitParams
from .sweep import SweepRecord, Trace
from .units import AngularFrequency, to_hz

SWEEP_COLUMNS = ("drive_freq_hz", "t2_s", "t2_err_s", "gamma2_per_s")
TRACE_COLUMNS = ("delay_s", "signal")
POWER_COLUMNS = ("power", "n_bar")
ORACLE_COLUMNS = ("t_s", "rho01_abs", "rho01_phase_rad", "n_photon")
CURVE_COLUMNS = ("kind", "drive_freq_hz", "gamma2_per_s")

# JSON names of the fit parameters, in PARAM_NAMES order
FIT_PARAM_KEYS = ("freq_hz", "kappa_hz", "chi_hz", "epsilon_hz", "asymmetry_w", "gamma2_baseline_per_s")
_HZ_PARAMS = (True, True, True, True, False, False)


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def fmt(x: float) -> str:
    return repr(float(x))


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(columns: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def _read_csv(path, columns: Sequence[str]) -> list[list[str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != tuple(columns):
            raise FormatError(f"{path}: expected columns {', '.join(columns)}, got {', '.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise FormatError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(row)}")
            rows.append(row)
    return rows


def _float(value: str, where: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise FormatError(f"{where}: not a number: {value!r}") from None


# -- sweeps, traces, power data -----------------------------------------------------


def sweep_csv_text(records: Sequence[SweepRecord]) -> str:
    return _csv_text(
        SWEEP_COLUMNS,
        ((fmt(to_hz(r.drive_freq)), fmt(r.t2), fmt(r.t2_err), fmt(r.gamma2)) for r in records),
    )


def write_sweep_csv(path, records: Sequence[SweepRecord]) -> None:
    atomic_write_text(path, sweep_csv_text(records))


def read_sweep_csv(path) -> list[SweepRecord]:
    out = []
    for k, row in enumerate(_read_csv(path, SWEEP_COLUMNS), start=2):
        where = f"{path}:{k}"
        hz, t2, t2_err, gamma2 = (_float(v, where) for v in row)
        try:
            out.append(SweepRecord(AngularFrequency.from_hz(hz), t2, t2_err, gamma2))
        except ValueError as exc:
            raise FormatError(f"{where}: {exc}") from None
    return out


def write_trace_csv(path, trace: Trace) -> None:
    atomic_write_text(
        path, _csv_text(TRACE_COLUMNS, ((fmt(d), fmt(s)) for d, s in zip(trace.delays, trace.signal)))
    )


def read_trace_csv(path, kind: str = "echo", ramsey_detuning: float = 0.0) -> Trace:
    rows = _read_csv(path, TRACE_COLUMNS)
    data = np.array([[_float(v, str(path)) for v in row] for row in rows], dtype=float).reshape(-1, 2)
    return Trace(data[:, 0], data[:, 1], kind, ramsey_detuning)


def write_power_csv(path, power_data: Sequence[tuple[float, float]]) -> None:
    atomic_write_text(path, _csv_text(POWER_COLUMNS, ((fmt(p), fmt(n)) for p, n in power_data)))


def read_power_csv(path) -> list[tuple[float, float]]:
    return [
        (_float(p, str(path)), _float(n, str(path))) for p, n in _read_csv(path, POWER_COLUMNS)
    ]


def oracle_csv_text(series) -> str:
    return _csv_text(
        ORACLE_COLUMNS,
        (
            (fmt(t), fmt(a), fmt(ph), fmt(n))
            for t, a, ph, n in zip(series.t, series.rho01_abs, series.rho01_phase, series.n_photon)
        ),
    )


# -- JSON ------------------------------------------------------------------------------


def _clean(value: Any) -> Any:
    """Make a structure JSON-safe: numpy scalars to Python, NaN/inf to None."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def json_text(obj: Any) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def write_json(path, obj: Any) -> None:
    atomic_write_text(path, json_text(obj))


def read_json(path) -> Any:
    with open(path) as fh:
        return json.load(fh)


def catalog_from_dict(data: dict) -> ModeCatalog:
    if not isinstance(data, dict) or set(data) - {"rel_tolerance", "entries"}:
        raise FormatError("catalog must be an object with keys rel_tolerance and entries")
    entries = []
    for k, item in enumerate(data.get("entries", [])):
        extra = set(item) - {"label", "freq_hz", "origin"}
        if extra or "label" not in item or "freq_hz" not in item:
            raise FormatError(f"entries[{k}]: need label and freq_hz, unknown keys {sorted(extra)}")
        entries.append(
            CatalogEntry(
                str(item["label"]),
                AngularFrequency.from_hz(float(item["freq_hz"])),
                item.get("origin", "designed"),
            )
        )
    return ModeCatalog(tuple(entries), float(data.get("rel_tolerance", 0.025)))


def catalog_to_dict(catalog: ModeCatalog) -> dict:
    return {
        "rel_tolerance": catalog.rel_tolerance,
        "entries": [
            {"label": e.label, "freq_hz": to_hz(e.frequency), "origin": e.origin} for e in catalog.entries
        ],
    }


def read_catalog(path) -> ModeCatalog:
    return catalog_from_dict(read_json(path))


def params_to_named(values: Sequence[float]) -> dict[str, float]:
    return {
        key: (to_hz(v) if hz else float(v))
        for key, v, hz in zip(FIT_PARAM_KEYS, values, _HZ_PARAMS)
    }


def params_from_named(named: dict) -> ModeFitParams:
    unknown = set(named) - set(FIT_PARAM_KEYS)
    missing = set(FIT_PARAM_KEYS[:4]) - set(named)
    if unknown or missing:
        raise FormatError(f"fit parameters: unknown {sorted(unknown)}, missing {sorted(missing)}")
    values = []
    for key, hz, default in zip(FIT_PARAM_KEYS, _HZ_PARAMS, (None, None, None, None, 0.5, 0.0)):
        v = float(named.get(key, default))
        values.append(AngularFrequency.from_hz(v) if hz else v)
    return ModeFitParams(*values)


def fit_to_dict(fit: ModeFit) -> dict:
    """Fit result in file form: named parameters with frequencies in Hz."""
    hz_scale = np.array([1.0 / (2.0 * math.pi) if hz else 1.0 for hz in _HZ_PARAMS])
    cov = fit.covariance * np.outer(hz_scale, hz_scale)
    return {
        "params": params_to_named(fit.params.as_array()),
        "std_errors": params_to_named(fit.std_errors.as_array()),
        "param_order": list(FIT_PARAM_KEYS),
        "covariance": cov.tolist(),
        "reduced_chi2": fit.reduced_chi2,
        "converged": fit.result.converged,
        "iterations": fit.result.iterations,
        "final_residual_norm": fit.result.final_residual_norm,
        "message": fit.result.message,
        "fixed": [FIT_PARAM_KEYS[PARAM_NAMES.index(n)] for n in fit.fixed],
        "warnings": list(fit.warnings),
        "sign_convention": fit.sign_convention,
        "window_hz": [to_hz(fit.window[0]), to_hz(fit.window[1])] if fit.window else None,
        "derived": {
            "q_factor": fit.q_factor,
            "q_factor_err": fit.q_factor_err,
            "n_bar_on_resonance": fit.params.n_bar_on_resonance,
        },
    }


def fit_failure_dict(result, message: str) -> dict:
    return {
        "converged": False,
        "message": message,
        "iterations": getattr(result, "iterations", None),
        "final_residual_norm": getattr(result, "final_residual_norm", None),
        "params_internal": getattr(result, "params", None),
    }


def feature_to_dict(feat: DetectedFeature) -> dict:
    return {
        "center_freq_hz": to_hz(feat.center_freq),
        "depth_per_s": feat.depth,
        "width_hz": to_hz(feat.width),
        "prominence_per_s": feat.prominence,
        "classification": feat.classification,
        "matched_label": feat.matched_label,
        "match_error_rel": feat.match_error_rel,
        "confirmed": feat.confirmed,
    }


def report_to_dict(report: ModeReport) -> dict:
    out = {
        "q_factor": report.q_factor,
        "q_factor_err": report.q_factor_err,
        "n_bar_on_resonance": report.n_bar_on_resonance,
        "occupancy_status": report.occupancy_status,
        "t0_kelvin": report.t0_kelvin,
        "t0_upper_bound_kelvin": report.t0_upper_bound_kelvin,
        "notes": list(report.notes),
        "power_fit": None,
    }
    if report.power_fit is not None:
        pf = report.power_fit
        out["power_fit"] = {
            "slope": pf.slope,
            "slope_err": pf.slope_err,
            "intercept": pf.intercept,
            "intercept_err": pf.intercept_err,
            "r_squared": pf.r_squared,
            "n_points": pf.n_points,
        }
    return out


def curve_csv_text(rows: Iterable[tuple[str, float, float]]) -> str:
    return _csv_text(CURVE_COLUMNS, ((kind, fmt(f), fmt(g)) for kind, f, g in rows))

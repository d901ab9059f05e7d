"""Command-line interface.

Subcommands::

    modescope simulate --config run.json --out sweep.csv
    modescope fit sweep.csv --window 7.2395e9:7.2405e9 [--guess g.json] --out fit.json
    modescope detect sweep.csv --catalog catalog.json --out detect.json
    modescope oracle --mode-kappa-hz 1e6 --mode-chi-hz 5e5 --epsilon-hz 2e5 \\
        --detuning-hz 0 --cutoff 20 --out series.csv
    modescope report fit.json [--power power.csv] --out report.json

Frequencies on the command line and in files are Hz. Exit codes: 0 success,
2 configuration error, 3 numerical failure, 4 I/O error. Outputs depend only
on inputs, configuration and seed; no timestamps or host details are written.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import io as mio
from .config import RunConfig
from .dephasing import (
    Drive,
    Mode,
    dephasing_rate_raw,
    mean_photon_number,
    measurement_dephasing_rate,
    stark_shift,
)
from .detect import ModeCatalog, classify, detect_features, mode_report
from .errors import (
    ConfigError,
    CutoffError,
    DomainError,
    ExtractionError,
    FitError,
    ModescopeError,
    NoFeatureError,
)
from .fitting import PARAM_NAMES, ModeFit, ModeFitParams, fit_single_mode, window_sweep
from .lm import FitResult
from .oracle import OracleConfig, evolve_dispersive, extract_rate, steady_photon_number
from .sweep import generate_rate_sweep, power_sweep
from .units import TWO_PI, AngularFrequency, to_hz

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

SEED_ENV = "MODESCOPE_SEED"
DETUNING_CONVENTION = "delta = omega_bare - omega_d"


class NumericFailure(ModescopeError):
    """Numerical failure after a diagnostics file has been written."""


def _sibling(path: str, suffix: str) -> str:
    p = Path(path)
    return str(p.with_name(p.stem + suffix))


def _read_text(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _read_json_config(path: str, what: str):
    import json

    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _header(command: str) -> dict:
    return {"toolkit": "modescope", "version": __version__, "command": command}


# -- simulate ------------------------------------------------------------------------


def _seed_override() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}: expected a non-negative integer, got {raw!r}") from None
    if seed < 0:
        raise ConfigError(f"{SEED_ENV}: expected a non-negative integer, got {raw!r}")
    return seed


def cmd_simulate(args: argparse.Namespace) -> int:
    config = RunConfig.from_json_text(_read_text(args.config), source=args.config)
    seed_source = "config"
    override = _seed_override()
    if override is not None:
        config = config.with_seed(override)
        seed_source = SEED_ENV
    out = args.out or config.output.csv
    if not out:
        raise ConfigError("output.csv: no output path in config and no --out given")
    meta_path = args.metadata or config.output.metadata or _sibling(out, ".meta.json")

    env = config.environment()
    grid = config.grid_angular()
    eps = config.drive.epsilon_rf
    records = generate_rate_sweep(
        env,
        eps,
        grid,
        config.drive.asymmetry_w,
        config.noise_model(),
        config.sweep_mode,
        n_delays=config.n_delays,
        workers=config.workers,
    )
    mio.write_sweep_csv(out, records)

    resolved = config.resolved()
    resolved["output"] = {"csv": out, "metadata": meta_path}
    k_min = int(np.argmin([r.t2 for r in records]))
    derived = {
        "epsilon_rf_hz": config.drive.epsilon_resolved_hz,
        "n_points": len(records),
        "min_t2_s": records[k_min].t2,
        "min_t2_drive_freq_hz": to_hz(records[k_min].drive_freq),
        "baseline_t2_s": config.qubit.t2_s,
        "detuning_convention": DETUNING_CONVENTION,
    }

    if config.power_sweep is not None:
        ps = config.power_sweep
        mode = next(m for m in env.modes if m.label == ps.mode)
        drive_freq = AngularFrequency.from_hz(ps.drive_freq_hz) if ps.drive_freq_hz else mode.omega_bare
        data = power_sweep(mode, TWO_PI**2 * ps.conversion_hz2, ps.powers, drive_freq, ps.thermal_offset)
        power_out = ps.out or _sibling(out, ".power.csv")
        mio.write_power_csv(power_out, data)
        resolved["power_sweep"]["out"] = power_out

    meta = _header("simulate")
    meta.update({"seed": config.seed, "seed_source": seed_source, "config": resolved, "derived": derived})
    mio.write_json(meta_path, meta)
    return EXIT_OK


# -- fit -----------------------------------------------------------------------------


def _parse_window(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"--window: expected <f_lo_hz>:<f_hi_hz>, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"--window: bounds must be numbers, got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and 0 < lo < hi):
        raise ConfigError(f"--window: need 0 < f_lo < f_hi, got {text!r}")
    return lo, hi


def _parse_fixed(items: Sequence[str]) -> dict[str, float]:
    fixed = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or name not in mio.FIT_PARAM_KEYS:
            raise ConfigError(
                f"--fix: expected NAME=VALUE with NAME in {', '.join(mio.FIT_PARAM_KEYS)}, got {item!r}"
            )
        try:
            v = float(value)
        except ValueError:
            raise ConfigError(f"--fix {name}: not a number: {value!r}") from None
        idx = mio.FIT_PARAM_KEYS.index(name)
        fixed[PARAM_NAMES[idx]] = float(AngularFrequency.from_hz(v)) if mio._HZ_PARAMS[idx] else v
    return fixed


def _load_guess(path: str) -> ModeFitParams:
    data = _read_json_config(path, "guess")
    named = data.get("params", data) if isinstance(data, dict) else data
    if not isinstance(named, dict):
        raise ConfigError(f"guess {path}: expected an object of named parameters")
    try:
        return mio.params_from_named(named)
    except (mio.FormatError, TypeError, ValueError) as exc:
        raise ConfigError(f"guess {path}: {exc}") from None


def cmd_fit(args: argparse.Namespace) -> int:
    lo, hi = _parse_window(args.window)
    fixed = _parse_fixed(args.fix)
    guess = _load_guess(args.guess) if args.guess else "auto"
    records = mio.read_sweep_csv(args.csv)
    window = window_sweep(records, TWO_PI * lo, TWO_PI * hi)
    weighted = False if args.unweighted else None
    try:
        if len(window) < len(PARAM_NAMES):
            raise NoFeatureError(f"window holds {len(window)} points; a fit needs at least {len(PARAM_NAMES)}")
        fit = fit_single_mode(window, guess, fixed=fixed, weighted=weighted)
    except NoFeatureError as exc:
        diag = _header("fit")
        diag.update({"converged": False, "error": "no feature", "message": str(exc), "window_hz": [lo, hi]})
        mio.write_json(args.out, diag)
        raise NumericFailure(f"no feature: {exc}") from None
    except FitError as exc:
        diag = _header("fit")
        diag.update(mio.fit_failure_dict(exc.result, str(exc)))
        diag["window_hz"] = [lo, hi]
        mio.write_json(args.out, diag)
        raise NumericFailure(str(exc)) from None
    out = _header("fit")
    out.update(mio.fit_to_dict(fit))
    out["source_points"] = len(window)
    mio.write_json(args.out, out)
    return EXIT_OK


# -- detect --------------------------------------------------------------------------


def _parse_qubits(items: Sequence[str]) -> dict[str, float]:
    qubits = {}
    for k, item in enumerate(items or ()):
        label, sep, value = item.rpartition("=")
        label = label if sep else f"qubit{k}"
        try:
            qubits[label] = float(AngularFrequency.from_hz(float(value)))
        except ValueError:
            raise ConfigError(f"--qubit-freq-hz: expected [LABEL=]HZ, got {item!r}") from None
    return qubits


def _parse_power_files(items: Sequence[str]) -> dict[str, str]:
    out = {}
    for item in items or ():
        label, sep, path = item.partition("=")
        if not sep or not label or not path:
            raise ConfigError(f"--power: expected LABEL=CSV, got {item!r}")
        out[label] = path
    return out


def _fit_block(records, feature, half_width_hz: float, power_data) -> dict:
    center = to_hz(feature.center_freq)
    lo, hi = center - half_width_hz, center + half_width_hz
    window = window_sweep(records, TWO_PI * lo, TWO_PI * hi)
    block = {"window_hz": [lo, hi]}
    try:
        fit = fit_single_mode(window)
    except (FitError, NoFeatureError, DomainError) as exc:
        block["error"] = str(exc)
        return block
    block["fit"] = mio.fit_to_dict(fit)
    block["report"] = mio.report_to_dict(mode_report(fit, power_data))
    return block


def cmd_detect(args: argparse.Namespace) -> int:
    try:
        catalog = mio.catalog_from_dict(_read_json_config(args.catalog, "catalog"))
    except (mio.FormatError, DomainError, TypeError, ValueError) as exc:
        raise ConfigError(f"catalog {args.catalog}: {exc}") from None
    qubits = _parse_qubits(args.qubit_freq_hz)
    power_files = _parse_power_files(args.power)
    records = mio.read_sweep_csv(args.csv)
    features = detect_features(
        records,
        args.min_prominence,
        TWO_PI * args.min_separation_hz,
        include_unconfirmed=args.include_unconfirmed,
    )
    features = classify(features, catalog, qubits)

    modes = []
    if args.fit_window_hz:
        for feat in features:
            label = feat.matched_label
            power = mio.read_power_csv(power_files[label]) if label in power_files else None
            block = {"center_freq_hz": to_hz(feat.center_freq), "label": label,
                     "classification": feat.classification}
            block.update(_fit_block(records, feat, 0.5 * args.fit_window_hz, power))
            modes.append(block)

    out = _header("detect")
    out.update({
        "n_features": len(features),
        "features": [mio.feature_to_dict(f) for f in features],
        "modes": modes,
        "catalog": mio.catalog_to_dict(catalog),
        "qubit_freqs_hz": {k: to_hz(v) for k, v in qubits.items()},
        "settings": {
            "min_prominence_per_s": args.min_prominence,
            "min_separation_hz": args.min_separation_hz,
            "include_unconfirmed": args.include_unconfirmed,
            "fit_window_hz": args.fit_window_hz,
        },
    })
    mio.write_json(args.out, out)
    return EXIT_OK


# -- oracle --------------------------------------------------------------------------


def cmd_oracle(args: argparse.Namespace) -> int:
    try:
        mode = Mode(
            AngularFrequency.from_hz(args.mode_freq_hz),
            AngularFrequency.from_hz(args.mode_kappa_hz),
            AngularFrequency.from_hz(args.mode_chi_hz),
            "oracle",
        )
        drive = Drive(
            AngularFrequency.from_hz(args.mode_freq_hz - args.detuning_hz),
            AngularFrequency.from_hz(args.epsilon_hz),
        )
        config = OracleConfig.for_mode(
            mode, drive, fock_cutoff=args.cutoff, kappa_times=args.kappa_times,
            transient_fraction=args.transient_fraction, n_samples=args.samples,
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    series = evolve_dispersive(mode, drive, config, backend=args.backend)
    mio.atomic_write_text(args.out, mio.oracle_csv_text(series))

    gamma, shift = extract_rate(series, config.transient_fraction)
    analytic = float(measurement_dephasing_rate(mode, drive, 0.5))
    n_sim = steady_photon_number(series)
    n_analytic = float(mean_photon_number(mode, drive))
    compare = _header("oracle")
    compare.update({
        "inputs": {
            "mode_freq_hz": args.mode_freq_hz,
            "mode_kappa_hz": args.mode_kappa_hz,
            "mode_chi_hz": args.mode_chi_hz,
            "epsilon_hz": args.epsilon_hz,
            "detuning_hz": args.detuning_hz,
            "detuning_convention": DETUNING_CONVENTION,
            "cutoff": args.cutoff,
        },
        "integration": {
            "dt_s": config.dt,
            "t_max_s": config.t_max,
            "transient_fraction": config.transient_fraction,
            "n_samples": config.n_samples,
        },
        "gamma_m_analytic_per_s": analytic,
        "gamma_extracted_per_s": gamma,
        "gamma_relative_deviation": (gamma - analytic) / analytic if analytic > 0 else None,
        "gamma_absolute_deviation_per_s": gamma - analytic,
        "freq_shift_analytic_rad_s": float(stark_shift(mode, drive)),
        "freq_shift_extracted_rad_s": shift,
        "n_photon_analytic": n_analytic,
        "n_photon_extracted": n_sim,
        "n_photon_relative_deviation": (n_sim - n_analytic) / n_analytic if n_analytic > 0 else None,
        "max_top_level_population": float(np.max(series.top_population)),
        "max_trace_error": float(np.max(np.abs(series.trace - 1.0))),
    })
    mio.write_json(args.compare_out or _sibling(args.out, ".compare.json"), compare)
    return EXIT_OK


# -- report --------------------------------------------------------------------------


def _fit_from_dict(data: dict, source: str) -> ModeFit:
    required = {"params", "std_errors", "covariance", "converged"}
    if not isinstance(data, dict) or not required <= set(data):
        if isinstance(data, dict) and data.get("converged") is False:
            raise NumericFailure(f"{source}: fit did not converge ({data.get('message', '')})")
        raise ConfigError(f"{source}: not a fit result (need keys {', '.join(sorted(required))})")
    if not data["converged"]:
        raise NumericFailure(f"{source}: fit did not converge")
    try:
        params = mio.params_from_named(data["params"])
        std = mio.params_from_named(data["std_errors"])
        cov = np.asarray(data["covariance"], dtype=float)
    except (mio.FormatError, TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if cov.shape != (len(PARAM_NAMES), len(PARAM_NAMES)):
        raise ConfigError(f"{source}: covariance must be {len(PARAM_NAMES)}x{len(PARAM_NAMES)}")
    scale = np.array([TWO_PI if hz else 1.0 for hz in mio._HZ_PARAMS])
    cov = cov * np.outer(scale, scale)
    result = FitResult(
        params=params.as_array(),
        covariance=cov,
        std_errors=std.as_array(),
        reduced_chi2=float(data.get("reduced_chi2") or float("nan")),
        iterations=int(data.get("iterations") or 0),
        converged=True,
        final_residual_norm=float(data.get("final_residual_norm") or 0.0),
        message=str(data.get("message", "")),
    )
    window = data.get("window_hz")
    window = (TWO_PI * window[0], TWO_PI * window[1]) if window else None
    return ModeFit(params, std, cov, result, window=window)


def _curve_rows(fit: ModeFit, n_points: int, records) -> list[tuple[str, float, float]]:
    p = fit.params
    if fit.window is not None:
        lo, hi = fit.window
    else:
        half = 10.0 * (p.kappa + abs(p.chi))
        lo, hi = p.omega_bare - half, p.omega_bare + half
    grid_hz = np.linspace(to_hz(lo), to_hz(hi), n_points)
    model = p.gamma2_baseline + dephasing_rate_raw(
        TWO_PI * grid_hz, p.omega_bare, p.kappa, p.chi, p.epsilon_rf, p.asymmetry_w
    )
    rows = [("model", float(f), float(g)) for f, g in zip(grid_hz, model)]
    rows += [("data", to_hz(r.drive_freq), r.gamma2) for r in records if lo <= r.drive_freq <= hi]
    return rows


def cmd_report(args: argparse.Namespace) -> int:
    if args.points < 2:
        raise ConfigError("--points: need at least 2")
    fit = _fit_from_dict(mio.read_json(args.fit_json), args.fit_json)
    power = mio.read_power_csv(args.power) if args.power else None
    records = mio.read_sweep_csv(args.sweep) if args.sweep else []
    report = mode_report(fit, power)
    curve_path = args.curve_out or _sibling(args.out, ".curve.csv")
    mio.atomic_write_text(curve_path, mio.curve_csv_text(_curve_rows(fit, args.points, records)))
    out = _header("report")
    out.update({
        "params": mio.params_to_named(fit.params.as_array()),
        "mode": mio.report_to_dict(report),
        "curve_csv": curve_path,
    })
    mio.write_json(args.out, out)
    return EXIT_OK


# -- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modescope", description="Coherence spectroscopy of qubit environments.")
    parser.add_argument("--version", action="version", version=f"modescope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthetic dephasing-rate sweep from a run config")
    p.add_argument("--config", required=True, help="run configuration JSON")
    p.add_argument("--out", help="sweep CSV (overrides output.csv)")
    p.add_argument("--metadata", help="metadata JSON (default <out>.meta.json)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit one windowed feature")
    p.add_argument("csv", help="sweep CSV")
    p.add_argument("--window", required=True, help="<f_lo_hz>:<f_hi_hz>")
    p.add_argument("--guess", help="JSON of named starting parameters")
    p.add_argument("--fix", action="append", metavar="NAME=VALUE", help="hold a parameter fixed (Hz units)")
    p.add_argument("--unweighted", action="store_true", help="ignore t2_err when weighting residuals")
    p.add_argument("--out", required=True, help="fit result JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("detect", help="detect and classify features in a full sweep")
    p.add_argument("csv", help="sweep CSV")
    p.add_argument("--catalog", required=True, help="mode catalog JSON")
    p.add_argument("--qubit-freq-hz", action="append", metavar="[LABEL=]HZ", help="qubit frequency for neighbor matching")
    p.add_argument("--min-prominence", type=float, default=None, help="threshold in 1/s (default from noise)")
    p.add_argument("--min-separation-hz", type=float, default=0.0)
    p.add_argument("--include-unconfirmed", action="store_true", help="also list sub-threshold excursions")
    p.add_argument("--fit-window-hz", type=float, default=None, help="fit each feature over this window width")
    p.add_argument("--power", action="append", metavar="LABEL=CSV", help="power data for a matched mode")
    p.add_argument("--out", required=True, help="detection report JSON")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("oracle", help="master-equation check of the analytic dephasing rate")
    p.add_argument("--mode-kappa-hz", type=float, required=True)
    p.add_argument("--mode-chi-hz", type=float, required=True)
    p.add_argument("--epsilon-hz", type=float, required=True)
    p.add_argument("--detuning-hz", type=float, default=0.0, help="cavity minus drive frequency")
    p.add_argument("--mode-freq-hz", type=float, default=7.0e9, help="bare cavity frequency (sets the frame only)")
    p.add_argument("--cutoff", type=int, default=20, help="Fock levels kept")
    p.add_argument("--kappa-times", type=float, default=40.0, help="run length in units of 1/kappa")
    p.add_argument("--transient-fraction", type=float, default=0.3)
    p.add_argument("--samples", type=int, default=1000, help="minimum number of saved time points")
    p.add_argument("--backend", choices=("cython", "python"), default=None)
    p.add_argument("--out", required=True, help="time-series CSV")
    p.add_argument("--compare-out", help="comparison JSON (default <out>.compare.json)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="mode report and plot-ready curve from a fit")
    p.add_argument("fit_json", help="fit result JSON")
    p.add_argument("--power", help="power CSV (power, n_bar)")
    p.add_argument("--sweep", help="sweep CSV whose points are added to the curve export")
    p.add_argument("--points", type=int, default=2001, help="model samples in the curve export")
    p.add_argument("--curve-out", help="curve CSV (default <out>.curve.csv)")
    p.add_argument("--out", required=True, help="report JSON")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which is also the config-error code
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, FitError, NoFeatureError, CutoffError, ExtractionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except mio.FormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

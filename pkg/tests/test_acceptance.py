"""Acceptance criteria, one test each.

Every test prints a single ``PASS criterion N: ...`` or ``FAIL criterion N: ...``
line, and the lines are repeated together in the terminal summary.
Run directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import constants

from conftest import BASELINE_T2, BUS_CHI_HZ, BUS_HZ, BUS_KAPPA_HZ, bus_mode, bus_sweep
from modescope.dephasing import (
    Drive,
    Mode,
    dephasing_rate_raw,
    dephasing_spectral_density,
    environment_from_modes,
    measurement_dephasing_rate,
)
from modescope.detect import (
    CatalogEntry,
    DetectedFeature,
    ModeCatalog,
    classify,
    detect_features,
    linear_regression,
    mode_report,
)
from modescope.fitting import PARAM_NAMES, ModeFitParams, fit_single_mode
from modescope.oracle import OracleConfig, evolve_dispersive, extract_rate, steady_photon_number
from modescope.sweep import NoiseModel, generate_rate_sweep, power_sweep
from modescope.units import TWO_PI, ghz

RESULTS: dict[int, str] = {}


def report(capsys, number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    RESULTS[number] = line
    with capsys.disabled():
        print(f"\n{line}")
    assert ok, line


# -- 1, 2: master-equation oracle -----------------------------------------------

KAPPA = TWO_PI * 1e6
CHI = TWO_PI * 0.5e6
EPS = TWO_PI * 0.2e6
W0 = ghz(7.0)


def test_criterion_1_oracle_matches_analytic_rate(capsys):
    start = time.perf_counter()
    deviations = []
    for k in (-2, -1, 0, 1, 2):
        mode = Mode(W0, KAPPA, CHI)
        drive = Drive(W0 - k * CHI, EPS)
        cfg = OracleConfig.for_mode(mode, drive, fock_cutoff=20)
        gamma, _ = extract_rate(evolve_dispersive(mode, drive, cfg), cfg.transient_fraction)
        analytic = measurement_dephasing_rate(mode, drive, 0.5)
        deviations.append(abs(gamma - analytic) / analytic)
    elapsed = time.perf_counter() - start
    worst = max(deviations)
    report(capsys, 1, worst <= 0.05 and elapsed < 120.0,
           f"oracle vs analytic rate at 5 detunings, worst {worst:.2%} (limit 5%), cutoff 20, {elapsed:.1f} s")


def test_criterion_2_photon_number_without_shift(capsys):
    deviations = []
    for delta in (0.0, 0.5 * KAPPA, -1.5 * KAPPA):
        mode = Mode(W0, KAPPA, 0.0)
        drive = Drive(W0 - delta, EPS)
        n = steady_photon_number(evolve_dispersive(mode, drive, OracleConfig.for_mode(mode, drive)))
        expected = EPS**2 / (KAPPA**2 / 4 + delta**2)
        deviations.append(abs(n - expected) / expected)
    worst = max(deviations)
    report(capsys, 2, worst <= 0.01, f"chi=0 photon number at 3 detunings, worst {worst:.3%} (limit 1%)")


# -- 3, 4: fitting -----------------------------------------------------------------

# 350 kHz drive puts T2 below 1 us at the bare frequency as well as at the peaks
FIT_EPS_HZ = 350e3
FIT_TRUTH = ModeFitParams(
    omega_bare=TWO_PI * BUS_HZ,
    kappa=TWO_PI * BUS_KAPPA_HZ,
    chi=TWO_PI * BUS_CHI_HZ,
    epsilon_rf=TWO_PI * FIT_EPS_HZ,
    asymmetry_w=0.5,
    gamma2_baseline=1 / BASELINE_T2,
)


def test_criterion_3_fit_round_trip(capsys):
    sweep = bus_sweep(w=0.5, eps_hz=FIT_EPS_HZ)
    center = min(sweep, key=lambda r: abs(r.drive_freq - FIT_TRUTH.omega_bare))
    fit = fit_single_mode(sweep)
    rel = np.abs(fit.params.as_array() / FIT_TRUTH.as_array() - 1)
    q_err = abs(fit.q_factor / 1e5 - 1)
    ok = fit.result.converged and center.t2 < 1e-6 and rel.max() <= 1e-3 and q_err <= 1e-3
    report(capsys, 3, ok,
           f"noiseless fit, worst parameter error {rel.max():.1e} (limit 1e-3), Q = {fit.q_factor:.1f}, "
           f"on-resonance T2 {center.t2 * 1e6:.2f} us")


def test_criterion_4_noise_coverage(capsys):
    inside = np.zeros(len(PARAM_NAMES), dtype=int)
    for seed in range(100):
        fit = fit_single_mode(bus_sweep(w=0.5, eps_hz=FIT_EPS_HZ, jitter=0.02, seed=seed))
        err = np.abs(fit.params.as_array() - FIT_TRUTH.as_array())
        inside += err <= 3 * fit.std_errors.as_array()
    counts = ", ".join(f"{n}={c}" for n, c in zip(PARAM_NAMES, inside))
    report(capsys, 4, bool(np.all(inside >= 95)), f"3-sigma coverage over 100 seeds at 2% noise: {counts}")


# -- 5: linearity and temperature ---------------------------------------------------


def test_criterion_5_linearity_and_temperature(capsys):
    mode = bus_mode()
    conversion = TWO_PI**2 * 1e10
    powers = np.linspace(0.0, 2.0, 21)
    data = power_sweep(mode, conversion, powers, mode.omega_bare, thermal_offset=0.05)
    line = linear_regression(*zip(*data))
    fit = fit_single_mode(bus_sweep(w=0.5, eps_hz=FIT_EPS_HZ))
    rep = mode_report(fit, data)
    omega = fit.params.omega_bare
    # direct Bose-Einstein inversion, independent of the package
    t_direct = constants.hbar * omega / (constants.k * math.log1p(1 / line.intercept))
    t_exact = constants.hbar * mode.omega_bare / (constants.k * math.log1p(1 / 0.05))
    ok = (
        line.r_squared >= 1 - 1e-12
        and abs(line.intercept / 0.05 - 1) <= 1e-3
        and rep.t0_kelvin is not None
        and abs(rep.t0_kelvin / t_direct - 1) <= 1e-3
        and abs(rep.t0_kelvin / t_exact - 1) <= 1e-3
    )
    report(capsys, 5, ok,
           f"R^2 = 1 - {1 - line.r_squared:.1e}, intercept {line.intercept:.6f} (injected 0.05), "
           f"T0 = {rep.t0_kelvin * 1e3:.4f} mK vs direct {t_direct * 1e3:.4f} mK")


# -- 6, 7: detection and classification -----------------------------------------------

GRID = TWO_PI * (5e9 + 5e6 * np.arange(2201))


def test_criterion_6_planar_spectrum(capsys):
    modes = [
        Mode(ghz(6.4), TWO_PI * 512e3, TWO_PI * 1e6, "R1"),
        Mode(ghz(7.24), TWO_PI * 72.4e3, TWO_PI * 300e3, "B"),
        Mode(ghz(12.8), TWO_PI * 1024e3, TWO_PI * 500e3, "R1x2"),
    ]
    env = environment_from_modes(modes, t2=BASELINE_T2)
    sweep = generate_rate_sweep(env, TWO_PI * 0.5e6, GRID, noise=NoiseModel(t2_jitter_rel=0.02, seed=11))
    catalog = ModeCatalog((CatalogEntry("R1", ghz(6.4)), CatalogEntry("B", ghz(7.24))))
    feats = classify(detect_features(sweep), catalog)
    step = GRID[1] - GRID[0]
    centers = [f.center_freq / TWO_PI / 1e9 for f in feats]
    classes = [f.classification for f in feats]
    ok = (
        len(feats) == 3
        and all(abs(f.center_freq - TWO_PI * c) <= step for f, c in zip(feats, (6.4e9, 7.24e9, 12.8e9)))
        and classes == ["designed", "designed", "harmonic"]
    )
    report(capsys, 6, ok, f"{len(feats)} features at {', '.join(f'{c:.3f}' for c in centers)} GHz: "
                          f"{'/'.join(classes)}")


def test_criterion_7_three_d_classification(capsys):
    catalog = ModeCatalog(
        (
            CatalogEntry("R2", ghz(9.882), "designed"),
            CatalogEntry("S1", ghz(7.838), "em_simulated"),
            CatalogEntry("S2", ghz(9.873), "em_simulated"),
        ),
        0.025,
    )
    feats = [DetectedFeature(ghz(f), 1e4, TWO_PI * 1e6) for f in (7.805, 9.675, 9.881)]
    out = classify(feats, catalog)
    got = [(f.classification, f.matched_label, round(100 * f.match_error_rel, 2)) for f in out]
    expected = [("spurious", "S1", 0.42), ("spurious", "S2", 2.01), ("designed", "R2", 0.01)]
    report(capsys, 7, got == expected, f"7.805/9.675/9.881 GHz -> {got}")


# -- 8: properties ---------------------------------------------------------------------

rates = st.floats(min_value=TWO_PI * 1e3, max_value=TWO_PI * 1e7)
signed = st.one_of(rates, rates.map(lambda x: -x))
PROPERTY_DRAWS = 1000
_counts = {"symmetry": 0, "mirror": 0, "tail": 0}


@settings(max_examples=PROPERTY_DRAWS)
@given(rates, signed, rates, st.floats(min_value=-50.0, max_value=50.0))
def _peak_symmetry(kappa, chi, eps, delta_rel):
    delta = delta_rel * kappa
    g = dephasing_rate_raw(W0 - delta, W0, kappa, chi, eps, 0.5)
    assert dephasing_rate_raw(W0 + delta, W0, kappa, chi, eps, 0.5) == pytest.approx(g, rel=1e-9, abs=1e-300)
    _counts["symmetry"] += 1


@settings(max_examples=PROPERTY_DRAWS)
@given(rates, signed, rates, st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=-50.0, max_value=50.0))
def _mirror_pair(kappa, chi, eps, w, delta_rel):
    p = ModeFitParams(W0, kappa, chi, eps, w, 1e4)
    mirror = replace(p, chi=-chi, asymmetry_w=1 - w)
    f = W0 - delta_rel * kappa
    assert mirror.rate(f) == pytest.approx(p.rate(f), rel=1e-12)
    a, b = p.canonical(), mirror.canonical()
    assert a.chi == b.chi > 0
    assert a.asymmetry_w == pytest.approx(b.asymmetry_w, abs=1e-15)
    _counts["mirror"] += 1


@settings(max_examples=PROPERTY_DRAWS)
@given(rates, signed, rates, st.floats(min_value=100.0, max_value=1e4), st.booleans())
def _far_tail(kappa, chi, eps, scale, below):
    # equal branch weights, as in the spectral density
    delta = scale * max(kappa, abs(chi)) * (1 if below else -1)
    mode = Mode(W0, kappa, chi)
    for d in (delta, 2 * delta):
        assert dephasing_rate_raw(W0 - d, W0, kappa, chi, eps, 0.5) > 0
    ratio = dephasing_rate_raw(W0 - delta, W0, kappa, chi, eps, 0.5) / dephasing_rate_raw(
        W0 - 2 * delta, W0, kappa, chi, eps, 0.5)
    density = dephasing_spectral_density(mode, Drive(W0 - delta, eps)) / dephasing_spectral_density(
        mode, Drive(W0 - 2 * delta, eps))
    assert abs(ratio / 16 - 1) <= 0.01
    assert abs(density / 16 - 1) <= 0.01
    _counts["tail"] += 1


def test_criterion_8_symmetry_mirror_and_tail(capsys):
    failures = []
    for name, prop in (("symmetry", _peak_symmetry), ("mirror", _mirror_pair), ("tail", _far_tail)):
        try:
            prop()
        except Exception as exc:  # report which property broke
            failures.append(f"{name}: {type(exc).__name__}")
    counts = ", ".join(f"{k} {v} draws" for k, v in _counts.items())
    enough = all(v >= PROPERTY_DRAWS for v in _counts.values())
    report(capsys, 8, not failures and enough,
           f"w=1/2 peak symmetry, (chi, w) mirror pair, 16x far tail: {counts}"
           + (f"; failed {failures}" if failures else ""))


# -- 9: CLI determinism ------------------------------------------------------------------


def test_criterion_9_cli_determinism(capsys, tmp_cwd):
    from test_cli import run_pipeline

    first = run_pipeline(tmp_cwd)
    second = run_pipeline(tmp_cwd)
    differing = sorted(name for name in first if first[name] != second.get(name))
    commands = {"simulate", "fit", "detect", "oracle", "report"}
    report(capsys, 9, not differing and first.keys() == second.keys(),
           f"{len(first)} files from {len(commands)} commands rerun byte-identical"
           + (f"; differing {differing}" if differing else ""))


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))

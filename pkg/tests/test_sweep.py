from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import BASELINE_T2, BUS_HZ, bus_mode
from modescope.dephasing import (
    Drive,
    Mode,
    environment_from_modes,
    measurement_dephasing_rate,
    photon_numbers,
    stark_shift,
    total_dephasing_rate,
)
from modescope.detect import linear_regression
from modescope.errors import DomainError
from modescope.sweep import (
    NoiseModel,
    SweepRecord,
    Trace,
    extract_t2,
    generate_rate_sweep,
    power_sweep,
    ramsey_map,
    simulate_echo_trace,
    simulate_ramsey_trace,
)
from modescope.units import TWO_PI, AngularFrequency, ghz


def bare_env(t2=BASELINE_T2, modes=()):
    return environment_from_modes(list(modes), t2=t2)


def planar_env():
    ro = Mode(ghz(6.4), TWO_PI * 512e3, TWO_PI * 1e6, "R1")
    return environment_from_modes([ro, bus_mode()], t2=BASELINE_T2)


# -- types ---------------------------------------------------------------------


def test_records_and_noise_validation():
    with pytest.raises(DomainError):
        SweepRecord(1.0, 0.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        SweepRecord(1.0, 1.0, -1.0, 1.0)
    with pytest.raises(DomainError):
        NoiseModel(readout_sigma=-0.1)
    rec = SweepRecord.from_rate(1.0, 2e4, 400.0)
    assert rec.t2 == pytest.approx(5e-5)
    assert rec.gamma2_err == pytest.approx(400.0)


def test_trace_validation():
    with pytest.raises(DomainError):
        Trace([0.0, 1.0], [1.0])
    with pytest.raises(DomainError):
        Trace([1.0, 0.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        Trace([0.0, 1.0], [1.0, 1.0], kind="hahn")


# -- traces --------------------------------------------------------------------


def test_echo_baseline_reaches_one_over_e():
    trace = simulate_echo_trace(bare_env(), Drive(ghz(7.0), 0.0), [0.0, BASELINE_T2])
    assert trace.signal[1] == pytest.approx(math.exp(-1.0), rel=1e-14)


def test_echo_without_dephasing_is_flat():
    # the T2 <= 2 T1 rule keeps the rate finite; a very long T2 gives the limit
    env = environment_from_modes([], t2=1e6, t1=1e6)
    trace = simulate_echo_trace(env, Drive(ghz(7.0), 0.0), np.linspace(0, 1e-4, 20))
    np.testing.assert_allclose(trace.signal, 1.0, atol=1e-9)


def test_echo_t2_exact_recovery():
    delays = np.linspace(0, 150e-6, 50)
    trace = simulate_echo_trace(bare_env(t2=50e-6), Drive(ghz(7.0), 0.0), delays)
    est = extract_t2(trace)
    assert not est.unresolved
    assert est.t2 == pytest.approx(50e-6, rel=1e-6)


@settings(max_examples=60)
@given(st.floats(min_value=1e-6, max_value=1e-3))
def test_echo_round_trip_property(t2):
    delays = np.linspace(0, 3 * t2, 64)
    est = extract_t2(simulate_echo_trace(bare_env(t2=t2), Drive(ghz(7.0), 0.0), delays))
    assert est.t2 == pytest.approx(t2, rel=1e-6)


def test_pure_cosine_is_unresolved():
    tau = np.linspace(0, 10e-6, 100)
    est = extract_t2(Trace(tau, np.cos(TWO_PI * 0.5e6 * tau), "ramsey", TWO_PI * 0.5e6))
    assert est.unresolved
    assert est.lower_bound == pytest.approx(10 * tau[-1])


def test_extract_needs_points():
    with pytest.raises(DomainError):
        extract_t2(Trace(np.arange(5.0), np.ones(5)))


def test_noisy_echo_coverage():
    # 200 delays stand in for shot averaging at fixed readout noise
    t2 = 65e-6
    delays = np.linspace(0, 3 * t2, 200)
    env = bare_env(t2=t2)
    hits = 0
    for seed in range(100):
        noise = NoiseModel(readout_sigma=0.02, seed=seed)
        est = extract_t2(simulate_echo_trace(env, Drive(ghz(7.0), 0.0), delays, noise))
        hits += abs(est.t2 - t2) <= 3 * est.t2_err
    assert hits >= 95


def test_ramsey_fringe_without_drive():
    detuning = TWO_PI * 200e3
    delays = np.linspace(0, 60e-6, 400)
    trace = simulate_ramsey_trace(bare_env(t2=20e-6), Drive(ghz(7.0), 0.0), delays, detuning)
    est = extract_t2(trace)
    assert est.fringe_freq == pytest.approx(detuning, rel=1e-8)
    assert est.t2 == pytest.approx(20e-6, rel=1e-6)


@pytest.mark.parametrize("sign", [1, -1])
def test_ramsey_fringe_follows_stark_shift(sign):
    mode = Mode(ghz(7.0), TWO_PI * 200e3, sign * TWO_PI * 300e3)
    env = environment_from_modes([mode], t2=BASELINE_T2)
    drive = Drive(mode.omega_bare + mode.chi, TWO_PI * 10e3)  # detuning -chi
    shift = stark_shift(mode, drive)
    assert np.sign(shift) == sign
    detuning = TWO_PI * 1e6
    gamma = total_dephasing_rate(env, drive)
    delays = np.linspace(0, 3 / gamma, 600)
    est = extract_t2(simulate_ramsey_trace(env, drive, delays, detuning))
    assert est.fringe_freq - detuning == pytest.approx(shift, rel=1e-6)


def test_ramsey_map_shift_is_local():
    r2 = Mode(ghz(9.882), TWO_PI * 500e3, TWO_PI * 1e6, "R2")
    env = environment_from_modes([r2], t2=BASELINE_T2)
    grid = TWO_PI * (9.882e9 + np.linspace(-50e6, 50e6, 41))
    detuning = TWO_PI * 200e3
    delays = np.linspace(0, 20e-6, 200)
    amap = ramsey_map(env, TWO_PI * 0.2e6, grid, delays, detuning)
    far = amap[0]
    np.testing.assert_allclose(amap[-1], far, atol=1e-3)
    near = amap[20]
    assert np.max(np.abs(near - far)) > 0.3


# -- sweeps --------------------------------------------------------------------


def test_planar_sweep_dips():
    grid = TWO_PI * (5e9 + 5e6 * np.arange(2201))
    records = generate_rate_sweep(planar_env(), TWO_PI * 0.5e6, grid)
    t2 = np.array([r.t2 for r in records])
    for f in (6.4e9, 7.24e9):
        k = int(np.argmin(np.abs(grid - TWO_PI * f)))
        assert t2[k] < 1e-6
    assert np.median(t2) == pytest.approx(BASELINE_T2, rel=0.01)


def test_empty_environment_is_flat():
    grid = TWO_PI * np.linspace(5e9, 6e9, 50)
    records = generate_rate_sweep(bare_env(), TWO_PI * 0.5e6, grid, noise=NoiseModel(t2_jitter_rel=0.02, seed=4))
    t2 = np.array([r.t2 for r in records])
    assert np.all(np.abs(t2 / BASELINE_T2 - 1) < 0.15)
    exact = generate_rate_sweep(bare_env(), TWO_PI * 0.5e6, grid)
    assert all(r.t2 == pytest.approx(BASELINE_T2, rel=1e-14) for r in exact)


def test_direct_and_traces_agree():
    env = environment_from_modes([bus_mode()], t2=BASELINE_T2)
    grid = TWO_PI * (BUS_HZ + np.linspace(-1e6, 1e6, 21))
    a = generate_rate_sweep(env, TWO_PI * 1e5, grid, 0.4, mode="direct")
    b = generate_rate_sweep(env, TWO_PI * 1e5, grid, 0.4, mode="via_traces")
    for x, y in zip(a, b):
        assert y.gamma2 == pytest.approx(x.gamma2, rel=1e-3)


def test_sweep_determinism_and_parallelism():
    env = planar_env()
    grid = TWO_PI * np.linspace(6.3e9, 6.5e9, 81)
    noise = NoiseModel(readout_sigma=0.01, t2_jitter_rel=0.05, seed=11)
    for mode in ("direct", "via_traces"):
        first = generate_rate_sweep(env, TWO_PI * 0.3e6, grid, noise=noise, mode=mode)
        again = generate_rate_sweep(env, TWO_PI * 0.3e6, grid, noise=noise, mode=mode)
        threaded = generate_rate_sweep(env, TWO_PI * 0.3e6, grid, noise=noise, mode=mode, workers=4)
        assert first == again == threaded
    other = generate_rate_sweep(env, TWO_PI * 0.3e6, grid, noise=NoiseModel(t2_jitter_rel=0.05, seed=12))
    assert other != first


def test_sweep_keeps_exact_hz_labels():
    grid = [AngularFrequency.from_hz(f) for f in (5.1e9, 5.2e9, 5.3e9)]
    records = generate_rate_sweep(bare_env(), 0.0, grid)
    assert [r.drive_freq.hz for r in records] == [5.1e9, 5.2e9, 5.3e9]


def test_sweep_grid_validation():
    with pytest.raises(DomainError):
        generate_rate_sweep(bare_env(), 0.0, [2.0, 1.0])
    with pytest.raises(DomainError):
        generate_rate_sweep(bare_env(), 0.0, [1.0, 2.0], mode="hybrid")


@pytest.mark.parametrize("w", [0.3, 0.7])
def test_sweep_minimum_at_deeper_branch(w):
    mode = Mode(ghz(7.0), TWO_PI * 50e3, TWO_PI * 1e6)
    env = environment_from_modes([mode], t2=BASELINE_T2)
    grid = mode.omega_bare + np.linspace(-2, 2, 4001) * mode.chi
    records = generate_rate_sweep(env, TWO_PI * 20e3, grid, w)
    k = int(np.argmin([r.t2 for r in records]))
    # w weights the branch at omega_bare + chi
    target = mode.omega_bare + (mode.chi if w > 0.5 else -mode.chi)
    assert abs(grid[k] - target) <= grid[1] - grid[0]


@settings(max_examples=40)
@given(st.floats(min_value=1e3, max_value=1e6), st.floats(min_value=1.01, max_value=10.0))
def test_stronger_drive_shortens_t2(eps_hz, factor):
    env = environment_from_modes([bus_mode()], t2=BASELINE_T2)
    grid = TWO_PI * (BUS_HZ + np.linspace(-2e6, 2e6, 41))
    weak = generate_rate_sweep(env, TWO_PI * eps_hz, grid)
    strong = generate_rate_sweep(env, TWO_PI * eps_hz * factor, grid)
    assert all(s.t2 < w.t2 for s, w in zip(strong, weak))


# -- power sweeps --------------------------------------------------------------


def test_power_sweep_linearity_and_intercept():
    mode = bus_mode()
    powers = np.linspace(0.0, 9.0, 10)
    data = power_sweep(mode, 1e10, powers, mode.omega_bare)
    assert data[0] == (0.0, 0.0)
    line = linear_regression(*zip(*data))
    assert line.r_squared >= 1 - 1e-12
    offset = power_sweep(mode, 1e10, powers, mode.omega_bare, thermal_offset=0.05)
    line = linear_regression(*zip(*offset))
    assert line.intercept == pytest.approx(0.05, rel=1e-10)
    n_plus, n_minus = photon_numbers(mode, Drive(mode.omega_bare, math.sqrt(1e10)))
    assert line.slope == pytest.approx(0.5 * (n_plus + n_minus), rel=1e-10)


def test_rate_sum_consistency():
    env = planar_env()
    drive = Drive(ghz(6.41), TWO_PI * 0.2e6)
    expected = 1 / BASELINE_T2 + sum(measurement_dephasing_rate(m, drive) for m in env.modes)
    assert total_dephasing_rate(env, drive) == pytest.approx(expected, rel=1e-14)

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from modescope.dephasing import Mode, environment_from_modes
from modescope.sweep import NoiseModel, generate_rate_sweep
from modescope.units import TWO_PI, AngularFrequency

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("default")

# bus mode used throughout: Q = 1e5 at 7.24 GHz
BUS_HZ = 7.24e9
BUS_KAPPA_HZ = 72.4e3
BUS_CHI_HZ = 300e3
BASELINE_T2 = 65e-6


def bus_mode(chi_hz: float = BUS_CHI_HZ) -> Mode:
    return Mode(
        AngularFrequency.from_hz(BUS_HZ),
        AngularFrequency.from_hz(BUS_KAPPA_HZ),
        AngularFrequency.from_hz(chi_hz),
        "B",
    )


def bus_window_hz(n: int = 301, half_width: float = 1.5e6) -> np.ndarray:
    return np.linspace(BUS_HZ - half_width, BUS_HZ + half_width, n)


def bus_sweep(
    w: float = 0.4,
    eps_hz: float = 100e3,
    jitter: float = 0.0,
    seed: int = 0,
    n: int = 301,
    chi_hz: float = BUS_CHI_HZ,
):
    env = environment_from_modes([bus_mode(chi_hz)], t2=BASELINE_T2)
    grid = [AngularFrequency.from_hz(f) for f in bus_window_hz(n)]
    return generate_rate_sweep(env, TWO_PI * eps_hz, grid, w, NoiseModel(t2_jitter_rel=jitter, seed=seed))


@pytest.fixture
def tmp_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("MODESCOPE_SEED", raising=False)
    return tmp_path


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])

from __future__ import annotations

import importlib
from dataclasses import replace

import numpy as np
import pytest

from frozen_values import CHI, EPS, KAPPA
from modescope import kernels
from modescope.dephasing import Drive, Mode
from modescope.oracle import OracleConfig, evolve_dispersive
from modescope.units import ghz

W0 = ghz(7.0)

needs_cython = pytest.mark.skipif("cython" not in kernels.AVAILABLE, reason="compiled kernel not built")


def test_backend_selection():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.get_backend("python") is not None
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_environment_forces_pure_python(monkeypatch):
    monkeypatch.setenv("MODESCOPE_PURE_PYTHON", "1")
    reloaded = importlib.reload(kernels)
    try:
        assert reloaded.BACKEND == "python"
    finally:
        monkeypatch.delenv("MODESCOPE_PURE_PYTHON")
        importlib.reload(kernels)


@needs_cython
@pytest.mark.parametrize("delta", [0.0, -CHI, 2 * CHI])
def test_backends_agree(delta):
    mode = Mode(W0, KAPPA, CHI)
    drive = Drive(W0 - delta, EPS)
    cfg = replace(OracleConfig.for_mode(mode, drive), t_max=10 / KAPPA, n_samples=200)
    a = evolve_dispersive(mode, drive, cfg, backend="cython")
    b = evolve_dispersive(mode, drive, cfg, backend="python")
    np.testing.assert_allclose(a.rho01_abs, b.rho01_abs, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(a.rho01_phase, b.rho01_phase, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(a.n_photon, b.n_photon, rtol=1e-11, atol=1e-15)
    np.testing.assert_allclose(a.final_state, b.final_state, rtol=1e-10, atol=1e-14)

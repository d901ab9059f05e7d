"""Brute-force master-equation check of the analytic dephasing model.

The qubit enters only through the dispersive term, so in the drive frame

    H = delta a^dag a + chi a^dag a sigma_z + eps (a + a^dag),  L = sqrt(kappa) a

with ``delta = omega_bare - omega_d``. The joint qubit-cavity density matrix is
integrated on a truncated Fock space with fixed-step RK4, and the decay rate
and phase drift of the qubit coherence ``<0|rho_q|1>`` are read off after the
cavity transient has died away. No qubit T1/T2 channels are included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dephasing import Drive, Mode
from .errors import CutoffError, DomainError, ExtractionError

TOP_LEVEL_LIMIT = 1e-4


@dataclass(frozen=True)
class OracleConfig:
    fock_cutoff: int = 20
    dt: float = 1e-9
    t_max: float = 1e-5
    transient_fraction: float = 0.3
    n_samples: int = 1000

    def __post_init__(self):
        if self.fock_cutoff < 4:
            raise DomainError(f"fock_cutoff must be >= 4, got {self.fock_cutoff}")
        if not (self.dt > 0 and self.t_max > 0):
            raise DomainError("dt and t_max must be positive")
        if not (0.0 <= self.transient_fraction < 1.0):
            raise DomainError(f"transient_fraction must lie in [0, 1), got {self.transient_fraction}")
        if self.n_samples < 2:
            raise DomainError("n_samples must be >= 2")

    @classmethod
    def for_mode(
        cls,
        mode: Mode,
        drive: Drive,
        fock_cutoff: int = 20,
        kappa_times: float = 40.0,
        dt_kappa: float = 0.01,
        transient_fraction: float = 0.3,
        n_samples: int = 1000,
    ) -> "OracleConfig":
        """Pick a step resolving every frequency in the generator and a span of
        ``kappa_times / kappa``, long enough for the cavity to reach steady state."""
        delta = abs(mode.omega_bare - float(drive.omega_d))
        fastest = max(delta + abs(mode.chi), drive.epsilon_rf, mode.kappa)
        dt = min(dt_kappa / mode.kappa, 0.05 / fastest)
        return cls(
            fock_cutoff=fock_cutoff,
            dt=dt,
            t_max=kappa_times / mode.kappa,
            transient_fraction=transient_fraction,
            n_samples=n_samples,
        )


@dataclass
class CoherenceSeries:
    """Sampled qubit coherence and cavity occupation."""

    t: np.ndarray
    rho01_abs: np.ndarray
    rho01_phase: np.ndarray
    n_photon: np.ndarray
    trace: np.ndarray | None = None
    hermiticity: np.ndarray | None = None
    top_population: np.ndarray | None = None
    snapshots: np.ndarray | None = None
    final_state: np.ndarray | None = None


def initial_state(fock_cutoff: int) -> np.ndarray:
    """Qubit in (|0> + |1>)/sqrt(2), cavity in vacuum."""
    dim = 2 * fock_cutoff
    rho = np.zeros((dim, dim), dtype=np.complex128)
    for i in (0, fock_cutoff):
        for j in (0, fock_cutoff):
            rho[i, j] = 0.5
    return rho


def _generator_terms(delta: float, chi: float, fock_cutoff: int):
    n = np.arange(fock_cutoff, dtype=float)
    n_diag = np.concatenate([n, n])
    # qubit index 0 (ground) has sigma_z = -1
    energy = np.concatenate([(delta - chi) * n, (delta + chi) * n])
    c = np.sqrt(n + 1.0)
    c[-1] = 0.0
    coupling = np.concatenate([c, c])
    return energy, coupling, n_diag


def evolve_dispersive(
    mode: Mode,
    drive: Drive,
    config: OracleConfig | None = None,
    *,
    backend: str | None = None,
    snapshots: bool = False,
    check_cutoff: bool = True,
) -> CoherenceSeries:
    """Integrate the dispersive master equation from the superposition state.

    Raises
    ------
    DomainError
        If ``dt * kappa`` exceeds 0.01 or the drive frequency is not scalar.
    CutoffError
        If the top Fock level ever holds more than 1e-4 population.
    """
    if np.ndim(drive.omega_d):
        raise DomainError("the oracle takes a single drive frequency")
    if config is None:
        config = OracleConfig.for_mode(mode, drive)
    if config.dt * mode.kappa > 0.01 * (1 + 1e-12):
        raise DomainError(f"dt*kappa = {config.dt * mode.kappa:.3g} exceeds 0.01")
    n_steps = int(math.ceil(config.t_max / config.dt))
    stride = max(1, n_steps // (config.n_samples - 1))
    n_steps = stride * (n_steps // stride)
    delta = mode.omega_bare - float(drive.omega_d)
    energy, coupling, n_diag = _generator_terms(delta, mode.chi, config.fock_cutoff)
    evolve = kernels.get_backend(backend)
    out = evolve(
        initial_state(config.fock_cutoff),
        energy,
        coupling,
        n_diag,
        config.fock_cutoff,
        float(drive.epsilon_rf),
        float(mode.kappa),
        float(config.dt),
        n_steps,
        stride,
        snapshots,
    )
    top = float(np.max(out["top_population"]))
    if check_cutoff and top > TOP_LEVEL_LIMIT:
        raise CutoffError(
            f"top Fock level population {top:.3g} exceeds {TOP_LEVEL_LIMIT:g} at cutoff "
            f"{config.fock_cutoff}; mean photon number reached {np.max(out['n_photon']):.3g}"
        )
    t = np.arange(len(out["rho01"])) * (stride * config.dt)
    return CoherenceSeries(
        t=t,
        rho01_abs=np.abs(out["rho01"]),
        rho01_phase=np.unwrap(np.angle(out["rho01"])),
        n_photon=out["n_photon"],
        trace=out["trace"],
        hermiticity=out["hermiticity"],
        top_population=out["top_population"],
        snapshots=out["snapshots"],
        final_state=out["rho"],
    )


def extract_rate(series: CoherenceSeries, transient_fraction: float = 0.3) -> tuple[float, float]:
    """Decay rate and phase drift of the coherence after the transient.

    Returns
    -------
    gamma : float
        Minus the least-squares slope of ``ln|rho01|`` (1/s).
    freq_shift : float
        Least-squares slope of the unwrapped phase of ``rho01`` (rad/s),
        i.e. the shift of the qubit frequency.
    """
    if not (0.0 <= transient_fraction < 1.0):
        raise DomainError(f"transient_fraction must lie in [0, 1), got {transient_fraction}")
    t = np.asarray(series.t, dtype=float)
    start = int(math.floor(transient_fraction * len(t)))
    t = t[start:]
    env = np.asarray(series.rho01_abs, dtype=float)[start:]
    phase = np.asarray(series.rho01_phase, dtype=float)[start:]
    if len(t) < 3:
        raise ExtractionError("fewer than 3 samples after the transient")
    if np.any(env <= 0) or not np.all(np.isfinite(env)):
        raise ExtractionError("coherence envelope is not positive after the transient")
    if np.any(np.diff(env) > 1e-9 * env[0]):
        raise ExtractionError("coherence envelope is not monotone after the transient")
    x = t - t.mean()
    sxx = np.dot(x, x)
    # centring both coordinates keeps a constant series at exactly zero slope
    log_env = np.log(env)
    gamma = -np.dot(x, log_env - log_env[0]) / sxx
    shift = np.dot(x, phase - phase[0]) / sxx
    return float(gamma), float(shift)


def steady_photon_number(series: CoherenceSeries, tail_fraction: float = 0.05) -> float:
    """Mean cavity occupation over the last ``tail_fraction`` of the run."""
    k = max(1, int(len(series.n_photon) * tail_fraction))
    return float(np.mean(series.n_photon[-k:]))


def branch_photon_numbers(series: CoherenceSeries) -> tuple[float, float]:
    """Photon number of the excited and ground qubit branches at the end of the run.

    The dispersive generator conserves the qubit population, so each diagonal
    block evolves as if the qubit were held in that state. Returns
    ``(n_plus, n_minus)``: excited (sigma_z = +1) first.
    """
    rho = series.final_state
    if rho is None:
        raise DomainError("series carries no final state")
    n = rho.shape[0] // 2
    diag = np.real(np.diag(rho))
    levels = np.arange(n, dtype=float)
    ground, excited = diag[:n], diag[n:]
    return float(levels @ excited / excited.sum()), float(levels @ ground / ground.sum())


def oracle_summary(mode: Mode, drive: Drive, config: OracleConfig | None = None, backend: str | None = None) -> dict:
    if config is None:
        config = OracleConfig.for_mode(mode, drive)
    series = evolve_dispersive(mode, drive, config, backend=backend)
    gamma, shift = extract_rate(series, config.transient_fraction)
    return {
        "gamma": gamma,
        "freq_shift": shift,
        "n_photon": steady_photon_number(series),
        "series": series,
    }

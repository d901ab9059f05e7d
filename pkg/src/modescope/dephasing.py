"""Analytic measurement-induced dephasing of a qubit by driven cavity modes.

Conventions
-----------
Every frequency is angular (rad/s). The cavity detuning is taken as
``delta = omega_bare - omega_d`` (cavity minus drive), the sign that appears
in the drive-rotating-frame Hamiltonian ``delta a^dag a + chi a^dag a sigma_z``.
With this sign the ground-state photon number peaks at
``omega_d = omega_bare - chi`` and the excited-state one at
``omega_bare + chi``.

Functions accept scalars or numpy arrays for the drive frequency so whole
sweeps evaluate in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import constants

from .errors import DomainError

HBAR = constants.hbar
K_B = constants.k


@dataclass(frozen=True)
class Mode:
    """One electromagnetic mode seen by the qubit.

    Attributes
    ----------
    omega_bare : float
        Bare cavity resonance, rad/s.
    kappa : float
        Energy decay rate, rad/s.
    chi : float
        Signed dispersive shift, rad/s.
    label : str
    """

    omega_bare: float
    kappa: float
    chi: float
    label: str = ""

    def __post_init__(self):
        _require_finite(omega_bare=self.omega_bare, kappa=self.kappa, chi=self.chi)
        if self.kappa <= 0:
            raise DomainError(f"kappa must be positive, got {self.kappa!r}")
        if self.omega_bare <= 0:
            raise DomainError(f"omega_bare must be positive, got {self.omega_bare!r}")


@dataclass(frozen=True)
class Drive:
    """CW tone. ``omega_d`` may be a scalar or an array of drive frequencies."""

    omega_d: float | np.ndarray
    epsilon_rf: float

    def __post_init__(self):
        _require_finite(omega_d=self.omega_d, epsilon_rf=self.epsilon_rf)
        if self.epsilon_rf < 0:
            raise DomainError(f"epsilon_rf must be >= 0, got {self.epsilon_rf!r}")


@dataclass(frozen=True)
class QubitBaseline:
    omega_q: float
    gamma2_intrinsic: float
    t1: float

    def __post_init__(self):
        _require_finite(omega_q=self.omega_q, gamma2_intrinsic=self.gamma2_intrinsic, t1=self.t1)
        if self.t1 <= 0:
            raise DomainError(f"t1 must be positive, got {self.t1!r}")
        # T2 <= 2 T1, with a little slack for values typed from round numbers
        if self.gamma2_intrinsic < (1.0 - 1e-12) / (2.0 * self.t1):
            raise DomainError(
                f"gamma2_intrinsic={self.gamma2_intrinsic!r} implies T2 > 2*T1 (t1={self.t1!r})"
            )

    @property
    def t2(self) -> float:
        return 1.0 / self.gamma2_intrinsic if self.gamma2_intrinsic > 0 else math.inf


@dataclass(frozen=True)
class Environment:
    qubit: QubitBaseline
    modes: tuple[Mode, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        labels = [m.label for m in self.modes]
        if len(set(labels)) != len(labels):
            raise DomainError(f"mode labels must be unique, got {labels}")


def _require_finite(**values):
    for name, value in values.items():
        if not np.all(np.isfinite(value)):
            raise DomainError(f"{name} must be finite, got {value!r}")


def _check_w(asymmetry_w: float):
    if not (0.0 <= asymmetry_w <= 1.0):
        raise DomainError(f"asymmetry_w must lie in [0, 1], got {asymmetry_w!r}")


# -- array kernels -----------------------------------------------------------
#
# These take raw floats/arrays and skip validation; the fit engine calls them
# in its inner loop.


def photon_numbers_raw(delta, kappa, chi, epsilon):
    """``(n_plus, n_minus)`` for cavity detuning ``delta = omega_bare - omega_d``."""
    k2 = 0.25 * kappa * kappa
    e2 = epsilon * epsilon
    n_plus = e2 / (k2 + (delta + chi) ** 2)
    n_minus = e2 / (k2 + (delta - chi) ** 2)
    return n_plus, n_minus


def dephasing_rate_raw(omega_d, omega_bare, kappa, chi, epsilon, asymmetry_w=0.5):
    """Measurement-induced dephasing rate with branch weights ``2w`` and ``2(1-w)``."""
    delta = omega_bare - omega_d
    n_plus, n_minus = photon_numbers_raw(delta, kappa, chi, epsilon)
    weighted = 2.0 * asymmetry_w * n_plus + 2.0 * (1.0 - asymmetry_w) * n_minus
    denom = 0.25 * kappa * kappa + chi * chi + delta * delta
    return 0.5 * kappa * 2.0 * weighted * chi * chi / denom


# -- public operations ---------------------------------------------------------


def detuning(mode: Mode, drive: Drive):
    """Cavity detuning ``omega_bare - omega_d`` in rad/s."""
    return mode.omega_bare - np.asarray(drive.omega_d, dtype=float)


def photon_numbers(mode: Mode, drive: Drive):
    """Mean cavity photon numbers with the qubit excited (+) and in ground (-).

    Returns
    -------
    tuple
        ``(n_plus, n_minus)``; scalars or arrays following ``drive.omega_d``.
    """
    return photon_numbers_raw(detuning(mode, drive), mode.kappa, mode.chi, drive.epsilon_rf)


def dephasing_spectral_density(mode: Mode, drive: Drive):
    """Dimensionless spectral factor ``D_s`` such that ``Gamma_m = D_s * kappa / 2``."""
    delta = detuning(mode, drive)
    n_plus, n_minus = photon_numbers_raw(delta, mode.kappa, mode.chi, drive.epsilon_rf)
    chi2 = mode.chi * mode.chi
    return 2.0 * (n_plus + n_minus) * chi2 / (0.25 * mode.kappa**2 + chi2 + delta * delta)


def measurement_dephasing_rate(mode: Mode, drive: Drive, asymmetry_w: float = 0.5):
    """Dephasing rate (1/s) induced by one driven mode.

    ``asymmetry_w`` weights the excited-state photon branch; 1/2 gives the
    symmetric model, smaller values make the ground-state peak taller, as
    happens when the qubit relaxes during the sequence.
    """
    _check_w(asymmetry_w)
    return dephasing_rate_raw(
        drive.omega_d, mode.omega_bare, mode.kappa, mode.chi, drive.epsilon_rf, asymmetry_w
    )


def total_dephasing_rate(env: Environment, drive: Drive, asymmetry_w: float = 0.5):
    """Intrinsic qubit rate plus the independent contribution of every mode."""
    _check_w(asymmetry_w)
    total = env.qubit.gamma2_intrinsic + np.zeros(np.shape(drive.omega_d))
    for mode in env.modes:
        total = total + dephasing_rate_raw(
            drive.omega_d, mode.omega_bare, mode.kappa, mode.chi, drive.epsilon_rf, asymmetry_w
        )
    return total if np.ndim(total) else float(total)


def stark_shift(mode: Mode, drive: Drive):
    """Steady-state shift of the qubit frequency (rad/s) caused by the drive.

    Uses the coherent-state result ``2 chi Re(alpha_+ alpha_-^*)``, whose
    imaginary counterpart ``2 chi Im(...)`` is exactly the dephasing rate. Far
    from the mode (``|delta| >> chi, kappa``) this reduces to the familiar
    ``2 chi nbar``.
    """
    delta = detuning(mode, drive)
    k2 = 0.25 * mode.kappa**2
    chi = mode.chi
    e2 = drive.epsilon_rf**2
    a = k2 + (delta + chi) ** 2
    b = k2 + (delta - chi) ** 2
    return 2.0 * chi * e2 * (k2 + delta * delta - chi * chi) / (a * b)


def stark_shift_mean_photon(mode: Mode, drive: Drive):
    """Shift estimate ``2 chi (n_+ + n_-)/2``, valid only far from the mode."""
    n_plus, n_minus = photon_numbers(mode, drive)
    return mode.chi * (n_plus + n_minus)


def quality_factor(mode: Mode) -> float:
    return mode.omega_bare / mode.kappa


def occupancy(temperature: float, omega: float) -> float:
    """Bose-Einstein occupancy of a mode at ``omega`` (rad/s)."""
    if temperature <= 0:
        return 0.0
    return 1.0 / math.expm1(HBAR * omega / (K_B * temperature))


def photons_to_temperature(n_bar: float, omega: float) -> float:
    """Temperature (K) at which a thermal mode at ``omega`` holds ``n_bar`` photons.

    ``n_bar = 0`` gives 0 K, the limit of the expression.
    """
    if not (math.isfinite(n_bar) and math.isfinite(omega)):
        raise DomainError("n_bar and omega must be finite")
    if n_bar < 0:
        raise DomainError(f"temperature undefined for n_bar={n_bar!r} < 0")
    if omega <= 0:
        raise DomainError(f"omega must be positive, got {omega!r}")
    if n_bar == 0:
        return 0.0
    return HBAR * omega / (K_B * math.log1p(1.0 / n_bar))


def power_to_amplitude(power: float, conversion: float) -> float:
    """Drive amplitude (rad/s) for an applied power, ``sqrt(conversion * power)``.

    ``conversion`` has units of (rad/s)^2 per unit power; the photon number is
    then exactly proportional to power.
    """
    if not (math.isfinite(power) and math.isfinite(conversion)):
        raise DomainError("power and conversion must be finite")
    if power < 0:
        raise DomainError(f"power must be >= 0, got {power!r}")
    if conversion <= 0:
        raise DomainError(f"conversion must be positive, got {conversion!r}")
    return math.sqrt(conversion * power)


def mean_photon_number(mode: Mode, drive: Drive):
    n_plus, n_minus = photon_numbers(mode, drive)
    return 0.5 * (n_plus + n_minus)


def environment_from_modes(
    modes: Sequence[Mode], t2: float = 65e-6, t1: float | None = None, omega_q: float = 0.0
) -> Environment:
    """Convenience constructor; ``t1`` defaults to ``t2`` (so T2 <= 2 T1 holds)."""
    t1 = t2 if t1 is None else t1
    return Environment(QubitBaseline(omega_q=omega_q, gamma2_intrinsic=1.0 / t2, t1=t1), tuple(modes))

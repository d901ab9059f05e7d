"""Fit of the dephasing model to a rate-versus-drive-frequency sweep.

The model is ``Gamma2(omega_d) = gamma2_baseline + Gamma_m(omega_d)`` with
free bare frequency, kappa, chi, drive amplitude and branch asymmetry. The
data cannot tell ``(chi, w)`` from ``(-chi, 1 - w)``; results are reported
with ``chi > 0``, in which case ``w`` weights the peak above the bare
frequency (qubit excited) and ``1 - w`` the one below (qubit in ground).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Literal, Sequence

import numpy as np
from scipy.signal import find_peaks, peak_widths

from .dephasing import dephasing_rate_raw, photon_numbers_raw
from .errors import DomainError, FitError, NoFeatureError
from .lm import FitProblem, FitResult, LMOptions, lm_minimize
from .sweep import SweepRecord
from .units import TWO_PI

PARAM_NAMES = ("omega_bare", "kappa", "chi", "epsilon_rf", "asymmetry_w", "gamma2_baseline")
NO_FEATURE_SIGMAS = 6.0
SIGN_CONVENTION = "chi > 0; asymmetry_w weights the branch at omega_bare + chi (qubit excited)"


@dataclass(frozen=True)
class ModeFitParams:
    """Model parameters. Frequencies in rad/s, ``gamma2_baseline`` in 1/s."""

    omega_bare: float
    kappa: float
    chi: float
    epsilon_rf: float
    asymmetry_w: float = 0.5
    gamma2_baseline: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PARAM_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "ModeFitParams":
        return cls(*(float(v) for v in values))

    def canonical(self) -> "ModeFitParams":
        if self.chi < 0:
            return replace(self, chi=-self.chi, asymmetry_w=1.0 - self.asymmetry_w)
        return self

    def rate(self, omega_d):
        return self.gamma2_baseline + dephasing_rate_raw(
            np.asarray(omega_d, dtype=float),
            self.omega_bare,
            self.kappa,
            self.chi,
            self.epsilon_rf,
            self.asymmetry_w,
        )

    @property
    def q_factor(self) -> float:
        return self.omega_bare / self.kappa

    @property
    def n_bar_on_resonance(self) -> float:
        """Branch-averaged photon number with the drive at the bare frequency."""
        n_plus, n_minus = photon_numbers_raw(0.0, self.kappa, self.chi, self.epsilon_rf)
        return 0.5 * (n_plus + n_minus)


@dataclass
class ModeFit:
    params: ModeFitParams
    std_errors: ModeFitParams
    covariance: np.ndarray
    result: FitResult
    fixed: tuple[str, ...] = ()
    warnings: list[str] = field(default_factory=list)
    window: tuple[float, float] | None = None
    sign_convention: str = SIGN_CONVENTION

    @property
    def q_factor(self) -> float:
        return self.params.q_factor

    @property
    def q_factor_err(self) -> float:
        i, j = PARAM_NAMES.index("omega_bare"), PARAM_NAMES.index("kappa")
        return q_factor_uncertainty(
            self.params.omega_bare,
            self.params.kappa,
            self.covariance[i, i],
            self.covariance[j, j],
            self.covariance[i, j],
        )

    @property
    def reduced_chi2(self) -> float:
        return self.result.reduced_chi2


def q_factor_uncertainty(omega, kappa, var_omega, var_kappa, cov_omega_kappa) -> float:
    """First-order propagated standard error of ``omega / kappa``."""
    q = omega / kappa
    rel = var_omega / omega**2 + var_kappa / kappa**2 - 2.0 * cov_omega_kappa / (omega * kappa)
    return q * math.sqrt(max(rel, 0.0))


def sweep_arrays(sweep: Sequence[SweepRecord]):
    f = np.array([r.drive_freq for r in sweep], dtype=float)
    g = np.array([r.gamma2 for r in sweep], dtype=float)
    err = np.array([r.gamma2_err for r in sweep], dtype=float)
    order = np.argsort(f, kind="stable")
    return f[order], g[order], err[order]


def _robust_scatter(values: np.ndarray) -> float:
    return 1.4826 * float(np.median(np.abs(values - np.median(values))))


def initial_guess(sweep: Sequence[SweepRecord]) -> ModeFitParams:
    """Heuristic starting point from the two-peak structure of one feature.

    Raises
    ------
    DomainError
        Fewer than 10 points.
    NoFeatureError
        No excursion clearly above the noise of the window.
    """
    f, g, _ = sweep_arrays(sweep)
    if f.size < 10:
        raise DomainError("initial_guess needs at least 10 sweep points")
    lowest = np.sort(g)[: max(f.size // 4, 1)]
    baseline = float(np.median(lowest))
    scatter = _robust_scatter(np.sort(g)[: max(f.size // 2, 2)])
    excess = g - baseline
    top = float(np.max(excess))
    # the scatter of the lower half underestimates the noise; the MAD of the
    # whole window does not, and a single feature barely moves it
    noise = _robust_scatter(g)
    if not (
        top > 3.0 * scatter
        and float(np.max(g) - np.median(g)) > NO_FEATURE_SIGMAS * noise
        and top > 1e-9 * max(abs(baseline), 1e-300)
    ):
        raise NoFeatureError("no dephasing feature above the baseline scatter")

    peaks, props = find_peaks(excess, prominence=max(3.0 * scatter, 0.02 * top))
    if peaks.size == 0:
        peaks = np.array([int(np.argmax(excess))])
        prominences = np.array([top])
    else:
        prominences = props["prominences"]
    by_prominence = peaks[np.argsort(prominences)[::-1]]
    tallest = int(by_prominence[0])

    index = np.arange(f.size, dtype=float)
    width_samples, _, left, right = peak_widths(excess, [tallest], rel_height=0.5)
    kappa = float(np.interp(right[0], index, f) - np.interp(left[0], index, f))
    if not kappa > 0:
        kappa = float(np.median(np.diff(f)))

    if by_prominence.size >= 2 and prominences.max() > 0:
        lo, hi = sorted(int(p) for p in by_prominence[:2])
        omega_bare = 0.5 * (f[lo] + f[hi])
        chi = 0.5 * (f[hi] - f[lo])
        # heights are linear in (w eps^2, (1-w) eps^2)
        basis = np.array(
            [
                [dephasing_rate_raw(f[k], omega_bare, kappa, chi, 1.0, 1.0) for k in (lo, hi)],
                [dephasing_rate_raw(f[k], omega_bare, kappa, chi, 1.0, 0.0) for k in (lo, hi)],
            ]
        ).T
        a, b = np.linalg.lstsq(basis, excess[[lo, hi]], rcond=None)[0]
        a, b = max(a, 0.0), max(b, 0.0)
        if a + b > 0:
            eps2 = a + b
            w = a / (a + b)
        else:
            eps2, w = excess[tallest] / basis.sum(axis=1).mean(), 0.5
    else:
        omega_bare = float(f[tallest])
        chi = 0.5 * kappa
        unit = dephasing_rate_raw(omega_bare, omega_bare, kappa, chi, 1.0, 0.5)
        eps2, w = excess[tallest] / unit, 0.5
    return ModeFitParams(
        omega_bare=float(omega_bare),
        kappa=kappa,
        chi=float(chi),
        epsilon_rf=float(math.sqrt(max(eps2, 0.0))),
        asymmetry_w=float(min(max(w, 0.02), 0.98)),
        gamma2_baseline=max(baseline, 0.0),
    )


def fit_single_mode(
    sweep: Sequence[SweepRecord],
    guess: ModeFitParams | Literal["auto"] = "auto",
    *,
    fixed: dict[str, float] | None = None,
    freq_scale: float = TWO_PI * 1e6,
    weighted: bool | None = None,
    options: LMOptions | None = None,
) -> ModeFit:
    """Fit one windowed feature.

    Parameters
    ----------
    sweep : sequence of SweepRecord
        Points around a single feature.
    guess : ModeFitParams or "auto"
        Starting point; ``"auto"`` runs :func:`initial_guess`.
    fixed : dict, optional
        Parameters held at the given values, e.g. ``{"asymmetry_w": 0.5}``.
    freq_scale : float
        Unit (rad/s) in which frequencies are expressed inside the
        minimizer. Results do not depend on it beyond rounding.
    weighted : bool, optional
        Weight residuals by the rate uncertainty derived from ``t2_err``.
        Defaults to True when every point has a positive ``t2_err``. The
        covariance is scaled by the reduced chi-square when unweighted.

    Raises
    ------
    FitError
        The minimizer did not converge; ``.result`` holds diagnostics.
    """
    f, g, g_err = sweep_arrays(sweep)
    if f.size < len(PARAM_NAMES):
        raise DomainError("too few sweep points for a six-parameter fit")
    if guess == "auto":
        guess = initial_guess(sweep)
    guess = guess.canonical()
    fixed = dict(fixed or {})
    unknown = set(fixed) - set(PARAM_NAMES)
    if unknown:
        raise DomainError(f"unknown fixed parameters {sorted(unknown)}")
    if weighted is None:
        weighted = bool(np.all(g_err > 0))
    sigma = g_err if weighted else np.ones_like(g)
    if np.any(sigma <= 0):
        raise DomainError("weighted fit needs positive uncertainties at every point")

    g0 = replace(guess, **fixed)
    ref = g0.omega_bare
    rate_scale = g0.gamma2_baseline if g0.gamma2_baseline > 0 else float(np.max(g))
    scale = np.array([freq_scale, freq_scale, freq_scale, freq_scale, 1.0, rate_scale])
    offset = np.array([ref, 0.0, 0.0, 0.0, 0.0, 0.0])

    def to_internal(phys):
        return (phys - offset) / scale

    def to_physical(internal):
        return internal * scale + offset

    x_full0 = to_internal(g0.as_array())
    k_g, chi_g, eps_g = g0.kappa, abs(g0.chi) or g0.kappa, g0.epsilon_rf or g0.kappa
    floor_full = np.array([k_g / freq_scale, k_g / freq_scale, chi_g / freq_scale, eps_g / freq_scale, 1.0, 1.0])
    lower_full = np.array(
        [(f[0] - ref) / freq_scale, 1e-6 * k_g / freq_scale, -np.inf, 0.0, 0.0, 0.0]
    )
    upper_full = np.array([(f[-1] - ref) / freq_scale, np.inf, np.inf, np.inf, 1.0, np.inf])
    free = np.array([name not in fixed for name in PARAM_NAMES])
    x_full0 = np.clip(x_full0, lower_full, upper_full)

    def expand(x_free):
        x = x_full0.copy()
        x[free] = x_free
        return x

    def residual(x_free):
        p = to_physical(expand(x_free))
        model = p[5] + dephasing_rate_raw(f, p[0], p[1], p[2], p[3], p[4])
        return (model - g) / sigma

    opts = replace(options or LMOptions(), absolute_sigma=weighted)
    problem = FitProblem(
        residual,
        x_full0[free],
        lower_full[free],
        upper_full[free],
        opts,
        x_scale=floor_full[free],
    )
    result = lm_minimize(problem)
    if not result.converged:
        raise FitError(f"mode fit did not converge: {result.message}", result)

    phys = to_physical(expand(result.params))
    cov = np.zeros((len(PARAM_NAMES), len(PARAM_NAMES)))
    cov[np.ix_(free, free)] = result.covariance
    cov = cov * np.outer(scale, scale)
    params = ModeFitParams.from_array(phys)
    if params.chi < 0:
        params = params.canonical()
        flip = np.ones(len(PARAM_NAMES))
        flip[[2, 4]] = -1.0
        cov = cov * np.outer(flip, flip)
    std = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    warnings = []
    free_names = [n for n in PARAM_NAMES if n not in fixed]
    for name, hit in zip(free_names, result.at_bound):
        if hit:
            warnings.append(f"{name} at bound")
    return ModeFit(
        params=params,
        std_errors=ModeFitParams.from_array(std),
        covariance=cov,
        result=result,
        fixed=tuple(sorted(fixed)),
        warnings=warnings,
        window=(float(f[0]), float(f[-1])),
    )


def window_sweep(sweep: Sequence[SweepRecord], f_lo: float, f_hi: float) -> list[SweepRecord]:
    """Records with ``f_lo <= drive_freq <= f_hi`` (rad/s)."""
    return [r for r in sweep if f_lo <= r.drive_freq <= f_hi]


def params_dict(params: ModeFitParams) -> dict[str, float]:
    return asdict(params)

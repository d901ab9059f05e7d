"""Bounded Levenberg-Marquardt least squares.

Minimizes ``0.5 * ||r(p)||^2`` with Marquardt diagonal scaling, gain-ratio
damping control and projection onto box bounds. Steps are accepted only when
they strictly lower the cost, so the recorded cost history never increases.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError

Residual = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LMOptions:
    max_iterations: int = 200
    gradient_tolerance: float = 1e-10
    step_tolerance: float = 1e-12
    damping_init: float = 1e-6
    rel_step: float = 1e-6
    # covariance is scaled by reduced chi^2 unless residuals are already
    # normalized by known uncertainties
    absolute_sigma: bool = False
    jacobian_workers: int | None = None


@dataclass
class FitProblem:
    residual: Residual
    initial: np.ndarray
    lower_bounds: np.ndarray | None = None
    upper_bounds: np.ndarray | None = None
    options: LMOptions = field(default_factory=LMOptions)
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    # per-parameter magnitude floor for finite-difference steps
    x_scale: np.ndarray | None = None

    def __post_init__(self):
        self.initial = np.atleast_1d(np.asarray(self.initial, dtype=float)).copy()
        n = self.initial.size
        lo = -np.inf if self.lower_bounds is None else self.lower_bounds
        hi = np.inf if self.upper_bounds is None else self.upper_bounds
        self.lower_bounds = np.broadcast_to(np.asarray(lo, dtype=float), (n,)).copy()
        self.upper_bounds = np.broadcast_to(np.asarray(hi, dtype=float), (n,)).copy()
        if np.any(self.lower_bounds > self.upper_bounds):
            raise DomainError("lower bound exceeds upper bound")
        if np.any(self.initial < self.lower_bounds) or np.any(self.initial > self.upper_bounds):
            raise DomainError(f"initial point {self.initial} violates bounds")
        if self.x_scale is not None:
            self.x_scale = np.broadcast_to(np.asarray(self.x_scale, dtype=float), (n,)).copy()


@dataclass
class FitResult:
    params: np.ndarray
    covariance: np.ndarray
    std_errors: np.ndarray
    reduced_chi2: float
    iterations: int
    converged: bool
    final_residual_norm: float
    message: str = ""
    cost_history: list[float] = field(default_factory=list)
    at_bound: np.ndarray | None = None
    n_evaluations: int = 0
    jacobian: np.ndarray | None = None

    @property
    def cost(self) -> float:
        return 0.5 * self.final_residual_norm**2


def finite_difference_jacobian(
    residual: Residual,
    params: Sequence[float],
    rel_step: float = 1e-6,
    scale_floor: float | Sequence[float] = 1.0,
    lower: Sequence[float] | None = None,
    upper: Sequence[float] | None = None,
    workers: int | None = None,
) -> np.ndarray:
    """Central-difference Jacobian ``d r_i / d p_j``.

    The step for parameter ``j`` is ``rel_step * max(|p_j|, scale_floor_j)``.
    Near a bound the difference becomes one-sided so no probe leaves the box.
    Columns are independent; with ``workers`` they are evaluated on a thread
    pool and assembled in index order, giving the same matrix.
    """
    if rel_step <= 0:
        raise DomainError(f"rel_step must be positive, got {rel_step!r}")
    p0 = np.atleast_1d(np.asarray(params, dtype=float))
    n = p0.size
    floor = np.broadcast_to(np.asarray(scale_floor, dtype=float), (n,))
    lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    steps = rel_step * np.maximum(np.abs(p0), floor)

    def probe(j: int, h: float) -> np.ndarray:
        p = p0.copy()
        p[j] += h
        r = np.asarray(residual(p), dtype=float)
        if not np.all(np.isfinite(r)):
            raise DomainError(f"non-finite residual when probing parameter index {j}")
        return r

    def column(j: int) -> np.ndarray:
        h = steps[j]
        fwd_ok = p0[j] + h <= hi[j]
        bwd_ok = p0[j] - h >= lo[j]
        if fwd_ok and bwd_ok:
            return (probe(j, h) - probe(j, -h)) / (2.0 * h)
        r0 = probe(j, 0.0)
        if fwd_ok:
            return (probe(j, h) - r0) / h
        if bwd_ok:
            return (r0 - probe(j, -h)) / h
        raise DomainError(f"bounds too tight to difference parameter index {j}")

    if workers and workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(column, range(n)))
    else:
        cols = [column(j) for j in range(n)]
    return np.column_stack(cols)


def _covariance(jac: np.ndarray) -> np.ndarray:
    # pseudo-inverse of J^T J via the SVD of J
    _, s, vt = np.linalg.svd(jac, full_matrices=False)
    if s.size == 0:
        return np.zeros((jac.shape[1], jac.shape[1]))
    keep = s > np.finfo(float).eps * max(jac.shape) * s[0]
    vt = vt[keep]
    cov = (vt.T / s[keep] ** 2) @ vt
    return 0.5 * (cov + cov.T)


def lm_minimize(problem: FitProblem) -> FitResult:
    """Local minimizer of ``0.5 * ||residual||^2`` inside the bounds.

    Running out of iterations returns a result with ``converged=False``
    rather than raising.

    Raises
    ------
    DomainError
        The residual is non-finite at the initial point, or there are fewer
        residuals than parameters.
    """
    opts = problem.options
    lo, hi = problem.lower_bounds, problem.upper_bounds
    x = problem.initial.copy()
    n = x.size
    floor = problem.x_scale if problem.x_scale is not None else np.ones(n)
    n_eval = 0

    def fun(p):
        nonlocal n_eval
        n_eval += 1
        return np.asarray(problem.residual(p), dtype=float).ravel()

    def jac(p):
        if problem.jacobian is not None:
            return np.asarray(problem.jacobian(p), dtype=float)
        return finite_difference_jacobian(
            fun, p, opts.rel_step, floor, lo, hi, workers=opts.jacobian_workers
        )

    r = fun(x)
    if not np.all(np.isfinite(r)):
        raise DomainError("residual is not finite at the initial point")
    m = r.size
    if m < n:
        raise DomainError(f"{m} residuals cannot determine {n} parameters")
    cost = 0.5 * float(r @ r)
    history = [cost]
    lam = opts.damping_init
    nu = 2.0
    diag = np.zeros(n)
    iterations = 0
    converged = False
    message = "maximum iterations reached"
    J = None
    J_at = None

    while True:
        if cost == 0.0:
            converged, message = True, "zero residual"
            break
        J = jac(x)
        J_at = x
        g = J.T @ r
        col_norms = np.linalg.norm(J, axis=0)
        # components pushing into an active bound do not count
        free = ~(((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0)))
        rnorm = np.sqrt(2.0 * cost)
        with np.errstate(divide="ignore", invalid="ignore"):
            cosines = np.where(col_norms > 0, np.abs(g) / (col_norms * rnorm), 0.0)
        gnorm = float(np.max(cosines[free])) if np.any(free) else 0.0
        if gnorm <= opts.gradient_tolerance:
            converged, message = True, "gradient tolerance reached"
            break
        if iterations >= opts.max_iterations:
            break
        diag = np.maximum(diag, col_norms**2)
        d = np.where(diag > 0, diag, 1.0)

        # variables held at a bound by the gradient stay out of the step, so
        # clipping does not distort the others
        k = int(np.count_nonzero(free))
        while True:
            aug = np.vstack([J[:, free], np.diag(np.sqrt(lam * d[free]))])
            rhs = np.concatenate([-r, np.zeros(k)])
            step = np.zeros(n)
            step[free] = np.linalg.lstsq(aug, rhs, rcond=None)[0]
            x_new = np.clip(x + step, lo, hi)
            step = x_new - x
            small_step = np.linalg.norm(step) <= opts.step_tolerance * (
                np.linalg.norm(x) + opts.step_tolerance
            )
            r_new = fun(x_new)
            cost_new = 0.5 * float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
            js = J @ step
            predicted = -(float(g @ step) + 0.5 * float(js @ js))
            rho = (cost - cost_new) / predicted if predicted > 0 else -1.0
            if cost_new < cost and rho > 0:
                x, r, cost = x_new, r_new, cost_new
                history.append(cost)
                iterations += 1
                lam *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
                nu = 2.0
                break
            if small_step:
                break
            lam *= nu
            nu *= 2.0
        if small_step:
            converged, message = True, "step tolerance reached"
            break

    if J_at is None or J_at is not x:
        J = jac(x)
    dof = m - n
    reduced_chi2 = 2.0 * cost / dof if dof > 0 else float("nan")
    cov = _covariance(J)
    if not opts.absolute_sigma and dof > 0:
        cov = cov * reduced_chi2
    std = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return FitResult(
        params=x,
        covariance=cov,
        std_errors=std,
        reduced_chi2=reduced_chi2,
        iterations=iterations,
        converged=converged,
        final_residual_norm=float(np.sqrt(2.0 * cost)),
        message=message,
        cost_history=history,
        at_bound=(x <= lo) | (x >= hi),
        n_evaluations=n_eval,
        jacobian=J,
    )

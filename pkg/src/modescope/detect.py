"""Feature detection in full sweeps, catalog classification and per-mode reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, Mapping, Sequence

import numpy as np
from scipy.signal import find_peaks, peak_widths

from .dephasing import photons_to_temperature
from .errors import DomainError
from .fitting import ModeFit, sweep_arrays
from .sweep import SweepRecord

Origin = Literal["designed", "em_simulated"]
Classification = Literal["designed", "harmonic", "spurious", "neighbor", "unknown"]

DEFAULT_REL_TOLERANCE = 0.025
HARMONIC_ORDERS = (2, 3)
BASELINE_WINDOW_FRACTION = 0.05
RIPPLE_FLOOR = 1e-3


@dataclass(frozen=True)
class CatalogEntry:
    label: str
    frequency: float  # rad/s
    origin: Origin = "designed"

    def __post_init__(self):
        if not self.frequency > 0:
            raise DomainError(f"catalog frequency must be positive ({self.label})")
        if self.origin not in ("designed", "em_simulated"):
            raise DomainError(f"unknown origin {self.origin!r} for {self.label}")


@dataclass(frozen=True)
class ModeCatalog:
    entries: tuple[CatalogEntry, ...] = ()
    rel_tolerance: float = DEFAULT_REL_TOLERANCE

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        labels = [e.label for e in self.entries]
        if len(set(labels)) != len(labels):
            raise DomainError(f"catalog labels must be unique, got {labels}")
        if not (0.0 < self.rel_tolerance <= 0.1):
            raise DomainError(f"rel_tolerance must lie in (0, 0.1], got {self.rel_tolerance}")

    def of_origin(self, origin: Origin) -> list[CatalogEntry]:
        return [e for e in self.entries if e.origin == origin]


@dataclass(frozen=True)
class DetectedFeature:
    center_freq: float  # rad/s
    depth: float  # 1/s above the rolling baseline
    width: float  # rad/s, full width at half prominence
    prominence: float = 0.0
    classification: Classification = "unknown"
    matched_label: str | None = None
    match_error_rel: float | None = None
    confirmed: bool = True

    def __post_init__(self):
        if not (self.depth > 0 and self.width > 0):
            raise DomainError("feature depth and width must be positive")
        if (self.matched_label is None) != (self.match_error_rel is None):
            raise DomainError("match_error_rel must accompany matched_label")


def rolling_median(f: np.ndarray, g: np.ndarray, window: float) -> np.ndarray:
    """Median of ``g`` over points within ``window / 2`` of each frequency."""
    lo = np.searchsorted(f, f - 0.5 * window, side="left")
    hi = np.searchsorted(f, f + 0.5 * window, side="right")
    return np.array([np.median(g[a:b]) for a, b in zip(lo, hi)])


def _scatter(values: np.ndarray) -> float:
    return 1.4826 * float(np.median(np.abs(values - np.median(values))))


def detect_features(
    sweep: Sequence[SweepRecord],
    min_prominence: float | None = None,
    min_separation: float = 0.0,
    *,
    include_unconfirmed: bool = False,
) -> list[DetectedFeature]:
    """Peaks of the dephasing rate above a rolling-median baseline.

    A peak must rise ``min_prominence`` (1/s) above both the baseline and its
    surroundings. By default that threshold is five times the robust scatter
    of the baseline-subtracted rate, and at least 1e-3 of the tallest
    excursion. Peaks closer than ``min_separation``
    (rad/s) are merged into the deeper one. With ``include_unconfirmed``,
    excursions between half and the full threshold are returned with
    ``confirmed=False``.
    """
    f, g, _ = sweep_arrays(sweep)
    if f.size < 10:
        raise DomainError("feature detection needs at least 10 sweep points")
    span = f[-1] - f[0]
    baseline = rolling_median(f, g, BASELINE_WINDOW_FRACTION * span)
    excess = g - baseline
    if min_prominence is None:
        # the floor suppresses rolling-median ripple on noiseless data
        min_prominence = max(5.0 * _scatter(excess), RIPPLE_FLOOR * float(np.max(excess)))
    threshold = 0.5 * min_prominence if include_unconfirmed else min_prominence
    peaks, props = find_peaks(excess, height=threshold, prominence=threshold)
    if peaks.size == 0:
        return []
    _, _, left, right = peak_widths(excess, peaks, rel_height=0.5, prominence_data=(
        props["prominences"], props["left_bases"], props["right_bases"]))
    index = np.arange(f.size, dtype=float)
    widths = np.interp(right, index, f) - np.interp(left, index, f)
    smallest_step = float(np.min(np.diff(f)))

    candidates = []
    for k, p in enumerate(peaks):
        candidates.append(
            DetectedFeature(
                center_freq=float(f[p]),
                depth=float(excess[p]),
                width=float(widths[k]) if widths[k] > 0 else smallest_step,
                prominence=float(props["prominences"][k]),
                confirmed=bool(excess[p] >= min_prominence and props["prominences"][k] >= min_prominence),
            )
        )
    kept: list[DetectedFeature] = []
    for feat in sorted(candidates, key=lambda c: (-c.depth, c.center_freq)):
        if all(abs(feat.center_freq - k.center_freq) >= min_separation for k in kept):
            kept.append(feat)
    return sorted(kept, key=lambda c: c.center_freq)


def _rel_error(freq: float, target: float) -> float:
    return abs(freq - target) / target


def _greedy_match(features, pending, entries, tolerance):
    # nearest pairs first; pairs within tolerance of the tighter threshold are
    # decided before any looser pair is seen, which keeps matching monotone
    pairs = []
    for i in pending:
        for j, entry in enumerate(entries):
            err = _rel_error(features[i].center_freq, entry.frequency)
            if err <= tolerance:
                pairs.append((err, features[i].center_freq, entry.frequency, i, j))
    pairs.sort()
    taken_f, taken_e, out = set(), set(), {}
    for err, _, _, i, j in pairs:
        if i in taken_f or j in taken_e:
            continue
        taken_f.add(i)
        taken_e.add(j)
        out[i] = (entries[j], err)
    return out


def classify(
    features: Sequence[DetectedFeature],
    catalog: ModeCatalog,
    qubit_freqs: Sequence[float] | Mapping[str, float] = (),
) -> list[DetectedFeature]:
    """Label each feature as designed, harmonic, spurious, neighbor or unknown.

    Matching runs in stages, each over the features still unlabelled:

    1. designed catalog entries, one feature per entry, nearest pairs first;
    2. EM-simulated entries the same way, giving a labelled spurious mode;
    3. 2x and 3x multiples of designed entries (harmonic);
    4. qubit frequencies (neighbor).

    Everything within ``catalog.rel_tolerance`` relative error counts as a
    match. Leftover features are spurious when the catalog lists any designed
    mode to compare against, else unknown.
    """
    feats = list(features)
    tol = catalog.rel_tolerance
    result: list[DetectedFeature | None] = [None] * len(feats)
    pending = list(range(len(feats)))

    for origin, label_as in (("designed", "designed"), ("em_simulated", "spurious")):
        matches = _greedy_match(feats, pending, catalog.of_origin(origin), tol)
        for i, (entry, err) in matches.items():
            result[i] = replace(feats[i], classification=label_as, matched_label=entry.label,
                                match_error_rel=err)
        pending = [i for i in pending if i not in matches]

    designed = catalog.of_origin("designed")
    if isinstance(qubit_freqs, Mapping):
        qubits = list(qubit_freqs.items())
    else:
        qubits = [(f"qubit{k}", float(q)) for k, q in enumerate(qubit_freqs)]

    for i in pending:
        freq = feats[i].center_freq
        harmonic = [
            (_rel_error(freq, order * e.frequency), order * e.frequency, f"{e.label}x{order}")
            for e in designed
            for order in HARMONIC_ORDERS
        ]
        harmonic = sorted(h for h in harmonic if h[0] <= tol)
        if harmonic:
            err, _, label = harmonic[0]
            result[i] = replace(feats[i], classification="harmonic", matched_label=label,
                                match_error_rel=err)
            continue
        near = sorted((_rel_error(freq, q), q, label) for label, q in qubits)
        near = [n for n in near if n[0] <= tol]
        if near:
            err, _, label = near[0]
            result[i] = replace(feats[i], classification="neighbor", matched_label=label,
                                match_error_rel=err)
            continue
        result[i] = replace(
            feats[i],
            classification="spurious" if designed else "unknown",
            matched_label=None,
            match_error_rel=None,
        )
    return result  # type: ignore[return-value]


# -- per-mode report -------------------------------------------------------------


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    slope_err: float
    intercept_err: float
    r_squared: float
    n_points: int


def linear_regression(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Ordinary least-squares line with standard errors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 2:
        raise DomainError("linear regression needs at least two points")
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    if sxx == 0:
        raise DomainError("regression abscissae are all equal")
    slope = float(dx @ dy) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    ss_res = float(resid @ resid)
    ss_tot = float(dy @ dy)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    s2 = ss_res / (n - 2) if n > 2 else 0.0
    return LinearFit(
        slope=slope,
        intercept=float(intercept),
        slope_err=math.sqrt(s2 / sxx),
        intercept_err=math.sqrt(s2 * (1.0 / n + xm * xm / sxx)),
        r_squared=r2,
        n_points=n,
    )


@dataclass
class ModeReport:
    q_factor: float
    q_factor_err: float
    n_bar_on_resonance: float
    power_fit: LinearFit | None = None
    occupancy_status: Literal["thermal", "consistent_with_zero", "calibration_suspect"] | None = None
    t0_kelvin: float | None = None
    t0_upper_bound_kelvin: float | None = None
    notes: list[str] = field(default_factory=list)


def mode_report(fit: ModeFit, power_data: Sequence[tuple[float, float]] | None = None) -> ModeReport:
    """Q with propagated error and, given power data, the zero-power temperature.

    The intercept of photon number versus power is the residual occupation.
    A positive intercept converts to a temperature ``T0`` through the
    Bose-Einstein distribution at the bare frequency. A non-positive one is
    reported as consistent with zero occupancy, with an upper temperature
    bound from intercept + 2 standard errors. An intercept more than one
    standard error below zero is flagged as a calibration problem.
    """
    if not fit.result.converged:
        raise DomainError("mode_report needs a converged fit")
    report = ModeReport(
        q_factor=fit.q_factor,
        q_factor_err=fit.q_factor_err,
        n_bar_on_resonance=fit.params.n_bar_on_resonance,
    )
    if not power_data:
        return report
    powers, n_bars = zip(*power_data)
    line = linear_regression(powers, n_bars)
    report.power_fit = line
    omega = fit.params.omega_bare
    # exact linear data leaves only rounding in the intercept
    floor = 1e-12 * max(abs(v) for v in n_bars) if any(n_bars) else 0.0
    tol = max(line.intercept_err, floor)
    if line.intercept > floor:
        report.occupancy_status = "thermal"
        report.t0_kelvin = photons_to_temperature(line.intercept, omega)
        if line.intercept < line.intercept_err:
            report.notes.append("intercept within one standard error of zero")
        return report
    report.occupancy_status = "calibration_suspect" if line.intercept < -tol else "consistent_with_zero"
    if report.occupancy_status == "calibration_suspect":
        report.notes.append("negative zero-power occupation; power calibration suspect")
    upper = max(line.intercept, 0.0) + 2.0 * line.intercept_err
    report.t0_upper_bound_kelvin = photons_to_temperature(upper, omega) if upper > 0 else 0.0
    return report

"""Detrended fluctuation engine: profile, window residuals, F_q(t) curves,
log-log power-law fits, and two-segment crossover search.

The pipeline: build the cumulative de-meaned profile, compute per-window
mean squared residuals of polynomial fits (the residual tensor, shared by
every q), reduce them into F_q(t), then fit ln F against ln t. The q = 2
reduction is the plain detrended fluctuation analysis; dfa() literally
calls the same reduction, so its output is bitwise identical to the q = 2
row of a multi-q run on the same grid.
"""
import csv
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import (
    DataError,
    DegenerateSeriesError,
    FitError,
    FormatError,
    InsufficientDataError,
    InternalInvariantError,
    WindowError,
)
from .ioutil import fmt_float, write_csv

DEFAULT_GRID_POINTS = 20
DEFAULT_MIN_WINDOW = 16
DEFAULT_Q_GRID = np.linspace(-6.0, 6.0, 25)
ZERO_RESIDUAL_FLOOR_FACTOR = 1e-15
UNRELIABLE_FLOOR_FRACTION = 0.01
CROSSOVER_MIN_IMPROVEMENT = 0.05
CROSSOVER_MIN_SLOPE_DELTA = 0.02
_CLASS_BAND = 0.02


@dataclass(frozen=True)
class Profile:
    """Cumulative sum of the de-meaned source series."""

    values: np.ndarray
    source_mean: float


@dataclass(frozen=True)
class WindowGrid:
    """Strictly increasing window sizes plus the spacing used to build them."""

    sizes: np.ndarray
    spacing: str = "explicit"

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=np.int64)
        object.__setattr__(self, "sizes", sizes)
        if sizes.shape[0] == 0:
            raise WindowError("window grid is empty")
        if (np.diff(sizes) <= 0).any():
            raise WindowError("window sizes must be strictly increasing")

    @classmethod
    def log_spaced(cls, length, count=DEFAULT_GRID_POINTS, t_min=None, t_max=None,
                   detrend_order=1):
        """Default grid: `count` log-spaced sizes in [max(16, order+2), length/4]."""
        if t_min is None:
            t_min = max(DEFAULT_MIN_WINDOW, detrend_order + 2)
        if t_max is None:
            t_max = length // 4
        if t_max < t_min:
            raise WindowError(
                f"series length {length} too short: largest window {t_max} is "
                f"below the smallest window {t_min}"
            )
        raw = np.exp(np.linspace(math.log(t_min), math.log(t_max), count))
        sizes = np.unique(np.round(raw).astype(np.int64))
        return cls(sizes=sizes, spacing="logarithmic")

    @classmethod
    def dyadic(cls, length, t_min=DEFAULT_MIN_WINDOW, t_max=None):
        """Powers of two from t_min to t_max (default length/4)."""
        if t_max is None:
            t_max = length // 4
        lo = math.ceil(math.log2(t_min))
        hi = math.floor(math.log2(t_max))
        if hi < lo:
            raise WindowError(f"no powers of two in [{t_min}, {t_max}]")
        return cls(sizes=2 ** np.arange(lo, hi + 1, dtype=np.int64), spacing="dyadic")

    @classmethod
    def explicit(cls, sizes):
        return cls(sizes=np.asarray(sorted(set(int(t) for t in sizes)), dtype=np.int64))

    def validate(self, length, detrend_order=1):
        if int(self.sizes[0]) < detrend_order + 2:
            raise WindowError(
                f"smallest window {int(self.sizes[0])} is below detrend order "
                f"{detrend_order} + 2"
            )
        if int(self.sizes[-1]) > length // 4:
            raise WindowError(
                f"largest window {int(self.sizes[-1])} exceeds length/4 = {length // 4}"
            )


@dataclass(frozen=True)
class FluctuationCurve:
    """(t, F_q(t)) pairs for one q, with reduction diagnostics per t.

    floored counts windows whose residual was raised to the zero-residual
    floor (only possible for q <= 0); a point is unreliable when more than
    1% of its windows were floored, and fits exclude it.
    """

    q: float
    sizes: np.ndarray
    values: np.ndarray
    windows_used: np.ndarray
    floored: np.ndarray
    unreliable: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sizes", np.asarray(self.sizes, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(
            self, "windows_used", np.asarray(self.windows_used, dtype=np.int64)
        )
        object.__setattr__(self, "floored", np.asarray(self.floored, dtype=np.int64))
        object.__setattr__(self, "unreliable", np.asarray(self.unreliable, dtype=bool))
        n = self.sizes.shape[0]
        for name in ("values", "windows_used", "floored", "unreliable"):
            if getattr(self, name).shape[0] != n:
                raise DataError(f"curve field {name} must align with sizes")
        if n and not np.isfinite(self.values).all():
            raise InternalInvariantError("fluctuation values must be finite")

    def points(self):
        return list(zip(self.sizes.tolist(), self.values.tolist()))


@dataclass(frozen=True)
class Crossover:
    """Best two-segment fit found by the exhaustive breakpoint search."""

    t_break: int
    exponent_left: float
    exponent_right: float
    residual: float
    single_residual: float
    detected: bool


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares line through (ln t, ln F): F ~ exp(intercept) * t^exponent."""

    exponent: float
    intercept: float
    fit_range: tuple
    residual: float
    n_points: int
    q: float = None
    classification: str = None
    crossover: Crossover = None
    excluded_points: int = 0


def classify_exponent(exponent, band=_CLASS_BAND):
    """Memory class of a fitted exponent.

    0.5 is uncorrelated noise and 1.0 is 1/f noise; values within `band`
    of those anchors are labeled as the anchors themselves. Below lies
    anti-correlation, between lies long-range correlation, above 1 the
    series is unstable (better analyzed as increments).
    """
    if exponent < 0.5 - band:
        return "anti-correlated"
    if exponent <= 0.5 + band:
        return "white-noise"
    if exponent < 1.0 - band:
        return "long-range-correlated"
    if exponent <= 1.0 + band:
        return "one-over-f"
    return "unstable"


def _series_values(signal):
    values = getattr(signal, "values", signal)
    return np.ascontiguousarray(values, dtype=np.float64)


def build_profile(signal):
    """Cumulative sum of (A - mean(A)); the last value telescopes to zero."""
    x = _series_values(signal)
    if x.shape[0] < 8:
        raise InsufficientDataError(
            f"profile needs at least 8 points, got {x.shape[0]}"
        )
    mean = float(np.mean(x))
    profile = np.cumsum(x - mean)
    spread = float(np.std(x))
    if spread > 0 and abs(profile[-1]) > 1e-8 * x.shape[0] * spread:
        raise InternalInvariantError("profile failed to telescope to zero")
    return Profile(values=profile, source_mean=mean)


def window_fluctuations(profile, t, detrend_order=1):
    """Per-window mean squared detrending residuals f_k(t)^2 for one size."""
    values = profile.values if isinstance(profile, Profile) else profile
    return kernels.window_residuals(values, t, detrend_order)


def _reduce(q, residuals, floor):
    """One F_q(t) value from one window-residual array.

    q = 0 takes the exponential of the mean log; q <= 0 floors zero (and
    near-zero) residuals first and reports how many were floored.
    """
    floored = 0
    if q <= 0.0:
        below = residuals < floor
        floored = int(np.count_nonzero(below))
        residuals = np.maximum(residuals, floor)
    if q == 0.0:
        value = math.exp(0.5 * float(np.mean(np.log(residuals))))
    else:
        value = float(np.mean(residuals ** (q / 2.0))) ** (1.0 / q)
    return value, floored


def _ols_loglog(log_t, log_f):
    """Closed-form least squares, deterministic regardless of BLAS/threading."""
    mean_t = float(np.mean(log_t))
    mean_f = float(np.mean(log_f))
    centered = log_t - mean_t
    denominator = float(centered @ centered)
    slope = float(centered @ (log_f - mean_f)) / denominator
    intercept = mean_f - slope * mean_t
    residuals = log_f - (intercept + slope * log_t)
    rms = math.sqrt(float(np.mean(residuals * residuals)))
    return slope, intercept, rms


def mfdfa(signal, grid=None, q_grid=None, detrend_order=1, bidirectional=False,
          fit_range=None, threads=None):
    """Multi-q fluctuation curves and per-q power-law fits.

    Returns (curves, fits), index-aligned with q_grid. A q whose fit is
    degenerate yields None in fits, with a warning. The residual tensor is
    computed once and shared by every q; windows are taken forward from
    the series start, plus a backward pass when bidirectional.
    """
    x = _series_values(signal)
    variance = float(np.var(x))
    if variance == 0.0:
        raise DegenerateSeriesError(
            "constant series: all detrending residuals are zero, F_q is undefined"
        )
    if q_grid is None:
        q_grid = DEFAULT_Q_GRID
    q_grid = [float(q) for q in np.atleast_1d(np.asarray(q_grid, dtype=np.float64))]
    if not all(math.isfinite(q) for q in q_grid):
        raise DataError("q grid must be finite")
    # |q| below 1e-12 is numerically 1/q-explosive; route it to the exact
    # q = 0 log branch instead
    q_grid = [0.0 if abs(q) < 1e-12 else q for q in q_grid]
    if grid is None:
        grid = WindowGrid.log_spaced(x.shape[0], detrend_order=detrend_order)
    grid.validate(x.shape[0], detrend_order)

    profile = build_profile(x)
    sizes = grid.sizes
    tensor = kernels.residual_tensor(profile.values, sizes, detrend_order, threads)
    if bidirectional:
        backward = kernels.residual_tensor(
            profile.values[::-1], sizes, detrend_order, threads
        )
        tensor = [np.concatenate([f, b]) for f, b in zip(tensor, backward)]
    floor = ZERO_RESIDUAL_FLOOR_FACTOR * variance

    curves = []
    fits = []
    for q in q_grid:
        values = np.empty(sizes.shape[0])
        floored = np.zeros(sizes.shape[0], dtype=np.int64)
        windows_used = np.array([r.shape[0] for r in tensor], dtype=np.int64)
        for i, residuals in enumerate(tensor):
            values[i], floored[i] = _reduce(q, residuals, floor)
        unreliable = floored > UNRELIABLE_FLOOR_FRACTION * windows_used
        curve = FluctuationCurve(
            q=q,
            sizes=sizes.copy(),
            values=values,
            windows_used=windows_used,
            floored=floored,
            unreliable=unreliable,
        )
        curves.append(curve)
        try:
            fits.append(fit_power_law(curve, fit_range))
        except FitError as exc:
            warnings.warn(f"q={q}: fit dropped ({exc})")
            fits.append(None)
    return curves, fits


def dfa(signal, grid=None, detrend_order=1, bidirectional=False, fit_range=None,
        threads=None):
    """Detrended fluctuation analysis: the q = 2 reduction plus its fit.

    Delegates to the multi-q engine with q_grid=[2.0], so the curve is
    bitwise identical to the q = 2 member of any multi-q run on the same
    grid and flags. The fit gains the exponent classification.
    """
    curves, fits = mfdfa(
        signal,
        grid=grid,
        q_grid=[2.0],
        detrend_order=detrend_order,
        bidirectional=bidirectional,
        fit_range=fit_range,
        threads=threads,
    )
    if fits[0] is None:
        raise FitError("detrended fluctuation fit is degenerate")
    fit = replace(fits[0], classification=classify_exponent(fits[0].exponent))
    return curves[0], fit


def _fit_points(curve, fit_range):
    mask = np.isfinite(curve.values) & (curve.values > 0) & ~curve.unreliable
    if fit_range is not None:
        t_lo, t_hi = fit_range
        in_range = (curve.sizes >= t_lo) & (curve.sizes <= t_hi)
    else:
        in_range = np.ones(curve.sizes.shape[0], dtype=bool)
    excluded = int(np.count_nonzero(in_range & ~mask))
    keep = in_range & mask
    return curve.sizes[keep], curve.values[keep], excluded


def fit_power_law(curve, fit_range=None):
    """OLS on (ln t, ln F) over the fit range; needs >= 3 usable points.

    Non-positive F values and unreliable (heavily floored) points are
    excluded and counted in excluded_points.
    """
    t, f, excluded = _fit_points(curve, fit_range)
    if t.shape[0] < 3:
        raise FitError(
            f"need at least 3 usable grid points to fit, have {t.shape[0]}"
        )
    slope, intercept, rms = _ols_loglog(np.log(t), np.log(f))
    return PowerLawFit(
        exponent=slope,
        intercept=intercept,
        fit_range=(int(t[0]), int(t[-1])),
        residual=rms,
        n_points=int(t.shape[0]),
        q=curve.q,
        excluded_points=excluded,
    )


def detect_crossover(curve, fit_range=None):
    """Single fit plus the best two-segment split sharing a breakpoint.

    Every interior breakpoint leaving at least 4 points per segment is
    tried; the split minimizing the combined RMS wins. The crossover is
    flagged detected only when it improves the single-fit RMS by at least
    5% and the two slopes differ by more than 0.02. With fewer than 8
    usable points the single fit is returned with crossover None.
    """
    single = fit_power_law(curve, fit_range)
    t, f, _ = _fit_points(curve, fit_range)
    n = t.shape[0]
    if n < 8:
        return single
    log_t = np.log(t)
    log_f = np.log(f)
    best = None
    for i in range(3, n - 3):
        left = _ols_loglog(log_t[: i + 1], log_f[: i + 1])
        right = _ols_loglog(log_t[i:], log_f[i:])
        sse = (left[2] ** 2) * (i + 1) + (right[2] ** 2) * (n - i)
        combined = math.sqrt(sse / (n + 1))
        if best is None or combined < best[0]:
            best = (combined, int(t[i]), left[0], right[0])
    combined, t_break, slope_left, slope_right = best
    detected = (
        single.residual > 1e-12
        and combined < (1.0 - CROSSOVER_MIN_IMPROVEMENT) * single.residual
        and abs(slope_left - slope_right) > CROSSOVER_MIN_SLOPE_DELTA
    )
    crossover = Crossover(
        t_break=t_break,
        exponent_left=slope_left,
        exponent_right=slope_right,
        residual=combined,
        single_residual=single.residual,
        detected=detected,
    )
    return replace(single, crossover=crossover)


def write_fluctuation_csv(curves, path):
    """Fluctuation CSV: header q,t,F; one block of rows per curve."""
    if isinstance(curves, FluctuationCurve):
        curves = [curves]

    def rows():
        for curve in curves:
            q_text = fmt_float(curve.q)
            for t, value in zip(curve.sizes, curve.values):
                yield (q_text, str(int(t)), fmt_float(value))

    write_csv(path, ("q", "t", "F"), rows())


def read_fluctuation_csv(source):
    """Read a fluctuation CSV back into curves (one per distinct q, in order).

    Reduction diagnostics are not part of the CSV schema; re-read curves
    carry zero counts and no unreliable flags.
    """
    def rows_from(stream):
        reader = csv.reader(stream)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header] != ["q", "t", "f"]:
            raise FormatError(f"fluctuation CSV must start with q,t,F, got {header!r}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out.append((float(row[0]), int(row[1]), float(row[2])))
            except (ValueError, IndexError) as exc:
                raise FormatError(f"line {lineno}: unparseable row ({exc})")
        return out

    if hasattr(source, "read"):
        triples = rows_from(source)
    else:
        with open(source, "r", encoding="utf-8", newline="") as handle:
            triples = rows_from(handle)
    if not triples:
        raise FormatError("fluctuation CSV holds no rows")
    curves = []
    block_q = None
    block = []

    def flush():
        sizes = np.array([t for t, _ in block], dtype=np.int64)
        values = np.array([v for _, v in block])
        zeros = np.zeros(sizes.shape[0], dtype=np.int64)
        curves.append(
            FluctuationCurve(
                q=block_q,
                sizes=sizes,
                values=values,
                windows_used=zeros,
                floored=zeros.copy(),
                unreliable=np.zeros(sizes.shape[0], dtype=bool),
            )
        )

    for q, t, value in triples:
        if block_q is None or q != block_q:
            if block:
                flush()
            block_q = q
            block = []
        block.append((t, value))
    flush()
    return curves


def fit_to_dict(fit):
    """JSON-ready dict for one fit (used by the fit-report writers)."""
    payload = {
        "exponent": fit.exponent,
        "intercept": fit.intercept,
        "fit_range": list(fit.fit_range),
        "residual": fit.residual,
        "n_points": fit.n_points,
        "excluded_points": fit.excluded_points,
    }
    if fit.q is not None:
        payload["q"] = fit.q
    if fit.classification is not None:
        payload["classification"] = fit.classification
    if fit.crossover is not None:
        c = fit.crossover
        payload["crossover"] = {
            "t_break": c.t_break,
            "exponent_left": c.exponent_left,
            "exponent_right": c.exponent_right,
            "residual": c.residual,
            "single_residual": c.single_residual,
            "detected": c.detected,
        }
    return payload

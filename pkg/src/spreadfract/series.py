"""Return and volatility series, intraday-pattern removal, autocorrelation.

A SignalSeries is a uniformly sampled real series with a kind tag and
optional day/minute alignment. Lags and positions live on the trading-time
grid: element position = day_index * slots_per_day + minute_of_day, so a
lag of one trading day is exactly slots_per_day regardless of how many
samples a day actually contributed.

Segments encode trust across gaps: an autocorrelation pair is only formed
inside one segment. Exclusion gaps (missing bins) sever segments unless
bridge_gaps is chosen; the structural absence of a return at each day's
first bin does not sever anything, it just means no element sits there.
"""
import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DataError,
    DegenerateSeriesError,
    FormatError,
    InsufficientDataError,
    KindMismatchError,
)
from .ioutil import fmt_float, write_csv

KINDS = (
    "raw_return",
    "raw_volatility",
    "adjusted_return",
    "adjusted_volatility",
    "generic",
)

# kinds that live on the return grid, where each day's first bin is
# structurally empty rather than excluded
_RETURN_GRID_KINDS = KINDS[:4]

_ADJUSTED_KIND = {
    "raw_return": "adjusted_return",
    "raw_volatility": "adjusted_volatility",
    "generic": "generic",
}

PATTERN_EPSILON = 1e-12


@dataclass(frozen=True)
class SignalSeries:
    """Real-valued series with a kind tag and optional trading-time alignment.

    segment_starts lists the indices where contiguous (trusted) runs begin;
    None means the whole series is one run. Generic synthetic series carry
    no alignment: positions are then just 0..n-1.
    """

    values: np.ndarray
    kind: str = "generic"
    day_index: np.ndarray = None
    minute_of_day: np.ndarray = None
    slots_per_day: int = None
    segment_starts: np.ndarray = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise KindMismatchError(f"unknown series kind {self.kind!r}; one of {KINDS}")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        n = self.values.shape[0]
        aligned = self.day_index is not None or self.minute_of_day is not None
        if aligned:
            if self.day_index is None or self.minute_of_day is None:
                raise DataError("day_index and minute_of_day must be given together")
            object.__setattr__(
                self, "day_index", np.asarray(self.day_index, dtype=np.int64)
            )
            object.__setattr__(
                self, "minute_of_day", np.asarray(self.minute_of_day, dtype=np.int64)
            )
            if self.day_index.shape[0] != n or self.minute_of_day.shape[0] != n:
                raise DataError("alignment arrays must match the value count")
            if self.slots_per_day is not None and n:
                if (
                    self.minute_of_day.min() < 0
                    or self.minute_of_day.max() >= self.slots_per_day
                ):
                    raise DataError("minute_of_day out of range for slots_per_day")
        if self.segment_starts is not None:
            object.__setattr__(
                self,
                "segment_starts",
                np.asarray(self.segment_starts, dtype=np.int64),
            )
        if self.kind == "raw_volatility" and n and self.values.min() < 0:
            raise DataError("raw_volatility values must be non-negative")

    def __len__(self):
        return self.values.shape[0]

    def positions(self):
        """Trading-time position of each element (0..n-1 when unaligned)."""
        if self.day_index is None or self.slots_per_day is None:
            return np.arange(self.values.shape[0], dtype=np.int64)
        return self.day_index * np.int64(self.slots_per_day) + self.minute_of_day

    def segment_ids(self):
        """Per-element id of the contiguous run the element belongs to."""
        n = self.values.shape[0]
        ids = np.zeros(n, dtype=np.int64)
        if self.segment_starts is not None and n:
            marks = np.zeros(n, dtype=np.int64)
            starts = self.segment_starts[self.segment_starts > 0]
            marks[starts] = 1
            ids = np.cumsum(marks)
        return ids


@dataclass(frozen=True)
class IntradayPattern:
    """Per-bin-of-day mean of a signal across trading days.

    Slots no day contributed to are NaN with days_counted 0; consumers must
    refuse them. Patterns of volatility kinds are non-negative on every
    defined slot.
    """

    values: np.ndarray
    days_counted: np.ndarray
    kind: str = "generic"

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(
            self, "days_counted", np.asarray(self.days_counted, dtype=np.int64)
        )
        if self.values.shape != self.days_counted.shape:
            raise DataError("pattern values and day counts must align")
        defined = self.days_counted > 0
        if np.isnan(self.values[defined]).any():
            raise DataError("defined pattern slots must be finite")
        if self.kind in ("raw_volatility", "adjusted_volatility"):
            if defined.any() and self.values[defined].min() < 0:
                raise DataError("volatility pattern slots must be non-negative")

    @property
    def slots(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class AdjustmentResult:
    """Adjusted series plus the positions skipped by the near-zero guard."""

    adjusted: SignalSeries
    skipped_positions: tuple

    @property
    def skipped(self):
        return len(self.skipped_positions)


@dataclass(frozen=True)
class AutocorrelationCurve:
    """A(t) on integer trading-time lags, with per-lag pair counts.

    values[0] is exactly 1. Lags with no valid pair hold NaN and are
    omitted by the CSV writer. The estimator uses the global mean and
    variance with per-lag pair averages, so values can stray slightly
    outside [-1, 1] on short or heavily gapped inputs; they are reported
    as computed, never clipped.
    """

    lags: np.ndarray
    values: np.ndarray
    pair_counts: np.ndarray
    series_kind: str = "generic"

    def __post_init__(self):
        object.__setattr__(self, "lags", np.asarray(self.lags, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(
            self, "pair_counts", np.asarray(self.pair_counts, dtype=np.int64)
        )
        if not (self.lags.shape == self.values.shape == self.pair_counts.shape):
            raise DataError("lags, values, and pair_counts must align")
        if self.lags.shape[0] and abs(self.values[0] - 1.0) > 1e-12:
            raise DataError("autocorrelation at lag 0 must equal 1")


def spread_return(spreads, bridge_gaps=False):
    """Log-returns of consecutive rescaled spreads.

    A return is the log-ratio of a spread to its predecessor in the same
    day. With bridge_gaps the ratio is also taken across excluded-bin gaps
    inside a day; otherwise gaps produce no return and sever the segment.
    Day boundaries never produce a return and never sever segments.
    """
    v = spreads.values
    d = spreads.day_index
    m = spreads.minute_of_day
    if v.shape[0] < 2:
        raise InsufficientDataError("need at least 2 spread values to form a return")
    same_day = d[1:] == d[:-1]
    adjacent = same_day & (m[1:] == m[:-1] + 1)
    eligible = adjacent | (same_day & bool(bridge_gaps))
    if not eligible.any():
        raise InsufficientDataError("no usable consecutive spread pairs")
    breaks = same_day & ~adjacent & ~bool(bridge_gaps)

    returns = np.log(v[1:][eligible] / v[:-1][eligible])
    day_index = d[1:][eligible]
    minute_of_day = m[1:][eligible]
    segment_of_step = np.cumsum(breaks)
    seg = segment_of_step[eligible]
    starts = np.flatnonzero(np.diff(seg, prepend=seg[0] - 1) > 0)
    return SignalSeries(
        values=returns,
        kind="raw_return",
        day_index=day_index,
        minute_of_day=minute_of_day,
        slots_per_day=spreads.slots_per_day,
        segment_starts=starts,
    )


def spread_volatility(returns):
    """Elementwise absolute value of the raw return series."""
    if returns.kind != "raw_return":
        raise KindMismatchError(
            f"spread_volatility needs a raw_return series, got {returns.kind!r}"
        )
    return replace(returns, values=np.abs(returns.values), kind="raw_volatility")


def intraday_pattern(signal, slots_per_day=None):
    """Mean of the signal at each bin of the day, over days with a value there."""
    slots = slots_per_day if slots_per_day is not None else signal.slots_per_day
    if signal.day_index is None or slots is None:
        raise DataError(
            "intraday pattern needs day/minute alignment and slots_per_day"
        )
    sums = np.bincount(signal.minute_of_day, weights=signal.values, minlength=slots)
    counts = np.bincount(signal.minute_of_day, minlength=slots).astype(np.int64)
    values = np.full(slots, np.nan)
    defined = counts > 0
    values[defined] = sums[defined] / counts[defined]
    return IntradayPattern(values=values, days_counted=counts, kind=signal.kind)


def remove_intraday_pattern(signal, pattern, epsilon=PATTERN_EPSILON):
    """Divide the signal by its intraday pattern, bin by bin.

    Elements whose pattern value has magnitude below epsilon are skipped
    and their (day, bin) positions reported; a bin the pattern never saw
    (days_counted 0) is refused outright. Kind is promoted raw_return ->
    adjusted_return and raw_volatility -> adjusted_volatility.
    """
    if signal.kind not in _ADJUSTED_KIND:
        raise KindMismatchError(f"series of kind {signal.kind!r} is already adjusted")
    if pattern.kind != signal.kind:
        raise KindMismatchError(
            f"pattern kind {pattern.kind!r} does not match signal kind {signal.kind!r}"
        )
    if signal.minute_of_day is None:
        raise DataError("pattern removal needs day/minute alignment")
    if signal.values.shape[0] and signal.minute_of_day.max() >= pattern.slots:
        raise DataError("signal uses bins beyond the pattern's length")

    divisor = pattern.values[signal.minute_of_day]
    undefined = pattern.days_counted[signal.minute_of_day] == 0
    if undefined.any():
        slot = int(signal.minute_of_day[undefined][0])
        raise DataError(f"pattern slot {slot} is undefined (no day contributed)")
    keep = np.abs(divisor) >= epsilon
    skipped = tuple(
        (int(d), int(m))
        for d, m in zip(signal.day_index[~keep], signal.minute_of_day[~keep])
    )

    values = signal.values[keep] / divisor[keep]
    seg = signal.segment_ids()[keep]
    kept_idx = np.flatnonzero(keep)
    if kept_idx.shape[0] == 0:
        raise InsufficientDataError("every element was skipped by the pattern guard")
    new_run = np.ones(kept_idx.shape[0], dtype=bool)
    new_run[1:] = (np.diff(seg) != 0) | (np.diff(kept_idx) != 1)
    adjusted = SignalSeries(
        values=values,
        kind=_ADJUSTED_KIND[signal.kind],
        day_index=signal.day_index[keep],
        minute_of_day=signal.minute_of_day[keep],
        slots_per_day=signal.slots_per_day,
        segment_starts=np.flatnonzero(new_run),
    )
    return AdjustmentResult(adjusted=adjusted, skipped_positions=skipped)


def default_max_lag(signal):
    """min(length/4, 10 trading days), the documented autocorrelation span."""
    n = signal.values.shape[0]
    day = signal.slots_per_day if signal.slots_per_day is not None else 240
    return int(min(n // 4, 10 * day))


def autocorrelation(signal, max_lag=None):
    """A(t) = (<x(u)x(u+t)> - <x>^2) / (<x^2> - <x>^2) on trading-time lags.

    The mean and variance are global; the lag average runs over all pairs
    whose endpoints both exist and share a segment. Lags with no pairs
    yield NaN. A(0) is exactly 1.
    """
    x = signal.values
    n = x.shape[0]
    if max_lag is None:
        max_lag = default_max_lag(signal)
    max_lag = int(max_lag)
    if max_lag < 0:
        raise DataError("max_lag must be non-negative")
    if n <= max_lag:
        raise InsufficientDataError(
            f"series length {n} must exceed max_lag {max_lag}"
        )
    if n < 2:
        raise InsufficientDataError("autocorrelation needs at least 2 points")
    mean = np.mean(x)
    variance = np.mean(x * x) - mean * mean
    if variance <= 0.0:
        raise DegenerateSeriesError(
            "autocorrelation undefined for a zero-variance series"
        )

    pos = signal.positions()
    seg = signal.segment_ids()
    span = int(pos[-1]) + 1
    index_at = np.full(span + max_lag + 1, -1, dtype=np.int64)
    index_at[pos] = np.arange(n, dtype=np.int64)

    lags = np.arange(max_lag + 1, dtype=np.int64)
    values = np.full(max_lag + 1, np.nan)
    pair_counts = np.zeros(max_lag + 1, dtype=np.int64)
    for t in range(max_lag + 1):
        partner = index_at[pos + t]
        ok = partner >= 0
        if t:
            ok &= seg == np.where(ok, seg[partner], -1)
        count = int(np.count_nonzero(ok))
        pair_counts[t] = count
        if count:
            values[t] = (np.mean(x[ok] * x[partner[ok]]) - mean * mean) / variance
    return AutocorrelationCurve(
        lags=lags, values=values, pair_counts=pair_counts, series_kind=signal.kind
    )


def write_signal_csv(signal, path):
    """Signal CSV: header day,minute,value,kind.

    Unaligned series are written with day 0 and minute equal to the sample
    index, which round-trips positions exactly.
    """
    n = signal.values.shape[0]
    if signal.day_index is None:
        days = np.zeros(n, dtype=np.int64)
        minutes = np.arange(n, dtype=np.int64)
    else:
        days = signal.day_index
        minutes = signal.minute_of_day
    rows = (
        (str(int(d)), str(int(m)), fmt_float(v), signal.kind)
        for d, m, v in zip(days, minutes, signal.values)
    )
    write_csv(path, ("day", "minute", "value", "kind"), rows)


def read_signal_csv(source, slots_per_day=None):
    """Read a signal CSV back into a SignalSeries.

    Segmentation is re-derived conservatively from positional adjacency:
    any jump severs, except the structural absence of each day's first bin
    for return-grid kinds. slots_per_day defaults to max(minute)+1.
    """
    def rows_from(stream):
        reader = csv.reader(stream)
        header = next(reader, None)
        expected = ["day", "minute", "value", "kind"]
        if header is None or [c.strip().lower() for c in header] != expected:
            raise FormatError(
                f"signal CSV must start with day,minute,value,kind, got {header!r}"
            )
        days, minutes, values, kinds = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                days.append(int(row[0]))
                minutes.append(int(row[1]))
                values.append(float(row[2]))
                kinds.append(row[3].strip())
            except (ValueError, IndexError) as exc:
                raise FormatError(f"line {lineno}: unparseable signal row ({exc})")
        return days, minutes, values, kinds

    if hasattr(source, "read"):
        days, minutes, values, kinds = rows_from(source)
    else:
        with open(source, "r", encoding="utf-8", newline="") as handle:
            days, minutes, values, kinds = rows_from(handle)
    if not values:
        raise FormatError("signal CSV holds no rows")
    kind = kinds[0]
    if any(k != kind for k in kinds):
        raise FormatError("signal CSV must hold a single kind")
    if kind not in KINDS:
        raise FormatError(f"signal CSV kind {kind!r} is not one of {KINDS}")

    day_index = np.array(days, dtype=np.int64)
    minute_of_day = np.array(minutes, dtype=np.int64)
    if slots_per_day is None:
        slots_per_day = int(minute_of_day.max()) + 1
    pos = day_index * np.int64(slots_per_day) + minute_of_day
    step = np.diff(pos)
    if (step <= 0).any():
        raise FormatError("signal CSV positions must be strictly increasing")
    severed = step != 1
    if kind in _RETURN_GRID_KINDS:
        day_step = (
            (day_index[1:] == day_index[:-1] + 1)
            & (minute_of_day[1:] == 1)
            & (minute_of_day[:-1] == slots_per_day - 1)
        )
        severed &= ~day_step
    starts = np.concatenate(([0], np.flatnonzero(severed) + 1))
    return SignalSeries(
        values=np.array(values),
        kind=kind,
        day_index=day_index,
        minute_of_day=minute_of_day,
        slots_per_day=slots_per_day,
        segment_starts=starts,
    )


def write_acf_csv(curve, path):
    """ACF CSV: header lag,acf; lags with no pairs are omitted."""
    rows = (
        (str(int(lag)), fmt_float(value))
        for lag, value in zip(curve.lags, curve.values)
        if not np.isnan(value)
    )
    write_csv(path, ("lag", "acf"), rows)

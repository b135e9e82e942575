"""Tick parsing, validation, and aggregation into the per-minute rescaled
spread series.

A tick is one quote observation (timestamp, best ask, best bid). The
rescaled spread for a minute is the arithmetic mean of the instantaneous
spreads of the ticks inside that minute; minutes are half-open intervals
[m, m+1) on the session clock, and cross-day boundaries never merge.
"""
import csv
import warnings
from dataclasses import dataclass, field
from datetime import datetime, time

import numpy as np

from .errors import CalendarError, ConfigError, DataError, FormatError, OrderingError
from .ioutil import fmt_float, write_csv

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"


@dataclass(frozen=True)
class TickRecord:
    """One quote observation: lowest ask and highest bid at a timestamp."""

    timestamp: datetime
    ask: float
    bid: float

    def __post_init__(self):
        if not (self.ask > 0 and self.bid > 0):
            raise FormatError(
                f"non-positive quote at {self.timestamp}: ask={self.ask}, bid={self.bid}"
            )
        if self.bid > self.ask:
            raise FormatError(
                f"crossed quote at {self.timestamp}: bid {self.bid} > ask {self.ask}"
            )


def _parse_session(text):
    try:
        opening, closing = text.split("-")
        o_h, o_m = opening.strip().split(":")
        c_h, c_m = closing.strip().split(":")
        return time(int(o_h), int(o_m)), time(int(c_h), int(c_m))
    except (ValueError, TypeError):
        raise CalendarError(f"session must look like HH:MM-HH:MM, got {text!r}")


def _session_minutes(opening, closing):
    return (closing.hour * 60 + closing.minute) - (opening.hour * 60 + opening.minute)


@dataclass(frozen=True)
class SessionCalendar:
    """Trading-day layout: ordered, disjoint wall-clock sessions.

    The default is two 120-minute sessions, 09:30-11:30 and 13:00-15:00,
    i.e. 240 trading minutes per day. Session intervals are half-open:
    a tick at the closing minute's first second is already outside.
    """

    sessions: tuple = (
        (time(9, 30), time(11, 30)),
        (time(13, 0), time(15, 0)),
    )
    minutes_per_day: int = 240

    def __post_init__(self):
        if not self.sessions:
            raise CalendarError("calendar needs at least one session")
        total = 0
        previous_close = None
        for opening, closing in self.sessions:
            length = _session_minutes(opening, closing)
            if length <= 0:
                raise CalendarError(
                    f"session {opening}-{closing} must open before it closes"
                )
            if previous_close is not None and opening < previous_close:
                raise CalendarError("sessions must be ordered and disjoint")
            previous_close = closing
            total += length
        if total != self.minutes_per_day:
            raise CalendarError(
                f"session lengths sum to {total} minutes, expected {self.minutes_per_day}"
            )

    @classmethod
    def from_string(cls, text):
        """Build from "HH:MM-HH:MM[,HH:MM-HH:MM...]"; total length is derived."""
        sessions = tuple(_parse_session(part) for part in text.split(","))
        total = sum(_session_minutes(o, c) for o, c in sessions)
        return cls(sessions=sessions, minutes_per_day=total)

    def as_string(self):
        return ",".join(
            f"{o.hour:02d}:{o.minute:02d}-{c.hour:02d}:{c.minute:02d}"
            for o, c in self.sessions
        )

    def minute_slot(self, timestamp):
        """Minute-of-day slot in [0, minutes_per_day), or None outside sessions.

        Seconds are truncated: a tick anywhere inside minute m belongs to m.
        """
        clock = timestamp.time()
        offset = 0
        for opening, closing in self.sessions:
            if opening <= clock < closing:
                return (
                    offset
                    + (clock.hour * 60 + clock.minute)
                    - (opening.hour * 60 + opening.minute)
                )
            offset += _session_minutes(opening, closing)
        return None


@dataclass(frozen=True)
class SpreadSeries:
    """Per-minute rescaled spreads with day/minute alignment.

    minute_of_day holds the bin index: with delta_t > 1 each bin spans
    delta_t session minutes and slots_per_day = minutes_per_day / delta_t.
    Excluded bins (no transactions, or every tick at zero spread) are not
    stored; their positions and reasons are recorded in `excluded`.
    """

    values: np.ndarray
    day_index: np.ndarray
    minute_of_day: np.ndarray
    slots_per_day: int
    delta_t: int = 1
    excluded: tuple = ()
    partial_days: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "day_index", np.asarray(self.day_index, dtype=np.int64))
        object.__setattr__(
            self, "minute_of_day", np.asarray(self.minute_of_day, dtype=np.int64)
        )
        n = self.values.shape[0]
        if self.day_index.shape[0] != n or self.minute_of_day.shape[0] != n:
            raise DataError("values, day_index, and minute_of_day must align")
        if n and not (self.values > 0).all():
            raise DataError(
                "rescaled spreads must be positive; zero-spread minutes are "
                "excluded, not stored"
            )
        if n and (
            self.minute_of_day.min() < 0 or self.minute_of_day.max() >= self.slots_per_day
        ):
            raise DataError("minute_of_day out of range for slots_per_day")

    def __len__(self):
        return self.values.shape[0]

    @property
    def empty_minutes(self):
        """Count of excluded bins that contained zero transactions."""
        return sum(1 for _, _, reason in self.excluded if reason == "empty")

    @property
    def zero_spread_minutes(self):
        return sum(1 for _, _, reason in self.excluded if reason == "zero_spread")


def instantaneous_spread(tick):
    """Spread of one quote: ask minus bid, non-negative by construction."""
    return tick.ask - tick.bid


def parse_ticks(source, ordering="sort", on_bad_line="warn"):
    """Parse a tick CSV (header timestamp,ask,bid) into TickRecord objects.

    source may be a path or an open text stream. Malformed rows and crossed
    quotes are skipped with a line-numbered warning, or raise FormatError
    when on_bad_line="error". Timestamps out of order are stable-sorted by
    default; ordering="strict" raises OrderingError instead.
    """
    if ordering not in ("sort", "strict"):
        raise ConfigError(f"ordering must be 'sort' or 'strict', got {ordering!r}")
    if on_bad_line not in ("warn", "error"):
        raise ConfigError(f"on_bad_line must be 'warn' or 'error', got {on_bad_line!r}")
    if hasattr(source, "read"):
        return _parse_tick_stream(source, ordering, on_bad_line)
    with open(source, "r", encoding="utf-8", newline="") as handle:
        return _parse_tick_stream(handle, ordering, on_bad_line)


def _parse_tick_stream(stream, ordering, on_bad_line):
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        warnings.warn("empty tick input: no header, no records")
        return []
    names = [cell.strip().lower() for cell in header]
    try:
        col = {name: names.index(name) for name in ("timestamp", "ask", "bid")}
    except ValueError:
        raise FormatError(
            f"tick header must name timestamp, ask, and bid columns, got {header!r}"
        )

    def bad(lineno, reason):
        if on_bad_line == "error":
            raise FormatError(f"line {lineno}: {reason}")
        warnings.warn(f"line {lineno}: {reason}; row skipped")

    records = []
    disorder_at = None
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < 3:
            bad(lineno, f"expected 3 fields, got {len(row)}")
            continue
        try:
            stamp = datetime.strptime(row[col["timestamp"]].strip(), TIMESTAMP_FORMAT)
            ask = float(row[col["ask"]].strip())
            bid = float(row[col["bid"]].strip())
        except ValueError as exc:
            bad(lineno, f"unparseable field ({exc})")
            continue
        try:
            record = TickRecord(stamp, ask, bid)
        except FormatError as exc:
            bad(lineno, str(exc))
            continue
        if records and record.timestamp < records[-1].timestamp and disorder_at is None:
            disorder_at = lineno
        records.append(record)
    if not records:
        warnings.warn("empty tick input: no records parsed")
        return records
    if disorder_at is not None:
        if ordering == "strict":
            raise OrderingError(
                f"timestamps are not non-decreasing (first violation at line {disorder_at})"
            )
        records.sort(key=lambda r: r.timestamp)
    return records


def rescale_to_minutes(ticks, calendar=None, delta_t=1, strict_session=False):
    """Aggregate sorted ticks into the per-bin mean-spread series.

    Each bin's value is the mean instantaneous spread over its ticks.
    Bins with no ticks are excluded with reason "empty"; bins where every
    tick has zero spread are excluded with reason "zero_spread". Days with
    any empty bin are flagged partial. Ticks outside every session are
    dropped with a warning, or raise CalendarError when strict_session.
    """
    calendar = calendar or SessionCalendar()
    delta_t = int(delta_t)
    if delta_t < 1:
        raise ConfigError("delta_t must be >= 1 minute")
    if calendar.minutes_per_day % delta_t:
        raise ConfigError(
            f"delta_t={delta_t} must divide minutes_per_day={calendar.minutes_per_day}"
        )
    slots_per_day = calendar.minutes_per_day // delta_t

    dates = []
    slots = []
    spreads = []
    outside = 0
    for tick in ticks:
        minute = calendar.minute_slot(tick.timestamp)
        if minute is None:
            if strict_session:
                raise CalendarError(
                    f"tick at {tick.timestamp} falls outside every session"
                )
            outside += 1
            continue
        dates.append(tick.timestamp.date())
        slots.append(minute // delta_t)
        spreads.append(instantaneous_spread(tick))
    if outside:
        warnings.warn(f"{outside} tick(s) outside the session calendar were dropped")
    if not dates:
        return SpreadSeries(
            values=np.empty(0),
            day_index=np.empty(0, dtype=np.int64),
            minute_of_day=np.empty(0, dtype=np.int64),
            slots_per_day=slots_per_day,
            delta_t=delta_t,
        )

    day_of = {date: i for i, date in enumerate(sorted(set(dates)))}
    n_days = len(day_of)
    sums = np.zeros((n_days, slots_per_day))
    counts = np.zeros((n_days, slots_per_day), dtype=np.int64)
    for date, slot, spread in zip(dates, slots, spreads):
        d = day_of[date]
        sums[d, slot] += spread
        counts[d, slot] += 1

    values = []
    day_index = []
    minute_of_day = []
    excluded = []
    partial_days = []
    for d in range(n_days):
        if (counts[d] == 0).any():
            partial_days.append(d)
        for s in range(slots_per_day):
            if counts[d, s] == 0:
                excluded.append((d, s, "empty"))
            elif sums[d, s] == 0.0:
                excluded.append((d, s, "zero_spread"))
            else:
                values.append(sums[d, s] / counts[d, s])
                day_index.append(d)
                minute_of_day.append(s)

    return SpreadSeries(
        values=np.array(values),
        day_index=np.array(day_index, dtype=np.int64),
        minute_of_day=np.array(minute_of_day, dtype=np.int64),
        slots_per_day=slots_per_day,
        delta_t=delta_t,
        excluded=tuple(excluded),
        partial_days=tuple(partial_days),
    )


def write_spread_csv(series, path):
    """Spread CSV: header day,minute,spread; excluded bins are omitted rows."""
    rows = (
        (str(int(d)), str(int(m)), fmt_float(v))
        for d, m, v in zip(series.day_index, series.minute_of_day, series.values)
    )
    write_csv(path, ("day", "minute", "spread"), rows)


def read_spread_csv(source, slots_per_day=None, delta_t=1):
    """Read a spread CSV back into a SpreadSeries.

    slots_per_day defaults to max(minute)+1; exclusion reasons are not part
    of the CSV schema, so gaps read back with reason "gap".
    """
    if hasattr(source, "read"):
        days, minutes, values = _read_spread_rows(source)
    else:
        with open(source, "r", encoding="utf-8", newline="") as handle:
            days, minutes, values = _read_spread_rows(handle)
    day_index = np.array(days, dtype=np.int64)
    minute_of_day = np.array(minutes, dtype=np.int64)
    if slots_per_day is None:
        slots_per_day = int(minute_of_day.max()) + 1 if len(minutes) else 1
    excluded = []
    for i in range(1, len(days)):
        if day_index[i] == day_index[i - 1]:
            for missing in range(int(minute_of_day[i - 1]) + 1, int(minute_of_day[i])):
                excluded.append((int(day_index[i]), missing, "gap"))
    return SpreadSeries(
        values=np.array(values),
        day_index=day_index,
        minute_of_day=minute_of_day,
        slots_per_day=slots_per_day,
        delta_t=delta_t,
        excluded=tuple(excluded),
    )


def _read_spread_rows(stream):
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or [c.strip().lower() for c in header] != ["day", "minute", "spread"]:
        raise FormatError(f"spread CSV must start with day,minute,spread, got {header!r}")
    days, minutes, values = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            days.append(int(row[0]))
            minutes.append(int(row[1]))
            values.append(float(row[2]))
        except (ValueError, IndexError) as exc:
            raise FormatError(f"line {lineno}: unparseable spread row ({exc})")
    return days, minutes, values

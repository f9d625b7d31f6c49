"""Five-minute tick records: CSV ingest, serialization, synthesis and daily bars."""
from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass, field
from itertools import groupby
from typing import Iterable, TextIO

import numpy as np

from .exceptions import BadParams, DuplicateTimestamp, EmptySeries, InvariantViolation, MalformedRow

HEADER = ("date", "time", "open", "high", "low", "close", "volume", "nifty")
TICK_MINUTES = 5


@dataclass(frozen=True)
class TickRecord:
    date: dt.date
    time: int  # minutes since midnight
    open: float
    high: float
    low: float
    close: float
    volume: int
    index_level: float

    def __post_init__(self):
        if not 0 <= self.time < 1440:
            raise InvariantViolation(f"time {self.time} outside [0, 1440)")
        if self.time % TICK_MINUTES:
            raise InvariantViolation(f"time {self.time} is not on the {TICK_MINUTES}-minute grid")
        prices = (self.open, self.high, self.low, self.close)
        if not all(math.isfinite(p) and p > 0 for p in prices):
            raise InvariantViolation(f"non-positive or non-finite price in {prices}")
        if not (self.low <= self.open <= self.high and self.low <= self.close <= self.high):
            raise InvariantViolation(
                f"{self.date} {format_time(self.time)}: OHLC out of order "
                f"(o={self.open}, h={self.high}, l={self.low}, c={self.close})"
            )
        if self.volume < 0:
            raise InvariantViolation(f"negative volume {self.volume}")
        if not (math.isfinite(self.index_level) and self.index_level > 0):
            raise InvariantViolation(f"non-positive index level {self.index_level}")

    @property
    def key(self) -> tuple[dt.date, int]:
        return (self.date, self.time)


@dataclass(frozen=True)
class TickSeries:
    records: tuple[TickRecord, ...]
    symbol: str = "SYNTH"

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.key == prev.key:
                raise DuplicateTimestamp(f"duplicate timestamp {cur.date} {format_time(cur.time)}")
            if cur.key < prev.key:
                raise InvariantViolation("records are not sorted by (date, time)")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def dates(self) -> list[dt.date]:
        return sorted({r.date for r in self.records})

    def scaled(self, factor: float) -> "TickSeries":
        """Copy with every price multiplied by ``factor`` (volume and index untouched)."""
        if factor <= 0:
            raise BadParams("scale factor must be positive")
        return TickSeries(
            tuple(
                TickRecord(r.date, r.time, r.open * factor, r.high * factor, r.low * factor,
                           r.close * factor, r.volume, r.index_level)
                for r in self.records
            ),
            self.symbol,
        )


@dataclass(frozen=True)
class DailyBar:
    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: int


@dataclass(frozen=True)
class IngestFormat:
    delimiter: str = ","
    header: tuple[str, ...] = HEADER


def format_time(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def parse_time(text: str) -> int:
    hh, sep, mm = text.strip().partition(":")
    if not sep or len(mm) != 2 or not hh.isdigit() or not mm.isdigit():
        raise ValueError(f"bad time {text!r}, expected HH:MM")
    h, m = int(hh), int(mm)
    if h > 23 or m > 59:
        raise ValueError(f"bad time {text!r}")
    return 60 * h + m


def _parse_row(row: list[str], lineno: int) -> TickRecord:
    if len(row) != len(HEADER):
        raise MalformedRow(f"line {lineno}: expected {len(HEADER)} fields, got {len(row)}")
    try:
        date = dt.date.fromisoformat(row[0].strip())
        time = parse_time(row[1])
        o, h, l, c = (float(x) for x in row[2:6])
        vol_text = row[6].strip()
        volume = int(vol_text) if vol_text.lstrip("-").isdigit() else int(float(vol_text))
        if float(vol_text) != volume:
            raise ValueError(f"fractional volume {vol_text!r}")
        index_level = float(row[7])
    except ValueError as exc:
        raise MalformedRow(f"line {lineno}: {exc}") from exc
    try:
        return TickRecord(date, time, o, h, l, c, volume, index_level)
    except InvariantViolation as exc:
        raise InvariantViolation(f"line {lineno}: {exc}") from exc


def parse_ticks(source: str | TextIO, fmt: IngestFormat = IngestFormat(), symbol: str = "SYNTH") -> TickSeries:
    """Parse a tick CSV into a sorted, validated :class:`TickSeries`.

    ``source`` is either CSV text or an open text stream. The header line is
    required and must match ``date,time,open,high,low,close,volume,nifty``.
    Rows may arrive in any order; the result is sorted by (date, time).
    """
    stream = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.reader(stream, delimiter=fmt.delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow("empty input: header line required") from None
    if tuple(h.strip().lower() for h in header) != fmt.header:
        raise MalformedRow(f"bad header {header!r}, expected {','.join(fmt.header)}")
    records = [_parse_row(row, i) for i, row in enumerate(reader, start=2) if row and any(row)]
    records.sort(key=lambda r: r.key)
    return TickSeries(tuple(records), symbol)


def serialize_ticks(series: TickSeries) -> str:
    """Render a series in the ingest CSV format; ``parse_ticks`` inverts it exactly."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(HEADER)
    for r in series.records:
        writer.writerow([
            r.date.isoformat(), format_time(r.time), repr(r.open), repr(r.high), repr(r.low),
            repr(r.close), r.volume, repr(r.index_level),
        ])
    return out.getvalue()


def read_ticks(path, symbol: str | None = None) -> TickSeries:
    with open(path, newline="") as fh:
        return parse_ticks(fh, symbol=symbol or str(path))


def write_ticks(series: TickSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(serialize_ticks(series))


@dataclass(frozen=True)
class SynthParams:
    """Knobs of the synthetic tick generator.

    The daily backbone is a geometric Brownian motion in ``drift`` and
    ``volatility`` (per trading day, log scale). Within each day, a slot-level
    momentum process (``slot_vol``, ``slot_momentum``) moves the price between
    the three intraday slots, and every 5-minute bar carries lognormal
    ``jitter``.
    """

    start_price: float = 100.0
    drift: float = 0.0002
    volatility: float = 0.012
    jitter: float = 0.0008
    slot_vol: float = 0.002
    slot_momentum: float = 0.0
    index_start: float = 6000.0
    index_beta: float = 0.6
    index_vol: float = 0.004
    volume_mean: float = 1500.0
    start_date: dt.date = dt.date(2013, 1, 1)
    open_minute: int = 540
    close_minute: int = 930
    slot_bounds: tuple[int, ...] = field(default=(690, 810))

    def validate(self) -> None:
        if not (self.start_price > 0 and math.isfinite(self.start_price)):
            raise BadParams("start_price must be positive")
        if not (self.index_start > 0 and math.isfinite(self.index_start)):
            raise BadParams("index_start must be positive")
        if not self.volatility >= 0 or not math.isfinite(self.volatility):
            raise BadParams("volatility must be non-negative and finite")
        if not math.isfinite(self.drift):
            raise BadParams("drift must be finite")
        for name in ("jitter", "slot_vol", "index_vol"):
            if getattr(self, name) < 0:
                raise BadParams(f"{name} must be non-negative")
        if not -1 < self.slot_momentum < 1:
            raise BadParams("slot_momentum must lie in (-1, 1)")
        if self.volume_mean <= 0:
            raise BadParams("volume_mean must be positive")
        if self.open_minute % TICK_MINUTES or self.close_minute % TICK_MINUTES:
            raise BadParams("session bounds must be on the 5-minute grid")


def trading_days(start: dt.date, count: int) -> list[dt.date]:
    """``count`` consecutive weekdays beginning at (or after) ``start``."""
    out = []
    day = start
    while len(out) < count:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


def synth_ticks(seed: int, days: int, params: SynthParams = SynthParams(), symbol: str = "SYNTH") -> TickSeries:
    """Generate a deterministic synthetic tick series of ``days`` trading days.

    The same ``(seed, days, params)`` always yields a bit-identical series.
    With ``volatility == jitter == slot_vol == 0`` every price on trading day
    ``k`` (1-based) equals ``start_price * exp(drift * k)``.
    """
    if days < 1:
        raise BadParams("days must be >= 1")
    params.validate()
    rng = np.random.default_rng(seed)
    times = np.arange(params.open_minute, params.close_minute + 1, TICK_MINUTES)
    m = len(times)
    slot_of = np.searchsorted(np.asarray(params.slot_bounds), times, side="left")
    n_slots = len(params.slot_bounds) + 1

    shocks = rng.standard_normal(days)
    daily_log = math.log(params.start_price) + np.cumsum(
        params.drift - 0.5 * params.volatility**2 + params.volatility * shocks
    )

    records: list[TickRecord] = []
    slot_incr = 0.0
    intraday = 0.0
    index_log = math.log(params.index_start)
    for d, date in enumerate(trading_days(params.start_date, days)):
        # slot-level momentum: increments follow an AR(1), spread evenly over each slot's ticks
        slot_steps = np.empty(n_slots)
        for s in range(n_slots):
            slot_incr = params.slot_momentum * slot_incr + params.slot_vol * rng.standard_normal()
            slot_steps[s] = slot_incr
        per_tick = slot_steps[slot_of] / np.bincount(slot_of, minlength=n_slots)[slot_of]
        path = intraday + np.cumsum(per_tick)
        intraday = float(path[-1])
        level = daily_log[d] + path
        noise = rng.standard_normal((4, m)) * params.jitter
        opens = np.exp(level + noise[0])
        closes = np.exp(level + per_tick + noise[1])
        highs = np.maximum(opens, closes) * np.exp(np.abs(noise[2]))
        lows = np.minimum(opens, closes) * np.exp(-np.abs(noise[3]))
        volumes = np.maximum(1, np.rint(params.volume_mean * rng.lognormal(0.0, 0.5, m))).astype(int)

        idx_steps = params.index_beta * np.diff(np.concatenate([[level[0] - per_tick[0]], level]))
        idx_steps += params.index_vol / math.sqrt(m) * rng.standard_normal(m)
        idx_path = index_log + np.cumsum(idx_steps)
        index_log = float(idx_path[-1])
        index_levels = np.exp(idx_path)

        for j in range(m):
            records.append(TickRecord(
                date, int(times[j]), float(opens[j]), float(highs[j]), float(lows[j]),
                float(closes[j]), int(volumes[j]), float(index_levels[j]),
            ))
    return TickSeries(tuple(records), symbol)


def to_daily_bars(series: TickSeries) -> list[DailyBar]:
    """Aggregate ticks per date: first open, max high, min low, last close, summed volume."""
    if not len(series):
        raise EmptySeries("cannot aggregate an empty series")
    bars = []
    for date, group in groupby(series.records, key=lambda r: r.date):
        recs = list(group)
        bars.append(DailyBar(
            date=date,
            open=recs[0].open,
            high=max(r.high for r in recs),
            low=min(r.low for r in recs),
            close=recs[-1].close,
            volume=sum(r.volume for r in recs),
        ))
    return bars


def split_by_year(series: TickSeries) -> dict[int, TickSeries]:
    out: dict[int, list[TickRecord]] = {}
    for r in series.records:
        out.setdefault(r.date.year, []).append(r)
    return {year: TickSeries(tuple(recs), series.symbol) for year, recs in sorted(out.items())}


def concat(series: Iterable[TickSeries]) -> TickSeries:
    series = list(series)
    records = sorted((r for s in series for r in s.records), key=lambda r: r.key)
    return TickSeries(tuple(records), series[0].symbol if series else "SYNTH")

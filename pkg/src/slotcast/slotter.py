"""Aggregate 5-minute ticks into three intraday slots per trading day."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from enum import IntEnum
from itertools import groupby

from .exceptions import EmptySeries
from .market_data import TickSeries

MORNING_START, MORNING_END = 540, 690  # 09:00-11:30
AFTERNOON_START, AFTERNOON_END = 695, 810  # 11:35-13:30
EVENING_START = 815  # 13:35-close
DEFAULT_CLOSE = 930  # 15:30


class Slot(IntEnum):
    MORNING = 1
    AFTERNOON = 2
    EVENING = 3


def slot_window(time: int, market_close: int = DEFAULT_CLOSE) -> Slot | None:
    """Slot containing ``time`` (minutes since midnight), or ``None`` outside hours.

    Both endpoints of every window are inclusive.
    """
    if MORNING_START <= time <= MORNING_END:
        return Slot.MORNING
    if AFTERNOON_START <= time <= AFTERNOON_END:
        return Slot.AFTERNOON
    if EVENING_START <= time <= market_close:
        return Slot.EVENING
    return None


@dataclass(frozen=True)
class SlotBar:
    date: dt.date
    slot_id: Slot
    first_open: float
    first_high: float
    first_close: float
    last_close: float
    low_mean: float
    vol_mean: float
    index_mean: float
    high_max: float
    low_min: float
    n_ticks: int

    @property
    def range(self) -> float:
        return self.high_max - self.low_min


def aggregate_slots(series: TickSeries, market_close: int = DEFAULT_CLOSE) -> list[SlotBar]:
    """One :class:`SlotBar` per (date, slot) with at least one in-hours tick.

    Ticks outside the three windows are dropped. The result is sorted by
    (date, slot_id) regardless of the input's row order.
    """
    if not len(series):
        raise EmptySeries("cannot aggregate an empty series")
    keyed = []
    for rec in series.records:
        slot = slot_window(rec.time, market_close)
        if slot is not None:
            keyed.append(((rec.date, slot), rec))
    keyed.sort(key=lambda kv: (kv[0], kv[1].time))

    bars = []
    for (date, slot), group in groupby(keyed, key=lambda kv: kv[0]):
        recs = [r for _, r in group]
        n = len(recs)
        first = recs[0]
        bars.append(SlotBar(
            date=date,
            slot_id=slot,
            first_open=first.open,
            first_high=first.high,
            first_close=first.close,
            last_close=recs[-1].close,
            low_mean=sum(r.low for r in recs) / n,
            vol_mean=sum(r.volume for r in recs) / n,
            index_mean=sum(r.index_level for r in recs) / n,
            high_max=max(r.high for r in recs),
            low_min=min(r.low for r in recs),
            n_ticks=n,
        ))
    return bars

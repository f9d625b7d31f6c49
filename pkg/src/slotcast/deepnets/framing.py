"""Monday-to-Friday week tables and sliding/walk-forward samples for weekly forecasting."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from ..exceptions import TooFewWeeks

VARIABLES = ("open", "high", "low", "close", "volume")
WEEK = 5


@dataclass
class WeekTable:
    """``values[w, d, v]`` is variable ``v`` on weekday ``d`` of week ``w``; missing days are padded."""

    dates: np.ndarray  # (weeks, 5) datetime64[D]
    values: np.ndarray  # (weeks, 5, 5)
    padded: np.ndarray  # (weeks, 5) bool

    @property
    def n_weeks(self) -> int:
        return len(self.dates)

    def days(self, weeks=slice(None)):
        """Flatten a range of weeks into consecutive days."""
        d, v, p = self.dates[weeks], self.values[weeks], self.padded[weeks]
        return d.reshape(-1), v.reshape(-1, v.shape[-1]), p.reshape(-1)


def weekly_table(bars) -> WeekTable:
    """Arrange daily bars into consecutive Monday-Friday weeks.

    A missing weekday repeats the previous day's values (the first real bar
    when the series itself starts on a gap) and is flagged as padded.
    """
    real = {b.date: b for b in bars if b.date.weekday() < WEEK}
    if not real:
        raise TooFewWeeks("no weekday bars")
    first = min(real)
    last = max(real)
    monday = first - dt.timedelta(days=first.weekday())
    weeks = (last - monday).days // 7 + 1
    dates = np.empty((weeks, WEEK), dtype="datetime64[D]")
    values = np.empty((weeks, WEEK, len(VARIABLES)))
    padded = np.zeros((weeks, WEEK), dtype=bool)
    prev = real[first]
    for w in range(weeks):
        for d in range(WEEK):
            day = monday + dt.timedelta(days=7 * w + d)
            bar = real.get(day)
            if bar is None:
                padded[w, d] = True
                bar = prev
            dates[w, d] = np.datetime64(day)
            values[w, d] = [bar.open, bar.high, bar.low, bar.close, bar.volume]
            prev = bar
    return WeekTable(dates, values, padded)


@dataclass
class FramedData:
    X: np.ndarray  # (samples, steps, variables)
    y: np.ndarray  # (samples, 5) next-week opens
    input_dates: np.ndarray
    target_dates: np.ndarray
    padded: np.ndarray  # (samples,) any padded day in the window
    target_padded: np.ndarray  # (samples, 5)

    def __len__(self):
        return len(self.y)


def _var_index(variables):
    if variables in ("open", "open-only"):
        return [0]
    if variables in ("all", "all five"):
        return list(range(len(VARIABLES)))
    return [VARIABLES.index(v) for v in variables]


def _frame(dates, values, padded, starts, steps, cols):
    idx_in = starts[:, None] + np.arange(steps)[None, :]
    idx_out = starts[:, None] + steps + np.arange(WEEK)[None, :]
    return FramedData(
        values[idx_in][:, :, cols],
        values[idx_out][:, :, 0],
        dates[idx_in],
        dates[idx_out],
        padded[idx_in].any(axis=1) | padded[idx_out].any(axis=1),
        padded[idx_out],
    )


def frame_weekly(table: WeekTable, history_weeks=1, variables="open", weeks=slice(None)) -> FramedData:
    """Stride-1 training samples over the days of ``weeks``.

    Each input is the previous ``5 * history_weeks`` days of the chosen
    variables and each target is the next five opens, so ``D`` days yield
    ``D - 5 * history_weeks - 5 + 1`` samples.
    """
    if history_weeks not in (1, 2):
        raise ValueError("history_weeks must be 1 or 2")
    dates, values, padded = table.days(weeks)
    steps = WEEK * history_weeks
    count = len(dates) - steps - WEEK + 1
    if count < 1:
        raise TooFewWeeks(f"{len(dates)} days cannot hold {steps} inputs and {WEEK} targets")
    return _frame(dates, values, padded, np.arange(count), steps, _var_index(variables))


def walk_forward(table: WeekTable, train_weeks, history_weeks=1, variables="open") -> FramedData:
    """One sample per test week: the preceding actual weeks predict the whole week.

    Week ``w`` (``w >= train_weeks``) uses weeks ``w - history_weeks`` to
    ``w - 1`` as input, so actuals are appended as the walk advances.
    """
    if train_weeks < history_weeks or train_weeks >= table.n_weeks:
        raise TooFewWeeks(f"need {history_weeks} <= train_weeks < {table.n_weeks}")
    dates, values, padded = table.days()
    steps = WEEK * history_weeks
    starts = np.arange(train_weeks, table.n_weeks) * WEEK - steps
    return _frame(dates, values, padded, starts, steps, _var_index(variables))


def audit_leakage(framed: FramedData) -> bool:
    """True when every input window ends strictly before its first target day."""
    return bool(np.all(framed.input_dates.max(axis=1) < framed.target_dates.min(axis=1)))

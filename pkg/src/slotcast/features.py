"""Derived slot-to-slot variables, targets, scaling and the three evaluation cases."""
from __future__ import annotations

import csv
import datetime as dt
import io
import logging
import math
import warnings
from dataclasses import dataclass, fields, replace
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DivisionDegenerateWarning, EmptyTrain, MalformedRow
from .slotter import SlotBar

log = logging.getLogger(__name__)

FEATURE_NAMES = (
    "month", "day_month", "day_week", "time", "open_perc", "high_perc",
    "low_perc", "close_perc", "vol_perc", "nifty_perc", "range_diff",
)
# open_perc is the response; the other ten are predictors
PREDICTORS = tuple(n for n in FEATURE_NAMES if n != "open_perc")
PERCENT_FEATURES = ("open_perc", "high_perc", "low_perc", "close_perc", "vol_perc", "nifty_perc")


@dataclass(frozen=True)
class FeatureRow:
    month: int
    day_month: int
    day_week: int
    time: int
    open_perc: float
    high_perc: float
    low_perc: float
    close_perc: float
    vol_perc: float
    nifty_perc: float
    range_diff: float

    def as_tuple(self, names=FEATURE_NAMES) -> tuple:
        return tuple(getattr(self, n) for n in names)


def binarize_target(open_perc_next: float) -> int:
    """1 for a strictly positive change, 0 for zero or negative."""
    return int(open_perc_next > 0)


@dataclass(frozen=True)
class Dataset:
    rows: tuple[FeatureRow, ...]
    target_reg: np.ndarray
    dates: tuple[dt.date | None, ...] = ()
    predictors: tuple[str, ...] = PREDICTORS

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        target = np.asarray(self.target_reg, dtype=float)
        target.setflags(write=False)
        object.__setattr__(self, "target_reg", target)
        if not self.dates:
            object.__setattr__(self, "dates", (None,) * len(self.rows))
        if len(self.rows) != len(target) or len(self.dates) != len(self.rows):
            raise ValueError("rows, targets and dates must have equal length")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def target_cls(self) -> np.ndarray:
        return (self.target_reg > 0).astype(int)

    @property
    def X(self) -> np.ndarray:
        if not self.rows:
            return np.empty((0, len(self.predictors)))
        return np.array([r.as_tuple(self.predictors) for r in self.rows], dtype=float)

    def with_predictors(self, names) -> "Dataset":
        unknown = set(names) - set(FEATURE_NAMES)
        if unknown:
            raise ValueError(f"unknown predictors {sorted(unknown)}")
        return replace(self, predictors=tuple(names))

    def subset(self, mask) -> "Dataset":
        idx = np.flatnonzero(np.asarray(mask))
        return Dataset(
            tuple(self.rows[i] for i in idx), self.target_reg[idx],
            tuple(self.dates[i] for i in idx), self.predictors,
        )


def _pct(new: float, old: float) -> float:
    return 100.0 * (new - old) / old


def slot_pair_features(s1: SlotBar, s2: SlotBar, high_mode: str = "first") -> FeatureRow | None:
    """Feature row for slot ``s2`` relative to its predecessor ``s1``.

    Returns ``None`` when a percent-change denominator is zero.
    """
    if high_mode not in ("first", "max"):
        raise ValueError("high_mode must be 'first' or 'max'")
    if 0 in (s1.first_open, s1.low_mean, s1.vol_mean, s1.index_mean):
        return None
    h1, h2 = (s1.first_high, s2.first_high) if high_mode == "first" else (s1.high_max, s2.high_max)
    if h1 == 0 or s1.first_close == 0:
        return None
    return FeatureRow(
        month=s2.date.month,
        day_month=s2.date.day,
        day_week=s2.date.isoweekday(),
        time=int(s2.slot_id),
        open_perc=_pct(s2.first_open, s1.first_open),
        high_perc=_pct(h2, h1),
        low_perc=_pct(s2.low_mean, s1.low_mean),
        close_perc=_pct(s2.first_close, s1.first_close),
        vol_perc=_pct(s2.vol_mean, s1.vol_mean),
        nifty_perc=_pct(s2.index_mean, s1.index_mean),
        range_diff=s2.range - s1.range,
    )


def derive_feature_rows(slots: list[SlotBar], high_mode: str = "first") -> list[tuple[dt.date, FeatureRow | None]]:
    """Unaligned per-slot rows: entry ``i`` describes ``slots[i+1]`` versus ``slots[i]``."""
    return [(s2.date, slot_pair_features(s1, s2, high_mode)) for s1, s2 in zip(slots, slots[1:])]


def derive_features(slots: list[SlotBar], high_mode: str = "first", predictors=PREDICTORS) -> Dataset:
    """Build the modelling dataset from an ordered slot list.

    Row ``t`` holds the derived variables of slot ``t`` and, as target, the
    ``open_perc`` of slot ``t + 1``. Rows whose own variables or whose target
    hit a zero denominator are dropped (a :class:`DivisionDegenerateWarning`
    reports the count), as is the final row, which has no successor.
    """
    if len(slots) < 2:
        raise ValueError("need at least two slots")
    per_slot = derive_feature_rows(slots, high_mode)
    dropped = sum(row is None for _, row in per_slot)
    if dropped:
        msg = f"dropped {dropped} slot row(s) with a zero percent-change denominator"
        log.warning(msg)
        warnings.warn(msg, DivisionDegenerateWarning, stacklevel=2)
    rows, targets, dates = [], [], []
    for (date, row), (_, nxt) in zip(per_slot, per_slot[1:]):
        if row is None or nxt is None:
            continue
        rows.append(row)
        targets.append(nxt.open_perc)
        dates.append(date)
    return Dataset(tuple(rows), np.array(targets, dtype=float), tuple(dates), tuple(predictors))


@dataclass(frozen=True)
class ScaleParams:
    mins: np.ndarray
    maxs: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        span = self.maxs - self.mins
        safe = np.where(span > 0, span, 1.0)
        out = (np.asarray(X, dtype=float) - self.mins) / safe
        # constant training columns map to 0
        out[:, span <= 0] = 0.0
        return out

    def invert(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * (self.maxs - self.mins) + self.mins


class MinMaxScaler(TransformerMixin, BaseEstimator):
    """Column-wise ``(x - min) / (max - min)`` using training extremes.

    Unlike the usual scaler, a constant training column maps to 0 everywhere
    and out-of-range values are not clipped.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=0)
        if X.shape[0] == 0:
            raise EmptyTrain("cannot fit a scaler on zero rows")
        self.params_ = ScaleParams(X.min(axis=0), X.max(axis=0))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=float)
        return self.params_.apply(X)

    def inverse_transform(self, X):
        check_is_fitted(self, "params_")
        return self.params_.invert(check_array(X, dtype=float))


def min_max_scale(train: np.ndarray, apply_to: np.ndarray) -> tuple[np.ndarray, ScaleParams]:
    """Scale ``apply_to`` with min/max taken from ``train``; targets are never passed here."""
    scaler = MinMaxScaler().fit(train)
    return scaler.transform(apply_to), scaler.params_


class Case(str, Enum):
    I = "I"
    II = "II"
    III = "III"


def case_split(data_2013, data_2014, case):
    """(train, test) for a case: I uses 2013 twice, II uses 2014 twice, III trains on 2013 and tests on 2014."""
    case = Case(case)
    if case is Case.I:
        return data_2013, data_2013
    if case is Case.II:
        return data_2014, data_2014
    return data_2013, data_2014


DATASET_HEADER = FEATURE_NAMES + ("target_reg", "target_cls")


def dataset_to_csv(data: Dataset) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(DATASET_HEADER)
    for row, target in zip(data.rows, data.target_reg):
        writer.writerow([*(repr(v) for v in row.as_tuple()), repr(float(target)), binarize_target(target)])
    return out.getvalue()


_INT_FIELDS = {f.name for f in fields(FeatureRow) if f.type in ("int", int)}


def dataset_from_csv(text: str, predictors=PREDICTORS) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader, ()))
    if header != DATASET_HEADER:
        raise MalformedRow(f"bad dataset header {header!r}")
    rows, targets = [], []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(DATASET_HEADER):
            raise MalformedRow(f"line {lineno}: expected {len(DATASET_HEADER)} fields")
        try:
            values = {n: (int(v) if n in _INT_FIELDS else float(v)) for n, v in zip(FEATURE_NAMES, rec)}
            target = float(rec[-2])
            label = int(rec[-1])
        except ValueError as exc:
            raise MalformedRow(f"line {lineno}: {exc}") from exc
        if label != binarize_target(target) or not all(math.isfinite(v) for v in values.values()):
            raise MalformedRow(f"line {lineno}: inconsistent label or non-finite value")
        rows.append(FeatureRow(**values))
        targets.append(target)
    return Dataset(tuple(rows), np.array(targets, dtype=float), predictors=tuple(predictors))

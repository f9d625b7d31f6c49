"""Repeated train/walk-forward evaluation of a CNN variant with a Fig-style summary table."""
from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..features import MinMaxScaler
from .cnn import CNN_SPECS, CNNForecaster
from .framing import WeekTable, frame_weekly, walk_forward, weekly_table

log = logging.getLogger(__name__)

CSV_HEADER = ("round", "overall_rmse", "mon", "tue", "wed", "thu", "fri", "exec_seconds")
SUMMARY_LABELS = ("Mean", "SD", "Min", "Max", "RMSE/Mean")


@dataclass
class RoundResult:
    round: int
    overall_rmse: float
    day_rmse: tuple
    exec_seconds: float


@dataclass
class MultiRoundReport:
    variant: str
    rounds: list = field(default_factory=list)
    mean_actual: float = float("nan")

    def rows(self, timing=True):
        """Per-round rows then Mean, SD, Min, Max and the RMSE-to-mean-actual ratio row."""
        out = []
        for r in self.rounds:
            out.append([r.round, r.overall_rmse, *r.day_rmse, r.exec_seconds if timing else None])
        M = np.array([[r.overall_rmse, *r.day_rmse, r.exec_seconds] for r in self.rounds])
        ddof = 1 if len(M) > 1 else 0
        stats = (M.mean(axis=0), M.std(axis=0, ddof=ddof), M.min(axis=0), M.max(axis=0))
        for label, vals in zip(SUMMARY_LABELS, stats):
            vals = [float(v) for v in vals]
            out.append([label, *vals[:-1], vals[-1] if timing else None])
        ratio = M[:, :-1].mean(axis=0) / self.mean_actual
        out.append([SUMMARY_LABELS[-1], *(float(v) for v in ratio), None])
        return out

    def to_csv(self, timing=True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows(timing):
            writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
        return buf.getvalue()


_VARIANT_FRAMING = {"M1": (1, "open"), "M2": (2, "open"), "M3": (2, "all"), "M4": (2, "all")}


def cnn_fit_eval(variant, data, rounds=20, train_weeks=52, seed=0, epochs=None, batch_size=None,
                 lr=0.001) -> MultiRoundReport:
    """Train ``variant`` afresh each round and walk forward through the weeks after ``train_weeks``.

    ``data`` is a :class:`WeekTable` or a list of daily bars. Inputs and the
    open target are min-max scaled with training-week extremes; errors are
    measured on de-scaled opens, pooled per weekday, and padded holiday
    targets are left out of every RMSE.
    """
    table = data if isinstance(data, WeekTable) else weekly_table(data)
    history, variables = _VARIANT_FRAMING[variant]
    train = frame_weekly(table, history, variables, weeks=slice(0, train_weeks))
    test = walk_forward(table, train_weeks, history, variables)
    _, train_days, _ = table.days(slice(0, train_weeks))
    n_vars = CNN_SPECS[variant].n_variables
    cols = list(range(n_vars))
    scaler = MinMaxScaler().fit(train_days[:, cols])
    lo, hi = scaler.params_.mins[0], scaler.params_.maxs[0]
    span = hi - lo if hi > lo else 1.0

    def scale_x(X):
        return scaler.transform(X.reshape(-1, n_vars)).reshape(X.shape)

    X_tr, y_tr = scale_x(train.X), (train.y - lo) / span
    X_te = scale_x(test.X)
    keep = ~test.target_padded
    report = MultiRoundReport(variant, mean_actual=float(test.y[keep].mean()))
    for r in range(1, rounds + 1):
        t0 = time.perf_counter()
        model = CNNForecaster(variant, epochs, batch_size, lr, random_state=[seed, r])
        model.fit(X_tr, y_tr)
        pred = model.predict(X_te) * span + lo
        sq = (pred - test.y) ** 2
        overall = float(np.sqrt(sq[keep].mean()))
        days = tuple(float(np.sqrt(sq[keep[:, d], d].mean())) if keep[:, d].any() else float("nan")
                     for d in range(5))
        elapsed = time.perf_counter() - t0
        report.rounds.append(RoundResult(r, overall, days, elapsed))
        log.info("%s round %d: RMSE %.4f (%.2fs)", variant, r, overall, elapsed)
    return report

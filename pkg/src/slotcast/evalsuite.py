"""Classification and regression scoring, ROC/lift curves and per-case model summary tables."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import LengthMismatch, SingleClass, UndefinedMetric

CLS_METRICS = ("sensitivity", "specificity", "ppv", "npv", "ca", "f1")
REG_METRICS = ("pearson_r", "rmse_ratio_pct", "mismatch_pct")
CLS_LABELS = {"sensitivity": "Sensitivity", "specificity": "Specificity", "ppv": "PPV", "npv": "NPV",
              "ca": "CA", "f1": "F1 Score"}
REG_LABELS = {"pearson_r": "Correlation", "rmse_ratio_pct": "RMSE/Mean", "mismatch_pct": "Mismatched Cases"}
# +1: larger is better, -1: smaller is better
DIRECTION = {**{m: 1 for m in CLS_METRICS}, "pearson_r": 1, "rmse": -1, "rmse_ratio_pct": -1,
             "mismatch_count": -1, "mismatch_pct": -1}


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        counts = (self.tp, self.fp, self.tn, self.fn)
        if any(c < 0 for c in counts):
            raise ValueError("confusion counts must be non-negative")
        if sum(counts) < 1:
            raise ValueError("confusion matrix is empty")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_labels(cls, predicted, actual) -> "ConfusionMatrix":
        p = np.asarray(predicted).astype(int).ravel()
        a = np.asarray(actual).astype(int).ravel()
        if p.shape != a.shape:
            raise LengthMismatch(f"{len(p)} predictions for {len(a)} labels")
        return cls(int(np.sum((p == 1) & (a == 1))), int(np.sum((p == 1) & (a == 0))),
                   int(np.sum((p == 0) & (a == 0))), int(np.sum((p == 0) & (a == 1))))

    def relabeled(self) -> "ConfusionMatrix":
        """The same predictions with the roles of the two classes exchanged."""
        return ConfusionMatrix(self.tn, self.fn, self.tp, self.fp)


@dataclass(frozen=True)
class ClsMetrics:
    """Percentages; a metric whose denominator is zero is NaN and listed in ``undefined``."""

    sensitivity: float
    specificity: float
    ppv: float
    npv: float
    ca: float
    f1: float
    undefined: tuple = ()

    def as_dict(self) -> dict:
        return {m: getattr(self, m) for m in CLS_METRICS}


def _pct(num, den):
    return 100.0 * num / den if den > 0 else math.nan


def cls_metrics(cm: ConfusionMatrix, strict=False) -> ClsMetrics:
    """Sensitivity, specificity, PPV, NPV, accuracy and F1 in percent.

    With ``strict`` an undefined metric raises :class:`UndefinedMetric`;
    otherwise it is reported as NaN and named in ``undefined``.
    """
    vals = {
        "sensitivity": _pct(cm.tp, cm.tp + cm.fn),
        "specificity": _pct(cm.tn, cm.tn + cm.fp),
        "ppv": _pct(cm.tp, cm.tp + cm.fp),
        "npv": _pct(cm.tn, cm.tn + cm.fn),
        "ca": _pct(cm.tp + cm.tn, cm.total),
    }
    s, p = vals["sensitivity"], vals["ppv"]
    vals["f1"] = 2 * s * p / (s + p) if s + p > 0 else math.nan
    undefined = tuple(m for m in CLS_METRICS if math.isnan(vals[m]))
    if strict and undefined:
        raise UndefinedMetric(f"zero denominator for {', '.join(undefined)}")
    return ClsMetrics(**vals, undefined=undefined)


def _binary_inputs(scores, labels):
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).astype(int).ravel()
    if s.shape != y.shape:
        raise LengthMismatch(f"{len(s)} scores for {len(y)} labels")
    pos = int(y.sum())
    if pos == 0 or pos == len(y):
        raise SingleClass("ROC and lift need both classes")
    return s, y


def roc_curve(scores, labels):
    """(fpr, tpr, thresholds) at every distinct score, from the strictest threshold down; starts at (0, 0)."""
    s, y = _binary_inputs(scores, labels)
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tps = np.cumsum(y)[last]
    fps = (last + 1) - tps
    tpr = np.r_[0.0, tps / y.sum()]
    fpr = np.r_[0.0, fps / (len(y) - y.sum())]
    return fpr, tpr, np.r_[np.inf, s[last]]


def auc_trapezoid(fpr, tpr) -> float:
    fpr, tpr = np.asarray(fpr, dtype=float), np.asarray(tpr, dtype=float)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))


def roc_auc(scores, labels):
    """ROC points as an (m, 2) array of (fpr, tpr) and the trapezoid area, which gives tied pairs half credit."""
    fpr, tpr, _ = roc_curve(scores, labels)
    return np.column_stack([fpr, tpr]), auc_trapezoid(fpr, tpr)


def lift_curve(scores, labels, bins=10):
    """Cumulative lift at each of ``bins`` depth cut-offs, highest scores first.

    Rows sharing a score share its positives evenly, so ties never favour the
    input order. Returns an array of (depth fraction, lift) rows.
    """
    s, y = _binary_inputs(scores, labels)
    n = len(s)
    if n < bins:
        raise ValueError(f"need at least {bins} rows for {bins} bins")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order].astype(float)
    group = np.r_[0, np.cumsum(np.diff(s) != 0)]
    counts = np.bincount(group)
    share = np.bincount(group, weights=y) / counts
    cum = np.r_[0.0, np.cumsum(share[group])]
    cuts = np.array([(d * n) // bins for d in range(1, bins + 1)])
    prevalence = y.mean()
    lift = (cum[cuts] / cuts) / prevalence
    return np.column_stack([cuts / n, lift])


@dataclass(frozen=True)
class RegMetrics:
    rmse: float
    mean_abs_actual: float
    rmse_ratio_pct: float
    pearson_r: float
    r_t_stat: float
    mismatch_count: int
    mismatch_pct: float
    n: int

    def as_dict(self) -> dict:
        return asdict(self)


def rmse_ratio(rmse, mean_abs_actual) -> float:
    """RMSE as a percentage of the mean absolute actual value."""
    return 100.0 * rmse / mean_abs_actual if mean_abs_actual > 0 else math.nan


def sign_mismatches(pred, actual) -> int:
    """Rows whose predicted and actual values fall on different sides of zero (zero counts as non-positive)."""
    return int(np.sum((np.asarray(pred) > 0) != (np.asarray(actual) > 0)))


def reg_metrics(pred, actual) -> RegMetrics:
    p = np.asarray(pred, dtype=float).ravel()
    a = np.asarray(actual, dtype=float).ravel()
    if p.shape != a.shape:
        raise LengthMismatch(f"{len(p)} predictions for {len(a)} actuals")
    n = len(a)
    if n < 2:
        raise LengthMismatch("need at least two rows")
    rmse = float(np.sqrt(np.mean((p - a) ** 2)))
    mean_abs = float(np.mean(np.abs(a)))
    if np.std(p) > 0 and np.std(a) > 0:
        r = float(np.clip(np.corrcoef(p, a)[0, 1], -1.0, 1.0))
    else:
        r = math.nan
    if math.isnan(r):
        t = math.nan
    elif abs(r) >= 1.0:
        t = math.copysign(math.inf, r)
    else:
        t = r * math.sqrt((n - 2) / (1 - r * r))
    mis = sign_mismatches(p, a)
    return RegMetrics(rmse, mean_abs, rmse_ratio(rmse, mean_abs), r, t, mis, 100.0 * mis / n, n)


@dataclass
class SummaryTable:
    """Metric rows by model columns for one case, with the best model(s) per metric flagged."""

    case: str
    kind: str
    models: list
    metrics: list
    values: np.ndarray  # (metrics, models)
    best: np.ndarray = field(default=None)  # bool, same shape

    def to_rows(self, decimals=2):
        labels = CLS_LABELS if self.kind == "classification" else REG_LABELS
        rows = [["metric", *self.models]]
        for i, m in enumerate(self.metrics):
            cells = []
            for j in range(len(self.models)):
                v = self.values[i, j]
                text = "" if math.isnan(v) else f"{v:.{decimals}f}"
                cells.append(text + ("*" if self.best[i, j] else ""))
            rows.append([labels.get(m, m), *cells])
        return rows

    def to_csv(self, decimals=2) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(self.to_rows(decimals))
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "kind": self.kind,
            "models": list(self.models),
            "metrics": {m: {mod: _json_float(self.values[i, j]) for j, mod in enumerate(self.models)}
                        for i, m in enumerate(self.metrics)},
            "best": {m: [mod for j, mod in enumerate(self.models) if self.best[i, j]]
                     for i, m in enumerate(self.metrics)},
        }


def _json_float(v):
    v = float(v)
    return v if math.isfinite(v) else None


def best_flags(values, directions) -> np.ndarray:
    """Flag the best entry of each row; exact ties flag every tied column, NaN is never best."""
    values = np.asarray(values, dtype=float)
    flags = np.zeros(values.shape, dtype=bool)
    for i, sign in enumerate(directions):
        row = sign * values[i]
        ok = ~np.isnan(row)
        if ok.any():
            flags[i] = ok & (row == row[ok].max())
    return flags


def summarize(reports, kind="classification", metrics=None) -> dict:
    """Per-case summary tables from ``{case: {model: metrics}}``.

    Metrics may be :class:`ClsMetrics`, :class:`RegMetrics` or plain dicts.
    Model column order follows insertion order.
    """
    if metrics is None:
        metrics = CLS_METRICS if kind == "classification" else REG_METRICS
    tables = {}
    for case, by_model in reports.items():
        models = list(by_model)
        values = np.full((len(metrics), len(models)), math.nan)
        for j, model in enumerate(models):
            rec = by_model[model]
            rec = rec.as_dict() if hasattr(rec, "as_dict") else rec
            for i, m in enumerate(metrics):
                v = rec.get(m)
                values[i, j] = math.nan if v is None else float(v)
        flags = best_flags(values, [DIRECTION.get(m, 1) for m in metrics])
        tables[case] = SummaryTable(str(case), kind, models, list(metrics), values, flags)
    return tables


def curve_csv(points, header=("x", "y")) -> str:
    """Curve points as CSV rows of ``x,y`` at full precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for x, y in np.asarray(points, dtype=float):
        writer.writerow([repr(float(x)), repr(float(y))])
    return buf.getvalue()

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slotcast.evalsuite import (
    CLS_METRICS, ConfusionMatrix, best_flags, cls_metrics, curve_csv, lift_curve, reg_metrics, rmse_ratio,
    roc_auc, roc_curve, summarize,
)
from slotcast.exceptions import LengthMismatch, SingleClass, UndefinedMetric


def pairwise_auc(scores, labels):
    """Concordant plus half-tied positive/negative pairs over all pairs."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


GOLDENS = [
    ((309, 10, 409, 17), (94.79, 97.61, 96.87, 96.01, 96.38, 95.82)),
    ((310, 8, 411, 16), (95.09, 98.09, 97.48, 96.25, 96.78, 96.27)),
    ((303, 26, 370, 26), (92.10, 93.43, 92.10, 93.43, 92.83, 92.10)),
]


@pytest.mark.parametrize("counts,expected", GOLDENS)
def test_cls_metric_goldens(counts, expected):
    m = cls_metrics(ConfusionMatrix(*counts))
    got = [getattr(m, k) for k in CLS_METRICS]
    assert np.allclose(got, expected, atol=0.01)
    assert m.undefined == ()


def test_confusion_from_labels():
    cm = ConfusionMatrix.from_labels([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert (cm.tp, cm.fp, cm.tn, cm.fn) == (2, 1, 1, 1)
    with pytest.raises(LengthMismatch):
        ConfusionMatrix.from_labels([1], [1, 0])


def test_confusion_invariants():
    with pytest.raises(ValueError):
        ConfusionMatrix(0, 0, 0, 0)
    with pytest.raises(ValueError):
        ConfusionMatrix(-1, 2, 0, 0)


def test_undefined_metric_flagged():
    m = cls_metrics(ConfusionMatrix(0, 0, 5, 3))
    assert set(m.undefined) == {"ppv", "f1"}
    assert math.isnan(m.ppv) and m.npv == pytest.approx(62.5)
    with pytest.raises(UndefinedMetric):
        cls_metrics(ConfusionMatrix(0, 0, 5, 3), strict=True)


counts = st.integers(0, 500)


@settings(max_examples=200, deadline=None)
@given(counts, counts, counts, counts)
def test_relabel_swaps_metrics(tp, fp, tn, fn):
    if tp + fp + tn + fn == 0:
        return
    a = cls_metrics(ConfusionMatrix(tp, fp, tn, fn))
    b = cls_metrics(ConfusionMatrix(tp, fp, tn, fn).relabeled())
    same = lambda x, y: (math.isnan(x) and math.isnan(y)) or x == y
    assert same(a.sensitivity, b.specificity) and same(a.specificity, b.sensitivity)
    assert same(a.ppv, b.npv) and same(a.npv, b.ppv)
    assert same(a.ca, b.ca)


@settings(max_examples=200, deadline=None)
@given(counts, counts, counts, counts)
def test_f1_between_sensitivity_and_ppv(tp, fp, tn, fn):
    if tp + fp + tn + fn == 0:
        return
    m = cls_metrics(ConfusionMatrix(tp, fp, tn, fn))
    for k in CLS_METRICS:
        v = getattr(m, k)
        assert math.isnan(v) or 0 <= v <= 100
    if not math.isnan(m.f1):
        lo, hi = min(m.sensitivity, m.ppv), max(m.sensitivity, m.ppv)
        assert lo - 1e-9 <= m.f1 <= hi + 1e-9


def test_auc_trivial_cases():
    y = np.array([0, 0, 1, 1, 0, 1])
    assert roc_auc(y + 0.1 * np.arange(6), y)[1] == 1.0
    assert roc_auc(np.full(6, 0.3), y)[1] == 0.5
    with pytest.raises(SingleClass):
        roc_auc([0.1, 0.2], [1, 1])


def test_auc_matches_pairwise_oracle():
    rng = np.random.default_rng(50)
    scores = np.round(rng.uniform(size=50), 1)  # coarse rounding forces ties
    labels = rng.integers(0, 2, size=50)
    assert abs(roc_auc(scores, labels)[1] - pairwise_auc(scores, labels)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 1)), min_size=2, max_size=40))
def test_auc_pairwise_and_monotone_invariance(pairs):
    scores = np.array([p[0] for p in pairs], dtype=float)
    labels = np.array([p[1] for p in pairs])
    if labels.min() == labels.max():
        return
    auc = roc_auc(scores, labels)[1]
    assert abs(auc - pairwise_auc(scores, labels)) < 1e-12
    assert roc_auc(np.exp(scores / 3) + 7, labels)[1] == pytest.approx(auc, abs=1e-12)


def test_roc_curve_endpoints():
    fpr, tpr, thr = roc_curve([0.9, 0.8, 0.3, 0.1], [1, 0, 1, 0])
    assert (fpr[0], tpr[0]) == (0, 0) and (fpr[-1], tpr[-1]) == (1, 1)
    assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)
    assert thr[0] == np.inf


def test_lift_perfect_scores():
    labels = np.r_[np.ones(30), np.zeros(70)]
    lift = lift_curve(labels.copy(), labels)
    assert lift[0, 1] == pytest.approx(1 / 0.3)
    labels = np.r_[np.ones(5), np.zeros(95)]
    assert lift_curve(labels.copy(), labels)[0, 1] == pytest.approx(10.0)  # 1 / decile mass


def test_lift_constant_scores_is_one():
    labels = np.r_[np.ones(13), np.zeros(40)]
    assert np.allclose(lift_curve(np.ones(53), labels)[:, 1], 1.0)


def test_lift_random_scores_near_one():
    rng = np.random.default_rng(1)
    labels = np.r_[np.ones(5000), np.zeros(5000)].astype(int)
    lift = lift_curve(rng.uniform(size=10_000), labels)
    assert np.all((lift[:, 1] >= 0.85) & (lift[:, 1] <= 1.15))
    assert lift[-1, 0] == 1.0 and lift[-1, 1] == pytest.approx(1.0)


def test_lift_needs_rows():
    with pytest.raises(ValueError):
        lift_curve([0.1, 0.9, 0.3], [0, 1, 0])


def test_rmse_ratio_goldens():
    assert rmse_ratio(0.0853, 0.6402) == pytest.approx(13.32, abs=0.01)
    assert rmse_ratio(0.1749, 0.9286) == pytest.approx(18.84, abs=0.01)


def test_reg_metrics_identity_and_antisymmetry():
    a = np.array([0.3, -0.2, 0.5, -0.7, 0.1])
    m = reg_metrics(a, a)
    assert m.rmse == 0 and m.pearson_r == pytest.approx(1.0) and m.mismatch_count == 0
    m = reg_metrics(-a, a)
    assert m.pearson_r == pytest.approx(-1.0) and m.mismatch_pct == 100.0
    with pytest.raises(LengthMismatch):
        reg_metrics([1.0], [1.0])
    with pytest.raises(LengthMismatch):
        reg_metrics([1.0, 2.0], [1.0])


def test_reg_metrics_sign_zero_bucket():
    m = reg_metrics([0.0, -0.1, 0.2], [-0.5, 0.0, 0.3])
    assert m.mismatch_count == 0


def test_reg_metrics_t_stat():
    rng = np.random.default_rng(3)
    a = rng.normal(size=40)
    p = a + rng.normal(size=40)
    m = reg_metrics(p, a)
    r = np.corrcoef(p, a)[0, 1]
    assert m.r_t_stat == pytest.approx(r * np.sqrt(38 / (1 - r * r)))
    assert m.mismatch_pct == pytest.approx(100 * m.mismatch_count / 40)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=30), st.floats(0.01, 100))
def test_rmse_ratio_scale_invariant(vals, c):
    a = np.array(vals)
    p = a[::-1] + 0.5
    if np.mean(np.abs(a)) == 0:
        return
    r1 = reg_metrics(p, a).rmse_ratio_pct
    r2 = reg_metrics(c * p, c * a).rmse_ratio_pct
    assert r2 == pytest.approx(r1, rel=1e-9, abs=1e-9)


def test_summarize_single_model_best_everywhere():
    m = cls_metrics(ConfusionMatrix(5, 1, 4, 2))
    table = summarize({"I": {"LR": m}})["I"]
    assert table.best.all()


def test_summarize_ties_flag_all():
    a = {"f1": 90.0, "ca": 80.0}
    b = {"f1": 90.0, "ca": 85.0}
    t = summarize({"III": {"A": a, "B": b}}, metrics=["f1", "ca"])["III"]
    assert t.best[0].tolist() == [True, True]
    assert t.best[1].tolist() == [False, True]


def test_best_flags_match_argmax_oracle():
    rng = np.random.default_rng(9)
    values = np.round(rng.uniform(size=(6, 8)) * 10)
    directions = [1, -1, 1, -1, 1, 1]
    flags = best_flags(values, directions)
    for i, d in enumerate(directions):
        best = max(d * v for v in values[i])
        assert [bool(d * v == best) for v in values[i]] == flags[i].tolist()


def test_regression_summary_directions():
    reports = {"I": {"MV": reg_metrics([1, 2, 3.5], [1, 2, 3]), "RF": reg_metrics([1, 2, 3.1], [1, 2, 3])}}
    t = summarize(reports, kind="regression")["I"]
    ratio_row = t.metrics.index("rmse_ratio_pct")
    assert t.best[ratio_row].tolist() == [False, True]
    csv_text = t.to_csv()
    assert csv_text.splitlines()[0] == "metric,MV,RF"
    assert "RMSE/Mean" in csv_text and "*" in csv_text
    d = t.to_dict()
    assert d["best"]["rmse_ratio_pct"] == ["RF"]


def test_curve_csv():
    pts, _ = roc_auc([0.9, 0.1, 0.5], [1, 0, 1])
    lines = curve_csv(pts).splitlines()
    assert lines[0] == "x,y" and len(lines) == len(pts) + 1

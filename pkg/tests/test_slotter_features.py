import datetime as dt
import random

import numpy as np
import pytest

from slotcast.exceptions import EmptySeries, EmptyTrain
from slotcast.features import (
    FEATURE_NAMES,
    PERCENT_FEATURES,
    MinMaxScaler,
    binarize_target,
    case_split,
    dataset_from_csv,
    dataset_to_csv,
    derive_feature_rows,
    derive_features,
    min_max_scale,
)
from slotcast.market_data import TickSeries, synth_ticks
from slotcast.slotter import Slot, SlotBar, aggregate_slots, slot_window

from conftest import make_series, make_tick


@pytest.mark.parametrize("minute, expected", [
    (540, Slot.MORNING), (690, Slot.MORNING), (695, Slot.AFTERNOON), (810, Slot.AFTERNOON),
    (815, Slot.EVENING), (930, Slot.EVENING), (535, None), (692, None), (935, None),
])
def test_slot_window(minute, expected):
    assert slot_window(minute) == expected


def test_slot_window_extended_close():
    assert slot_window(945) is None
    assert slot_window(945, market_close=960) == Slot.EVENING


def test_slot_means():
    recs = [
        make_tick("2013-01-02", 540, l=99, h=101, o=100, c=100, v=100, idx=6000),
        make_tick("2013-01-02", 545, l=97, h=101, o=100, c=100, v=200, idx=6010),
        make_tick("2013-01-02", 550, l=98, h=101, o=100, c=100, v=300, idx=6020),
    ]
    (bar,) = aggregate_slots(make_series(recs))
    assert bar.low_mean == 98
    assert bar.vol_mean == 200
    assert bar.index_mean == 6010
    assert bar.n_ticks == 3


def test_slot_two_tick_means():
    recs = [make_tick("2013-01-02", 540, v=100, idx=6000), make_tick("2013-01-02", 545, v=200, idx=6010)]
    (bar,) = aggregate_slots(make_series(recs))
    assert bar.vol_mean == 150 and bar.index_mean == 6005


def test_two_days_six_slots():
    series = synth_ticks(seed=4, days=2)
    bars = aggregate_slots(series)
    assert len(bars) == 6
    assert [(b.date, b.slot_id) for b in bars] == sorted((b.date, b.slot_id) for b in bars)


def test_slot_brute_force_extremes(two_year_ticks):
    series = TickSeries(two_year_ticks.records[: 79 * 20])
    bars = aggregate_slots(series)
    for bar in bars:
        members = [r for r in series.records if r.date == bar.date and slot_window(r.time) == bar.slot_id]
        assert bar.high_max == max(r.high for r in members)
        assert bar.low_min == min(r.low for r in members)
        assert bar.first_open == members[0].open
        assert bar.n_ticks == len(members)
    for date in series.dates:
        in_hours = sum(1 for r in series.records if r.date == date and slot_window(r.time) is not None)
        assert sum(b.n_ticks for b in bars if b.date == date) == in_hours


def test_outside_hours_dropped():
    recs = [make_tick("2013-01-02", 530), make_tick("2013-01-02", 540), make_tick("2013-01-02", 940)]
    bars = aggregate_slots(make_series(recs))
    assert len(bars) == 1 and bars[0].n_ticks == 1


def test_aggregate_permutation_invariant():
    series = synth_ticks(seed=9, days=3)
    shuffled = list(series.records)
    random.Random(0).shuffle(shuffled)
    assert aggregate_slots(make_series(shuffled)) == aggregate_slots(series)


def test_aggregate_empty():
    with pytest.raises(EmptySeries):
        aggregate_slots(TickSeries(()))


def _bar(date, slot, x=100.0, h=101.0, c=100.5, low_mean=99.0, vol=1000.0, idx=6000.0, hmax=102.0, lmin=98.0):
    return SlotBar(dt.date.fromisoformat(date), Slot(slot), x, h, c, c, low_mean, vol, idx, hmax, lmin, 10)


def test_open_perc_formula():
    rows = derive_feature_rows([_bar("2013-05-22", 1, x=100), _bar("2013-05-22", 2, x=102)])
    assert rows[0][1].open_perc == pytest.approx(2.0)


def test_identical_slots_zero_features():
    (_, row), = derive_feature_rows([_bar("2013-05-22", 1), _bar("2013-05-22", 2)])
    assert all(getattr(row, n) == 0 for n in PERCENT_FEATURES)
    assert row.range_diff == 0


def test_calendar_fields():
    (_, row), = derive_feature_rows([_bar("2013-05-22", 1), _bar("2013-05-22", 2)])
    assert (row.month, row.day_month, row.time, row.day_week) == (5, 22, 2, 3)


def test_target_alignment_and_counts():
    bars = [_bar("2013-05-22", 1, x=100), _bar("2013-05-22", 2, x=101), _bar("2013-05-22", 3, x=99),
            _bar("2013-05-23", 1, x=99.5)]
    data = derive_features(bars)
    per_slot = derive_feature_rows(bars)
    assert len(data) == len(bars) - 2
    # row t carries slot t's variables and slot t+1's open_perc as target
    assert data.rows[0] == per_slot[0][1]
    assert data.target_reg[0] == pytest.approx(per_slot[1][1].open_perc)
    assert data.target_reg[1] == pytest.approx(100 * (99.5 - 99) / 99)
    assert list(data.target_cls) == [0, 1]


def test_degenerate_denominator_dropped():
    bars = [_bar("2013-05-22", 1), _bar("2013-05-22", 2, vol=0.0), _bar("2013-05-22", 3),
            _bar("2013-05-23", 1), _bar("2013-05-23", 2)]
    with pytest.warns(UserWarning, match="dropped 1"):
        data = derive_features(bars)
    # 4 slot rows, one degenerate; rows needing it as predictor or target vanish
    assert len(data) == 1


def test_scale_invariance_of_percent_features():
    series = synth_ticks(seed=21, days=4)
    base = derive_features(aggregate_slots(series))
    scaled = derive_features(aggregate_slots(series.scaled(3.5)))
    for a, b in zip(base.rows, scaled.rows):
        for n in PERCENT_FEATURES:
            assert getattr(b, n) == pytest.approx(getattr(a, n), abs=1e-9)
        assert b.range_diff == pytest.approx(3.5 * a.range_diff, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("value, label", [(0.4, 1), (0.0, 0), (-1.3, 0), (1e-300, 1), (-0.0, 0)])
def test_binarize(value, label):
    assert binarize_target(value) == label


def test_min_max_basic():
    scaled, params = min_max_scale(np.array([[2.0], [4.0], [6.0]]), np.array([[2.0], [4.0], [6.0]]))
    assert scaled.ravel().tolist() == [0.0, 0.5, 1.0]


def test_min_max_constant_column():
    scaled, _ = min_max_scale(np.array([[5.0], [5.0], [5.0]]), np.array([[5.0], [5.0], [7.0]]))
    assert scaled.ravel().tolist() == [0.0, 0.0, 0.0]


def test_min_max_no_clamp():
    train = np.array([[0.0, 10.0], [4.0, 20.0]])
    test = np.array([[6.0, 25.0]])
    scaled, _ = min_max_scale(train, test)
    # hand oracle: (6-0)/4, (25-10)/10
    assert scaled.tolist() == [[1.5, 1.5]]


def test_min_max_empty_train():
    with pytest.raises(EmptyTrain):
        MinMaxScaler().fit(np.empty((0, 2)))


def test_scaler_inverse():
    X = np.random.default_rng(0).normal(size=(20, 3))
    s = MinMaxScaler().fit(X)
    assert np.allclose(s.inverse_transform(s.transform(X)), X)


def test_case_split():
    a, b = object(), object()
    train, test = case_split(a, b, "I")
    assert train is a and test is a
    assert case_split(a, b, "II") == (b, b)
    assert case_split(a, b, "III") == (a, b)
    with pytest.raises(ValueError):
        case_split(a, b, "IV")


def test_dataset_csv_round_trip():
    data = derive_features(aggregate_slots(synth_ticks(seed=2, days=3)))
    text = dataset_to_csv(data)
    assert text.splitlines()[0] == ",".join(FEATURE_NAMES + ("target_reg", "target_cls"))
    back = dataset_from_csv(text)
    assert back.rows == data.rows
    assert np.array_equal(back.target_reg, data.target_reg)

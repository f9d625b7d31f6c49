import datetime as dt

import numpy as np
import pytest

from slotcast.market_data import SynthParams, TickRecord, TickSeries, synth_ticks


@pytest.fixture(scope="session")
def two_year_ticks():
    # 2013-01-01 .. 2014-12-31 on weekdays
    return synth_ticks(seed=11, days=522, params=SynthParams(slot_momentum=0.3))


@pytest.fixture(scope="session")
def week_ticks():
    return synth_ticks(seed=3, days=5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_tick(date, time, o=100.0, h=101.0, l=99.0, c=100.5, v=1000, idx=6000.0):
    if isinstance(date, str):
        date = dt.date.fromisoformat(date)
    return TickRecord(date, time, o, h, l, c, v, idx)


def make_series(records):
    return TickSeries(tuple(sorted(records, key=lambda r: r.key)))


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, when the acceptance module ran."""
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "ACCEPTANCE_RESULTS", None)
    if not results or not any(results.values()):
        return
    terminalreporter.section("acceptance criteria")
    for number, checks in results.items():
        if not checks:
            status = "NOT RUN"
        else:
            status = "PASS" if all(ok for _, ok in checks) else "FAIL"
        passed = sum(ok for _, ok in checks)
        terminalreporter.write_line(
            f"criterion {number}: {status} ({passed}/{len(checks)} checks) {mod.TITLES[number]}")

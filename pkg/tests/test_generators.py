from datetime import date, timedelta

import numpy as np
import pytest

from bcom.errors import DuplicateOutputField, InvalidParameter, InvalidRange
from bcom.generators import BUSINESS_DAYS, BrownianParams, brownian, multi_brownian, stream_id, ts
from helpers import field


def walk(n, **kw):
    end = date(2000, 1, 1) + timedelta(days=n - 1)
    return np.array(field((ts("2000-01-01", end) >> brownian(**kw)).run(), kw.get("output", "price")))


@pytest.mark.parametrize("start,end,count", [
    ("2013-01-01", "2013-01-01", 1),
    ("2013-01-01", "2013-12-31", 365),
    ("2013-01-01", "2014-12-31", 730),
])
def test_ts_counts(start, end, count):
    assert len(list(ts(start, end).emit())) == count


def test_ts_business_days_skip_weekends():
    days = [e.timestamp for e in ts("2013-01-01", "2013-01-31", BUSINESS_DAYS).emit()]
    assert len(days) == 23
    assert all(d.weekday() < 5 for d in days)


def test_ts_rejects_reversed_range_and_unknown_step():
    with pytest.raises(InvalidRange):
        ts("2013-02-01", "2013-01-01")
    with pytest.raises(InvalidParameter):
        ts("2013-01-01", "2013-01-02", "hourly")


def test_first_value_is_s0_exactly():
    assert walk(5, seed=1, s0=37.0)[0] == 37.0


def test_vanishing_sigma_stays_at_s0():
    w = walk(1000, seed=3, s0=10.0, sigma=1e-12)
    assert np.abs(w - 10.0).max() < 1e-6


def test_baseline_walk_is_fixed():
    a = walk(730, seed=42, s0=37)
    assert a.tobytes() == walk(730, seed=42, s0=37).tobytes()
    assert a[1] == 36.75062271469206


def test_increment_moments_sigma_2():
    inc = np.diff(walk(100_001, seed=11, s0=0.0, sigma=2.0))
    assert abs(inc.mean()) < 0.02
    assert abs(inc.std(ddof=1) / 2.0 - 1.0) < 0.01


def test_increments_have_no_lag_one_correlation():
    inc = np.diff(walk(100_001, seed=12, s0=0.0))
    assert abs(np.corrcoef(inc[:-1], inc[1:])[0, 1]) < 0.02


def test_doubling_sigma_doubles_stdev():
    a = np.diff(walk(100_001, seed=13, s0=0.0, sigma=1.0)).std()
    b = np.diff(walk(100_001, seed=13, s0=0.0, sigma=2.0)).std()
    assert abs(b / a - 2.0) < 0.04


def test_multi_brownian_three_walks():
    walks = [BrownianParams(37.0, 1.0, 42, "GOOG"), BrownianParams(21.0, 1.0, 42, "IBM"),
             BrownianParams(42.0, 1.0, 42, "B")]
    last = (ts("2013-01-01", "2013-01-10") >> multi_brownian(walks)).run()[-1]
    assert list(last.fields) == ["GOOG", "IBM", "B"]


def test_singleton_multi_equals_brownian():
    a = (ts("2013-01-01", "2013-03-01") >> multi_brownian([BrownianParams(5.0, 0.5, 9, "price")])).run()
    b = (ts("2013-01-01", "2013-03-01") >> brownian(seed=9, s0=5.0, sigma=0.5)).run()
    assert a == b


def test_same_seed_walks_are_independent():
    walks = [BrownianParams(0.0, 1.0, 7, "a"), BrownianParams(0.0, 1.0, 7, "b")]
    out = (ts("2000-01-01", "2027-05-19") >> multi_brownian(walks)).run()
    a, b = np.diff(field(out, "a")), np.diff(field(out, "b"))
    assert len(a) >= 10_000
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05


def test_duplicate_outputs_rejected():
    with pytest.raises(DuplicateOutputField):
        multi_brownian([BrownianParams(output="x"), BrownianParams(output="x")])


@pytest.mark.parametrize("kw", [{"sigma": 0.0}, {"sigma": -1.0}, {"s0": float("inf")}])
def test_invalid_params(kw):
    with pytest.raises(InvalidParameter):
        brownian(**kw)


def test_stream_id_is_63_bit_and_name_dependent():
    assert 0 <= stream_id("price") < 2**63
    assert stream_id("price") != stream_id("GOOG")

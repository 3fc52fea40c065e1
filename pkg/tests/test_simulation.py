import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcom import kernels
from bcom.dsl import TemplateModel
from bcom.errors import DegenerateInput, EmptyInput, InvalidBounds
from bcom.generators import brownian, stream_id, ts
from bcom.indicators import ewma
from bcom.simulation import (Shock, benchmark, histogram, montecarlo, moments, ols_slope, pearson, results_csv,
                             scatter_matrix_data, shock_seed, shocks, summary, unif)
from bcom.trading import cash_stock, maco

SHAPES = {"s0": unif(5.0, 10.0, 3), "alpha": unif(0.01, 0.8, 5), "load": unif(1.0, 3.0, 3)}


def small_model(shock):
    return ts("2013-01-01", "2013-03-31") >> brownian(seed=shock.seed % 2**32, s0=shock.s0 * 10, sigma=0.5) \
        >> ewma(shock.alpha) >> maco() >> cash_stock(10000, shock.load)


def failing_model(shock):
    raise RuntimeError("always")


def test_unif_examples():
    vs = unif(5.0, 10.0, 3)
    assert len(vs) == 3 and all(5.0 <= v < 10.0 for v in vs)
    big = unif(1.0, 3.0, 10**5, seed=1)
    assert abs(sum(big) / len(big) - 2.0) < 0.02


def test_unif_is_the_affine_map_of_uniform_draws():
    rng = kernels.Pcg32(9, stream_id("unif"))
    us = [rng.next_double() for _ in range(4)]
    assert unif(-2.0, 6.0, 4, seed=9) == [8.0 * u - 2.0 for u in us]
    assert unif(0.0, 1.0, 4, seed=9) == us


@pytest.mark.parametrize("a,b,n", [(1.0, 1.0, 3), (2.0, 1.0, 3), (0.0, math.inf, 3), (0.0, 1.0, 0)])
def test_unif_invalid_bounds(a, b, n):
    with pytest.raises(InvalidBounds):
        unif(a, b, n)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(-1e6, 1e6), w=st.floats(1e-6, 1e6), n=st.integers(1, 50), seed=st.integers(0, 2**64 - 1))
def test_unif_stays_in_half_open_range(a, w, n, seed):
    b = a + w
    if not b > a:
        return
    assert all(a <= v < b for v in unif(a, b, n, seed))


def test_shock_count_is_product():
    out = montecarlo(small_model, SHAPES, seed=3)
    assert len(out) == 45
    assert [r.shock.index for r in out] == list(range(45))
    assert all(r.ok for r in out)


def test_single_shock():
    out = montecarlo(small_model, {"s0": [7.0], "alpha": [0.1], "load": [1.0]})
    assert len(out) == 1 and out[0].ok


def test_failing_model_is_captured():
    out = montecarlo(failing_model, SHAPES)
    assert len(out) == 45
    assert all(r.status == "error(RuntimeError: always)" and r.fitness is None for r in out)
    assert summary(out)["errors"] == 45


def test_parallel_matches_serial():
    serial = montecarlo(small_model, SHAPES, seed=5, jobs=1)
    assert montecarlo(small_model, SHAPES, seed=5, jobs=2) == serial


def test_shock_seeds_depend_on_index_only():
    a = shocks({"x": [1, 2, 3]}, seed=7)
    b = shocks({"y": ["p", "q", "r"]}, seed=7)
    assert [s.seed for s in a] == [s.seed for s in b] == [shock_seed(7, i) for i in range(3)]
    assert len({s.seed for s in a}) == 3


def test_shock_attribute_access():
    s = Shock({"alpha": 0.3}, 0)
    assert s.alpha == 0.3
    with pytest.raises(AttributeError):
        s.sigma


def test_benchmark_over_fixture_index(cache_dir):
    model = TemplateModel("historical(shock.symbol, '2014-01-01', '2014-12-31', columns=[shock.column]) "
                          ">> ewma(alpha=0.2) >> maco >> cash_stock(initial_cash=10000, load=7.5)", str(cache_dir))
    out = benchmark(model, ["TESTA", "TESTB", "TESTC", "TESTD", "TESTE"])
    assert len(out) == 5 and all(r.ok for r in out)
    assert benchmark(model, []) == []
    mixed = benchmark(model, ["TESTA", "NOSUCH", "TESTB"])
    assert [r.ok for r in mixed] == [True, False, True]
    assert mixed[1].status.startswith("error(SymbolNotFound")


def test_pearson_examples():
    xs = [1.0, 2.0, 3.0, 4.0]
    assert pearson(xs, xs) == 1.0
    assert pearson(xs, [-x for x in xs]) == -1.0
    assert pearson([1, 2, 3], [2, 4, 7]) == pytest.approx(5 / math.sqrt(2 * 114 / 9), abs=1e-15)
    assert pearson([1, 2, 3], [2, 4, 7]) == pytest.approx(np.corrcoef([1, 2, 3], [2, 4, 7])[0, 1], abs=1e-12)


@pytest.mark.parametrize("xs,ys", [([1.0], [2.0]), ([1, 1, 1], [1, 2, 3]), ([1, 2], [1, 2, 3])])
def test_pearson_degenerate(xs, ys):
    with pytest.raises(DegenerateInput):
        pearson(xs, ys)


@settings(max_examples=100, deadline=None)
@given(pts=st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=2, max_size=40))
def test_pearson_bounded_and_matches_numpy(pts):
    xs, ys = zip(*pts)
    try:
        r = pearson(xs, ys)
    except DegenerateInput:
        return
    assert -1.0 <= r <= 1.0
    if np.std(xs) > 1e-6 and np.std(ys) > 1e-6:
        assert r == pytest.approx(np.corrcoef(xs, ys)[0, 1], abs=1e-9)


def test_ols_recovers_exact_line():
    xs = [0.5, 1.0, 2.0, 7.0]
    slope, icpt = ols_slope(xs, [3.0 * x - 1.0 for x in xs])
    assert slope == pytest.approx(3.0, abs=1e-12) and icpt == pytest.approx(-1.0, abs=1e-12)


def test_histogram_examples():
    one = histogram([4.2], 5)
    assert one.counts == [1]
    assert histogram([0, 1, 2, 3], 2).counts == [2, 2]
    with pytest.raises(EmptyInput):
        histogram([])


def test_histogram_normal_fit():
    rng = np.random.default_rng(4)
    h = histogram(rng.standard_normal(10_000).tolist(), 50)
    assert abs(h.mean) < 0.05 and abs(h.stdev - 1.0) < 0.05
    assert sum(h.counts) == 10_000


@settings(max_examples=100, deadline=None)
@given(vs=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200), bins=st.integers(1, 30))
def test_histogram_counts_sum(vs, bins):
    h = histogram(vs, bins)
    assert sum(h.counts) == len(vs)
    assert (h.mean, h.stdev) == moments(vs)


def test_scatter_matrix_linear_and_degenerate():
    out = montecarlo(lambda s: _FixedFitness(2.0 * s.x + 1.0), {"x": [1.0, 2.0, 3.0], "c": [5.0]})
    sm = scatter_matrix_data(out, ["x", "fitness"])
    assert sm.pairs[("x", "fitness")].slope == pytest.approx(2.0)
    assert sm.diagonal["x"] == moments([1.0, 2.0, 3.0])
    with pytest.raises(DegenerateInput):
        scatter_matrix_data(out, ["x", "c"])
    loose = scatter_matrix_data(out, ["x", "c"], strict=False)
    assert loose.pairs[("x", "c")].slope is None


def test_scatter_matrix_four_features_six_pairs():
    out = montecarlo(small_model, SHAPES, seed=3)
    sm = scatter_matrix_data(out, ["s0", "alpha", "load", "fitness"])
    assert len(sm.unordered_pairs()) == 6
    assert len(sm.pairs) == 12


def test_results_csv_layout():
    out = montecarlo(failing_model, {"a": [0.1, 0.2]})
    lines = results_csv(out).splitlines()
    assert lines[0] == "index,a,fitness,status"
    assert lines[1] == "0,0.1,,error(RuntimeError: always)"


def test_summary_on_ok_results():
    out = montecarlo(lambda s: _FixedFitness(s.f), {"f": [0.5, 1.5, 2.0]})
    s = summary(out)
    assert s["ok"] == 3 and s["fraction_profitable"] == pytest.approx(2 / 3)
    assert s["mean_fitness"] == pytest.approx(4.0 / 3)


class _FixedFitness:
    def __init__(self, value):
        self.value = value

    def run(self):
        from datetime import date

        from bcom.stream import Event

        return [Event(date(2014, 1, 1), {"fitness": float(self.value)})]


def test_shock_order_survives_shuffled_input():
    todo = shocks({"f": [1.0, 2.0, 3.0, 4.0]})
    random.Random(1).shuffle(todo)
    from bcom.simulation import run_shocks

    out = run_shocks(lambda s: _FixedFitness(s.f), todo)
    assert [r.shock.index for r in out] == [0, 1, 2, 3]

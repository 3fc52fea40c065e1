from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcom import provenance
from bcom.errors import FieldCollision, MissingField, NonFiniteValue, NotASource
from bcom.generators import brownian, ts
from bcom.indicators import cma, ewma, rma, wma
from bcom.stream import Chain, Event, Pipeline, Processor, compose, run, to_date
from bcom.trading import cash_stock, maco
from helpers import Values, field


class Scale(Processor):
    name = "scale"

    def __init__(self, k: float, out: str = "scaled") -> None:
        self.k = k
        self.out = out
        super().__init__(k=k)

    def step(self, event):
        return [event.extend({self.out: event.fields["x"] * self.k})]


class Broken(Processor):
    name = "broken"

    def step(self, event):
        return [event.extend({"bad": float("nan")})]


class DropOdd(Processor):
    name = "drop_odd"

    def step(self, event):
        return [] if event.timestamp.day % 2 else [event]


def baseline():
    return ts("2013-1-1", "2014-12-31") >> brownian(seed=42, s0=37) >> ewma(alpha=0.05) >> maco() \
        >> cash_stock(initial_cash=10000, load=7.5)


def test_identity_composition_returns_source_emission():
    src = ts("2013-01-01", "2013-01-03")
    out = run(compose(src, []))
    assert [e.timestamp for e in out] == [date(2013, 1, 1), date(2013, 1, 2), date(2013, 1, 3)]
    assert all(e.fields == {} for e in out)


def test_baseline_composition_has_expected_fields():
    p = compose(ts("2013-1-1", "2014-12-31"), [brownian(seed=42, s0=37), ewma(0.05), maco(),
                                               cash_stock(10000, 7.5)])
    assert len(p.stages) == 4
    last = p.run()[-1]
    for name in ("price", "ewma", "balance", "fitness"):
        assert name in last.fields
    assert last.tags["signal"] in ("BUY", "SELL", "NOTHING")


def test_nested_composition_matches_flat():
    src = Values(x=range(10))
    flat = compose(src, [Scale(2.0), Scale(3.0, "again")]).run()
    nested = compose(compose(src, [Scale(2.0)]), [Scale(3.0, "again")]).run()
    assert flat == nested


def test_rshift_builds_pipelines_and_chains():
    chain = Scale(2.0) >> Scale(3.0, "b")
    assert isinstance(chain, Chain)
    p = Values(x=[1, 2]) >> chain
    assert isinstance(p, Pipeline) and len(p.stages) == 2
    assert field(p.run(), "b") == [3.0, 6.0]


def test_associativity_of_grouping():
    a, b, c = ewma(0.3), rma(3, output="r"), wma(2, output="w")
    src = Values(x=[1, 5, 2, 8, 3, 9, 4])
    left = ((src >> a) >> b) >> c
    right = src >> (a >> (b >> c))
    assert left.run() == right.run() == compose(src, [a, b, c]).run()


def test_cannot_use_source_as_stage():
    with pytest.raises(NotASource):
        compose(Values(x=[1]), [ts("2013-1-1", "2013-1-2")])
    with pytest.raises(NotASource):
        compose(Scale(1.0), [])


def test_missing_field_names_stage_and_field():
    p = ts("2013-1-1", "2013-1-3") >> ewma(0.5, input="price")
    with pytest.raises(MissingField) as exc:
        p.run()
    assert "price" in str(exc.value) and "ewma" in str(exc.value)


def test_non_finite_values_abort_the_run():
    with pytest.raises(NonFiniteValue):
        (Values(x=[1.0, 2.0]) >> Broken()).run()
    with pytest.raises(NonFiniteValue):
        list((Values(x=[1.0]) >> Broken()).stream())


def test_field_collision_is_an_error():
    with pytest.raises(FieldCollision):
        (Values(x=[1, 2]) >> ewma(0.5) >> ewma(0.2)).run()
    with pytest.raises(FieldCollision):
        list((Values(x=[1, 2]) >> ewma(0.5) >> ewma(0.2)).stream())


def test_run_twice_is_bit_identical():
    a, b = baseline().run(), baseline().run()
    assert a == b


def test_running_does_not_mutate_the_description():
    p = baseline()
    first = p.run()
    assert p.run() == first
    assert list(p.stream()) == first


def test_stage_may_drop_events():
    out = (ts("2013-1-1", "2013-1-10") >> DropOdd()).run()
    assert [e.timestamp.day for e in out] == [2, 4, 6, 8, 10]


def test_run_records_stage_steps_in_order():
    rec = provenance.ProvenanceRecord("bcom://test/baseline")
    baseline().run(rec)
    assert [s.expr for s in rec.steps] == [
        "ts(start='2013-01-01', end='2014-12-31')",
        "brownian(seed=42, s0=37.0, sigma=1.0, output='price')",
        "ewma(alpha=0.05)",
        "maco",
        "cash_stock(initial_cash=10000.0, load=7.5)",
    ]
    assert all(s.kind == "stage" for s in rec.steps)


def test_active_record_collects_steps():
    rec = provenance.ProvenanceRecord("bcom://test/active")
    with provenance.recording(rec):
        (Values(x=[1, 2, 3]) >> cma()).run()
    assert [s.uri for s in rec.steps] == ["bcom://bcom/values", "bcom://bcom.indicators/cma"]


def test_event_extend_keeps_order_and_is_immutable():
    ev = Event(date(2013, 1, 1), {"a": 1.0})
    ev2 = ev.extend({"b": 2.0}, {"signal": "BUY"})
    assert list(ev2.fields) == ["a", "b"] and ev2["signal"] == "BUY"
    assert ev.fields == {"a": 1.0} and ev.tags == {}


def test_to_date_accepts_unpadded():
    assert to_date("2013-1-1") == date(2013, 1, 1) == to_date("2013-01-01")
    with pytest.raises(ValueError):
        to_date("01/01/2013")


@settings(max_examples=60, deadline=None)
@given(xs=st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=60), alpha=st.floats(0.01, 1.0),
       m=st.integers(1, 10))
def test_batch_and_tick_modes_agree(xs, alpha, m):
    p = Values(x=xs) >> ewma(alpha) >> rma(m) >> wma(m) >> cma() >> maco("x", "ewma")
    if min(xs) > 0:
        p = p >> cash_stock(1000, 1.0)
    assert p.run() == list(p.stream())


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 50))
def test_order_preserved(n):
    out = (ts("2013-1-1", "2013-12-31") >> brownian(seed=n)).run()[:n]
    assert [e.timestamp for e in out] == sorted(e.timestamp for e in out)

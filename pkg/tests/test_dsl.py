from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcom.dsl import REGISTRY, Call, PipelineExpr, ShockRef, TemplateModel, describe_processors, elaborate, \
    format_literal, parse_pipeline, plot_options
from bcom.errors import BadArgument, PipelineSyntaxError, UnknownProcessor
from bcom.simulation import Shock
from helpers import field

BASELINE = "ts(start=2013-1-1, end=2014-12-31) >> brownian(seed=42, s0=37) >> ewma(alpha=0.05) >> maco " \
       ">> cash_stock(initial_cash=10000, load=7.5)"


def test_parse_simple_pipeline():
    expr = parse_pipeline(BASELINE)
    assert [c.name for c in expr.calls] == ["ts", "brownian", "ewma", "maco", "cash_stock"]
    assert expr.calls[0].args == (("start", date(2013, 1, 1)), ("end", date(2014, 12, 31)))
    assert expr.calls[3].args == ()


def test_printed_form_is_canonical():
    text = str(parse_pipeline(BASELINE))
    assert text.startswith("ts(start=2013-01-01, end=2014-12-31) >> brownian(seed=42, s0=37)")
    assert str(parse_pipeline(text)) == text


def test_comments_line_continuations_and_model_wrappers():
    text = """
    def model(shock):
        # one sweep body
        return ts('2013-01-01', '2013-02-01') \\
            >> brownian(s0=shock.s0) >> ewma(alpha=shock.alpha)
    """
    expr = parse_pipeline(text)
    assert expr.shock_refs() == ["s0", "alpha"]
    assert parse_pipeline("p = " + str(expr)) == expr


@pytest.mark.parametrize("text,line,col", [
    ("ts(start=2013-01-01, end=2013-01-02", 1, 36),
    ("ts(start=2013-01-01,\n end=2013-01-02 >> ewma", 2, 17),
    ("ts(2013-01-01, 2013-01-02) >>", 1, 30),
    ("ts(2013-01-01, 2013-01-02) ewma", 1, 28),
    ("ts(2013-13-01, 2013-01-02)", 1, 4),
    ("", 1, 1),
    ("ts(start=@)", 1, 10),
])
def test_syntax_errors_carry_position(text, line, col):
    with pytest.raises(PipelineSyntaxError) as exc:
        parse_pipeline(text)
    assert (exc.value.line, exc.value.col) == (line, col)


def test_unclosed_paren_names_the_opener():
    with pytest.raises(PipelineSyntaxError) as exc:
        parse_pipeline("ts(2013-01-01, 2013-01-02) >> ewma(alpha=0.1")
    assert "closing '(' at line 1, column 35" in str(exc.value)


def test_unknown_processor():
    with pytest.raises(UnknownProcessor) as exc:
        parse_pipeline("ts(2013-01-01, 2013-01-02) >> sma(3)")
    assert exc.value.name == "sma"


def test_source_placement():
    with pytest.raises(PipelineSyntaxError):
        parse_pipeline("ewma >> maco")
    with pytest.raises(PipelineSyntaxError):
        parse_pipeline("ts(2013-01-01, 2013-01-02) >> ts(2013-01-01, 2013-01-02)")


@pytest.mark.parametrize("stage,proc,arg", [
    ("ewma(alpha=1.5)", "ewma", "alpha"),
    ("rma(m=0)", "rma", "m"),
    ("rma", "rma", "m"),
    ("ewma(beta=0.1)", "ewma", "beta"),
    ("ewma(0.1, alpha=0.2)", "ewma", "alpha"),
    ("brownian(sigma='x')", "brownian", "sigma"),
    ("double_maco(fast_alpha=0.01, slow_alpha=0.5)", "double_maco", "fast_alpha"),
    ("select(price=1)", "select", "<keyword>"),
])
def test_bad_arguments_name_processor_and_argument(stage, proc, arg):
    with pytest.raises(BadArgument) as exc:
        elaborate(f"ts(2013-01-01, 2013-01-05) >> brownian >> {stage}")
    assert (exc.value.processor, exc.value.arg) == (proc, arg)


def test_elaborated_pipeline_matches_direct_construction():
    from bcom.generators import brownian, ts
    from bcom.indicators import ewma
    from bcom.trading import cash_stock, maco

    direct = ts("2013-1-1", "2014-12-31") >> brownian(seed=42, s0=37) >> ewma(0.05) >> maco() \
        >> cash_stock(10000, 7.5)
    assert elaborate(BASELINE).run() == direct.run()


def test_aliases_and_defaults():
    out = elaborate("ts(2013-01-01, 2013-01-20) >> brownian(seed=1) >> rma(m_prime=3) >> ewma").run()
    assert {"rma", "ewma"} <= set(out[-1].fields)


def test_shock_refs_are_filled_and_recorded():
    model = TemplateModel("ts(2013-01-01, 2013-02-01) >> brownian(s0=shock.s0) >> ewma(alpha=shock.alpha)")
    p = model(Shock({"s0": 9.5, "alpha": 0.25}, 0, seed=3))
    assert p.stages[1].expr() == "ewma(alpha=0.25)"
    assert field(p.run(), "price")[0] == 9.5
    with pytest.raises(BadArgument):
        model(Shock({"s0": 9.5}, 0))
    with pytest.raises(BadArgument):
        elaborate(model.expr)


def test_select_and_plot_pass_through():
    expr = parse_pipeline("ts(2013-01-01, 2013-01-05) >> brownian >> ewma >> plot(out='aapl') "
                          ">> select('price')")
    assert plot_options(expr) == {"out": "aapl"}
    out = elaborate(expr).run()
    assert list(out[-1].fields) == ["price"]


def test_registry_help_covers_every_processor():
    names = [n for n, _ in describe_processors()]
    assert names == list(REGISTRY)
    assert {"ts", "historical", "brownian", "ewma", "rma", "wma", "cma", "maco", "double_maco",
            "cash_stock"} <= set(names)


def test_format_literal_rejects_non_finite():
    with pytest.raises(ValueError):
        format_literal(float("inf"))


idents = st.from_regex(r"[a-z][a-z0-9_]{0,6}", fullmatch=True).filter(
    lambda s: s not in ("shock", "def", "return"))
scalars = st.one_of(
    st.integers(-10**6, 10**6),
    st.floats(allow_nan=False, allow_infinity=False),
    st.text(max_size=12),
    st.dates(date(1900, 1, 1), date(2100, 12, 31)),
    st.builds(ShockRef, idents),
    st.sampled_from([None, True, False]),
)
literals = st.one_of(scalars, st.lists(scalars, max_size=3).map(tuple))
stage_names = st.sampled_from(sorted(n for n in ["brownian", "ewma", "rma", "wma", "cma", "maco", "cash_stock",
                                                  "plot", "select", "double_maco"]))


@st.composite
def calls(draw, name):
    n = draw(st.integers(0, 3))
    keys = draw(st.lists(idents, min_size=n, max_size=n, unique=True))
    positional = draw(st.integers(0, n))
    args = [(None if i < positional else k, draw(literals)) for i, k in enumerate(keys)]
    return Call(name, tuple(args))


@st.composite
def pipelines(draw):
    head = draw(calls(draw(st.sampled_from(["ts", "historical"]))))
    rest = [draw(calls(draw(stage_names))) for _ in range(draw(st.integers(0, 4)))]
    return PipelineExpr((head, *rest))


@settings(max_examples=300, deadline=None)
@given(expr=pipelines())
def test_print_parse_round_trip(expr):
    text = str(expr)
    again = parse_pipeline(text)
    assert again == expr
    assert str(again) == text

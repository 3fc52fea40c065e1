"""Text notation for pipelines::

    pipeline := call (">>" call)*
    call     := IDENT ["(" [arg ("," arg)*] ")"]
    arg      := [IDENT "="] literal
    literal  := INT | DECIMAL | STRING | DATE | "[" [literal ("," literal)*] "]"
              | "shock" "." IDENT | None | True | False

Backslashes (Python line continuations) count as whitespace, and a leading
``return`` or ``name =`` is ignored so model bodies can be pasted verbatim.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Callable, Mapping, Sequence

from .errors import BadArgument, BcomError, PipelineSyntaxError, UnknownProcessor
from .stream import Event, Pipeline, Processor, Source, compose


@dataclass(frozen=True)
class ShockRef:
    """A placeholder filled from a shock's features at elaboration time."""

    name: str

    def __str__(self) -> str:
        return f"shock.{self.name}"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[tuple[str | None, Any], ...] = ()
    line: int = field(default=1, compare=False)
    col: int = field(default=1, compare=False)

    def __str__(self) -> str:
        if not self.args:
            return self.name
        parts = [format_literal(v) if k is None else f"{k}={format_literal(v)}" for k, v in self.args]
        return f"{self.name}({', '.join(parts)})"


@dataclass(frozen=True)
class PipelineExpr:
    calls: tuple[Call, ...]

    def __str__(self) -> str:
        return " >> ".join(str(c) for c in self.calls)

    def shock_refs(self) -> list[str]:
        found: list[str] = []

        def walk(v):
            if isinstance(v, ShockRef) and v.name not in found:
                found.append(v.name)
            elif isinstance(v, tuple):
                for x in v:
                    walk(x)

        for c in self.calls:
            for _, v in c.args:
                walk(v)
        return found


# -- printing ----------------------------------------------------------------


_ESCAPES = {"\\": "\\\\", "'": "\\'", "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_UNESCAPES = {"n": "\n", "r": "\r", "t": "\t"}


def format_literal(value: Any) -> str:
    if value is None or isinstance(value, bool):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite literal {value!r}")
        return repr(value)
    if isinstance(value, str):
        return "'" + re.sub(r"[\\'\n\r\t]", lambda m: _ESCAPES[m.group()], value) + "'"
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, ShockRef):
        return str(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_literal(v) for v in value) + "]"
    raise TypeError(f"cannot print literal {value!r}")


def format_call(name: str, kwargs: Mapping[str, Any]) -> str:
    return str(Call(name, tuple((k, _freeze(v)) for k, v in kwargs.items())))


def _freeze(v):
    return tuple(_freeze(x) for x in v) if isinstance(v, list) else v


# -- tokenizer ---------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n\\]+|\#[^\n]*)
  | (?P<date>\d{4}-\d{1,2}-\d{1,2}(?![\d.]))
  | (?P<number>-?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<string>'(?:[^'\\\n]|\\.)*'|"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>>>|[()\[\],=.:])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise PipelineSyntaxError(line, pos - line_start + 1, "a token", text[pos])
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", lambda m: _UNESCAPES.get(m.group(1), m.group(1)), s[1:-1], flags=re.S)


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, expected: str):
        t = self.tok
        raise PipelineSyntaxError(t.line, t.col, expected, t.text or "end of input")

    def take(self, kind: str, text: str | None = None) -> _Tok:
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            self.fail(repr(text) if text else kind)
        self.i += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def pipeline(self) -> PipelineExpr:
        # tolerate "def model(shock):", "return <pipeline>" and "<name> = <pipeline>"
        if self.at("ident", "def"):
            self.i += 1
            self.take("ident")
            self.take("op", "(")
            while not self.at("op", ")"):
                self.take("ident")
                if not self.at("op", ")"):
                    self.take("op", ",")
            self.take("op", ")")
            self.take("op", ":")
        if self.at("ident", "return"):
            self.i += 1
        elif self.at("ident") and self.toks[self.i + 1].kind == "op" and self.toks[self.i + 1].text == "=":
            self.i += 2
        if self.at("eof"):
            self.fail("a processor call")
        calls = [self.call()]
        while self.at("op", ">>"):
            self.i += 1
            calls.append(self.call())
        if not self.at("eof"):
            self.fail("'>>' or end of input")
        return PipelineExpr(tuple(calls))

    def call(self) -> Call:
        name_tok = self.take("ident")
        args: list[tuple[str | None, Any]] = []
        if self.at("op", "("):
            open_tok = self.take("op", "(")
            closer = f"',' or ')' closing '(' at line {open_tok.line}, column {open_tok.col}"
            if not self.at("op", ")"):
                while True:
                    args.append(self.arg())
                    if self.at("op", ","):
                        self.i += 1
                        continue
                    if not self.at("op", ")"):
                        self.fail(closer)
                    break
            self.take("op", ")")
        return Call(name_tok.text, tuple(args), name_tok.line, name_tok.col)

    def arg(self) -> tuple[str | None, Any]:
        if self.at("ident") and self.toks[self.i + 1].kind == "op" and self.toks[self.i + 1].text == "=":
            key = self.take("ident").text
            self.i += 1
            return key, self.literal()
        return None, self.literal()

    def literal(self) -> Any:
        t = self.tok
        if t.kind == "number":
            self.i += 1
            if re.fullmatch(r"-?\d+", t.text):
                return int(t.text)
            return float(t.text)
        if t.kind == "string":
            self.i += 1
            return _unquote(t.text)
        if t.kind == "date":
            self.i += 1
            y, m, d = (int(p) for p in t.text.split("-"))
            try:
                return date(y, m, d)
            except ValueError:
                raise PipelineSyntaxError(t.line, t.col, "a valid calendar date", t.text) from None
        if t.kind == "op" and t.text == "[":
            self.i += 1
            items = []
            if not self.at("op", "]"):
                while True:
                    items.append(self.literal())
                    if self.at("op", ","):
                        self.i += 1
                        continue
                    break
            self.take("op", "]")
            return tuple(items)
        if t.kind == "ident":
            if t.text == "shock":
                self.i += 1
                self.take("op", ".")
                return ShockRef(self.take("ident").text)
            consts = {"None": None, "True": True, "False": False}
            if t.text in consts:
                self.i += 1
                return consts[t.text]
        self.fail("a literal")


def parse_pipeline(text: str) -> PipelineExpr:
    expr = _Parser(text).pipeline()
    for pos, c in enumerate(expr.calls):
        spec = REGISTRY.get(c.name)
        if spec is None:
            raise UnknownProcessor(c.name)
        if pos == 0 and not spec.source:
            raise PipelineSyntaxError(c.line, c.col, "a source (ts or historical) as the first call", c.name)
        if pos > 0 and spec.source:
            raise PipelineSyntaxError(c.line, c.col, "a stage after '>>'; sources may only come first", c.name)
    return expr


# -- output/utility stages ---------------------------------------------------


class Plot(Processor):
    """Pass-through marker for the chart emitted by ``bcom run``."""

    name = "plot"
    namespace = "bcom.analytics.plot"

    def __init__(self, out: str | None = None, index: str | None = None) -> None:
        self.out = out
        self.index = index
        super().__init__(out=out, index=index)

    def step(self, event: Event) -> list[Event]:
        return [event]

    def process(self, events: list[Event]) -> list[Event]:
        return list(events)


class Select(Processor):
    """Projects events onto the named fields (and keeps tags)."""

    name = "select"
    namespace = "bcom.analytics"

    def __init__(self, *fields: str) -> None:
        if not fields:
            raise ValueError("select needs at least one field name")
        self.fields = fields
        super().__init__()

    def expr(self) -> str:
        return self.expr_text or str(Call(self.name, tuple((None, f) for f in self.fields)))

    def step(self, event: Event) -> list[Event]:
        from .stream import require

        return [Event(event.timestamp, {f: require(event, f, self) for f in self.fields}, event.tags)]


# -- elaboration -------------------------------------------------------------


def _number(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError("expected a number")
    return v


def _integer(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError("expected an integer")
    return v


def _text(v):
    if not isinstance(v, str):
        raise TypeError("expected a quoted string")
    return v


def _date(v):
    from .stream import to_date

    if not isinstance(v, (str, date)):
        raise TypeError("expected a date")
    return to_date(v)


def _opt_text(v):
    return None if v is None else _text(v)


def _text_list(v):
    if isinstance(v, str):
        return (v,)
    if not isinstance(v, tuple) or not all(isinstance(x, str) for x in v):
        raise TypeError("expected a list of strings")
    return v


@dataclass(frozen=True)
class ProcSpec:
    factory: Callable[..., Processor]
    params: tuple[tuple[str, Callable, Any], ...]  # (name, converter, default); default REQUIRED = required
    source: bool = False
    aliases: Mapping[str, str] = field(default_factory=dict)
    variadic: bool = False
    help: str = ""


REQUIRED = object()


def _make_registry() -> dict[str, ProcSpec]:
    from . import generators, indicators, ingest, trading

    def build_brownian(seed, s0, sigma, output, *, _ctx):
        if seed is None:
            seed = _ctx.get("seed") or 0
        return generators.brownian(seed=seed, s0=s0, sigma=sigma, output=output)

    def build_historical(symbol, start, end, columns, *, _ctx):
        return ingest.historical(symbol, start, end, columns, cache_dir=_ctx.get("cache_dir"),
                                 endpoint=_ctx.get("endpoint"))

    return {
        "ts": ProcSpec(lambda start, end, step, **_: generators.ts(start, end, step),
                       (("start", _date, REQUIRED), ("end", _date, REQUIRED),
                        ("step", _text, generators.EVERY_DAY)), source=True,
                       help="calendar ticks, start..end inclusive"),
        "historical": ProcSpec(build_historical,
                               (("symbol", _text, REQUIRED), ("start", _date, REQUIRED),
                                ("end", _date, REQUIRED), ("columns", _text_list, ("Adj. Close",))),
                               source=True, help="cached daily prices for one symbol"),
        "brownian": ProcSpec(build_brownian,
                             (("seed", lambda v: None if v is None else _integer(v), None),
                              ("s0", _number, generators.DEFAULT_S0),
                              ("sigma", _number, generators.DEFAULT_SIGMA),
                              ("output", _text, "price")),
                             help="arithmetic Brownian walk"),
        "ewma": ProcSpec(lambda alpha, input, output, **_: indicators.ewma(alpha, input, output),
                         (("alpha", _number, indicators.DEFAULT_EWMA_ALPHA), ("input", _opt_text, None),
                          ("output", _opt_text, None)), help="exponentially weighted moving average"),
        "rma": ProcSpec(lambda m, input, output, **_: indicators.rma(m, input, output),
                        (("m", _integer, REQUIRED), ("input", _opt_text, None), ("output", _opt_text, None)),
                        aliases={"m_prime": "m"}, help="rolling moving average"),
        "wma": ProcSpec(lambda m, input, output, **_: indicators.wma(m, input, output),
                        (("m", _integer, REQUIRED), ("input", _opt_text, None), ("output", _opt_text, None)),
                        aliases={"m_prime": "m"}, help="weighted moving average"),
        "cma": ProcSpec(lambda input, output, **_: indicators.cma(input, output),
                        (("input", _opt_text, None), ("output", _opt_text, None)),
                        help="cumulative moving average"),
        "maco": ProcSpec(lambda fast, slow, **_: trading.maco(fast, slow),
                         (("fast", _opt_text, None), ("slow", _opt_text, None)),
                         help="crossover signals"),
        "double_maco": ProcSpec(lambda price, fast_alpha, slow_alpha, **_:
                                trading.double_maco(price, fast_alpha, slow_alpha),
                                (("price", _opt_text, None), ("fast_alpha", _number, 0.2),
                                 ("slow_alpha", _number, 0.05)), help="EWMA-over-EWMA crossover signals"),
        "cash_stock": ProcSpec(lambda initial_cash, load, **_: trading.cash_stock(initial_cash, load),
                               (("initial_cash", _number, 10000.0), ("load", _number, 0.0)),
                               help="all-in/all-out portfolio accounting"),
        "plot": ProcSpec(lambda out, index, **_: Plot(out, index),
                         (("out", _opt_text, None), ("index", _opt_text, None)),
                         help="chart output marker"),
        "select": ProcSpec(lambda *fields, **_: Select(*fields), (), variadic=True,
                           help="keep only the named fields"),
    }


class _LazyRegistry(dict):
    def _fill(self):
        if not super().__len__():
            self.update(_make_registry())

    def get(self, key, default=None):
        self._fill()
        return super().get(key, default)

    def __getitem__(self, key):
        self._fill()
        return super().__getitem__(key)

    def __contains__(self, key):
        self._fill()
        return super().__contains__(key)

    def __iter__(self):
        self._fill()
        return super().__iter__()

    def __len__(self):
        self._fill()
        return super().__len__()


REGISTRY: dict[str, ProcSpec] = _LazyRegistry()


def _resolve(value, shock, proc: str, arg: str):
    if isinstance(value, ShockRef):
        if shock is None:
            raise BadArgument(proc, arg, f"refers to shock.{value.name} but no shock was given")
        try:
            return shock.features[value.name]
        except KeyError:
            raise BadArgument(proc, arg, f"shock has no feature {value.name!r}") from None
    if isinstance(value, tuple):
        return tuple(_resolve(v, shock, proc, arg) for v in value)
    return value


def _bind(call: Call, spec: ProcSpec, shock) -> tuple[list, dict]:
    names = [p[0] for p in spec.params]
    if spec.variadic:
        if any(k is not None for k, _ in call.args):
            raise BadArgument(call.name, "<keyword>", "takes positional field names only")
        vals = [_resolve(v, shock, call.name, "field") for _, v in call.args]
        for v in vals:
            if not isinstance(v, str):
                raise BadArgument(call.name, "field", "expected quoted field names")
        if not vals:
            raise BadArgument(call.name, "field", "at least one field name is required")
        return vals, {}
    bound: dict[str, Any] = {}
    for i, (key, value) in enumerate(call.args):
        if key is None:
            if any(k is not None for k, _ in call.args[:i]):
                raise BadArgument(call.name, f"#{i + 1}", "positional argument after keyword argument")
            if i >= len(names):
                raise BadArgument(call.name, f"#{i + 1}", f"takes at most {len(names)} arguments")
            key = names[i]
        key = spec.aliases.get(key, key)
        if key not in names:
            raise BadArgument(call.name, key, f"accepted arguments: {', '.join(names) or 'none'}")
        if key in bound:
            raise BadArgument(call.name, key, "given twice")
        bound[key] = _resolve(value, shock, call.name, key)
    kwargs = {}
    for name, convert, default in spec.params:
        if name not in bound:
            if default is REQUIRED:
                raise BadArgument(call.name, name, "required")
            kwargs[name] = default
            continue
        try:
            kwargs[name] = convert(bound[name])
        except (TypeError, ValueError) as exc:
            raise BadArgument(call.name, name, str(exc)) from None
    return [], kwargs


def elaborate(expr: PipelineExpr | str, shock=None, seed: int | None = None,
              cache_dir=None, endpoint: str | None = None) -> Pipeline:
    """Bind every call to its processor; shock placeholders are filled from ``shock``."""
    if isinstance(expr, str):
        expr = parse_pipeline(expr)
    if seed is None and shock is not None:
        seed = getattr(shock, "seed", None)
    ctx = {"seed": seed, "cache_dir": cache_dir, "endpoint": endpoint}
    procs = []
    for c in expr.calls:
        spec = REGISTRY.get(c.name)
        if spec is None:
            raise UnknownProcessor(c.name)
        args, kwargs = _bind(c, spec, shock)
        try:
            proc = spec.factory(*args, **kwargs, _ctx=ctx)
        except BadArgument:
            raise
        except (BcomError, ValueError, TypeError) as exc:
            raise BadArgument(c.name, _guess_arg(exc, kwargs), str(exc)) from None
        resolved = Call(c.name, tuple((k, _resolve(v, shock, c.name, k or "")) for k, v in c.args))
        proc.expr_text = str(resolved)
        procs.append(proc)
    if not procs[0].is_source:
        raise BadArgument(procs[0].name, "<source>", "the first call must be a source")
    return compose(procs[0], procs[1:])


def _guess_arg(exc: Exception, kwargs: Mapping[str, Any]) -> str:
    msg = str(exc)
    for name in kwargs:
        if msg.startswith(name) or f" {name} " in f" {msg} ":
            return name
    return next(iter(kwargs), "<args>")


@dataclass(frozen=True)
class TemplateModel:
    """A picklable ``Shock -> Pipeline`` built from pipeline text."""

    text: str
    cache_dir: str | None = None
    endpoint: str | None = None

    def __post_init__(self) -> None:
        parse_pipeline(self.text)

    @property
    def expr(self) -> PipelineExpr:
        return parse_pipeline(self.text)

    def __call__(self, shock) -> Pipeline:
        return elaborate(self.expr, shock=shock, cache_dir=self.cache_dir, endpoint=self.endpoint)


def plot_options(expr: PipelineExpr) -> dict[str, Any]:
    """Arguments of the last ``plot(...)`` call, if any."""
    out: dict[str, Any] = {}
    for c in expr.calls:
        if c.name == "plot":
            names = [p[0] for p in REGISTRY["plot"].params]
            out = {}
            for i, (k, v) in enumerate(c.args):
                out[k or names[i]] = v
    return out


def describe_processors() -> Sequence[tuple[str, str]]:
    return [(name, spec.help) for name, spec in REGISTRY.items()]

"""``bcom`` command line: run, montecarlo, benchmark, provenance."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path
from typing import Sequence

from . import dsl, ingest, provenance, simulation, svg
from .errors import (BadArgument, BcomError, MalformedRecord, PipelineSyntaxError, UnknownProcessor)
from .trading import ORDER_TAG, PORTFOLIO_FIELDS, SIGNAL_TAG

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VERIFY = 4

DEFAULT_SEED = 42
BENCHMARK_MODEL = ("historical(shock.symbol, '2014-01-01', '2014-12-31', columns=[shock.column]) "
                   ">> ewma >> maco >> cash_stock(initial_cash=10000, load=7.5)")


class UsageError(Exception):
    pass


def _cell(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def sink_csv(events) -> str:
    """``date,<fields...>,signal,order`` with floats in shortest round-trip form."""
    names: list[str] = []
    for ev in events:
        for k in ev.fields:
            if k not in names:
                names.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", *names, SIGNAL_TAG, ORDER_TAG])
    for ev in events:
        w.writerow([ev.timestamp.isoformat(), *(_cell(ev.fields.get(k, "")) for k in names),
                    ev.tags.get(SIGNAL_TAG, ""), ev.tags.get(ORDER_TAG, "")])
    return buf.getvalue()


def _write(path: Path, data: str | bytes) -> Path:
    payload = data.encode("utf-8") if isinstance(data, str) else data
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)
    return path


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    return out


def _pipeline_text(args) -> str:
    if args.file:
        return Path(args.file).read_text(encoding="utf-8")
    if args.pipeline == "-":
        return sys.stdin.read()
    if args.pipeline is None:
        raise UsageError("a pipeline text or --file is required")
    return args.pipeline


def _chart(events, title: str, timestamp: bool) -> str:
    if not events:
        return svg.line_chart([], {}, title=title, timestamp=timestamp)
    names = [k for k in events[-1].fields if k not in PORTFOLIO_FIELDS]
    series = {k: [ev.fields[k] for ev in events] for k in names}
    fitness = [ev.fields["fitness"] for ev in events] if "fitness" in events[-1].fields else None
    tag = ORDER_TAG if ORDER_TAG in events[-1].tags else SIGNAL_TAG
    buys = [i for i, ev in enumerate(events) if ev.tags.get(tag) == "BUY"]
    sells = [i for i, ev in enumerate(events) if ev.tags.get(tag) == "SELL"]
    return svg.line_chart([ev.timestamp.isoformat() for ev in events], series, fitness, buys, sells,
                          title=title, timestamp=timestamp)


def cmd_run(args) -> int:
    text = _pipeline_text(args)
    expr = dsl.parse_pipeline(text)
    pipeline = dsl.elaborate(expr, seed=args.seed, cache_dir=args.cache_dir, endpoint=args.endpoint)
    out = _out_dir(args)
    name = dsl.plot_options(expr).get("out") or "plot.svg"
    svg_path = out / (Path(str(name)).stem + ".svg")
    rec = provenance.ProvenanceRecord(svg_path.resolve().as_uri())
    with provenance.recording(rec):
        events = pipeline.run()
    sink = _write(out / "sink.csv", sink_csv(events))
    _write(svg_path, _chart(events, str(expr.calls[0]), not args.reproducible))
    rec.append(provenance.file_step("output-file", sink))
    rec.append(provenance.file_step("output-file", svg_path))
    prov = provenance.save(rec, provenance.record_path(svg_path))
    if events and "fitness" in events[-1].fields:
        print(f"final fitness {events[-1].fields['fitness']!r} over {len(events)} ticks")
    else:
        print(f"{len(events)} ticks")
    for p in (sink, svg_path, prov):
        print(f"wrote {p}")
    return EXIT_OK


def parse_feature(spec: str, seed: int) -> tuple[str, list]:
    """``name=unif:a,b,n`` or ``name=list:v1,v2,...``."""
    name, sep, rest = spec.partition("=")
    kind, sep2, body = rest.partition(":")
    name = name.strip()
    if not sep or not sep2 or not name.isidentifier():
        raise UsageError(f"malformed feature {spec!r}; expected name=unif:a,b,n or name=list:v1,v2")
    parts = [p.strip() for p in body.split(",")] if body.strip() else []
    if kind == "unif":
        if len(parts) != 3:
            raise UsageError(f"malformed feature {spec!r}; unif takes a,b,n")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError(f"malformed feature {spec!r}; a and b are numbers, n an integer") from None
        try:
            return name, simulation.unif(a, b, n, seed, name)
        except BcomError as exc:
            raise UsageError(f"feature {name}: {exc}") from None
    if kind == "list":
        if not parts or any(not p for p in parts):
            raise UsageError(f"malformed feature {spec!r}; list needs values")
        values = []
        for p in parts:
            try:
                values.append(int(p) if p.lstrip("-").isdigit() else float(p))
            except ValueError:
                values.append(p.strip("'\""))
        return name, values
    raise UsageError(f"malformed feature {spec!r}; unknown sampler {kind!r}")


def _check_features(model: dsl.TemplateModel, names: Sequence[str]) -> None:
    refs = model.expr.shock_refs()
    missing = [r for r in refs if r not in names]
    unused = [n for n in names if n not in refs]
    if missing:
        raise UsageError(f"model uses shock.{missing[0]} but no --feature {missing[0]}=... was given")
    if unused:
        raise UsageError(f"feature {unused[0]!r} is not used by the model")


def _numeric(results, names) -> list[str]:
    ok = [r for r in results if r.ok]
    return [n for n in names if ok and all(isinstance(r.shock.features[n], (int, float)) for r in ok)]


def _correlations_csv(sm: simulation.ScatterMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "pearson", "slope", "intercept"])
    for p in sm.unordered_pairs():
        w.writerow([p.x, p.y, "" if p.r is None else repr(p.r), "" if p.slope is None else repr(p.slope),
                    "" if p.intercept is None else repr(p.intercept)])
    return buf.getvalue()


def _summary_line(results) -> str:
    s = simulation.summary(results)
    if not s["ok"]:
        return f"shocks {s['shocks']}, ok 0, errors {s['errors']}"
    return (f"shocks {s['shocks']}, ok {s['ok']}, errors {s['errors']}, "
            f"mean fitness {s['mean_fitness']:.6f}, profitable (fitness > 1) {s['fraction_profitable']:.2%}")


def cmd_montecarlo(args) -> int:
    if not args.feature:
        raise UsageError("at least one --feature is required")
    samples = dict(parse_feature(f, args.seed) for f in args.feature)
    model = dsl.TemplateModel(_pipeline_text(args), args.cache_dir, args.endpoint)
    _check_features(model, list(samples))
    out = _out_dir(args)
    results = simulation.montecarlo(model, samples, args.seed, args.jobs)
    names = list(samples)
    wrote = [_write(out / "results.csv", simulation.results_csv(results, names))]
    numeric = _numeric(results, names) + ["fitness"]
    if sum(r.ok for r in results) >= 2 and len(numeric) >= 2:
        sm = simulation.scatter_matrix_data(results, numeric, strict=False)
        wrote.append(_write(out / "scatter_matrix.svg",
                            svg.scatter_matrix_chart(sm, "Monte Carlo scatter matrix", not args.reproducible)))
        wrote.append(_write(out / "correlations.csv", _correlations_csv(sm)))
    else:
        print("fewer than two successful shocks; scatter matrix skipped", file=sys.stderr)
    print(_summary_line(results))
    for p in wrote:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    tickers = ingest.index_tickers(args.index)
    if not tickers:
        raise UsageError(f"index {args.index} lists no tickers")
    text = _pipeline_text(args) if (args.pipeline or args.file) else BENCHMARK_MODEL
    model = dsl.TemplateModel(text, args.data or args.cache_dir, args.endpoint)
    _check_features(model, ["symbol", "column"])
    out = _out_dir(args)
    results = simulation.benchmark(model, tickers, args.column, args.seed, args.jobs)
    wrote = [_write(out / "results.csv", simulation.results_csv(results, ["symbol", "column"]))]
    fit = [r.fitness for r in results if r.ok]
    if fit:
        h = simulation.histogram(fit, args.bins)
        wrote.append(_write(out / "histogram.svg",
                            svg.histogram_chart(h, f"Fitness over {args.index}", timestamp=not args.reproducible)))
    for r in results:
        if not r.ok:
            print(f"{r.shock.features['symbol']}: {r.status}", file=sys.stderr)
    print(_summary_line(results))
    for p in wrote:
        print(f"wrote {p}")
    return EXIT_OK if fit else EXIT_RUNTIME


def cmd_provenance(args) -> int:
    artifact = Path(args.artifact)
    path = provenance.record_path(artifact)
    if not path.exists() and artifact.suffix.lower() != ".svg":
        alt = provenance.record_path(artifact.with_suffix(".svg"))
        if alt.exists():
            path = alt
    if not path.exists():
        print(f"bcom: no provenance record {path}", file=sys.stderr)
        return EXIT_USAGE
    rec = provenance.load(path)
    sys.stdout.write(provenance.render_tree(rec))
    status = EXIT_OK
    for step, result in provenance.verify(rec, base_dir=path.parent):
        if result == provenance.DIGEST_MISMATCH:
            status = EXIT_VERIFY
        print(f"{result:16s} {step.kind:13s} {step.uri}")
    print("verified" if status == EXIT_OK else "verification FAILED")
    return status


def _common(parser: argparse.ArgumentParser, top: bool) -> None:
    d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    parser.add_argument("--seed", type=int, default=d(DEFAULT_SEED),
                        help=f"sweep/walk seed (default {DEFAULT_SEED})")
    parser.add_argument("--out", default=d("."), help="output directory (default: current)")
    parser.add_argument("--jobs", type=int, default=d(1), help="worker processes for sweeps")
    parser.add_argument("--reproducible", action="store_true", default=d(False),
                        help="omit the timestamp comment from SVG output")
    parser.add_argument("--cache-dir", default=d(None),
                        help=f"historical price cache (default ${ingest.CACHE_ENV} or ./cache)")
    parser.add_argument("--endpoint", default=d(None),
                        help="URL template with {symbol} for fetching missing symbols")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bcom", description="Crossover momentum backtests over event streams.")
    _common(p, True)
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def pipeline_args(sp, required=True):
        sp.add_argument("pipeline", nargs=None if required else "?", default=None,
                        help="pipeline text ('-' reads stdin)")
        sp.add_argument("-f", "--file", help="read the pipeline text from a file")

    r = sub.add_parser("run", help="run one pipeline; write sink.csv, a chart and its provenance")
    _common(r, False)
    pipeline_args(r, required=False)
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("montecarlo", help="sweep a model over sampled features")
    _common(m, False)
    pipeline_args(m, required=False)
    m.add_argument("--feature", action="append", default=[], metavar="NAME=unif:a,b,n|list:v1,v2",
                   help="one sampled feature; repeat per feature")
    m.set_defaults(func=cmd_montecarlo)

    b = sub.add_parser("benchmark", help="backtest every ticker of an index file")
    _common(b, False)
    pipeline_args(b, required=False)
    b.add_argument("--index", required=True, help="CSV with a Ticker column")
    b.add_argument("--column", default="Adj. Close", help="price column (default 'Adj. Close')")
    b.add_argument("--data", default=None, help="directory of <SYMBOL>.csv price files")
    b.add_argument("--bins", type=int, default=20, help="histogram bins")
    b.set_defaults(func=cmd_benchmark)

    v = sub.add_parser("provenance", help="print and verify an artifact's provenance record")
    _common(v, False)
    v.add_argument("artifact")
    v.set_defaults(func=cmd_provenance)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, PipelineSyntaxError, UnknownProcessor, BadArgument, MalformedRecord) as exc:
        print(f"bcom: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bcom: {exc}", file=sys.stderr)
        return EXIT_IO
    except BcomError as exc:
        print(f"bcom: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())

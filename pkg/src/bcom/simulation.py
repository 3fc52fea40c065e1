"""Monte Carlo shock sweeps, index benchmarks and the statistics over their results."""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

from . import kernels
from .errors import DegenerateInput, EmptyInput, InvalidBounds
from .generators import stream_id

OK = "ok"


@dataclass(frozen=True)
class UniformSpec:
    a: float
    b: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.b > self.a:
            raise InvalidBounds(f"need finite a < b, got a={self.a!r}, b={self.b!r}")
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise InvalidBounds(f"sample count must be a positive integer, got {self.n!r}")


def unif(a: float, b: float, n: int, seed: int = 0, stream: int | str = "unif") -> list[float]:
    """``n`` draws of ``(b - a) * u + a`` with ``u`` uniform on [0, 1)."""
    spec = UniformSpec(float(a), float(b), n)
    if isinstance(stream, str):
        stream = stream_id(stream)
    rng = kernels.Pcg32(seed, stream)
    width = spec.b - spec.a
    out = []
    for _ in range(spec.n):
        v = width * rng.next_double() + spec.a
        out.append(v if v < spec.b else math.nextafter(spec.b, spec.a))
    return out


def shock_seed(sweep_seed: int, index: int) -> int:
    """Per-shock PRNG seed, a function of (sweep seed, shock index) only."""
    digest = hashlib.sha256(f"{sweep_seed}:{index}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class Shock:
    features: Mapping[str, Any]
    index: int
    seed: int = 0

    def __getattr__(self, name: str):
        # shock.alpha etc., as in model bodies
        try:
            return self.__dict__["features"][name]
        except KeyError:
            raise AttributeError(name) from None


@dataclass(frozen=True)
class SweepResult:
    shock: Shock
    fitness: float | None
    status: str = OK

    @property
    def ok(self) -> bool:
        return self.status == OK


def shocks(feature_samples: Mapping[str, Sequence[Any]], seed: int = 0) -> list[Shock]:
    """Cartesian product of the sample lists, in lexicographic index order."""
    names = list(feature_samples)
    lists = [list(feature_samples[n]) for n in names]
    return [Shock(dict(zip(names, combo)), i, shock_seed(seed, i))
            for i, combo in enumerate(itertools.product(*lists))]


def final_fitness(events) -> float:
    if not events:
        raise EmptyInput("pipeline produced no events")
    last = events[-1]
    if "fitness" not in last.fields:
        raise KeyError("pipeline has no 'fitness' field; end it with cash_stock")
    return float(last.fields["fitness"])


def evaluate(model: Callable[[Shock], Any], shock: Shock) -> SweepResult:
    try:
        return SweepResult(shock, final_fitness(model(shock).run()), OK)
    except Exception as exc:  # per-shock failures are data
        text = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        return SweepResult(shock, None, f"error({text})")


_worker_model: Callable[[Shock], Any] | None = None


def _init_worker(model) -> None:
    global _worker_model
    _worker_model = model


def _evaluate_in_worker(shock: Shock) -> SweepResult:
    return evaluate(_worker_model, shock)


def _pool_context():
    methods = multiprocessing.get_all_start_methods()
    return multiprocessing.get_context("fork" if "fork" in methods else "spawn")


def run_shocks(model: Callable[[Shock], Any], todo: Sequence[Shock], jobs: int = 1) -> list[SweepResult]:
    jobs = max(1, min(int(jobs or 1), len(todo)))
    if jobs == 1 or len(todo) < 2:
        results = [evaluate(model, s) for s in todo]
    else:
        with ProcessPoolExecutor(jobs, mp_context=_pool_context(), initializer=_init_worker,
                                 initargs=(model,)) as pool:
            results = list(pool.map(_evaluate_in_worker, todo, chunksize=max(1, len(todo) // (4 * jobs))))
    return sorted(results, key=lambda r: r.shock.index)


def montecarlo(model: Callable[[Shock], Any], feature_samples: Mapping[str, Sequence[Any]],
               seed: int = 0, jobs: int = 1) -> list[SweepResult]:
    """Run ``model`` once per shock of the full Cartesian product."""
    return run_shocks(model, shocks(feature_samples, seed), jobs)


def benchmark(model: Callable[[Shock], Any], symbols: Iterable[str], column: str | Sequence[str] = "Adj. Close",
              seed: int = 0, jobs: int = 1) -> list[SweepResult]:
    """One shock per (symbol, column); ingest failures become error results."""
    columns = [column] if isinstance(column, str) else list(column)
    return montecarlo(model, {"symbol": list(symbols), "column": columns}, seed, jobs) if columns else []


# -- statistics ---------------------------------------------------------------


def _floats(values: Iterable[Any]) -> list[float]:
    return [float(v) for v in values]


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    xs, ys = _floats(xs), _floats(ys)
    if len(xs) != len(ys):
        raise DegenerateInput(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise DegenerateInput("need at least two points")
    mx = math.fsum(xs) / len(xs)
    my = math.fsum(ys) / len(ys)
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInput("zero variance")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def ols_slope(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares ``(slope, intercept)`` of y on x."""
    xs, ys = _floats(xs), _floats(ys)
    if len(xs) != len(ys) or len(xs) < 2:
        raise DegenerateInput("need two or more paired points")
    mx = math.fsum(xs) / len(xs)
    my = math.fsum(ys) / len(ys)
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx == 0.0:
        raise DegenerateInput("zero variance in x")
    slope = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    return slope, my - slope * mx


def moments(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and population standard deviation."""
    vs = _floats(values)
    if not vs:
        raise EmptyInput("no values")
    mean = math.fsum(vs) / len(vs)
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in vs) / len(vs))


@dataclass(frozen=True)
class Histogram:
    bins: list[tuple[float, float, int]]
    mean: float
    stdev: float

    @property
    def counts(self) -> list[int]:
        return [c for _, _, c in self.bins]


def histogram(values: Sequence[float], bins: int = 20) -> Histogram:
    """Equal-width bins over [min, max]; each bin is [lo, hi) except the last, which is closed."""
    vs = _floats(values)
    if not vs:
        raise EmptyInput("histogram of no values")
    if isinstance(bins, bool) or not isinstance(bins, int) or bins < 1:
        raise ValueError(f"bin count must be a positive integer, got {bins!r}")
    lo, hi = min(vs), max(vs)
    mean, stdev = moments(vs)
    if lo == hi:
        return Histogram([(lo, hi, len(vs))], mean, stdev)
    width = (hi - lo) / bins
    edges = [lo + i * width for i in range(bins)] + [hi]
    counts = [0] * bins
    for v in vs:
        k = min(int((v - lo) / width), bins - 1)
        # guard against rounding at the edges
        while k > 0 and v < edges[k]:
            k -= 1
        while k < bins - 1 and v >= edges[k + 1]:
            k += 1
        counts[k] += 1
    return Histogram([(edges[i], edges[i + 1], counts[i]) for i in range(bins)], mean, stdev)


@dataclass(frozen=True)
class PairFit:
    x: str
    y: str
    points: list[tuple[float, float]]
    slope: float | None
    intercept: float | None
    r: float | None


@dataclass
class ScatterMatrix:
    features: list[str]
    diagonal: dict[str, tuple[float, float]] = field(default_factory=dict)
    pairs: dict[tuple[str, str], PairFit] = field(default_factory=dict)

    def unordered_pairs(self) -> list[PairFit]:
        return [p for (a, b), p in self.pairs.items() if self.features.index(a) < self.features.index(b)]


def result_table(results: Sequence[SweepResult], features: Sequence[str]) -> dict[str, list[float]]:
    ok = [r for r in results if r.ok]
    table = {}
    for f in features:
        table[f] = [float(r.fitness) if f == "fitness" else float(r.shock.features[f]) for r in ok]
    return table


def scatter_matrix_data(results: Sequence[SweepResult], features: Sequence[str],
                        strict: bool = True) -> ScatterMatrix:
    """Point clouds, OLS fits and correlations for every ordered feature pair.

    ``fitness`` may appear in ``features``. With ``strict`` a constant feature
    raises DegenerateInput; otherwise its fits are left empty.
    """
    features = list(features)
    table = result_table(results, features)
    if len(next(iter(table.values()), [])) < 2:
        raise DegenerateInput("need at least two ok results")
    sm = ScatterMatrix(features)
    for f in features:
        sm.diagonal[f] = moments(table[f])
    for a in features:
        for b in features:
            if a == b:
                continue
            pts = list(zip(table[a], table[b]))
            try:
                slope, icpt = ols_slope(table[a], table[b])
                r = pearson(table[a], table[b])
            except DegenerateInput:
                if strict:
                    raise DegenerateInput(f"feature pair ({a}, {b}) has zero variance") from None
                slope = icpt = r = None
            sm.pairs[(a, b)] = PairFit(a, b, pts, slope, icpt, r)
    return sm


def summary(results: Sequence[SweepResult]) -> dict[str, float]:
    fit = [r.fitness for r in results if r.ok]
    return {
        "shocks": len(results),
        "ok": len(fit),
        "errors": len(results) - len(fit),
        "mean_fitness": math.fsum(fit) / len(fit) if fit else math.nan,
        "fraction_profitable": sum(f > 1.0 for f in fit) / len(fit) if fit else math.nan,
    }


def _cell(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def results_csv(results: Sequence[SweepResult], features: Sequence[str] | None = None) -> str:
    """``index,<features...>,fitness,status`` with floats in shortest round-trip form."""
    if features is None:
        features = list(results[0].shock.features) if results else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", *features, "fitness", "status"])
    for r in results:
        w.writerow([r.shock.index, *(_cell(r.shock.features[f]) for f in features),
                    "" if r.fitness is None else _cell(r.fitness), r.status])
    return buf.getvalue()

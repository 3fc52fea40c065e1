"""Historical price ingestion: local CSV cache, index constituents, remote fetch."""

from __future__ import annotations

import csv
import fcntl
import io
import math
import os
import tempfile
import urllib.error
import urllib.request
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterator, Sequence

from . import provenance
from .errors import (ColumnNotFound, EmptyRange, MalformedCsv, MissingTickerColumn, NetworkError,
                     SymbolNotFound)
from .stream import Event, Source, to_date

CACHE_ENV = "BCOM_CACHE_DIR"
DATE_COLUMN = "Date"
TICKER_COLUMN = "Ticker"


def cache_root(cache_dir: str | os.PathLike | None = None) -> Path:
    return Path(cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV, "cache"))


def _cache_file(symbol: str, cache_dir) -> Path:
    if not symbol or "/" in symbol or "\\" in symbol or symbol in (".", ".."):
        raise SymbolNotFound(f"invalid symbol {symbol!r}")
    return cache_root(cache_dir) / f"{symbol}.csv"


@dataclass(frozen=True)
class HistoricalRequest:
    symbol: str
    start: date
    end: date
    columns: tuple[str, ...] = ("Adj. Close",)

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", to_date(self.start))
        object.__setattr__(self, "end", to_date(self.end))
        object.__setattr__(self, "columns", tuple(self.columns))
        if not self.symbol:
            raise ValueError("symbol must be non-empty")
        if not self.columns:
            raise ValueError("at least one column is required")
        if self.start > self.end:
            raise EmptyRange(f"start {self.start} is after end {self.end}")


def read_price_csv(data: bytes | str, columns: Sequence[str], source: str = "") -> list[tuple[date, list[float]]]:
    """Parse the pinned CSV dialect into ascending ``(date, values)`` rows."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedCsv(f"{source or 'csv'}: empty input") from None
    header = [h.strip() for h in header]
    if DATE_COLUMN not in header:
        raise MalformedCsv(f"{source or 'csv'}: no {DATE_COLUMN!r} column in header")
    date_idx = header.index(DATE_COLUMN)
    idx = []
    for col in columns:
        if col not in header:
            raise ColumnNotFound(col, source)
        idx.append(header.index(col))
    rows = []
    seen = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise MalformedCsv(f"{source}:{lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            d = date.fromisoformat(row[date_idx].strip())
        except ValueError:
            raise MalformedCsv(f"{source}:{lineno}: bad date {row[date_idx]!r}") from None
        if d in seen:
            raise MalformedCsv(f"{source}:{lineno}: duplicate date {d}")
        seen.add(d)
        values = []
        for col, i in zip(columns, idx):
            cell = row[i].strip()
            if not cell:
                raise MalformedCsv(f"{source}:{lineno}: empty {col!r} cell")
            try:
                v = float(cell)
            except ValueError:
                raise MalformedCsv(f"{source}:{lineno}: non-numeric {col!r} cell {cell!r}") from None
            if not math.isfinite(v):
                raise MalformedCsv(f"{source}:{lineno}: non-finite {col!r} cell {cell!r}")
            values.append(v)
        rows.append((d, values))
    rows.sort(key=lambda r: r[0])
    return rows


class Historical(Source):
    """Emits one event per trading day in ``[start, end]`` from a cached CSV."""

    name = "historical"
    namespace = "bcom.ingest"

    def __init__(self, request: HistoricalRequest, cache_dir: str | os.PathLike | None = None,
                 endpoint: str | None = None) -> None:
        self.request = request
        self.cache_dir = cache_dir
        self.endpoint = endpoint
        super().__init__(symbol=request.symbol, start=request.start.isoformat(),
                         end=request.end.isoformat(), columns=list(request.columns))

    def expr(self) -> str:
        if self.expr_text is not None:
            return self.expr_text
        from .dsl import format_literal

        r = self.request
        head = ", ".join(format_literal(v) for v in (r.symbol, r.start.isoformat(), r.end.isoformat()))
        return f"{self.name}({head}, columns={format_literal(list(r.columns))})"

    def reset(self) -> None:
        self._read: Path | None = None

    def locate(self) -> Path:
        path = _cache_file(self.request.symbol, self.cache_dir)
        if path.exists():
            return path
        if self.endpoint:
            return fetch_and_cache(self.request.symbol, self.endpoint, self.cache_dir)
        raise SymbolNotFound(f"no cached data for {self.request.symbol!r} under {path.parent}")

    def emit(self) -> Iterator[Event]:
        r = self.request
        path = self.locate()
        rows = read_price_csv(path.read_bytes(), r.columns, str(path))
        self._read = path
        picked = [(d, v) for d, v in rows if r.start <= d <= r.end]
        if not picked:
            raise EmptyRange(f"{r.symbol}: no rows between {r.start} and {r.end}")
        for d, values in picked:
            yield Event(d, dict(zip(r.columns, values)))

    def lineage(self) -> list[provenance.ProvenanceStep]:
        if self._read is None:
            return []
        return [provenance.file_step("cache", self._read, namespace=self.namespace)]


def historical(symbol: str, start: date | str, end: date | str, columns: Sequence[str] = ("Adj. Close",),
               cache_dir: str | os.PathLike | None = None, endpoint: str | None = None) -> Historical:
    return Historical(HistoricalRequest(symbol, start, end, tuple(columns)), cache_dir, endpoint)


@dataclass(frozen=True)
class IndexSpec:
    name: str
    source_path: str | os.PathLike


def index_tickers(spec: IndexSpec | str | os.PathLike) -> list[str]:
    path = spec.source_path if isinstance(spec, IndexSpec) else spec
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or TICKER_COLUMN not in [h.strip() for h in header]:
            raise MissingTickerColumn(f"{path}: no {TICKER_COLUMN!r} column")
        col = [h.strip() for h in header].index(TICKER_COLUMN)
        out: dict[str, None] = {}
        for row in reader:
            if len(row) > col and row[col].strip():
                out.setdefault(row[col].strip(), None)
    return list(out)


@contextmanager
def _symbol_lock(path: Path):
    lock = path.with_name(path.name + ".lock")
    with open(lock, "a+") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


def fetch_and_cache(symbol: str, endpoint: str, cache_dir: str | os.PathLike | None = None,
                    timeout: float = 30.0) -> Path:
    """Download ``endpoint`` (with ``{symbol}`` substituted) into the cache.

    An existing cache file is returned without touching the network.
    """
    path = _cache_file(symbol, cache_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    with _symbol_lock(path):
        if path.exists():
            return path
        url = endpoint.replace("{symbol}", symbol)
        try:
            with urllib.request.urlopen(url, timeout=timeout) as resp:
                body = resp.read()
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise NetworkError(f"fetching {url}: {exc}") from exc
        try:
            read_price_csv(body, (), url)
        except UnicodeDecodeError as exc:
            raise MalformedCsv(f"{url}: body is not UTF-8") from exc
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".csv")
        with os.fdopen(fd, "wb") as fh:
            fh.write(body)
        os.replace(tmp, path)
        rec = provenance.active_record()
        if rec is not None:
            rec.append(provenance.fetch_step(url, body))
        return path

"""Synthetic sources: a calendar tick emitter and seeded Brownian price walks."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterator, Sequence

from . import kernels
from .errors import DuplicateOutputField, InvalidParameter, InvalidRange
from .stream import Event, Processor, Source, check_new, append_columns, to_date

EVERY_DAY = "every-day"
BUSINESS_DAYS = "business-days"

DEFAULT_S0 = 37.0
DEFAULT_SIGMA = 1.0


@dataclass(frozen=True)
class CalendarSpec:
    start: date
    end: date
    step: str = EVERY_DAY

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", to_date(self.start))
        object.__setattr__(self, "end", to_date(self.end))
        if self.step not in (EVERY_DAY, BUSINESS_DAYS):
            raise InvalidParameter(f"step must be {EVERY_DAY!r} or {BUSINESS_DAYS!r}, got {self.step!r}")
        if self.start > self.end:
            raise InvalidRange(f"start {self.start} is after end {self.end}")

    def dates(self) -> Iterator[date]:
        day = timedelta(days=1)
        d = self.start
        while d <= self.end:
            if self.step == EVERY_DAY or d.weekday() < 5:
                yield d
            d += day


class TimeSeries(Source):
    name = "ts"
    namespace = "bcom.generators"

    def __init__(self, spec: CalendarSpec) -> None:
        self.spec = spec
        params = {"start": spec.start.isoformat(), "end": spec.end.isoformat()}
        if spec.step != EVERY_DAY:
            params["step"] = spec.step
        super().__init__(**params)

    def emit(self) -> Iterator[Event]:
        for d in self.spec.dates():
            yield Event(d, {})


def ts(start: date | str, end: date | str, step: str = EVERY_DAY) -> TimeSeries:
    return TimeSeries(CalendarSpec(start, end, step))


def stream_id(name: str) -> int:
    """PCG stream selector for a named output (63 bits of SHA-256)."""
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "big") >> 1


@dataclass(frozen=True)
class BrownianParams:
    s0: float = DEFAULT_S0
    sigma: float = DEFAULT_SIGMA
    seed: int = 0
    output: str = "price"

    def __post_init__(self) -> None:
        if not math.isfinite(self.s0):
            raise InvalidParameter(f"s0 must be finite, got {self.s0!r}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InvalidParameter(f"sigma must be positive and finite, got {self.sigma!r}")
        if not self.output:
            raise InvalidParameter("output field name must be non-empty")


class Brownian(Processor):
    """Appends one arithmetic Wiener walk per params entry.

    Step k carries ``s0 + sum(eps_1..eps_k)`` with ``eps ~ N(0, sigma^2)``;
    the first event carries exactly ``s0``. Each output name selects its own
    PCG stream, so walks sharing a seed are independent.
    """

    namespace = "bcom.generators"

    def __init__(self, walks: Sequence[BrownianParams], name: str = "brownian", **params) -> None:
        walks = tuple(walks)
        if not walks:
            raise InvalidParameter("at least one walk is required")
        seen = set()
        for w in walks:
            if w.output in seen:
                raise DuplicateOutputField(f"output field {w.output!r} given twice")
            seen.add(w.output)
        if len({w.seed for w in walks}) != 1:
            raise InvalidParameter("all walks must share one seed")
        self.walks = walks
        self.name = name
        super().__init__(**params)

    def reset(self) -> None:
        self._walkers = [kernels.BrownianWalk(w.s0, w.sigma, w.seed, stream_id(w.output))
                         for w in self.walks]

    def process(self, events: list[Event]) -> list[Event]:
        n = len(events)
        cols = {w.output: k.take(n) for w, k in zip(self.walks, self._walkers)}
        return append_columns(events, cols, self)

    def step(self, event: Event) -> list[Event]:
        check_new(event, (w.output for w in self.walks), self)
        return [event.extend({w.output: k.push() for w, k in zip(self.walks, self._walkers)})]


def brownian(seed: int = 0, s0: float = DEFAULT_S0, sigma: float = DEFAULT_SIGMA,
             output: str = "price") -> Brownian:
    p = BrownianParams(float(s0), float(sigma), int(seed), output)
    return Brownian([p], seed=p.seed, s0=p.s0, sigma=p.sigma, output=p.output)


def multi_brownian(walks: Sequence[BrownianParams]) -> Brownian:
    walks = list(walks)
    return Brownian(walks, name="multi_brownian",
                    seed=walks[0].seed if walks else None,
                    outputs=[w.output for w in walks])

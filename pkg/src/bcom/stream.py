"""Events, processors and their composition into pipelines.

A pipeline is ``source >> P1 >> P2 >> ... >> Pn``: the source emits events and
each stage maps every event to zero or more events, appending named fields.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import provenance
from .errors import FieldCollision, MissingField, NonFiniteValue, NotASource


@dataclass(frozen=True)
class Event:
    """One tick: a calendar date plus named numeric fields and categorical tags."""

    timestamp: date
    fields: Mapping[str, float] = field(default_factory=dict)
    tags: Mapping[str, str] = field(default_factory=dict)

    def extend(self, values: Mapping[str, float] | None = None,
               tags: Mapping[str, str] | None = None) -> "Event":
        return Event(
            self.timestamp,
            {**self.fields, **values} if values else self.fields,
            {**self.tags, **tags} if tags else self.tags,
        )

    def __getitem__(self, name: str):
        if name in self.fields:
            return self.fields[name]
        return self.tags[name]


class Processor:
    """One pipeline stage.

    Subclasses keep all per-run state in attributes created by :meth:`reset`;
    a pipeline runs on fresh copies, so a processor description is never
    mutated by running it.
    """

    name = "processor"
    namespace = "bcom"
    is_source = False

    def __init__(self, **params: Any) -> None:
        self.params = params
        self.expr_text: str | None = None
        self.reset()

    def reset(self) -> None:
        pass

    def fresh(self) -> "Processor":
        clone = copy.copy(self)
        clone.reset()
        return clone

    def step(self, event: Event) -> list[Event]:
        raise NotImplementedError

    def process(self, events: list[Event]) -> list[Event]:
        step = self.step
        return [out for ev in events for out in step(ev)]

    def lineage(self) -> list[provenance.ProvenanceStep]:
        """Extra provenance steps (files read, say) from the last run."""
        return []

    def expr(self) -> str:
        if self.expr_text is not None:
            return self.expr_text
        from .dsl import format_call

        shown = {k: v for k, v in self.params.items() if v is not None}
        return format_call(self.name, shown)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.expr()}>"

    def __rshift__(self, other):
        if self.is_source:
            return compose(self, _as_stages(other))
        return Chain((self, *_as_stages(other)))

    def __rrshift__(self, other):
        if isinstance(other, Processor) and other.is_source:
            return compose(other, [self])
        return NotImplemented


class Source(Processor):
    is_source = True

    def emit(self) -> Iterator[Event]:
        raise NotImplementedError

    def step(self, event: Event) -> list[Event]:
        raise TypeError(f"{self.name} is a source and takes no input events")


@dataclass(frozen=True)
class Chain:
    """Stages composed without a source yet (``A >> B``)."""

    stages: tuple[Processor, ...]

    def __rshift__(self, other) -> "Chain":
        return Chain(self.stages + tuple(_as_stages(other)))


@dataclass(frozen=True)
class Pipeline:
    source: Source
    stages: tuple[Processor, ...] = ()

    def __rshift__(self, other) -> "Pipeline":
        return compose(self, _as_stages(other))

    def processors(self) -> list[Processor]:
        return [self.source, *self.stages]

    def expr(self) -> str:
        return " >> ".join(p.expr() for p in self.processors())

    def run(self, record: provenance.ProvenanceRecord | None = None) -> list[Event]:
        """Execute stage by stage and return the full sink.

        Stage steps go to ``record`` (or the active record, if any).
        """
        source = self.source.fresh()
        stages = [s.fresh() for s in self.stages]
        events = list(source.emit())
        _check_finite(source, events)
        for stage in stages:
            events = stage.process(events)
            _check_finite(stage, events)
        rec = record if record is not None else provenance.active_record()
        if rec is not None:
            for proc in [source, *stages]:
                for extra in proc.lineage():
                    rec.append(extra)
                rec.append(provenance.stage_step(proc.expr(), proc.namespace, proc.name))
        return events

    def stream(self) -> Iterator[Event]:
        """Tick-by-tick execution; yields the same sink as :meth:`run`."""
        source = self.source.fresh()
        stages = [s.fresh() for s in self.stages]
        for ev in source.emit():
            batch = [ev]
            _check_finite(source, batch)
            for stage in stages:
                batch = [out for e in batch for out in stage.step(e)]
                _check_finite(stage, batch)
            yield from batch

    def emit(self) -> Iterator[Event]:
        return iter(self.run())


def _as_stages(obj) -> list[Processor]:
    if isinstance(obj, Chain):
        return list(obj.stages)
    if isinstance(obj, Processor):
        if obj.is_source:
            raise NotASource(f"{obj.name} is a source and cannot be used as a stage")
        return [obj]
    if isinstance(obj, (list, tuple)):
        return [s for o in obj for s in _as_stages(o)]
    raise TypeError(f"cannot compose {obj!r}")


def compose(source: Source | Pipeline, stages: Iterable[Processor | Chain] = ()) -> Pipeline:
    """Bind a source to an ordered list of stages. Nothing runs yet."""
    extra = tuple(_as_stages(list(stages)))
    if isinstance(source, Pipeline):
        return Pipeline(source.source, source.stages + extra)
    if not (isinstance(source, Processor) and source.is_source):
        raise NotASource(f"{source!r} cannot emit events")
    return Pipeline(source, extra)


def run(p: Pipeline, record: provenance.ProvenanceRecord | None = None) -> list[Event]:
    return p.run(record)


def _check_finite(proc: Processor, events: Sequence[Event]) -> None:
    isfinite = math.isfinite
    for ev in events:
        for key, value in ev.fields.items():
            if not isfinite(value):
                raise NonFiniteValue(proc.expr(), ev.timestamp, key)


# -- helpers for field-appending stages --------------------------------------


def column(events: Sequence[Event], name: str, stage: Processor) -> np.ndarray:
    try:
        return np.fromiter((ev.fields[name] for ev in events), dtype=np.float64, count=len(events))
    except KeyError:
        raise MissingField(stage.expr(), name) from None


def require(event: Event, name: str, stage: Processor) -> float:
    try:
        return event.fields[name]
    except KeyError:
        raise MissingField(stage.expr(), name) from None


def check_new(event: Event, names: Iterable[str], stage: Processor) -> None:
    for name in names:
        if name in event.fields:
            raise FieldCollision(f"stage {stage.expr()!r} would overwrite upstream field {name!r}")


def append_columns(events: Sequence[Event], columns: Mapping[str, Sequence[float]],
                   stage: Processor, tags: Mapping[str, Sequence[str]] | None = None) -> list[Event]:
    if not events:
        return []
    check_new(events[0], columns, stage)
    names = list(columns)
    cols = [np.asarray(columns[n]).tolist() for n in names]
    tag_names = list(tags) if tags else []
    tag_cols = [list(tags[n]) for n in tag_names] if tags else []
    out = []
    for i, ev in enumerate(events):
        values = {n: c[i] for n, c in zip(names, cols)}
        new_tags = {n: c[i] for n, c in zip(tag_names, tag_cols)} if tag_names else None
        out.append(Event(ev.timestamp, {**ev.fields, **values},
                         {**ev.tags, **new_tags} if new_tags else ev.tags))
    return out


def to_date(value: date | str) -> date:
    """Accept ``date`` objects and ISO dates with or without zero padding."""
    if isinstance(value, date):
        return value
    parts = str(value).strip().split("-")
    if len(parts) != 3 or not all(p.isdigit() for p in parts):
        raise ValueError(f"not a YYYY-MM-DD date: {value!r}")
    return date(int(parts[0]), int(parts[1]), int(parts[2]))


def price_field(event: Event) -> str:
    """The first field on an event: the raw price emitted by the source."""
    for name in event.fields:
        return name
    raise MissingField("price lookup", "<any price field>")


def latest_field(event: Event, exclude: Iterable[str] = ()) -> str:
    """The most recently appended field not in ``exclude``."""
    skip = set(exclude)
    for name in reversed(list(event.fields)):
        if name not in skip:
            return name
    raise MissingField("field lookup", "<a filter output>")

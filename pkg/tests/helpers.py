from datetime import date, timedelta

from bcom.stream import Event, Source


class Values(Source):
    """Emits given columns as fields, one event per day from 2000-01-01."""

    name = "values"

    def __init__(self, **columns) -> None:
        self.columns = {k: [float(v) for v in vs] for k, vs in columns.items()}
        super().__init__()

    def emit(self):
        n = len(next(iter(self.columns.values()), []))
        start = date(2000, 1, 1)
        for i in range(n):
            yield Event(start + timedelta(days=i), {k: vs[i] for k, vs in self.columns.items()})


class Tagged(Source):
    """Emits a price field plus a preset signal tag per event."""

    name = "tagged"

    def __init__(self, prices, signals) -> None:
        self.prices = [float(p) for p in prices]
        self.signals = list(signals)
        super().__init__()

    def emit(self):
        start = date(2000, 1, 1)
        for i, (p, s) in enumerate(zip(self.prices, self.signals)):
            yield Event(start + timedelta(days=i), {"price": p}, {"signal": s})


def field(events, name):
    return [ev.fields[name] for ev in events]


def tags(events, name):
    return [ev.tags[name] for ev in events]

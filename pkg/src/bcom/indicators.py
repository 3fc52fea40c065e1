"""Moving-average filters as one-pass streaming stages, plus direct-form oracles."""

from __future__ import annotations

import math
from typing import Sequence

from . import kernels
from .errors import InvalidAlpha, InvalidWindow
from .stream import Event, Processor, append_columns, check_new, column, price_field, require

DEFAULT_EWMA_ALPHA = 0.05


def _check_window(m_prime) -> int:
    if isinstance(m_prime, bool) or not isinstance(m_prime, int) or m_prime < 1:
        raise InvalidWindow(f"window size must be an integer >= 1, got {m_prime!r}")
    return m_prime


def _check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= 1.0):
        raise InvalidAlpha(f"alpha must lie in (0, 1], got {alpha!r}")
    return alpha


class Filter(Processor):
    """Reads one input field and appends one smoothed field.

    With no input field given, the filter smooths the event's first field,
    which is the raw price from the source.
    """

    namespace = "bcom.indicators"

    def __init__(self, input: str | None = None, output: str | None = None, **params) -> None:
        self.input = input
        self.output = output or self.name
        super().__init__(**params, input=input, output=output)

    def make_kernel(self):
        raise NotImplementedError

    def reset(self) -> None:
        self._kernel = self.make_kernel()
        self._src = self.input

    def process(self, events: list[Event]) -> list[Event]:
        if not events:
            return []
        src = self._src or price_field(events[0])
        xs = column(events, src, self)
        return append_columns(events, {self.output: self._kernel.push_many(xs)}, self)

    def step(self, event: Event) -> list[Event]:
        if self._src is None:
            self._src = price_field(event)
        check_new(event, (self.output,), self)
        x = require(event, self._src, self)
        return [event.extend({self.output: self._kernel.push(x)})]


class CMA(Filter):
    name = "cma"

    def make_kernel(self):
        return kernels.CumulativeMean()


class RMA(Filter):
    name = "rma"

    def __init__(self, m: int, input: str | None = None, output: str | None = None) -> None:
        self.m = _check_window(m)
        super().__init__(input, output, m=m)

    def make_kernel(self):
        return kernels.RollingMean(self.m)


class WMA(Filter):
    name = "wma"

    def __init__(self, m: int, input: str | None = None, output: str | None = None) -> None:
        self.m = _check_window(m)
        super().__init__(input, output, m=m)

    def make_kernel(self):
        return kernels.WeightedMean(self.m)


class EWMA(Filter):
    name = "ewma"

    def __init__(self, alpha: float = DEFAULT_EWMA_ALPHA, input: str | None = None,
                 output: str | None = None) -> None:
        self.alpha = _check_alpha(alpha)
        super().__init__(input, output, alpha=self.alpha)

    def make_kernel(self):
        return kernels.ExpMean(self.alpha)


def cma(input: str | None = None, output: str | None = None) -> CMA:
    return CMA(input, output)


def rma(m_prime: int, input: str | None = None, output: str | None = None) -> RMA:
    return RMA(m_prime, input, output)


def wma(m_prime: int, input: str | None = None, output: str | None = None) -> WMA:
    return WMA(m_prime, input, output)


def ewma(alpha: float = DEFAULT_EWMA_ALPHA, input: str | None = None, output: str | None = None) -> EWMA:
    return EWMA(alpha, input, output)


def oracle_direct(kind: str, params: dict | None, inputs: Sequence[float]) -> list[float]:
    """Non-recursive reference forms: every output re-traverses its prefix.

    ``kind`` is one of ``cma``, ``rma``, ``wma``, ``ewma-unrolled``. Quadratic
    in the series length; meant for tests.
    """
    params = params or {}
    xs = [float(x) for x in inputs]
    out: list[float] = []
    if kind == "cma":
        for n in range(1, len(xs) + 1):
            out.append(math.fsum(xs[:n]) / n)
    elif kind in ("rma", "wma"):
        m_prime = _check_window(params.get("m", params.get("m_prime")))
        for n in range(1, len(xs) + 1):
            m = min(m_prime, n)
            window = xs[n - m:n]
            if kind == "rma":
                out.append(math.fsum(window) / m)
            else:
                out.append(2.0 / (m * (m + 1)) * math.fsum(i * x for i, x in enumerate(window, start=1)))
    elif kind == "ewma-unrolled":
        alpha = _check_alpha(params.get("alpha", DEFAULT_EWMA_ALPHA))
        beta = 1.0 - alpha
        for n in range(len(xs)):
            terms = [beta ** n * xs[0]]
            terms += [alpha * beta ** (n - k) * xs[k] for k in range(1, n + 1)]
            out.append(math.fsum(terms))
    else:
        raise ValueError(f"unknown filter kind {kind!r}")
    return out

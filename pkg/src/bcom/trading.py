"""Crossover signals and cash/stock portfolio accounting."""

from __future__ import annotations

import enum
import math

import numpy as np

from . import kernels
from .errors import (FieldCollision, InvalidAlphaOrdering, InvalidParameter, MissingField,
                     NonPositivePrice)
from .indicators import _check_alpha
from .stream import (Event, Processor, append_columns, check_new, column, latest_field,
                     price_field, require)

SIGNAL_TAG = "signal"
ORDER_TAG = "order"
PORTFOLIO_FIELDS = ("cash", "shares", "balance", "fitness")


class Signal(str, enum.Enum):
    BUY = "BUY"
    SELL = "SELL"
    NOTHING = "NOTHING"

    @property
    def code(self) -> int:
        return _CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "Signal":
        return _SIGNALS[int(code)]


_CODES = {Signal.NOTHING: kernels.NOTHING, Signal.BUY: kernels.BUY, Signal.SELL: kernels.SELL}
_SIGNALS = {v: k for k, v in _CODES.items()}
_NAMES = {code: sig.value for sig, code in _CODES.items()}


def _signal_names(codes: np.ndarray) -> list[str]:
    return [_NAMES[c] for c in codes.tolist()]


class Maco(Processor):
    """Tags each tick with BUY/SELL/NOTHING from fast curve F and slow curve D.

    The tag on tick t+1 is decided from ticks t-2, t-1, t::

        SELL if D[t-1] > F[t] and D[t-2] <= F[t-1]
        BUY  if D[t-1] < F[t] and D[t-2] >= F[t-1]

    The first three ticks are always NOTHING. By default F is the raw price
    and D the most recently appended filter output (single crossover).
    """

    name = "maco"
    namespace = "bcom.strats.momentum"

    def __init__(self, fast: str | None = None, slow: str | None = None) -> None:
        self.fast = fast
        self.slow = slow
        super().__init__(fast=fast, slow=slow)

    def reset(self) -> None:
        self._cross = kernels.Crossover()
        self._fields: tuple[str, str] | None = None

    def _resolve(self, event: Event) -> tuple[str, str]:
        if self._fields is None:
            fast = self.fast or price_field(event)
            slow = self.slow or latest_field(event, exclude=(fast,))
            self._fields = (fast, slow)
        return self._fields

    def process(self, events: list[Event]) -> list[Event]:
        if not events:
            return []
        fast, slow = self._resolve(events[0])
        codes = self._cross.push_many(column(events, fast, self), column(events, slow, self))
        _check_tag_free(events[0], self)
        return append_columns(events, {}, self, tags={SIGNAL_TAG: _signal_names(codes)})

    def step(self, event: Event) -> list[Event]:
        fast, slow = self._resolve(event)
        _check_tag_free(event, self)
        code = self._cross.push(require(event, fast, self), require(event, slow, self))
        return [event.extend(tags={SIGNAL_TAG: _NAMES[code]})]


def _check_tag_free(event: Event, stage: Processor) -> None:
    if SIGNAL_TAG in event.tags:
        raise FieldCollision(f"stage {stage.expr()!r} would overwrite the upstream {SIGNAL_TAG!r} tag")


class DoubleMaco(Maco):
    """Crossover of a fast EWMA over a slow EWMA of the same price."""

    name = "double_maco"

    def __init__(self, price: str | None = None, fast_alpha: float = 0.2, slow_alpha: float = 0.05,
                 fast_output: str = "ewma_fast", slow_output: str = "ewma_slow") -> None:
        fast_alpha = _check_alpha(fast_alpha)
        slow_alpha = _check_alpha(slow_alpha)
        if slow_alpha > fast_alpha:
            raise InvalidAlphaOrdering(
                f"slow_alpha ({slow_alpha}) must not exceed fast_alpha ({fast_alpha})")
        self.price = price
        self.fast_alpha = fast_alpha
        self.slow_alpha = slow_alpha
        self.fast_output = fast_output
        self.slow_output = slow_output
        Processor.__init__(self, price=price, fast_alpha=fast_alpha, slow_alpha=slow_alpha)

    def reset(self) -> None:
        super().reset()
        self._fast_k = kernels.ExpMean(self.fast_alpha)
        self._slow_k = kernels.ExpMean(self.slow_alpha)
        self._price: str | None = None

    def process(self, events: list[Event]) -> list[Event]:
        if not events:
            return []
        src = self.price or price_field(events[0])
        xs = column(events, src, self)
        f = self._fast_k.push_many(xs)
        d = self._slow_k.push_many(xs)
        codes = self._cross.push_many(f, d)
        _check_tag_free(events[0], self)
        return append_columns(events, {self.fast_output: f, self.slow_output: d}, self,
                              tags={SIGNAL_TAG: _signal_names(codes)})

    def step(self, event: Event) -> list[Event]:
        if self._price is None:
            self._price = self.price or price_field(event)
        check_new(event, (self.fast_output, self.slow_output), self)
        _check_tag_free(event, self)
        x = require(event, self._price, self)
        f = self._fast_k.push(x)
        d = self._slow_k.push(x)
        code = self._cross.push(f, d)
        return [event.extend({self.fast_output: f, self.slow_output: d}, {SIGNAL_TAG: _NAMES[code]})]


class CashStock(Processor):
    """All-in/all-out accounting on one symbol.

    BUY with no position buys ``floor((K - L) / W)`` shares when that is at
    least one; SELL with a position liquidates it. Every executed order costs
    the flat load L. Appends cash, shares, balance and fitness (balance over
    initial cash) and tags the executed order.
    """

    name = "cash_stock"
    namespace = "bcom.strats.portfolio"

    def __init__(self, initial_cash: float = 10000.0, load: float = 0.0, price: str | None = None,
                 signal: str = SIGNAL_TAG) -> None:
        initial_cash = float(initial_cash)
        load = float(load)
        if not (initial_cash > 0 and math.isfinite(initial_cash)):
            raise InvalidParameter(f"initial_cash must be positive, got {initial_cash!r}")
        if not (load >= 0 and math.isfinite(load)):
            raise InvalidParameter(f"load must be non-negative, got {load!r}")
        self.initial_cash = initial_cash
        self.load = load
        self.price = price
        self.signal = signal
        super().__init__(initial_cash=initial_cash, load=load, price=price)

    def reset(self) -> None:
        self._account = kernels.CashStock(self.initial_cash, self.load)
        self._price: str | None = self.price

    def _signal_codes(self, events: list[Event]) -> np.ndarray:
        try:
            return np.array([_CODES[Signal(ev.tags[self.signal])] for ev in events], dtype=np.int8)
        except KeyError:
            raise MissingField(self.expr(), self.signal) from None

    def process(self, events: list[Event]) -> list[Event]:
        if not events:
            return []
        src = self._price or price_field(events[0])
        prices = column(events, src, self)
        bad = np.flatnonzero(prices <= 0.0)
        if bad.size:
            i = int(bad[0])
            raise NonPositivePrice(self.expr(), events[i].timestamp, float(prices[i]))
        orders, cash, shares, balance, fitness = self._account.push_many(self._signal_codes(events), prices)
        return append_columns(
            events,
            {"cash": cash, "shares": shares, "balance": balance, "fitness": fitness},
            self,
            tags={ORDER_TAG: _signal_names(orders)},
        )

    def step(self, event: Event) -> list[Event]:
        if self._price is None:
            self._price = price_field(event)
        check_new(event, PORTFOLIO_FIELDS, self)
        w = require(event, self._price, self)
        if w <= 0.0:
            raise NonPositivePrice(self.expr(), event.timestamp, w)
        code = self._signal_codes([event])[0]
        order, cash, shares, balance, fitness = self._account.push(int(code), w)
        return [event.extend({"cash": cash, "shares": float(shares), "balance": balance, "fitness": fitness},
                             {ORDER_TAG: _NAMES[order]})]


def maco(fast: str | None = None, slow: str | None = None) -> Maco:
    return Maco(fast, slow)


def double_maco(price: str | None = None, fast_alpha: float = 0.2, slow_alpha: float = 0.05) -> DoubleMaco:
    return DoubleMaco(price, fast_alpha, slow_alpha)


def cash_stock(initial_cash: float = 10000.0, load: float = 0.0) -> CashStock:
    return CashStock(initial_cash, load)


def is_profitable(final_fitness: float) -> bool:
    return final_fitness > 1.0

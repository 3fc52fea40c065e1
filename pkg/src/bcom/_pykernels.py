"""Pure-Python kernels.

Every class here has a twin in ``_ckernels.pyx`` with the same names, the same
state layout and the same floating point operation order, so both backends
produce bit-identical output. Keep them in lockstep.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

M64 = 0xFFFFFFFFFFFFFFFF
PCG_MULT = 6364136223846793005
TWO_PI = 6.283185307179586
INV_2_32 = 2.3283064365386963e-10  # 2**-32
RESYNC_EVERY = 1 << 16
RESYNC_EVERY_TICKS = RESYNC_EVERY

NOTHING = 0
BUY = 1
SELL = -1


class Pcg32:
    """PCG-XSH-RR 64/32 generator (O'Neill's ``pcg32_srandom_r`` seeding)."""

    def __init__(self, seed: int, stream: int = 0) -> None:
        self.inc = ((stream << 1) | 1) & M64
        self.state = 0
        self.next_u32()
        self.state = (self.state + (seed & M64)) & M64
        self.next_u32()

    def next_u32(self) -> int:
        old = self.state
        self.state = (old * PCG_MULT + self.inc) & M64
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & 0xFFFFFFFF

    def next_double(self) -> float:
        return self.next_u32() * INV_2_32

    def next_normal(self) -> float:
        # Box-Muller, cosine branch only: two draws per normal
        u1 = (self.next_u32() + 1) * INV_2_32
        u2 = self.next_u32() * INV_2_32
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(TWO_PI * u2)

    def uniforms(self, n: int) -> np.ndarray:
        return np.array([self.next_double() for _ in range(n)], dtype=np.float64)

    def normals(self, n: int) -> np.ndarray:
        return np.array([self.next_normal() for _ in range(n)], dtype=np.float64)


class BrownianWalk:
    """Arithmetic Wiener walk, one unit step per push; the first value is s0."""

    def __init__(self, s0: float, sigma: float, seed: int, stream: int) -> None:
        self.s0 = s0
        self.sigma = sigma
        self.rng = Pcg32(seed, stream)
        self.value = s0
        self.started = False

    def push(self) -> float:
        if not self.started:
            self.started = True
            self.value = self.s0
        else:
            self.value = self.value + self.sigma * self.rng.next_normal()
        return self.value

    def take(self, n: int) -> np.ndarray:
        return np.array([self.push() for _ in range(n)], dtype=np.float64)


class CumulativeMean:
    def __init__(self) -> None:
        self.n = 0
        self.current = 0.0

    def push(self, x: float) -> float:
        self.n += 1
        self.current = (x + (self.n - 1) * self.current) / self.n
        return self.current

    def push_many(self, xs) -> np.ndarray:
        push = self.push
        return np.array([push(x) for x in _floats(xs)], dtype=np.float64)


class RollingMean:
    def __init__(self, m: int) -> None:
        self.m = m
        self.buf = [0.0] * m
        self.head = 0  # index of the oldest sample once the buffer is full
        self.n = 0
        self.total = 0.0

    def push(self, x: float) -> float:
        m = self.m
        if self.n < m:
            self.buf[self.n] = x
            self.n += 1
            self.total = self.total + x
            return self.total / self.n
        old = self.buf[self.head]
        self.buf[self.head] = x
        self.head = (self.head + 1) % m
        self.n += 1
        if self.n % RESYNC_EVERY == 0:
            self._resync()
        else:
            self.total = self.total + (x - old)
        return self.total / m

    def _resync(self) -> None:
        s = 0.0
        for i in range(self.m):
            s = s + self.buf[(self.head + i) % self.m]
        self.total = s

    def push_many(self, xs) -> np.ndarray:
        push = self.push
        return np.array([push(x) for x in _floats(xs)], dtype=np.float64)


class WeightedMean:
    """Linearly weighted window mean; newest weight m, oldest weight 1."""

    def __init__(self, m: int) -> None:
        self.m = m
        self.buf = [0.0] * m
        self.head = 0
        self.n = 0
        self.total = 0.0
        self.num = 0.0

    def push(self, x: float) -> float:
        m = self.m
        if self.n < m:
            k = self.n + 1
            self.buf[self.n] = x
            self.n = k
            self.num = self.num + k * x
            self.total = self.total + x
            return self.num / (k * (k + 1) // 2)
        old = self.buf[self.head]
        self.buf[self.head] = x
        self.head = (self.head + 1) % m
        self.n += 1
        if self.n % RESYNC_EVERY == 0:
            self._resync()
        else:
            self.num = self.num - self.total + m * x
            self.total = self.total + (x - old)
        return self.num / (m * (m + 1) // 2)

    def _resync(self) -> None:
        s = 0.0
        w = 0.0
        for i in range(self.m):
            v = self.buf[(self.head + i) % self.m]
            s = s + v
            w = w + (i + 1) * v
        self.total = s
        self.num = w

    def push_many(self, xs) -> np.ndarray:
        push = self.push
        return np.array([push(x) for x in _floats(xs)], dtype=np.float64)


class ExpMean:
    def __init__(self, alpha: float) -> None:
        self.alpha = alpha
        self.beta = 1.0 - alpha
        self.started = False
        self.current = 0.0

    def push(self, x: float) -> float:
        if self.started:
            self.current = self.alpha * x + self.beta * self.current
        else:
            self.started = True
            self.current = x
        return self.current

    def push_many(self, xs) -> np.ndarray:
        push = self.push
        return np.array([push(x) for x in _floats(xs)], dtype=np.float64)


class Crossover:
    """Signal for tick j decided from ticks j-3, j-2, j-1."""

    def __init__(self) -> None:
        self.seen = 0
        self.f1 = 0.0  # F[j-1]
        self.f2 = 0.0  # F[j-2]
        self.d1 = 0.0  # D[j-1]
        self.d2 = 0.0  # D[j-2]
        self.d3 = 0.0  # D[j-3]

    def push(self, f: float, d: float) -> int:
        sig = NOTHING
        if self.seen >= 3:
            # t = j-1: F_t = f1, F_{t-1} = f2, D_{t-1} = d2, D_{t-2} = d3
            if self.d2 > self.f1 and self.d3 <= self.f2:
                sig = SELL
            elif self.d2 < self.f1 and self.d3 >= self.f2:
                sig = BUY
        self.f2 = self.f1
        self.f1 = f
        self.d3 = self.d2
        self.d2 = self.d1
        self.d1 = d
        self.seen += 1
        return sig

    def push_many(self, fs, ds) -> np.ndarray:
        push = self.push
        return np.array([push(f, d) for f, d in zip(_floats(fs), _floats(ds))], dtype=np.int8)


class CashStock:
    """All-in/all-out single-symbol account with a flat per-order load."""

    def __init__(self, k0: float, load: float) -> None:
        self.k0 = k0
        self.load = load
        self.cash = k0
        self.shares = 0

    def push(self, sig: int, price: float):
        order = NOTHING
        load = self.load
        if sig == BUY and self.shares == 0:
            n = math.floor((self.cash - load) / price)
            if n >= 1 and self.cash - n * price - load < 0.0:
                n -= 1
            if n >= 1:
                self.shares = n
                self.cash = self.cash - n * price - load
                order = BUY
        elif sig == SELL and self.shares > 0:
            proceeds = self.cash + self.shares * price - load
            if proceeds >= 0.0:
                self.cash = proceeds
                self.shares = 0
                order = SELL
        balance = self.cash + self.shares * price
        return order, self.cash, self.shares, balance, balance / self.k0

    def push_many(self, sigs, prices):
        n = len(prices)
        orders = np.zeros(n, dtype=np.int8)
        cash = np.empty(n, dtype=np.float64)
        shares = np.empty(n, dtype=np.float64)
        balance = np.empty(n, dtype=np.float64)
        fitness = np.empty(n, dtype=np.float64)
        push = self.push
        for i, (s, p) in enumerate(zip(np.asarray(sigs).tolist(), _floats(prices))):
            orders[i], cash[i], shares[i], balance[i], fitness[i] = push(s, p)
        return orders, cash, shares, balance, fitness


def _floats(xs) -> list:
    if isinstance(xs, np.ndarray):
        return xs.astype(np.float64, copy=False).tolist()
    return [float(x) for x in xs]

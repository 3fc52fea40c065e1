# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; twin of ``_pykernels.py`` (same names, same operation order)."""

from libc.math cimport sqrt, log, cos, floor
from libc.stdint cimport uint64_t, uint32_t, int64_t

import numpy as np

BACKEND = "cython"

cdef double TWO_PI = 6.283185307179586
cdef double INV_2_32 = 2.3283064365386963e-10
cdef uint64_t PCG_MULT = 6364136223846793005ULL
cdef int64_t RESYNC_EVERY = 1 << 16
RESYNC_EVERY_TICKS = RESYNC_EVERY

NOTHING = 0
BUY = 1
SELL = -1


cdef class Pcg32:
    cdef public uint64_t state
    cdef public uint64_t inc

    def __init__(self, seed, stream=0):
        cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
        cdef uint64_t q = <uint64_t>(int(stream) & 0xFFFFFFFFFFFFFFFF)
        self.inc = (q << 1) | 1
        self.state = 0
        self._next()
        self.state += s
        self._next()

    cdef inline uint32_t _next(self) noexcept:
        cdef uint64_t old = self.state
        self.state = old * PCG_MULT + self.inc
        cdef uint32_t xorshifted = <uint32_t>(((old >> 18) ^ old) >> 27)
        cdef uint32_t rot = <uint32_t>(old >> 59)
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31))

    cdef inline double _normal(self) noexcept:
        cdef double u1 = (<uint64_t>self._next() + 1) * INV_2_32
        cdef double u2 = self._next() * INV_2_32
        return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)

    def next_u32(self):
        return self._next()

    def next_double(self):
        return self._next() * INV_2_32

    def next_normal(self):
        return self._normal()

    def uniforms(self, Py_ssize_t n):
        out = np.empty(n, dtype=np.float64)
        cdef double[::1] o = out
        cdef Py_ssize_t i
        for i in range(n):
            o[i] = self._next() * INV_2_32
        return out

    def normals(self, Py_ssize_t n):
        out = np.empty(n, dtype=np.float64)
        cdef double[::1] o = out
        cdef Py_ssize_t i
        for i in range(n):
            o[i] = self._normal()
        return out


cdef class BrownianWalk:
    cdef public double s0
    cdef public double sigma
    cdef public double value
    cdef public bint started
    cdef Pcg32 rng

    def __init__(self, double s0, double sigma, seed, stream):
        self.s0 = s0
        self.sigma = sigma
        self.rng = Pcg32(seed, stream)
        self.value = s0
        self.started = False

    cdef inline double _push(self) noexcept:
        if not self.started:
            self.started = True
            self.value = self.s0
        else:
            self.value = self.value + self.sigma * self.rng._normal()
        return self.value

    def push(self):
        return self._push()

    def take(self, Py_ssize_t n):
        out = np.empty(n, dtype=np.float64)
        cdef double[::1] o = out
        cdef Py_ssize_t i
        for i in range(n):
            o[i] = self._push()
        return out


cdef class CumulativeMean:
    cdef public int64_t n
    cdef public double current

    def __init__(self):
        self.n = 0
        self.current = 0.0

    cdef inline double _push(self, double x) noexcept:
        self.n += 1
        self.current = (x + <double>(self.n - 1) * self.current) / <double>self.n
        return self.current

    def push(self, double x):
        return self._push(x)

    def push_many(self, xs):
        cdef const double[::1] v = np.ascontiguousarray(xs, dtype=np.float64)
        out = np.empty(v.shape[0], dtype=np.float64)
        cdef double[::1] o = out
        cdef Py_ssize_t i
        for i in range(v.shape[0]):
            o[i] = self._push(v[i])
        return out


cdef class RollingMean:
    cdef public int64_t m
    cdef public int64_t head
    cdef public int64_t n
    cdef public double total
    cdef double[::1] buf

    def __init__(self, int64_t m):
        self.m = m
        self.buf = np.zeros(m, dtype=np.float64)
        self.head = 0
        self.n = 0
        self.total = 0.0

    cdef inline double _push(self, double x) noexcept:
        cdef double old
        if self.n < self.m:
            self.buf[self.n] = x
            self.n += 1
            self.total = self.total + x
            return self.total / <double>self.n
        old = self.buf[self.head]
        self.buf[self.head] = x
        self.head = (self.head + 1) % self.m
        self.n += 1
        if self.n % RESYNC_EVERY == 0:
            self._resync()
        else:
            self.total = self.total + (x - old)
        return self.total / <double>self.m

    cdef void _resync(self) noexcept:
        cdef double s = 0.0
        cdef int64_t i
        for i in range(self.m):
            s = s + self.buf[(self.head + i) % self.m]
        self.total = s

    def push(self, double x):
        return self._push(x)

    def push_many(self, xs):
        cdef const double[::1] v = np.ascontiguousarray(xs, dtype=np.float64)
        out = np.empty(v.shape[0], dtype=np.float64)
        cdef double[::1] o = out
        cdef Py_ssize_t i
        for i in range(v.shape[0]):
            o[i] = self._push(v[i])
        return out


cdef class WeightedMean:
    cdef public int64_t m
    cdef public int64_t head
    cdef public int64_t n
    cdef public double total
    cdef public double num
    cdef double[::1] buf

    def __init__(self, int64_t m):
        self.m = m
        self.buf = np.zeros(m, dtype=np.float64)
        self.head = 0
        self.n = 0
        self.total = 0.0
        self.num = 0.0

    cdef inline double _push(self, double x) noexcept:
        cdef int64_t k
        cdef double old
        if self.n < self.m:
            k = self.n + 1
            self.buf[self.n] = x
            self.n = k
            self.num = self.num + <double>k * x
            self.total = self.total + x
            return self.num / <double>(k * (k + 1) // 2)
        old = self.buf[self.head]
        self.buf[self.head] = x
        self.head = (self.head + 1) % self.m
        self.n += 1
        if self.n % RESYNC_EVERY == 0:
            self._resync()
        else:
            self.num = self.num - self.total + <double>self.m * x
            self.total = self.total + (x - old)
        return self.num / <double>(self.m * (self.m + 1) // 2)

    cdef void _resync(self) noexcept:
        cdef double s = 0.0
        cdef double w = 0.0
        cdef double v
        cdef int64_t i
        for i in range(self.m):
            v = self.buf[(self.head + i) % self.m]
            s = s + v
            w = w + <double>(i + 1) * v
        self.total = s
        self.num = w

    def push(self, double x):
        return self._push(x)

    def push_many(self, xs):
        cdef const double[::1] v = np.ascontiguousarray(xs, dtype=np.float64)
        out = np.empty(v.shape[0], dtype=np.float64)
        cdef double[::1] o = out
        cdef Py_ssize_t i
        for i in range(v.shape[0]):
            o[i] = self._push(v[i])
        return out


cdef class ExpMean:
    cdef public double alpha
    cdef public double beta
    cdef public bint started
    cdef public double current

    def __init__(self, double alpha):
        self.alpha = alpha
        self.beta = 1.0 - alpha
        self.started = False
        self.current = 0.0

    cdef inline double _push(self, double x) noexcept:
        if self.started:
            self.current = self.alpha * x + self.beta * self.current
        else:
            self.started = True
            self.current = x
        return self.current

    def push(self, double x):
        return self._push(x)

    def push_many(self, xs):
        cdef const double[::1] v = np.ascontiguousarray(xs, dtype=np.float64)
        out = np.empty(v.shape[0], dtype=np.float64)
        cdef double[::1] o = out
        cdef Py_ssize_t i
        for i in range(v.shape[0]):
            o[i] = self._push(v[i])
        return out


cdef class Crossover:
    cdef public int64_t seen
    cdef public double f1, f2, d1, d2, d3

    def __init__(self):
        self.seen = 0
        self.f1 = 0.0
        self.f2 = 0.0
        self.d1 = 0.0
        self.d2 = 0.0
        self.d3 = 0.0

    cdef inline int _push(self, double f, double d) noexcept:
        cdef int sig = 0
        if self.seen >= 3:
            if self.d2 > self.f1 and self.d3 <= self.f2:
                sig = -1
            elif self.d2 < self.f1 and self.d3 >= self.f2:
                sig = 1
        self.f2 = self.f1
        self.f1 = f
        self.d3 = self.d2
        self.d2 = self.d1
        self.d1 = d
        self.seen += 1
        return sig

    def push(self, double f, double d):
        return self._push(f, d)

    def push_many(self, fs, ds):
        cdef const double[::1] fv = np.ascontiguousarray(fs, dtype=np.float64)
        cdef const double[::1] dv = np.ascontiguousarray(ds, dtype=np.float64)
        cdef Py_ssize_t n = min(fv.shape[0], dv.shape[0])
        out = np.zeros(n, dtype=np.int8)
        cdef signed char[::1] o = out
        cdef Py_ssize_t i
        for i in range(n):
            o[i] = <signed char>self._push(fv[i], dv[i])
        return out


cdef class CashStock:
    cdef public double k0
    cdef public double load
    cdef public double cash
    cdef public int64_t shares

    def __init__(self, double k0, double load):
        self.k0 = k0
        self.load = load
        self.cash = k0
        self.shares = 0

    cdef inline int _push(self, int sig, double price) noexcept:
        cdef int order = 0
        cdef int64_t n
        cdef double proceeds
        if sig == 1 and self.shares == 0:
            n = <int64_t>floor((self.cash - self.load) / price)
            if n >= 1 and self.cash - <double>n * price - self.load < 0.0:
                n -= 1
            if n >= 1:
                self.shares = n
                self.cash = self.cash - <double>n * price - self.load
                order = 1
        elif sig == -1 and self.shares > 0:
            proceeds = self.cash + <double>self.shares * price - self.load
            if proceeds >= 0.0:
                self.cash = proceeds
                self.shares = 0
                order = -1
        return order

    def push(self, int sig, double price):
        cdef int order = self._push(sig, price)
        cdef double balance = self.cash + <double>self.shares * price
        return order, self.cash, self.shares, balance, balance / self.k0

    def push_many(self, sigs, prices):
        cdef const double[::1] pv = np.ascontiguousarray(prices, dtype=np.float64)
        cdef const signed char[::1] sv = np.ascontiguousarray(sigs, dtype=np.int8)
        cdef Py_ssize_t n = pv.shape[0]
        orders = np.zeros(n, dtype=np.int8)
        cash = np.empty(n, dtype=np.float64)
        shares = np.empty(n, dtype=np.float64)
        balance = np.empty(n, dtype=np.float64)
        fitness = np.empty(n, dtype=np.float64)
        cdef signed char[::1] oo = orders
        cdef double[::1] oc = cash, oq = shares, ob = balance, of = fitness
        cdef Py_ssize_t i
        cdef double b
        for i in range(n):
            oo[i] = <signed char>self._push(sv[i], pv[i])
            b = self.cash + <double>self.shares * pv[i]
            oc[i] = self.cash
            oq[i] = <double>self.shares
            ob[i] = b
            of[i] = b / self.k0
        return orders, cash, shares, balance, fitness

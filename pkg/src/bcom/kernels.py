"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
twin is used. Set ``BCOM_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("BCOM_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend  # type: ignore[no-redef]
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend or python_backend

BACKEND: str = _active.BACKEND
NOTHING, BUY, SELL = 0, 1, -1

Pcg32 = _active.Pcg32
BrownianWalk = _active.BrownianWalk
CumulativeMean = _active.CumulativeMean
RollingMean = _active.RollingMean
WeightedMean = _active.WeightedMean
ExpMean = _active.ExpMean
Crossover = _active.Crossover
CashStock = _active.CashStock


def backends() -> dict:
    """All importable backends by name."""
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out

"""Kernel backend selection: compiled Cython extension when built, numpy
fallback otherwise.

Set ``MEMNET_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and the parity tests); :func:`use` switches backends at runtime.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

__all__ = ["active", "use", "available", "backend_name", "HAVE_COMPILED"]

HAVE_COMPILED = _compiled is not None

if HAVE_COMPILED and not os.environ.get("MEMNET_PURE_PYTHON"):
    _active = _compiled
else:
    _active = _kernels_py


def active():
    """The module providing the kernel functions currently in use."""
    return _active


def backend_name() -> str:
    return _active.IMPLEMENTATION


def available() -> dict:
    """Mapping of backend name to module for every importable backend."""
    backends = {"python": _kernels_py}
    if _compiled is not None:
        backends["cython"] = _compiled
    return backends


def use(name: str) -> None:
    """Switch the active backend ('cython' or 'python')."""
    global _active
    backends = available()
    if name not in backends:
        raise ValueError(f"kernel backend {name!r} not available (have {sorted(backends)})")
    _active = backends[name]

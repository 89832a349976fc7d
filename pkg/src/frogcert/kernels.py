"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
kernels are.  Setting ``FROGCERT_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("FROGCERT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
KeySet = _impl.KeySet
walk_batch = _impl.walk_batch
island_batch = _impl.island_batch
STATUS_RADIUS = _kernels_py.STATUS_RADIUS
STATUS_TMAX = _kernels_py.STATUS_TMAX


def backend(name: str):
    """The kernel module called ``name`` ("python" or "cython")."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    out = ["python"]
    try:
        backend("cython")
    except ImportError:
        pass
    else:
        out.append("cython")
    return out

"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
reference takes over. Both expose ``prepare``, ``advance`` and
``absorb_row`` with identical semantics and random-draw order.
"""

from __future__ import annotations

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

default = _compiled if _compiled is not None else _pykernels


def get(name: str | None = None):
    if name is None:
        return default
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


NONE, SPONTANEOUS, FORCED = _pykernels.NONE, _pykernels.SPONTANEOUS, _pykernels.FORCED

"""Hot-loop kernels with a compiled core and a pure-Python fallback.

The compiled extension (``_native``, built from Cython) is preferred when
importable; otherwise the pure-Python twin (``_py``) is used. Both expose
the same functions with identical numeric behavior. Set ``LEADS_KIT_PURE=1``
to force the fallback, e.g. to benchmark or debug.
"""

from __future__ import annotations

import os

from . import _py

if os.environ.get("LEADS_KIT_PURE", "0") not in ("", "0"):
    _impl = _py
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _py

BACKEND: str = "pure" if _impl is _py else "native"

compress_round = _impl.compress_round
compress_extend = _impl.compress_extend
dropout_keep = _impl.dropout_keep
haversine_steps = _impl.haversine_steps

EARTH_RADIUS_KM = _py.EARTH_RADIUS_KM

__all__ = [
    "BACKEND",
    "EARTH_RADIUS_KM",
    "compress_round",
    "compress_extend",
    "dropout_keep",
    "haversine_steps",
    "backends",
]


def backends() -> dict[str, object]:
    """Importable backends by name (for tests and benchmarks)."""
    found: dict[str, object] = {"pure": _py}
    try:
        from . import _native

        found["native"] = _native
    except ImportError:
        pass
    return found

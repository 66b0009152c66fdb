"""Kernel backend selection.

The compiled extension is preferred when importable; POSETFORGE_PURE=1
forces the pure-Python bitset fallback.  Both backends expose the same
three functions over flat relation matrices.
"""

import os

from . import purepy

if os.environ.get("POSETFORGE_PURE") == "1":
    _backend = purepy
else:
    try:
        from . import _core as _backend  # type: ignore[attr-defined]
    except ImportError:
        _backend = purepy

BACKEND = "pure" if _backend is purepy else "compiled"

check_strict = _backend.check_strict
close_strict = _backend.close_strict
automorphisms = _backend.automorphisms

__all__ = ["BACKEND", "check_strict", "close_strict", "automorphisms", "purepy"]

"""Kernel selection: compiled extension when available, NumPy fallback otherwise.

Set FAIRPATH_NO_EXT=1 to force the fallback (the benchmark uses this to
compare both). Both implementations are contractually bit-identical; a
dedicated test compares them element-wise.
"""

from __future__ import annotations

import os

from . import reference

IMPLEMENTATION = "python"
_impl = reference

if os.environ.get("FAIRPATH_NO_EXT") != "1":
    try:
        from . import _speedups  # type: ignore[attr-defined]

        _impl = _speedups
        IMPLEMENTATION = "cython"
    except ImportError:
        pass

gower_knn = _impl.gower_knn
confusion_sweep = _impl.confusion_sweep


def available_implementations() -> dict:
    """Importable kernel modules keyed by name (for tests and benchmarks)."""
    impls = {"python": reference}
    try:
        from . import _speedups  # type: ignore[attr-defined]

        impls["cython"] = _speedups
    except ImportError:
        pass
    return impls

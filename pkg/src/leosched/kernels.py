"""Kernel dispatch: the compiled extension when importable, else pure Python.

``BACKEND`` names the active implementation. ``use_backend`` switches at
runtime (benchmarks and equivalence tests use it); both backends return
identical results.
"""

from __future__ import annotations

import logging

from . import _kernels_py

log = logging.getLogger(__name__)

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on build
    _compiled = None
    log.debug("compiled kernels unavailable; using pure-Python fallback")

_IMPLS = {"python": _kernels_py}
if _compiled is not None:
    _IMPLS["compiled"] = _compiled

BACKEND = "compiled" if _compiled is not None else "python"
_active = _IMPLS[BACKEND]


def available_backends() -> list[str]:
    return sorted(_IMPLS)


def use_backend(name: str) -> None:
    global BACKEND, _active
    if name not in _IMPLS:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    BACKEND = name
    _active = _IMPLS[name]


def dtw_distance(a, b) -> float:
    return float(_active.dtw_distance(a, b))


def dtw_many(a, cands):
    return _active.dtw_many(a, cands)


def build_tree(X, y, samples, n_classes, max_depth, min_samples_split, max_features, seed):
    return _active.build_tree(X, y, samples, n_classes, max_depth, min_samples_split, max_features, seed)

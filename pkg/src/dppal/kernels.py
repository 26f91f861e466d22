"""Backend selection for the hot numeric kernels.

The package ships two interchangeable implementations of its inner
loops: a numba-jitted one (``_kernels_nb``) and a pure-numpy one
(``_kernels_np``).  The active backend is chosen once at import time:

* ``DPPAL_NUMBA=0`` (also ``false``/``off``/``no``) forces the numpy path;
* otherwise numba is used when importable, numpy if the import fails.

Both backends produce identical feature ids and numerically equivalent
floats (same-path runs are bit-reproducible; cross-path differences are
summation-order rounding only).  ``benchmarks/bench_kernels.py`` times
the two side by side.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_np

__all__ = [
    "active_backend",
    "available_backends",
    "arc_feature_ids",
    "score_arcs",
    "score_arcs_masked",
    "sgd_epochs",
    "N_TEMPLATES",
]

N_TEMPLATES = _kernels_np.N_TEMPLATES


def _numba_disabled() -> bool:
    return os.environ.get("DPPAL_NUMBA", "").strip().lower() in {"0", "false", "off", "no"}


def _load_numba_backend() -> ModuleType | None:
    try:
        from . import _kernels_nb
    except ImportError:
        return None
    return _kernels_nb


_BACKENDS: dict[str, ModuleType] = {"numpy": _kernels_np}
if not _numba_disabled():
    _nb = _load_numba_backend()
    if _nb is not None:
        _BACKENDS["numba"] = _nb

_ACTIVE = _BACKENDS.get("numba", _kernels_np)


def active_backend() -> str:
    """Name of the backend the package-level kernels dispatch to."""
    return _ACTIVE.NAME


def available_backends() -> dict[str, ModuleType]:
    """All importable backends (for tests and benchmarks).

    Includes numba even when ``DPPAL_NUMBA=0`` disabled it for dispatch,
    so agreement tests can compare the two paths in one process.
    """
    out = dict(_BACKENDS)
    if "numba" not in out:
        nb = _load_numba_backend()
        if nb is not None:
            out["numba"] = nb
    return out


arc_feature_ids = _ACTIVE.arc_feature_ids
score_arcs = _ACTIVE.score_arcs
score_arcs_masked = _ACTIVE.score_arcs_masked
sgd_epochs = _ACTIVE.sgd_epochs

"""Kernel selection.

The compiled module is used when it imports; otherwise, or when
``CURVEWIDTH_PURE_PYTHON`` is set to a non-empty value, the numpy versions
are used.  ``CURVEWIDTH_THREADS`` caps the OpenMP worker count.  Each output
row is computed independently, so results do not depend on the thread count.
"""
import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if not os.environ.get("CURVEWIDTH_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels


def thread_count():
    raw = os.environ.get("CURVEWIDTH_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def _arr(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def chord_min(kind, P, C, impl=None):
    return (impl or _impl).chord_min(kind, _arr(P), _arr(C), thread_count())


def chord_max(kind, P, C, impl=None):
    return (impl or _impl).chord_max(kind, _arr(P), _arr(C), thread_count())


def chord_pair_max(kind, P, impl=None):
    return (impl or _impl).chord_pair_max(kind, _arr(P), thread_count())


def ball_exit(kind, z, U, C, radius, impl=None):
    """Exit times and active ball indices for rays from ``z``."""
    return (impl or _impl).ball_exit(kind, _arr(z), _arr(U), _arr(C), float(radius), thread_count())


def implementations():
    """All importable backends, keyed by name."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["compiled"] = _ckernels
    except ImportError:
        pass
    return found

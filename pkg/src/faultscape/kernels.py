"""Backend selection for the numeric hot paths.

The compiled Cython extension is used when it was built; otherwise the
pure-Python module is used. Set ``FAULTSCAPE_PURE_PYTHON=1`` to force the
fallback. Inputs are coerced to contiguous float64 buffers (``array('d')``)
so either backend accepts lists, arrays, or numpy vectors.
"""
import os
from array import array

from . import _kernels_py

if os.environ.get("FAULTSCAPE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "compiled"


def _buf(values):
    if isinstance(values, array) and values.typecode == "d":
        return values
    try:
        import numpy as np
    except ImportError:  # pragma: no cover
        np = None
    if np is not None and isinstance(values, np.ndarray):
        return np.ascontiguousarray(values, dtype=np.float64)
    return array("d", values)


def violation_terms(values, tau, impl=None):
    impl = impl or _impl
    return impl.violation_terms(_buf(values), float(tau))


def violation_score(values, tau, impl=None):
    impl = impl or _impl
    return impl.violation_score(_buf(values), float(tau))


def weighted_total(scores, weights, impl=None):
    impl = impl or _impl
    return impl.weighted_total(_buf(scores), _buf(weights))


def window_sum(values, lo, hi, impl=None):
    impl = impl or _impl
    return impl.window_sum(_buf(values), int(lo), int(hi))


def count_above(values, tau, impl=None):
    impl = impl or _impl
    return impl.count_above(_buf(values), float(tau))


def implementations():
    """Return ``{name: module}`` for every backend importable here."""
    impls = {"python": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        impls["compiled"] = _kernels
    return impls

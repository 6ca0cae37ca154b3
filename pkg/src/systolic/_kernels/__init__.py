"""Hot numerical kernels: polynomial-table evaluation and DOP853 flows.

The compiled extension ``_ckernels`` is used when it is importable; the
numpy implementation in ``_pykernels`` is the fallback. Setting the
environment variable ``SYSTOLIC_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

if os.environ.get("SYSTOLIC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND
table_eval = _impl.table_eval
table_grad = _impl.table_grad
table_hess = _impl.table_hess
flow_adaptive = _impl.flow_adaptive
flow_fixed = _impl.flow_fixed
flow_fixed_path = _impl.flow_fixed_path


def backends():
    """All importable kernel modules, keyed by backend name."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found

"""Hot time-stepping kernels with backend selection at import.

The compiled extension is preferred; the scipy-backed pure module is used
when the extension is missing or MONOCTRL_PURE is set.  Both expose the
same functions; benchmarks/bench_kernels.py compares them.
"""

import os

if os.environ.get("MONOCTRL_PURE", "").lower() in ("1", "true", "yes"):
    from . import pure as _impl
else:
    try:
        from . import _tridiag as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import pure as _impl

BACKEND = _impl.BACKEND
solve_tridiag = _impl.solve_tridiag
tridiag_matvec = _impl.tridiag_matvec
cn_propagate_forward = _impl.cn_propagate_forward
cn_propagate_adjoint = _impl.cn_propagate_adjoint

__all__ = [
    "BACKEND",
    "solve_tridiag",
    "tridiag_matvec",
    "cn_propagate_forward",
    "cn_propagate_adjoint",
]

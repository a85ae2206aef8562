"""Numerical kernel backend selection.

The hot inner loops (the fixed-point state iteration and the transition
log-likelihood evaluations) exist twice: a Cython extension compiled at
install time and a pure-numpy fallback. The compiled backend is preferred
when importable; set ``QSMT_PURE_PYTHON=1`` to force the fallback.
``benchmarks/bench_kernels.py`` compares the two.
"""

import os

from . import pykernels

if os.environ.get("QSMT_PURE_PYTHON", "").strip() in ("1", "true", "yes"):
    _impl = pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pykernels

BACKEND = _impl.BACKEND
max_eig_hermitian = _impl.max_eig_hermitian
project_rows_to_simplex = _impl.project_rows_to_simplex
l2_value = _impl.l2_value
l2_value_grad = _impl.l2_value_grad
rrr_solve = _impl.rrr_solve

__all__ = [
    "BACKEND",
    "max_eig_hermitian",
    "project_rows_to_simplex",
    "l2_value",
    "l2_value_grad",
    "rrr_solve",
    "pykernels",
]

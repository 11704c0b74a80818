"""Backend selection for the Cauchy-kernel sums.

The compiled extension is used when it imports; set ``HOLOPATCH_PURE_PYTHON=1``
to force the numpy implementation.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("HOLOPATCH_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _kernels_py

cauchy_sum = _impl.cauchy_sum
cauchy_rowsum_bound = _impl.cauchy_rowsum_bound
square_cell_integral = _impl.square_cell_integral

__all__ = ["BACKEND", "cauchy_sum", "cauchy_rowsum_bound", "square_cell_integral"]

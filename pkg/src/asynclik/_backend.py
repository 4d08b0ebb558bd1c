"""Kernel backend selection.

The compiled extension is preferred; the pure-python implementation is a
drop-in fallback.  ``ASYNCLIK_PURE_PYTHON=1`` forces the fallback, which is
also how the benchmark compares the two.
"""

import os

if os.environ.get("ASYNCLIK_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

overlap_pairs = _impl.overlap_pairs
hy_sum = _impl.hy_sum
paired_gaussian_loglik = _impl.paired_gaussian_loglik

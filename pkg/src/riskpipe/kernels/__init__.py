"""Hot numeric kernels with two interchangeable backends.

The numba backend JIT-compiles the inner loops; the numpy backend is a
pure-vectorized fallback that performs the same arithmetic in the same
order, so both produce bit-identical results. Select with:

    RISKPIPE_BACKEND=numpy   (default: numba, falling back to numpy
                              with a warning if numba cannot be imported)

benchmarks/bench_backends.py compares the two.
"""
import os
import warnings

_requested = os.environ.get("RISKPIPE_BACKEND", "numba").strip().lower() or "numba"

if _requested not in ("numba", "numpy"):
    warnings.warn(
        f"unknown RISKPIPE_BACKEND={_requested!r}, using the numba backend"
    )
    _requested = "numba"

if _requested == "numba":
    try:
        from . import numba_impl as _impl
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - depends on environment
        warnings.warn("numba is not importable; using the pure-numpy backend")
        from . import numpy_impl as _impl
        BACKEND = "numpy"
else:
    from . import numpy_impl as _impl
    BACKEND = "numpy"

grow_tree = _impl.grow_tree
tree_margin = _impl.tree_margin
jacobi_sweeps = _impl.jacobi_sweeps
kneighbor_indices = _impl.kneighbor_indices

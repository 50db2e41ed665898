"""Hot-kernel dispatch: the compiled extension when importable, numpy fallback otherwise.

Set ``PHASETOPO_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("PHASETOPO_PURE_PYTHON") == "1":
        raise ImportError("pure-python mode requested")
    from . import _ckernels as _impl

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on the build
    _impl = _fallback
    BACKEND = "python"


def assemble_rings(amp, weights, coeffs):
    return _impl.assemble_rings(np.ascontiguousarray(amp, dtype=np.float64),
                                np.ascontiguousarray(weights, dtype=np.float64),
                                np.ascontiguousarray(coeffs, dtype=np.complex128))


def reduce_columns(indptr, indices, dims):
    return _impl.reduce_columns(np.ascontiguousarray(indptr, dtype=np.int64),
                                np.ascontiguousarray(indices, dtype=np.int64),
                                np.ascontiguousarray(dims, dtype=np.int64))

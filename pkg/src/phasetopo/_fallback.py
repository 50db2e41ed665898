"""Pure-Python/numpy implementations of the hot kernels.

Used when the compiled extension is unavailable; the compiled versions in
``_ckernels.pyx`` must return identical results.
"""

from __future__ import annotations

import numpy as np


def assemble_rings(amp: np.ndarray, weights: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """M[i, i+n] = sum_r weights[r] * amp[r, i] * amp[r, i+n] * coeffs[r, n]; Hermitian fill."""
    d = amp.shape[1]
    out = np.zeros((d, d), dtype=complex)
    idx = np.arange(d)
    for n in range(min(d, coeffs.shape[1])):
        wc = weights * coeffs[:, n]
        vals = (amp[:, : d - n] * amp[:, n:]).T @ wc
        out[idx[: d - n], idx[n:]] = vals
        if n:
            out[idx[n:], idx[: d - n]] = vals.conj()
    out[idx, idx] = out[idx, idx].real
    return out


def reduce_columns(indptr: np.ndarray, indices: np.ndarray, dims: np.ndarray) -> np.ndarray:
    """Z/2 column reduction with clearing.

    Column j (cells in filtration order) holds the boundary rows
    ``indices[indptr[j]:indptr[j+1]]``; ``dims[j]`` is its dimension. Returns ``low`` with
    low[j] = pivot row of the reduced column j, or -1 if it reduced to zero or was cleared.
    """
    n = len(dims)
    low = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return low
    pivot_of = {}
    reduced = {}
    cleared = np.zeros(n, dtype=bool)
    order = np.argsort(-np.asarray(dims), kind="stable")
    for j in order:
        if dims[j] == 0 or cleared[j]:
            continue
        col = set(indices[indptr[j]:indptr[j + 1]].tolist())
        while col:
            p = max(col)
            other = pivot_of.get(p)
            if other is None:
                break
            col ^= reduced[other]
        if col:
            p = max(col)
            low[j] = p
            pivot_of[p] = j
            reduced[j] = col
            cleared[p] = True
    return low

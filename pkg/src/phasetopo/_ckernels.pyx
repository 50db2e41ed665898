# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled hot kernels: ring-wise Toeplitz assembly and Z/2 column reduction."""

from libcpp.vector cimport vector

import numpy as np

ctypedef vector[long long] lvec


def assemble_rings(const double[:, ::1] amp, const double[::1] weights,
                   const double complex[:, ::1] coeffs):
    cdef Py_ssize_t R = amp.shape[0], d = amp.shape[1]
    cdef Py_ssize_t nmax = min(d, coeffs.shape[1])
    cdef Py_ssize_t r, n, i
    cdef double s0, s1, t0, t1, p0, p1
    # ring index innermost: transpose to (basis, ring) and split the weighted coefficients
    ampT_arr = np.ascontiguousarray(np.asarray(amp).T)
    wc = np.asarray(weights)[None, :] * np.asarray(coeffs)[:, :nmax].T
    wre_arr = np.ascontiguousarray(wc.real)
    wim_arr = np.ascontiguousarray(wc.imag)
    cdef const double[:, ::1] A = ampT_arr
    cdef const double[:, ::1] Wr = wre_arr
    cdef const double[:, ::1] Wi = wim_arr
    out = np.zeros((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    with nogil:
        for i in range(d):
            for n in range(min(nmax, d - i)):
                s0 = 0.0; s1 = 0.0; t0 = 0.0; t1 = 0.0
                r = 0
                while r + 1 < R:
                    p0 = A[i, r] * A[i + n, r]
                    p1 = A[i, r + 1] * A[i + n, r + 1]
                    s0 = s0 + p0 * Wr[n, r]
                    s1 = s1 + p1 * Wr[n, r + 1]
                    t0 = t0 + p0 * Wi[n, r]
                    t1 = t1 + p1 * Wi[n, r + 1]
                    r = r + 2
                if r < R:
                    p0 = A[i, r] * A[i + n, r]
                    s0 = s0 + p0 * Wr[n, r]
                    t0 = t0 + p0 * Wi[n, r]
                if n == 0:
                    o[i, i] = s0 + s1
                else:
                    o[i, i + n].real = s0 + s1
                    o[i, i + n].imag = t0 + t1
                    o[i + n, i].real = s0 + s1
                    o[i + n, i].imag = -(t0 + t1)
    return out


cdef void _symdiff(vector[long long]& a, vector[long long]& b, vector[long long]& out) noexcept nogil:
    cdef size_t i = 0, j = 0
    out.clear()
    while i < a.size() and j < b.size():
        if a[i] < b[j]:
            out.push_back(a[i]); i += 1
        elif b[j] < a[i]:
            out.push_back(b[j]); j += 1
        else:
            i += 1; j += 1
    while i < a.size():
        out.push_back(a[i]); i += 1
    while j < b.size():
        out.push_back(b[j]); j += 1


def reduce_columns(const long long[::1] indptr, const long long[::1] indices,
                   const long long[::1] dims):
    cdef Py_ssize_t n = dims.shape[0]
    low = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return low
    cdef long long[::1] lowv = low
    order_arr = np.argsort(-np.asarray(dims), kind="stable").astype(np.int64)
    cdef long long[::1] order = order_arr
    cdef vector[lvec] stored
    stored.resize(n)
    cdef lvec pivot_of
    pivot_of.assign(n, -1)
    cdef vector[char] cleared
    cleared.assign(n, 0)
    cdef vector[long long] cur, tmp
    cdef Py_ssize_t jj, j, t
    cdef long long p, other
    with nogil:
        for jj in range(n):
            j = order[jj]
            if dims[j] == 0 or cleared[j]:
                continue
            cur.clear()
            for t in range(indptr[j], indptr[j + 1]):
                cur.push_back(indices[t])
            while cur.size() > 0:
                p = cur.back()
                other = pivot_of[p]
                if other < 0:
                    break
                _symdiff(cur, stored[other], tmp)
                cur.swap(tmp)
            if cur.size() > 0:
                p = cur.back()
                lowv[j] = p
                pivot_of[p] = j
                stored[j] = cur
                cleared[p] = 1
    return low

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for the dense matrix-function series.

All routines work on C-contiguous float64 square matrices and return new
arrays.  They mirror :mod:`ambient_riemann._kernels_py` exactly; the Python
module is the reference implementation and the fallback when this extension
is unavailable.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef void _matmul(const double[:, ::1] A, const double[:, ::1] B,
                  double[:, ::1] out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double a
    for i in range(n):
        for j in range(n):
            out[i, j] = 0.0
        for k in range(n):
            a = A[i, k]
            if a != 0.0:
                for j in range(n):
                    out[i, j] += a * B[k, j]


cdef void _horner(const double[:, ::1] A, const double[::1] coeffs,
                  double[:, ::1] P, double[:, ::1] tmp, Py_ssize_t n) noexcept nogil:
    # P <- sum_k coeffs[k] A^k
    cdef Py_ssize_t m = coeffs.shape[0]
    cdef Py_ssize_t i, j, k
    for i in range(n):
        for j in range(n):
            P[i, j] = 0.0
        P[i, i] = coeffs[m - 1]
    for k in range(m - 2, -1, -1):
        _matmul(A, P, tmp, n)
        for i in range(n):
            for j in range(n):
                P[i, j] = tmp[i, j]
            P[i, i] += coeffs[k]


def poly_horner(A, coeffs):
    """Return sum_k coeffs[k] A**k evaluated by Horner's rule."""
    cdef const double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t n = Av.shape[0]
    P = np.empty((n, n), dtype=np.float64)
    tmp = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] Pv = P
    cdef double[:, ::1] Tv = tmp
    with nogil:
        _horner(Av, cv, Pv, Tv, n)
    return P


def exp_scaled(A, coeffs, int s):
    """exp(A) from a Taylor polynomial of A / 2**s followed by s squarings."""
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64) / (2.0 ** s)
    cdef const double[::1] cv = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t n = Av.shape[0]
    cdef Py_ssize_t i, j
    cdef int r
    P = np.empty((n, n), dtype=np.float64)
    tmp = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] Pv = P
    cdef double[:, ::1] Tv = tmp
    with nogil:
        _horner(Av, cv, Pv, Tv, n)
        for r in range(s):
            _matmul(Pv, Pv, Tv, n)
            for i in range(n):
                for j in range(n):
                    Pv[i, j] = Tv[i, j]
    return P


def csr_ssr_scaled(A, ccoeffs, scoeffs, int s):
    """(csr(A), ssr(A)) from series at A / 4**s and s quadruplings.

    Uses csr(4z) = 2 csr(z)^2 - I and ssr(4z) = ssr(z) csr(z), the double
    angle formulas of cos and sin written in the squared variable.
    """
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64) / (4.0 ** s)
    cdef const double[::1] cc = np.ascontiguousarray(ccoeffs, dtype=np.float64)
    cdef const double[::1] sc = np.ascontiguousarray(scoeffs, dtype=np.float64)
    cdef Py_ssize_t n = Av.shape[0]
    cdef Py_ssize_t i, j
    cdef int r
    C = np.empty((n, n), dtype=np.float64)
    S = np.empty((n, n), dtype=np.float64)
    tmp = np.empty((n, n), dtype=np.float64)
    tmp2 = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] Cv = C
    cdef double[:, ::1] Sv = S
    cdef double[:, ::1] Tv = tmp
    cdef double[:, ::1] T2 = tmp2
    with nogil:
        _horner(Av, cc, Cv, Tv, n)
        _horner(Av, sc, Sv, Tv, n)
        for r in range(s):
            _matmul(Sv, Cv, T2, n)
            _matmul(Cv, Cv, Tv, n)
            for i in range(n):
                for j in range(n):
                    Sv[i, j] = T2[i, j]
                    Cv[i, j] = 2.0 * Tv[i, j]
                Cv[i, i] -= 1.0
    return C, S

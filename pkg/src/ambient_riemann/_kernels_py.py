"""Pure-numpy reference implementation of the matrix-function kernels.

Same signatures as the compiled ``_kernels`` extension; selected at import
time when the extension is missing or ``AMBIENT_RIEMANN_PURE=1`` is set.
"""
import numpy as np


def poly_horner(A, coeffs):
    """Return sum_k coeffs[k] A**k evaluated by Horner's rule."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    n = A.shape[0]
    eye = np.eye(n)
    P = coeffs[-1] * eye
    for c in coeffs[-2::-1]:
        P = A @ P
        P += c * eye
    return P


def exp_scaled(A, coeffs, s):
    """exp(A) from a Taylor polynomial of A / 2**s followed by s squarings."""
    P = poly_horner(np.asarray(A, dtype=np.float64) / 2.0**s, coeffs)
    for _ in range(s):
        P = P @ P
    return P


def csr_ssr_scaled(A, ccoeffs, scoeffs, s):
    """(csr(A), ssr(A)) from series at A / 4**s and s quadruplings."""
    Z = np.asarray(A, dtype=np.float64) / 4.0**s
    C = poly_horner(Z, ccoeffs)
    S = poly_horner(Z, scoeffs)
    eye = np.eye(Z.shape[0])
    for _ in range(s):
        S = S @ C
        C = 2.0 * (C @ C) - eye
    return C, S

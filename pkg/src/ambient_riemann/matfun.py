"""Dense matrix functions and their Fréchet derivatives.

The functions here are entire power series f(A) = sum_i f_i A^i:

* ``exp``  with f_i = 1 / i!
* ``csr``  with f_i = (-1)^i / (2i)!     (csr(z) = cos(sqrt z))
* ``ssr``  with f_i = (-1)^i / (2i+1)!   (ssr(z) = sin(sqrt z) / sqrt z)

Evaluation uses a truncated Taylor series after argument reduction
(halving for ``exp``, quartering for ``csr``/``ssr``).  Fréchet derivatives
L_f(A, E) are read off the upper-right block of f([[A, E], [0, A]]).
"""
from __future__ import annotations

import math
import os
from functools import lru_cache

import numpy as np

from .errors import InvalidInputError

if os.environ.get("AMBIENT_RIEMANN_PURE", "") == "1":
    from . import _kernels_py as _kern
    BACKEND = "python"
else:
    try:
        from . import _kernels as _kern
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        from . import _kernels_py as _kern
        BACKEND = "python"
from . import _kernels_py

# the compiled loops beat BLAS-backed numpy only for small matrices
# (see benchmarks/bench_kernels.py); larger ones go through numpy
CYTHON_MAX_N = 16


def _kernels_for(A):
    return _kern if A.shape[0] <= CYTHON_MAX_N else _kernels_py


FUNCTIONS = ("exp", "csr", "ssr")

# Number of Taylor terms kept after argument reduction.  With ||A||_1 < 1/2
# the exp remainder is below 0.5**30 / 30! ~ 1e-42; csr/ssr are reduced to
# norm <= 1 and their remainders decay like 1 / (2k)!.
EXP_TERMS = 30
TRIG_TERMS = 30
SERIES_TERMS = 80


@lru_cache(maxsize=None)
def series_coefficients(f: str, nterms: int) -> np.ndarray:
    """Taylor coefficients f_0 .. f_{nterms-1} of ``f`` (or its derivative).

    ``f`` may be one of :data:`FUNCTIONS` or the derivative names
    ``"dexp"``, ``"dcsr"``, ``"dssr"``.
    """
    if f.startswith("d"):
        base = series_coefficients(f[1:], nterms + 1)
        out = np.array([(i + 1) * base[i + 1] for i in range(nterms)])
    elif f == "exp":
        out = np.array([1.0 / math.factorial(i) for i in range(nterms)])
    elif f == "csr":
        out = np.array([(-1.0) ** i / math.factorial(2 * i) for i in range(nterms)])
    elif f == "ssr":
        out = np.array([(-1.0) ** i / math.factorial(2 * i + 1) for i in range(nterms)])
    else:
        raise InvalidInputError(f"unknown matrix function {f!r}")
    out.setflags(write=False)
    return out


def _square(A, name="A") -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"{name} must be a square matrix, got shape {A.shape}")
    if A.shape[0] == 0:
        raise InvalidInputError(f"{name} has dimension zero")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return A


def _pair(A, E):
    A = _square(A, "A")
    E = _square(E, "E")
    if A.shape != E.shape:
        raise InvalidInputError(f"dimension mismatch: A {A.shape} vs E {E.shape}")
    return A, E


def expm(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a Taylor polynomial."""
    A = _square(A)
    nrm = np.linalg.norm(A, 1)
    s = 0 if nrm < 0.5 else int(math.ceil(math.log2(nrm / 0.5))) + 1
    return _kernels_for(A).exp_scaled(A, series_coefficients("exp", EXP_TERMS), s)


def _csr_ssr(A):
    A = _square(A)
    nrm = np.linalg.norm(A, 1)
    s = 0 if nrm <= 1.0 else int(math.ceil(math.log(nrm) / math.log(4.0)))
    return _kernels_for(A).csr_ssr_scaled(
        A,
        series_coefficients("csr", TRIG_TERMS),
        series_coefficients("ssr", TRIG_TERMS),
        s,
    )


def csr(A) -> np.ndarray:
    """Entire continuation of cos(sqrt(A))."""
    return _csr_ssr(A)[0]


def ssr(A) -> np.ndarray:
    """Entire continuation of sin(sqrt(A)) / sqrt(A)."""
    return _csr_ssr(A)[1]


def series_eval(f: str, A, nterms: int = SERIES_TERMS) -> np.ndarray:
    """Plain truncated Taylor evaluation of ``f`` (no argument reduction).

    Adequate for moderate norms; used for the derivative series and as an
    oracle in tests.
    """
    A = _square(A)
    return _kernels_for(A).poly_horner(A, series_coefficients(f, nterms))


def matfun(f: str, A) -> np.ndarray:
    """Evaluate the named function (``exp``, ``csr``, ``ssr`` or a ``d``-prefixed derivative)."""
    if f == "exp" or f == "dexp":
        return expm(A)
    if f == "csr":
        return csr(A)
    if f == "ssr":
        return ssr(A)
    if f == "dcsr":
        return -0.5 * ssr(A)
    if f == "dssr":
        return series_eval("dssr", A)
    raise InvalidInputError(f"unknown matrix function {f!r}")


def frechet(f: str, A, E) -> np.ndarray:
    """Fréchet derivative L_f(A, E) via the 2x2 block construction.

    E is rescaled to the norm of A before forming the block so that the
    argument reduction is driven by A alone; linearity undoes the rescale.
    """
    A, E = _pair(A, E)
    if f not in FUNCTIONS and f not in ("dexp", "dcsr", "dssr"):
        raise InvalidInputError(f"unknown matrix function {f!r}")
    enrm = np.linalg.norm(E, 1)
    if enrm == 0.0:
        return np.zeros_like(A)
    scale = max(np.linalg.norm(A, 1), 1.0) / enrm
    n = A.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = A
    block[n:, n:] = A
    block[:n, n:] = scale * E
    return matfun(f, block)[:n, n:] / scale


def frechet_series(f: str, A, E, nterms: int = SERIES_TERMS) -> np.ndarray:
    """Direct series L_f(A,E) = sum_i f_i sum_{a+b=i-1} A^a E A^b (test oracle)."""
    A, E = _pair(A, E)
    coeffs = series_coefficients(f, nterms)
    L = E.copy()  # sum_{a+b=0} A^a E A^b
    P = A.copy()  # A^1
    out = coeffs[1] * L
    for i in range(2, nterms):
        L = A @ L + E @ P
        P = P @ A
        out = out + coeffs[i] * L
    return out


def frechet_time_derivative(f: str, A, E, t: float) -> np.ndarray:
    """d/dt L_f(tA, tE) = A L_{f'}(tA, tE) + E f'(tA)."""
    A, E = _pair(A, E)
    if f not in FUNCTIONS:
        raise InvalidInputError(f"unknown matrix function {f!r}")
    df = "d" + f
    return A @ frechet(df, t * A, t * E) + E @ matfun(df, t * A)


def zfun(M) -> np.ndarray:
    """Z(M) = (I - exp(-M)) M^{-1}, the entire function (1 - e^{-x}) / x.

    Read off the upper-right block of exp([[-M, I], [0, 0]]).
    """
    M = _square(M, "M")
    n = M.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = -M
    block[:n, n:] = np.eye(n)
    return expm(block)[:n, n:]

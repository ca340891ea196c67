"""Geodesics and Jacobi fields.

Three independent routes are provided for Jacobi fields along a geodesic
gamma(t) = Exp_x(t v) with initial data (x, v, dm, dt) in TTM:

* closed forms (SO(n), Grassmann, naturally reductive spaces);
* ``jacobi_fd`` -- differentiate the geodesic family in its initial
  conditions along the curve s -> (Exp_x(s dm), Pi(v + s dt));
* ``jacobi_ode`` -- integrate the Jacobi equation (nabla_t)^2 J = R_{J,g'} g'
  with the curvature from :mod:`ambient_riemann.curvature`.

The Jacobi ODE is integrated as the first-order system

    gamma' = u,                u' = -Gamma(u, u)
    J'     = K - Gamma(u, J),  K' = R_{J,u} u - Gamma(u, K)

where K = nabla_t J.  Written this way no time derivative of Gamma along the
trajectory is needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .ambient import EmbeddedStructure, christoffel, norm
from .curvature import curvature_embedded
from .errors import IntegrationError, InvalidInputError
from .matfun import csr, expm, frechet, matfun, ssr, zfun

STEPS_PER_UNIT = 200
DRIFT_TOL = 1e-5
VARIATION_STEP = 1e-4


def _n_steps(t, steps):
    if steps is not None:
        if steps < 1:
            raise InvalidInputError("steps must be positive")
        return int(steps)
    return max(1, int(math.ceil(abs(t) * STEPS_PER_UNIT)))


def _rk4(f, state, t, n):
    h = t / n
    for _ in range(n):
        k1 = f(state)
        k2 = f([s + 0.5 * h * k for s, k in zip(state, k1)])
        k3 = f([s + 0.5 * h * k for s, k in zip(state, k2)])
        k4 = f([s + h * k for s, k in zip(state, k3)])
        state = [s + (h / 6.0) * (a + 2 * b + 2 * c + d)
                 for s, a, b, c, d in zip(state, k1, k2, k3, k4)]
        yield state


# ---------------------------------------------------------------------------
# geodesics


@dataclass
class GeodesicSpec:
    """Geodesic t -> Exp_x(t v) on ``structure``.

    ``closed_form(x, v, t)`` returns (gamma(t), gamma'(t)) when available;
    ``project`` optionally replaces Pi for re-projecting the velocity (used
    for horizontal geodesics).
    """

    structure: EmbeddedStructure
    x: np.ndarray
    v: np.ndarray
    horizon: float = 1.0
    closed_form: Optional[Callable] = None
    steps: Optional[int] = None
    project: Optional[Callable] = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.structure.check_shape(self.x, self.v)


def integrate_geodesic(S: EmbeddedStructure, x, v, t, steps=None, project=None,
                       drift_tol=DRIFT_TOL):
    """RK4 for gamma'' = -Gamma(gamma', gamma'), velocity re-projected each step."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if t == 0:
        return x.copy(), v.copy()
    proj = project if project is not None else S.P
    n = _n_steps(t, steps)

    def f(st):
        g, u = st
        return [u, -christoffel(S, g, u, u)]

    state = [x, v]
    for state in _rk4(f, state, t, n):
        state[1] = proj(state[0], state[1])
    g, u = state
    r = S.membership_residual(g)
    if not np.isfinite(r) or r > drift_tol:
        raise IntegrationError(
            f"{S.name}: geodesic drifted off the manifold (residual {r:.2e}); "
            "use more steps or a shorter horizon")
    return g, u


def geodesic(spec: GeodesicSpec, t: float):
    """(gamma(t), gamma'(t)); closed form when registered, RK4 otherwise."""
    if spec.closed_form is not None:
        g, u = spec.closed_form(spec.x, spec.v, t)
        return np.asarray(g, dtype=float), np.asarray(u, dtype=float)
    return integrate_geodesic(spec.structure, spec.x, spec.v, t, spec.steps, spec.project)


def energy(S: EmbeddedStructure, x, v) -> float:
    return float(np.vdot(v.ravel(), S.g(x, v).ravel()))


# ---------------------------------------------------------------------------
# Jacobi fields on embedded structures


@dataclass
class JacobiInit:
    """Initial data (x, v, dm, dt) in TTM: J(0) = dm, J'(0) = dt."""

    x: np.ndarray
    v: np.ndarray
    dm: np.ndarray
    dt: np.ndarray

    def __post_init__(self):
        self.x, self.v, self.dm, self.dt = (np.asarray(a, dtype=float) for a in
                                            (self.x, self.v, self.dm, self.dt))


def _variation(base_exp, exp_fn, x, v, dm, dt, t, s, project):
    def endpoint(sig):
        x0 = base_exp(x, sig * dm)
        v0 = project(x0, v + sig * dt)
        return exp_fn(x0, v0, t)[0]
    return (endpoint(s) - endpoint(-s)) / (2.0 * s)


# the base displacement Exp_x(s dm) is tiny, a few RK4 steps are exact to roundoff
_BASE_STEPS = 8


def jacobi_fd(spec: GeodesicSpec, init: JacobiInit, t: float, s: float = VARIATION_STEP,
              richardson: bool = True):
    """J(t) as the derivative of the geodesic family along (Exp_x s dm, Pi(v + s dt))."""
    S = spec.structure
    proj = spec.project if spec.project is not None else S.P
    if spec.closed_form is not None:
        exp_fn = spec.closed_form
    else:
        exp_fn = lambda x0, v0, tt: integrate_geodesic(S, x0, v0, tt, spec.steps, spec.project)
    if spec.closed_form is not None and spec.project is None:
        base_exp = lambda x0, w: spec.closed_form(x0, w, 1.0)[0]
    else:
        # a horizontal closed form / projection does not apply to a general dm
        base_exp = lambda x0, w: integrate_geodesic(S, x0, w, 1.0, _BASE_STEPS)[0]
    args = (base_exp, exp_fn, init.x, init.v, init.dm, init.dt, t)
    d1 = _variation(*args, s, proj)
    if not richardson:
        return d1
    d2 = _variation(*args, 0.5 * s, proj)
    return (4.0 * d2 - d1) / 3.0


def _jacobi_system(gamma_fn, curv_fn, proj):
    def f(st):
        g, u, J, K = st
        return [u, -gamma_fn(g, u, u), K - gamma_fn(g, u, J),
                curv_fn(g, J, u, u) - gamma_fn(g, u, K)]
    return f


def _run_jacobi(f, state, t, steps, proj_v, proj_j, with_derivative, gamma_fn):
    if t == 0:
        g, u, J, K = state
    else:
        for state in _rk4(f, state, t, _n_steps(t, steps)):
            g = state[0]
            state[1] = proj_v(g, state[1])
            state[2] = proj_j(g, state[2])
            state[3] = proj_j(g, state[3])
        g, u, J, K = state
    if with_derivative:
        return J, K - gamma_fn(g, u, J)
    return J


def jacobi_ode(spec: GeodesicSpec, init: JacobiInit, t: float, with_derivative=False):
    """Integrate nabla_t^2 J = R_{J,u} u together with the geodesic (RK4)."""
    S = spec.structure
    gam = lambda g, a, b: christoffel(S, g, a, b)
    curv = lambda g, a, b, c: curvature_embedded(S, g, a, b, c, "rc1", check=False)
    K0 = init.dt + christoffel(S, init.x, init.v, init.dm)
    f = _jacobi_system(gam, curv, S.P)
    out = _run_jacobi(f, [init.x, init.v, init.dm, K0], t, spec.steps, S.P, S.P,
                      with_derivative, gam)
    return out


def jacobi_son(U, eta, dm, dt, t):
    """Closed-form Jacobi field on SO(n):
    J(t) = dm exp(t U^T eta) + t U L_exp(t U^T eta, dm^T eta + U^T dt)."""
    A = U.T @ eta
    return dm @ expm(t * A) + t * U @ frechet("exp", t * A, dm.T @ eta + U.T @ dt)


# ---------------------------------------------------------------------------
# horizontal (submersion) Jacobi fields


def horizontal_geodesic_spec(Ssub, x, v, closed_form=None, steps=None) -> GeodesicSpec:
    return GeodesicSpec(Ssub.total, x, v, closed_form=closed_form, steps=steps,
                        project=Ssub.ttH)


def jacobi_horizontal_lift(Ssub, x, v, dm, dt, t, closed_form=None, steps=None,
                           s=VARIATION_STEP):
    """J^H(t) = ttH_{gamma(t)} of the variation field of (x, v, dm, dt) in THM.

    The variation curve is (Exp_x(s dm), ttH(v + s dt)), which keeps every
    geodesic of the family horizontal.
    """
    spec = horizontal_geodesic_spec(Ssub, x, v, closed_form, steps)
    J = jacobi_fd(spec, JacobiInit(x, v, dm, dt), t, s)
    g, _ = geodesic(spec, t)
    return Ssub.ttH(g, J)


def jacobi_horizontal_from_Q(Ssub, x, nu_m, v, nu_t, t, closed_form=None, steps=None):
    """J^H with J^H(0) = nu_m, J^H'(0) = nu_t from (x, nu_m, v, nu_t) in QHM.

    Uses the THM datum (x, v, nu_m, nu_t + 2 A_{nu_m} v).
    """
    from .submersion import oneil_A_via_bracket
    dt = nu_t + 2.0 * oneil_A_via_bracket(Ssub, x, nu_m, v, check=False)
    return jacobi_horizontal_lift(Ssub, x, v, nu_m, dt, t, closed_form, steps)


def jacobi_ode_horizontal(Ssub, x, nu_m, v, nu_t, t, steps=None, with_derivative=False):
    """Integrate the horizontal Jacobi equation with Gamma^H and R^H."""
    from .submersion import _gammaH_raw, curvature_submersed
    S = Ssub.total
    gam_m = lambda g, a, b: christoffel(S, g, a, b)
    gam_h = lambda g, a, b: _gammaH_raw(Ssub, g, a, b)
    curv = lambda g, a, b, c: curvature_submersed(Ssub, g, a, b, c, "cursubmer", check=False)

    def f(st):
        g, u, J, K = st
        return [u, -gam_m(g, u, u), K - gam_h(g, u, J), curv(g, J, u, u) - gam_h(g, u, K)]

    K0 = nu_t + gam_h(x, v, nu_m)
    return _run_jacobi(f, [x, v, nu_m, K0], t, steps, Ssub.ttH, Ssub.ttH,
                       with_derivative, gam_h)


def jacobi_grassmann(Y, eta, nu_m, nu_t, t):
    """Closed-form horizontal Jacobi field on the Grassmannian (Stiefel coordinates)."""
    delta = nu_t - Y @ (nu_m.T @ eta - eta.T @ nu_m)
    M = t * t * (eta.T @ eta)
    E = eta.T @ delta + delta.T @ eta
    c, s = csr(M), ssr(M)
    g = Y @ c + t * eta @ s
    J = (nu_m @ c + t * delta @ s + t * t * Y @ frechet("csr", M, E)
         + t ** 3 * eta @ frechet("ssr", M, E))
    return J - g @ (g.T @ J)


# ---------------------------------------------------------------------------
# Lie-algebra data for naturally reductive spaces


class LieData:
    """o(n) = k + b given by an entrywise 0/1 mask selecting k.

    The inner product is the trace form <X, Y> = tr(X^T Y) (bi-invariant, so
    naturally reductive on b).  Coordinates use the orthonormal basis
    (E_ij - E_ji)/sqrt(2), i < j.
    """

    def __init__(self, n: int, kmask, name: str = ""):
        self.n = int(n)
        kmask = np.asarray(kmask, dtype=float)
        if kmask.shape != (n, n) or np.any(kmask != kmask.T):
            raise InvalidInputError("k mask must be a symmetric n x n 0/1 matrix")
        self.kmask = kmask
        self.name = name
        self._iu = np.triu_indices(self.n, 1)
        self.dim = len(self._iu[0])

    # algebra
    @staticmethod
    def bracket(X, Y):
        return X @ Y - Y @ X

    def proj_k(self, X):
        return X * self.kmask

    def proj_b(self, X):
        return X - X * self.kmask

    @staticmethod
    def inner(X, Y) -> float:
        return float(np.vdot(X.ravel(), Y.ravel()))

    def is_in_b(self, X, tol=1e-10) -> bool:
        return (norm(X + X.T) <= tol * (1 + norm(X))
                and norm(self.proj_k(X)) <= tol * (1 + norm(X)))

    # coordinates
    def coords(self, X):
        return np.sqrt(2.0) * X[self._iu]

    def from_coords(self, c):
        X = np.zeros((self.n, self.n))
        X[self._iu] = np.asarray(c) / np.sqrt(2.0)
        return X - X.T

    def basis(self):
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = 1.0
            yield self.from_coords(e)

    def b_basis(self):
        return [E for E in self.basis() if norm(self.proj_k(E)) == 0]

    def k_basis(self):
        return [E for E in self.basis() if norm(self.proj_b(E)) == 0]

    def ad_matrix(self, A):
        return np.column_stack([self.coords(self.bracket(A, E)) for E in self.basis()])

    def proj_b_matrix(self):
        return np.column_stack([self.coords(self.proj_b(E)) for E in self.basis()])

    # invariant probes
    def invariant_residuals(self) -> dict:
        B = list(self.basis())
        bb = self.b_basis()
        kb = self.k_basis()
        jac = 0.0
        for X in B:
            for Y in B:
                for Z in B[:6]:
                    r = (self.bracket(X, self.bracket(Y, Z)) + self.bracket(Y, self.bracket(Z, X))
                         + self.bracket(Z, self.bracket(X, Y)))
                    jac = max(jac, norm(r))
        nat = 0.0
        for X in bb:
            for Y in bb:
                for Z in bb:
                    nat = max(nat, abs(self.inner(X, self.proj_b(self.bracket(Z, Y)))
                                       + self.inner(self.proj_b(self.bracket(Z, X)), Y)))
        kb_res = 0.0
        for K in kb:
            for X in bb:
                kb_res = max(kb_res, norm(self.proj_k(self.bracket(K, X))))
        proj = norm(self.proj_k(self.proj_k(B[0])) - self.proj_k(B[0]))
        return {"jacobi": jac, "naturality": nat, "k_b_invariance": kb_res, "proj": proj}


def flag_liedata(n, partition) -> LieData:
    mask = np.zeros((n, n))
    start = 0
    for d in partition:
        mask[start:start + d, start:start + d] = 1.0
        start += d
    return LieData(n, mask, name=f"flag{tuple(partition)}")


def stiefel_liedata(n, p) -> LieData:
    """SO(n)/SO(n-p): k is the bottom-right (n-p) x (n-p) block."""
    if not (n > p >= 1):
        raise InvalidInputError(f"need n > p >= 1, got n={n}, p={p}")
    mask = np.zeros((n, n))
    mask[p:, p:] = 1.0
    L = LieData(n, mask, name=f"stiefel({n},{p})")
    L.p = p
    return L


def stiefel_b0(L: LieData, X):
    """Component of X in b0, the top-left p x p block."""
    out = np.zeros_like(X)
    out[:L.p, :L.p] = X[:L.p, :L.p]
    return out


# ---------------------------------------------------------------------------
# naturally reductive closed form


def _check_b(L, *mats):
    for M in mats:
        if not L.is_in_b(M, tol=1e-8):
            raise InvalidInputError(f"{L.name}: input is not in b")


def _z_apply(L, A, G, t):
    Zm = zfun(t * L.ad_matrix(A))
    return L.from_coords(Zm @ L.coords(G))


def jacobi_naturally_reductive(L: LieData, A, C, E, t, U=None):
    """F(t) = {C + t Z(t ad_A)(1/2[A,C]_b + E - [A,C])}_b.

    With ``U`` given, returns the lifted field U exp(tA) F(t) instead.
    """
    _check_b(L, A, C, E)
    AC = L.bracket(A, C)
    G = 0.5 * L.proj_b(AC) + E - AC
    F = L.proj_b(C + t * _z_apply(L, A, G, t))
    if U is None:
        return F
    return U @ expm(t * A) @ F


def fjacobi_residual(L: LieData, A, C, E, t, h: float = 1e-2) -> float:
    """|F'' + [A, F']_b - [A, [A, F]_k]| with five-point derivatives (step h)."""
    F = lambda s: jacobi_naturally_reductive(L, A, C, E, s)
    f = [F(t + k * h) for k in (-2, -1, 0, 1, 2)]
    d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    r = d2 + L.proj_b(L.bracket(A, d1)) - L.bracket(A, L.proj_k(L.bracket(A, f[2])))
    return norm(r)


def isotropic_jacobi(L: LieData, A, X, t):
    """(exp(-t ad_A) X)_b = (e^{-tA} X e^{tA})_b."""
    return L.proj_b(expm(-t * A) @ X @ expm(t * A))


def isotropic_initial_data(L: LieData, A, X):
    """(C, E) = (X_b, -1/2 [A, X_b]_b - [A, X_k])."""
    C = L.proj_b(X)
    E = -0.5 * L.proj_b(L.bracket(A, C)) - L.bracket(A, L.proj_k(X))
    return C, E


def zjac_eigenpair(L: LieData, A, tol=1e-9):
    """(V, V*, lambda) with V + i V* an eigenvector of ad_A^b for i lambda, lambda > 0."""
    Bs = L.b_basis()
    Q = np.column_stack([L.coords(b) for b in Bs])
    M = Q.T @ L.ad_matrix(A) @ Q
    w, vecs = np.linalg.eig(M)
    k = int(np.argmax(w.imag))
    lam = float(w[k].imag)
    if lam <= tol:
        raise InvalidInputError("ad_A^b has no nonzero imaginary eigenvalue")
    u = vecs[:, k]
    V = L.from_coords(Q @ u.real)
    Vs = L.from_coords(Q @ u.imag)
    return V, Vs, lam


def zjac_check(L: LieData, A, V, Vs, lam, t) -> dict:
    """Compare (Z(t ad_A) V)_b with its closed form; report the hypothesis residuals."""
    AV = L.bracket(A, V)
    Ds = L.proj_k(AV)
    D = L.proj_k(L.bracket(A, Vs))
    eig = max(norm(L.proj_b(AV) + lam * Vs), norm(L.proj_b(L.bracket(A, Vs)) - lam * V))
    hyp = max(norm(L.bracket(A, D)), norm(L.bracket(A, Ds)))
    Zb = L.proj_b(_z_apply(L, A, V, t))
    tl = t * lam
    closed = math.sin(tl) / tl * V - t * (1 - math.cos(tl)) / tl ** 2 * L.proj_b(AV)
    t0 = 2 * math.pi / lam
    vanish = norm(t0 * L.proj_b(_z_apply(L, A, V, t0)))
    return {"residual": norm(Zb - closed), "eigen_residual": eig, "hypothesis": hyp,
            "hypothesis_holds": hyp <= 1e-8, "vanishing": vanish, "t_zero": t0}

"""Embedded ambient structures (M, g, E).

A manifold M sits inside a Euclidean space E (vectors are numpy arrays of a
fixed shape, paired with the coordinate / trace inner product).  A metric
operator g_x, positive definite on E, induces the Riemannian metric on
tangent vectors.  From the g-orthogonal projection Pi_x onto T_xM and the
directional derivatives of Pi and g one assembles a Christoffel function

    Gamma(xi, eta) = -(D_xi Pi) eta
                     + 1/2 Pi g^{-1} ((D_xi g) eta + (D_eta g) xi - X(xi, eta))

with X defined through <X(xi, eta), phi> = <(D_phi g) xi, eta> for tangent phi.
The Levi-Civita connection is then nabla_xi Y = D_xi Y + Gamma(xi, Y).

Every closure stored on a structure takes the point first and is expected to
be evaluable at points slightly off the manifold (finite differences probe
x +- h xi).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DegenerateTangentSpaceError,
    IncompleteStructureError,
    InvalidInputError,
    InvalidMetricError,
    OffManifoldError,
    SingularSpanError,
)

DEFAULT_FD_STEP = 1e-5
NESTED_FD_STEP = 1e-4


def inner(a, b) -> float:
    """Base (coordinate / trace) inner product of two ambient arrays."""
    return float(np.vdot(np.asarray(a, dtype=float).ravel(), np.asarray(b, dtype=float).ravel()))


def norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float).ravel()))


def fd_step_for(x, xi, base=DEFAULT_FD_STEP) -> float:
    """Central-difference step h = base (1 + |x|) / (1 + |xi|)."""
    return base * (1.0 + norm(x)) / (1.0 + norm(xi))


def central_diff(fun, x, xi, h=None, base=DEFAULT_FD_STEP):
    """(fun(x + h xi) - fun(x - h xi)) / 2h."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if h is None:
        h = fd_step_for(x, xi, base)
    return (np.asarray(fun(x + h * xi)) - np.asarray(fun(x - h * xi))) / (2.0 * h)


def richardson_diff(fun, x, xi, h):
    """Fourth-order combination of two central differences (steps h and h/2)."""
    d1 = central_diff(fun, x, xi, h=h)
    d2 = central_diff(fun, x, xi, h=0.5 * h)
    return (4.0 * d2 - d1) / 3.0


# ---------------------------------------------------------------------------
# spaces and operator fields


@dataclass(frozen=True)
class AmbientSpace:
    """Euclidean space of ``dim`` coordinates, optionally viewed as a matrix."""

    dim: int
    shape: Optional[tuple] = None

    def __post_init__(self):
        if self.dim <= 0:
            raise InvalidInputError("ambient dimension must be positive")
        if self.shape is not None and int(np.prod(self.shape)) != self.dim:
            raise InvalidInputError(f"shape {self.shape} does not factor dim {self.dim}")

    @property
    def array_shape(self) -> tuple:
        return tuple(self.shape) if self.shape is not None else (self.dim,)

    def basis(self):
        """Yield the standard basis as arrays of :attr:`array_shape`."""
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            yield e.reshape(self.array_shape)


class OperatorField:
    """Point-dependent linear operator on an ambient space.

    ``apply(x, w)`` evaluates the operator at ``x`` on ``w``; the optional
    ``deriv(x, xi, w)`` evaluates (D_xi op)_x w analytically.
    """

    def __init__(self, space: AmbientSpace, apply: Callable, deriv: Optional[Callable] = None,
                 fd_step: float = DEFAULT_FD_STEP):
        self.space = space
        self.apply = apply
        self.deriv = deriv
        self.fd_step = fd_step

    def __call__(self, x, w):
        return self.apply(x, w)

    def matrix(self, x) -> np.ndarray:
        """Dense dim x dim matrix of the operator at ``x`` (column j = op(e_j))."""
        cols = [np.asarray(self.apply(x, e), dtype=float).ravel() for e in self.space.basis()]
        return np.column_stack(cols)

    def dir_deriv(self, x, xi, w):
        if self.deriv is not None:
            return self.deriv(x, xi, w)
        return central_diff(lambda y: self.apply(y, w), x, xi, base=self.fd_step)

    def dir_deriv_matrix(self, x, xi) -> np.ndarray:
        cols = [np.asarray(self.dir_deriv(x, xi, e), dtype=float).ravel()
                for e in self.space.basis()]
        return np.column_stack(cols)


def constant_field(space: AmbientSpace, scale: float = 1.0) -> OperatorField:
    """The operator w -> scale * w at every point."""
    return OperatorField(space, lambda x, w: scale * np.asarray(w, dtype=float),
                         deriv=lambda x, xi, w: np.zeros_like(np.asarray(w, dtype=float)))


def dir_deriv_operator(fld: OperatorField, x, xi) -> np.ndarray:
    """Dense matrix of D_xi of an operator field at x (analytic when registered)."""
    return fld.dir_deriv_matrix(x, xi)


# ---------------------------------------------------------------------------
# projections from spanning maps


def projection_from_span(N, g, mode: str = "tangent", cond_max: float = 1e12) -> np.ndarray:
    """Return Pi = N (N^T g N)^{-1} N^T g, the g-orthogonal projection onto span(N).

    ``N`` is a dim x k matrix with injective columns, ``g`` a dim x dim SPD
    matrix.  ``mode`` records whether N spans the tangent or the normal space;
    either way the projection onto span(N) is returned (for a normal span the
    tangent projection is ``I - Pi``).
    """
    if mode not in ("tangent", "normal"):
        raise InvalidInputError(f"mode must be 'tangent' or 'normal', got {mode!r}")
    N = np.asarray(N, dtype=float)
    if N.ndim == 1:
        N = N[:, None]
    g = np.asarray(g, dtype=float)
    if g.shape != (N.shape[0], N.shape[0]):
        raise InvalidInputError(f"g has shape {g.shape}, expected {(N.shape[0],) * 2}")
    gram = N.T @ g @ N
    if not np.all(np.isfinite(gram)) or np.linalg.cond(gram) > cond_max:
        raise SingularSpanError("N^T g N is numerically singular")
    return N @ np.linalg.solve(gram, N.T @ g)


# ---------------------------------------------------------------------------
# embedded structures


@dataclass
class EmbeddedStructure:
    """Data of an embedded ambient structure.

    Required: ``proj(x, w)`` (Pi_x w) and ``metric(x, w)`` (g_x w).
    Optional analytic closures: ``metric_inv``, ``dproj(x, xi, w)``,
    ``dmetric(x, xi, w)``, ``christoffel(x, xi, w)`` (must be valid for an
    ambient second argument), ``x_raiser(x, xi, eta)``, ``gamma_E`` (the
    Christoffel function of g on the whole of E, used by Gauss-Codazzi).
    """

    name: str
    shape: tuple
    proj: Callable
    metric: Callable
    metric_inv: Optional[Callable] = None
    dproj: Optional[Callable] = None
    dmetric: Optional[Callable] = None
    christoffel_fn: Optional[Callable] = None
    x_raiser: Optional[Callable] = None
    constant_metric: bool = False
    gamma_E: Optional[Callable] = None
    membership: Optional[Callable] = None
    random_point: Optional[Callable] = None
    fd_step: float = DEFAULT_FD_STEP
    tol: float = 1e-8
    on_manifold_tol: float = 1e-8
    params: dict = field(default_factory=dict)
    generic_x_raiser: bool = False

    def __post_init__(self):
        self.shape = tuple(self.shape)
        self.space = AmbientSpace(int(np.prod(self.shape)), self.shape)

    # -- operator fields -------------------------------------------------
    @property
    def proj_field(self) -> OperatorField:
        return OperatorField(self.space, self.proj, self.dproj, self.fd_step)

    @property
    def metric_field(self) -> OperatorField:
        deriv = self.dmetric
        if deriv is None and self.constant_metric:
            deriv = lambda x, xi, w: np.zeros(self.shape)
        return OperatorField(self.space, self.metric, deriv, self.fd_step)

    def P(self, x, w):
        return np.asarray(self.proj(x, w), dtype=float)

    def g(self, x, w):
        return np.asarray(self.metric(x, w), dtype=float)

    def ginv(self, x, w):
        if self.metric_inv is not None:
            return np.asarray(self.metric_inv(x, w), dtype=float)
        G = self.metric_field.matrix(x)
        return np.linalg.solve(G, np.asarray(w, dtype=float).ravel()).reshape(self.shape)

    def DP(self, x, xi, w):
        return np.asarray(self.proj_field.dir_deriv(x, xi, w), dtype=float)

    def Dg(self, x, xi, w):
        if self.constant_metric:
            return np.zeros(self.shape)
        return np.asarray(self.metric_field.dir_deriv(x, xi, w), dtype=float)

    # -- helpers ---------------------------------------------------------
    def check_shape(self, *arrays):
        for a in arrays:
            if np.shape(a) != self.shape:
                raise InvalidInputError(f"expected shape {self.shape}, got {np.shape(a)}")

    def membership_residual(self, x) -> float:
        if self.membership is None:
            return 0.0
        return float(self.membership(x))

    def require_on_manifold(self, x, tol=None):
        tol = self.on_manifold_tol if tol is None else tol
        r = self.membership_residual(x)
        if not np.isfinite(r) or r > tol:
            raise OffManifoldError(f"{self.name}: point off manifold (residual {r:.3e})", r)

    def tangency_residual(self, x, w) -> float:
        return norm(self.P(x, w) - np.asarray(w))

    def is_tangent(self, x, w, tol=None) -> bool:
        tol = self.tol if tol is None else tol
        return self.tangency_residual(x, w) <= tol * (1.0 + norm(w))

    def has_analytic_gamma(self) -> bool:
        """True when Gamma needs no finite differences internally."""
        if self.christoffel_fn is not None:
            return True
        derivs_ok = self.dproj is not None and (self.constant_metric or self.dmetric is not None)
        raiser_ok = self.constant_metric or (self.x_raiser is not None)
        return derivs_ok and raiser_ok

    @property
    def outer_fd_step(self) -> float:
        """Step for differentiating Gamma itself (larger when Gamma is FD-based)."""
        return self.fd_step if self.has_analytic_gamma() else NESTED_FD_STEP

    def sample_point(self, rng):
        if self.random_point is None:
            raise IncompleteStructureError(f"{self.name}: no point sampler registered")
        return self.random_point(rng)

    def random_tangent(self, rng, x, normalize=True):
        """Gaussian ambient draw projected to T_xM (rejection below 1e-6)."""
        for _ in range(100):
            w = self.P(x, rng.standard_normal(self.shape))
            n = norm(w)
            if n >= 1e-6:
                return w / n if normalize else w
        raise DegenerateTangentSpaceError(f"{self.name}: could not draw a tangent vector")

    def with_generic_x_raiser(self) -> "EmbeddedStructure":
        """Copy that builds X by tangent-basis materialization when needed."""
        from dataclasses import replace
        return replace(self, generic_x_raiser=True)

    def without_christoffel(self) -> "EmbeddedStructure":
        """Copy dropping the analytic Gamma (forces assembly from Pi, g, X)."""
        from dataclasses import replace
        return replace(self, christoffel_fn=None)

    def fd_only(self) -> "EmbeddedStructure":
        """Copy keeping only Pi, g and membership: every derivative by finite differences."""
        from dataclasses import replace
        return replace(self, christoffel_fn=None, dproj=None, dmetric=None, x_raiser=None,
                       metric_inv=None, generic_x_raiser=True)


# ---------------------------------------------------------------------------
# generic formulas


def metric_inner(S: EmbeddedStructure, x, w1, w2) -> float:
    """<w1, g_x w2>."""
    return inner(w1, S.g(x, w2))


def project(S: EmbeddedStructure, x, w):
    S.check_shape(x, w)
    return S.P(x, w)


def p_field(S: EmbeddedStructure, xi, y):
    """The vector field p_xi(y) = Pi_y xi (extends a tangent xi at x)."""
    return S.P(y, xi)


def tangent_basis(S: EmbeddedStructure, x, rank_tol: float = 1e-6) -> np.ndarray:
    """Euclidean-orthonormal basis (as columns) of range(Pi_x).

    The rank is read off the trace of the projection; the basis is the leading
    left singular vectors of the materialized Pi_x.
    """
    Pm = S.proj_field.matrix(x)
    k = int(round(np.trace(Pm)))
    if k <= 0:
        raise DegenerateTangentSpaceError(f"{S.name}: projection has trace {np.trace(Pm):.3g}")
    U, s, _ = np.linalg.svd(Pm)
    if s[k - 1] < rank_tol or (k < len(s) and s[k] > 1e-3 * s[k - 1]):
        raise DegenerateTangentSpaceError(
            f"{S.name}: rank extraction failed (sigma_k={s[k - 1]:.3g})")
    return U[:, :k]


def x_raiser_generic(S: EmbeddedStructure, x, xi, eta):
    """A representative of X(xi, eta) with <X, phi> = <(D_phi g) xi, eta> on T_xM.

    The pairing is imposed on an orthonormal basis of range(Pi_x); the normal
    component is set to zero since only Pi g^{-1} X is ever consumed.
    """
    if S.constant_metric:
        return np.zeros(S.shape)
    Q = tangent_basis(S, x)
    coef = np.array([inner(S.Dg(x, q.reshape(S.shape), xi), eta) for q in Q.T])
    return (Q @ coef).reshape(S.shape)


def x_raiser(S: EmbeddedStructure, x, xi, eta):
    if S.constant_metric:
        return np.zeros(S.shape)
    if S.x_raiser is not None:
        return np.asarray(S.x_raiser(x, xi, eta), dtype=float)
    if S.generic_x_raiser:
        return x_raiser_generic(S, x, xi, eta)
    raise IncompleteStructureError(
        f"{S.name}: non-constant metric without an X closure; "
        "use with_generic_x_raiser() to opt into basis materialization")


def k_term(S: EmbeddedStructure, x, xi, w):
    """K(xi, w) = (D_xi g) w + (D_w g) xi - X(xi, w)."""
    if S.constant_metric:
        return np.zeros(S.shape)
    return S.Dg(x, xi, w) + S.Dg(x, w, xi) - x_raiser(S, x, xi, w)


def christoffel(S: EmbeddedStructure, x, xi, eta):
    """Christoffel function Gamma(xi, eta); xi is projected, eta may be ambient."""
    xi = S.P(x, xi)
    eta = np.asarray(eta, dtype=float)
    if S.christoffel_fn is not None:
        return np.asarray(S.christoffel_fn(x, xi, eta), dtype=float)
    out = -S.DP(x, xi, eta)
    if not S.constant_metric:
        out = out + 0.5 * S.P(x, S.ginv(x, k_term(S, x, xi, eta)))
    return out


def gamma_ring(S: EmbeddedStructure, x, xi, eta):
    """Gamma-ring(xi, eta) = (D_xi Pi) eta + Gamma(xi, eta).

    Equals Pi Gamma(xi, eta) on tangent pairs and vanishes for constant g.
    Evaluated in the defining (D Pi + Gamma) form, so it stays consistent
    with Gamma when differentiated.
    """
    xi = S.P(x, xi)
    return S.DP(x, xi, eta) + christoffel(S, x, xi, eta)


def gamma_ring_projected(S: EmbeddedStructure, x, xi, eta):
    """Pi Gamma(xi, eta) (the alternate expression of gamma_ring)."""
    return S.P(x, christoffel(S, x, xi, eta))


def standard_metric_extension(euclid_proj: Callable, g_R: Callable, shape, tol: float = 1e-10):
    """g_x w = (I - Pi^E_x) w + g_R,x (Pi^E_x w).

    ``euclid_proj(x, w)`` is the Euclidean projection to T_xM and ``g_R(x, w)``
    the Riemannian metric operator acting on tangent vectors.  Returns the
    metric closure ``metric(x, w)``.  ``check(x)`` validates symmetry of g_R on
    the tangent space.
    """
    shape = tuple(shape)

    def metric(x, w):
        w = np.asarray(w, dtype=float)
        pw = euclid_proj(x, w)
        return w - pw + np.asarray(g_R(x, pw), dtype=float)

    def check(x):
        space = AmbientSpace(int(np.prod(shape)), shape)
        Pm = np.column_stack([np.asarray(euclid_proj(x, e)).ravel() for e in space.basis()])
        Gm = np.column_stack([np.asarray(g_R(x, np.asarray(euclid_proj(x, e)))).ravel()
                              for e in space.basis()])
        B = Pm.T @ Gm
        if np.abs(B - B.T).max() > tol * (1 + np.abs(B).max()):
            raise InvalidMetricError("g_R is not symmetric on the tangent space")
        return True

    metric.check = check
    return metric


# ---------------------------------------------------------------------------
# invariant probes


def structure_invariants(S: EmbeddedStructure, x) -> dict:
    """Residuals of the structural invariants at a point."""
    Pm = S.proj_field.matrix(x)
    Gm = S.metric_field.matrix(x)
    GP = Gm @ Pm
    return {
        "g_symmetry": float(np.abs(Gm - Gm.T).max()),
        "g_min_eig": float(np.linalg.eigvalsh(0.5 * (Gm + Gm.T)).min()),
        "proj_idempotent": float(np.abs(Pm @ Pm - Pm).max()),
        "gP_selfadjoint": float(np.abs(GP - GP.T).max()),
    }


def bracket_p_fields(S: EmbeddedStructure, x, xi, eta):
    """[p_xi, p_eta]_x = (D_xi p_eta) - (D_eta p_xi) by finite differences."""
    return (central_diff(lambda y: S.P(y, eta), x, xi)
            - central_diff(lambda y: S.P(y, xi), x, eta))


def metric_compatibility_residual(S: EmbeddedStructure, x, xi, eta, geodesic_fn=None, t=0.0):
    """Compare d/dt <Y, gY> with 2 <nabla_c' Y, gY> for Y(t) = Pi_{c(t)} eta.

    ``geodesic_fn(s)`` returns the curve point c(s) with c(0)=x, c'(0)=xi;
    defaults to the straight line x + s xi (the identity only needs a curve
    with the right velocity to first order at the evaluation point, and Y is
    evaluated through Pi on it).
    """
    if geodesic_fn is None:
        geodesic_fn = lambda s: x + s * xi
    h = 1e-4

    def Y(s):
        return S.P(geodesic_fn(s), eta)

    def energy(s):
        c = geodesic_fn(s)
        y = Y(s)
        return inner(y, S.g(c, y))

    lhs = (energy(t + h) - energy(t - h)) / (2 * h)
    c0 = geodesic_fn(t)
    cdot = (geodesic_fn(t + h) - geodesic_fn(t - h)) / (2 * h)
    Ydot = (Y(t + h) - Y(t - h)) / (2 * h)
    y0 = Y(t)
    nabla = Ydot + christoffel(S, c0, cdot, y0)
    rhs = 2.0 * inner(nabla, S.g(c0, y0))
    return abs(lhs - rhs)

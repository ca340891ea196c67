"""Natural metrics on TM and on the horizontal bundle HM of a submersion.

Vectors of E^2 are stored as arrays of shape ``(2,) + shape`` with the base
("m") component first and the fiber ("t") component second.  Operators on E^2
are written in 2x2 block form; the base metric g is lifted to TM by

    G = [[I, Gamma[v]^T], [0, I]] diag(g, ghat) [[I, 0], [Gamma[v], I]],

where Gamma[v] w = Gamma(w, v) and ghat is the two-function family

    ghat w = alpha(|v|^2) g w + beta(|v|^2) <v, g w> g v.

For a submersion Gamma[v] is replaced by Gamma^Q[v] w = Gamma^H(ttH w, v) - B(w, v).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ambient import (
    EmbeddedStructure,
    christoffel,
    fd_step_for,
    inner,
)
from .bundles import B_operator
from .curvature import curvature_embedded
from .errors import InvalidInputError, InvalidParameterError
from .submersion import SubmersedStructure, _gammaH_raw, curvature_submersed

PARTS = ("hh", "hv", "vh", "vv")


# ---------------------------------------------------------------------------
# E^2 helpers


def pair(m, t):
    """Stack base and fiber components into one E^2 array."""
    m, t = np.asarray(m, dtype=float), np.asarray(t, dtype=float)
    if m.shape != t.shape:
        raise InvalidInputError(f"component shapes differ: {m.shape} vs {t.shape}")
    return np.stack([m, t])


def split(w):
    w = np.asarray(w, dtype=float)
    return w[0], w[1]


# ---------------------------------------------------------------------------
# profile functions


@dataclass(frozen=True)
class AlphaBeta:
    """Scalar profiles alpha, beta of |v|_g^2 with their analytic derivatives."""

    alpha: Callable[[float], float]
    beta: Callable[[float], float]
    dalpha: Callable[[float], float]
    dbeta: Callable[[float], float]
    name: str = "custom"

    def values(self, t: float):
        t = float(t)
        a = float(self.alpha(t))
        if not np.isfinite(a) or a <= 0.0:
            raise InvalidParameterError(f"alpha({t:.6g}) = {a:.6g} is not positive")
        b = float(self.beta(t))
        if not np.isfinite(b) or b < 0.0:
            raise InvalidParameterError(f"beta({t:.6g}) = {b:.6g} is negative")
        return a, b, float(self.dalpha(t)), float(self.dbeta(t))

    def validate(self, grid=None) -> bool:
        """Check alpha > 0 and beta >= 0 on a grid of |v|^2 values (default [0, 100])."""
        grid = np.linspace(0.0, 100.0, 201) if grid is None else grid
        for t in grid:
            self.values(t)
        return True

    def F(self, t, c_xi_c_eta, v_c_xi, v_c_eta) -> float:
        """(alpha + t beta)^-1 {(beta - alpha') <C xi, C eta> + (beta' - 2 alpha' beta / alpha) <v, C xi><v, C eta>}."""
        a, b, da, db = self.values(t)
        return ((b - da) * c_xi_c_eta + (db - 2.0 * da * b / a) * v_c_xi * v_c_eta) / (a + t * b)


def sasaki() -> AlphaBeta:
    return AlphaBeta(lambda t: 1.0, lambda t: 0.0, lambda t: 0.0, lambda t: 0.0, "sasaki")


def cheeger_gromoll() -> AlphaBeta:
    return AlphaBeta(lambda t: 1.0 / (1.0 + t), lambda t: 1.0 / (1.0 + t),
                     lambda t: -1.0 / (1.0 + t) ** 2, lambda t: -1.0 / (1.0 + t) ** 2,
                     "cheeger_gromoll")


PRESETS = {"sasaki": sasaki, "cheeger_gromoll": cheeger_gromoll}


def preset(name: str) -> AlphaBeta:
    if name not in PRESETS:
        raise InvalidParameterError(f"unknown metric preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name]()


def cheeger_gromoll_F(t, c_xi_c_eta, v_c_xi, v_c_eta) -> float:
    """Closed form of F for the Cheeger-Gromoll profiles."""
    return ((2.0 + t) / (1.0 + t) ** 2 * c_xi_c_eta
            + v_c_xi * v_c_eta / (1.0 + t) ** 2)


# ---------------------------------------------------------------------------
# fiber metric ghat


def norm2_g(S: EmbeddedStructure, x, v) -> float:
    return inner(v, S.g(x, v))


def ghat(S: EmbeddedStructure, ab: AlphaBeta, x, v, w):
    t = norm2_g(S, x, v)
    a, b, _, _ = ab.values(t)
    gv = S.g(x, v)
    return a * S.g(x, w) + b * inner(gv, w) * gv


def ghat_inv(S: EmbeddedStructure, ab: AlphaBeta, x, v, w):
    """Sherman-Morrison inverse of ghat."""
    t = norm2_g(S, x, v)
    a, b, _, _ = ab.values(t)
    return S.ginv(x, w) / a - b / (a * (a + b * t)) * inner(v, w) * np.asarray(v, dtype=float)


def _dense(fun, shape):
    """Materialize a linear map on arrays of ``shape`` as a matrix."""
    dim = int(np.prod(shape))
    cols = []
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        cols.append(np.asarray(fun(e.reshape(shape)), dtype=float).ravel())
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# the natural metric on TM


def gamma_op(S: EmbeddedStructure, x, v, w):
    """Gamma[v] w = Gamma(w, v)."""
    return christoffel(S, x, w, v)


def gamma_op_matrix(S: EmbeddedStructure, x, v) -> np.ndarray:
    return _dense(lambda w: gamma_op(S, x, v, w), S.shape)


class _BlockMetric:
    """[[I, L^T], [0, I]] diag(g, ghat) [[I, 0], [L, I]] for a dense L."""

    def __init__(self, S, ab, x, v, L, Pm, Pf):
        self.S, self.ab, self.x, self.v = S, ab, np.asarray(x, float), np.asarray(v, float)
        self.L = L
        self.Pm, self.Pf = Pm, Pf  # base and fiber projections (callables)
        self.shape = S.shape

    def _L(self, w):
        return (self.L @ np.asarray(w).ravel()).reshape(self.shape)

    def _LT(self, w):
        return (self.L.T @ np.asarray(w).ravel()).reshape(self.shape)

    def apply(self, w2):
        wm, wt = split(w2)
        c = ghat(self.S, self.ab, self.x, self.v, self._L(wm) + wt)
        return pair(self.S.g(self.x, wm) + self._LT(c), c)

    def apply_inv(self, w2):
        wm, wt = split(w2)
        a = self.S.ginv(self.x, wm - self._LT(wt))
        b = ghat_inv(self.S, self.ab, self.x, self.v, wt)
        return pair(a, b - self._L(a))

    def project(self, w2):
        wm, wt = split(w2)
        pm = self.Pm(wm)
        return pair(pm, -self._L(pm) + self.Pf(self._L(wm) + wt))

    def matrix(self):
        return _dense(self.apply, (2,) + tuple(self.shape))

    def inverse_matrix(self):
        return _dense(self.apply_inv, (2,) + tuple(self.shape))

    def projection_matrix(self):
        return _dense(self.project, (2,) + tuple(self.shape))


def _require_TM(S, x, v, tol=1e-8):
    S.check_shape(x, v)
    S.require_on_manifold(x)
    if not S.is_tangent(x, v, tol):
        raise InvalidInputError(f"{S.name}: v is not tangent (residual {S.tangency_residual(x, v):.3e})")


def tangent_bundle_metric(S: EmbeddedStructure, ab: AlphaBeta, x, v, check=True) -> _BlockMetric:
    """G, G^{-1} and Pi_G at (x, v) in TM (fiber projection Pi_ghat = Pi_g)."""
    if check:
        _require_TM(S, x, v)
    L = gamma_op_matrix(S, x, v)
    P = lambda w: S.P(x, w)
    return _BlockMetric(S, ab, x, v, L, P, P)


def build_G(S: EmbeddedStructure, ab: AlphaBeta, x, v) -> np.ndarray:
    """Dense matrix of G at (x, v) acting on raveled E^2 arrays."""
    return tangent_bundle_metric(S, ab, x, v).matrix()


def G_inverse(S: EmbeddedStructure, ab: AlphaBeta, x, v) -> np.ndarray:
    return tangent_bundle_metric(S, ab, x, v).inverse_matrix()


def project_G(S: EmbeddedStructure, ab: AlphaBeta, x, v, w2):
    """Pi_G (w_m, w_t) = (Pi w_m, (-Gamma[v] Pi + Pi Gamma[v]) w_m + Pi w_t)."""
    wm, wt = split(w2)
    pm = S.P(x, wm)
    return pair(pm, -gamma_op(S, x, v, pm) + S.P(x, gamma_op(S, x, v, wm) + wt))


def lifts(S: EmbeddedStructure, x, v, xi, check=True):
    """(xi^h, xi^v) = ((xi, -Gamma(xi, v)), (0, xi))."""
    xi = np.asarray(xi, dtype=float)
    if check and not S.is_tangent(x, xi, max(S.tol, 1e-7)):
        raise InvalidInputError(f"{S.name}: xi is not tangent")
    return pair(xi, -christoffel(S, x, xi, v)), pair(np.zeros_like(xi), xi)


def connection(S: EmbeddedStructure, x, v, w2):
    """C (w_m, w_t) = w_t + Gamma(w_m, v)."""
    wm, wt = split(w2)
    return wt + christoffel(S, x, wm, v)


def dpi(w2):
    return split(w2)[0]


def decompose_TM(S: EmbeddedStructure, x, v, w2):
    """w = (w_m)^h + (C w)^v."""
    wm, _ = split(w2)
    h, _ = lifts(S, x, v, wm, check=False)
    return h, pair(np.zeros_like(wm), connection(S, x, v, w2))


def _frozen(S, fun, x, xi):
    h = fd_step_for(x, xi, S.outer_fd_step)
    return (fun(x + h * xi) - fun(x - h * xi)) / (2.0 * h)


def _vv_t(S, ab, x, v, cxi, ceta, g_inner):
    t = g_inner(v, v)
    a, _, da, _ = ab.values(t)
    vcx, vce = g_inner(v, cxi), g_inner(v, ceta)
    F = ab.F(t, g_inner(cxi, ceta), vcx, vce)
    return da / a * (vce * cxi + vcx * ceta) + F * np.asarray(v, dtype=float)


def gamma_G_parts(S: EmbeddedStructure, ab: AlphaBeta, x, v, xi2, eta2, curvature=None) -> dict:
    """The four lift components of Gamma_G(xi~, eta~) at (x, v).

    ``curvature(x, a, b, c)`` returns R_{a,b} c; defaults to the generic
    curvature of S.
    """
    x, v = np.asarray(x, float), np.asarray(v, float)
    if curvature is None:
        curvature = lambda y, a, b, c: curvature_embedded(S, y, a, b, c, check=False)
    xm, _ = split(xi2)
    em, _ = split(eta2)
    cxi, ceta = connection(S, x, v, xi2), connection(S, x, v, eta2)
    G = lambda a, b: christoffel(S, x, a, b)
    gi = lambda a, b: inner(a, S.g(x, b))
    a_ = ab.values(norm2_g(S, x, v))[0]

    dG = _frozen(S, lambda y: christoffel(S, y, em, v), x, xm)
    gxe = G(xm, em)
    hh = pair(gxe, -G(gxe, v) + dG - G(em, G(xm, v)) + 0.5 * curvature(x, xm, em, v))
    r1 = curvature(x, v, ceta, xm)
    hv = pair(-0.5 * a_ * r1, 0.5 * a_ * G(r1, v) + G(xm, ceta))
    r2 = curvature(x, v, cxi, em)
    vh = pair(-0.5 * a_ * r2, 0.5 * a_ * G(r2, v) + G(cxi, em))
    vv = pair(np.zeros_like(v), _vv_t(S, ab, x, v, cxi, ceta, gi))
    return {"hh": hh, "hv": hv, "vh": vh, "vv": vv}


def gamma_G(S: EmbeddedStructure, ab: AlphaBeta, x, v, xi2, eta2, curvature=None):
    """Christoffel function of G at (x, v) on tangent vectors of TM."""
    parts = gamma_G_parts(S, ab, x, v, xi2, eta2, curvature)
    return sum(parts[k] for k in PARTS)


def tangent_bundle_structure(S: EmbeddedStructure, ab: AlphaBeta,
                             with_christoffel: bool = False) -> EmbeddedStructure:
    """TM as an embedded ambient structure in E^2 with metric G and projection Pi_G.

    Without ``with_christoffel`` all derivatives (and hence the Christoffel
    function) are assembled generically by finite differences, giving an
    independent reference for :func:`gamma_G`.
    """
    shape2 = (2,) + tuple(S.shape)

    def proj(z, w):
        x, v = split(z)
        return project_G(S, ab, x, v, w)

    def metric(z, w):
        x, v = split(z)
        return tangent_bundle_metric(S, ab, x, v, check=False).apply(w)

    def metric_inv(z, w):
        x, v = split(z)
        return tangent_bundle_metric(S, ab, x, v, check=False).apply_inv(w)

    def membership(z):
        x, v = split(z)
        return S.membership_residual(x) + S.tangency_residual(x, v)

    def random_point(rng):
        x = S.sample_point(rng)
        return pair(x, S.random_tangent(rng, x, normalize=False))

    chris = None
    if with_christoffel:
        def chris(z, a, b):
            x, v = split(z)
            return gamma_G(S, ab, x, v, a, b)

    return EmbeddedStructure(
        name=f"T{S.name}[{ab.name}]", shape=shape2, proj=proj, metric=metric,
        metric_inv=metric_inv, christoffel_fn=chris, membership=membership,
        random_point=random_point, generic_x_raiser=True, fd_step=1e-5,
        params={"base": S.name, "profile": ab.name})


def kernel_orthogonality(S: EmbeddedStructure, ab: AlphaBeta, x, v, xi, eta) -> float:
    """|<xi^h, G eta^v>|: the kernels of d pi and C are G-orthogonal."""
    Gm = tangent_bundle_metric(S, ab, x, v)
    h, _ = lifts(S, x, v, xi)
    _, vv = lifts(S, x, v, eta)
    return abs(inner(h, Gm.apply(vv)))


# ---------------------------------------------------------------------------
# the natural metric on HM


def gamma_Q_op(Ssub: SubmersedStructure, x, v, w):
    """Gamma^Q[v] w = Gamma^H(ttH w, v) - B(w, v)."""
    w = np.asarray(w, dtype=float)
    if Ssub.gammaQ_fn is not None:
        return np.asarray(Ssub.gammaQ_fn(x, w, v), dtype=float)
    return gamma_Q_generic(Ssub, x, v, w)


def gamma_Q_generic(Ssub: SubmersedStructure, x, v, w):
    w = np.asarray(w, dtype=float)
    return (_gammaH_raw(Ssub, x, Ssub.ttH(x, w), v)
            - B_operator(Ssub, x, v, Ssub.ttV(x, w)))


def _require_HM(Ssub, x, v):
    _require_TM(Ssub.total, x, v)
    Ssub.require_horizontal(x, v)


def horizontal_bundle_metric(Ssub: SubmersedStructure, ab: AlphaBeta, x, v,
                             check=True) -> _BlockMetric:
    """G_Q at (x, v) in HM; its ``project`` is ttH_G (the fiber projection ttH_ghat = ttH)."""
    if check:
        _require_HM(Ssub, x, v)
    S = Ssub.total
    L = _dense(lambda w: gamma_Q_op(Ssub, x, v, w), S.shape)
    H = lambda w: Ssub.ttH(x, w)
    return _BlockMetric(S, ab, x, v, L, H, H)


def build_GQ(Ssub: SubmersedStructure, ab: AlphaBeta, x, v) -> np.ndarray:
    return horizontal_bundle_metric(Ssub, ab, x, v).matrix()


def ttH_G(Ssub: SubmersedStructure, ab: AlphaBeta, x, v, w2):
    return horizontal_bundle_metric(Ssub, ab, x, v, check=False).project(w2)


def lifts_Q(Ssub: SubmersedStructure, x, v, xi, check=True):
    """(xi^h, xi^v) = ((xi, -Gamma^Q(xi, v)), (0, xi)) for horizontal xi."""
    xi = np.asarray(xi, dtype=float)
    if check:
        Ssub.require_horizontal(x, xi)
    return pair(xi, -gamma_Q_op(Ssub, x, v, xi)), pair(np.zeros_like(xi), xi)


def b_lift(Ssub: SubmersedStructure, x, v, eps):
    """eps^b = (eps, B(eps, v)) for vertical eps."""
    eps = np.asarray(eps, dtype=float)
    return pair(eps, B_operator(Ssub, x, v, eps))


def connection_Q(Ssub: SubmersedStructure, x, v, w2):
    wm, wt = split(w2)
    return wt + _gammaH_raw(Ssub, x, wm, v)


def gamma_HQ_parts(Ssub: SubmersedStructure, ab: AlphaBeta, x, v, xi2, eta2,
                   curvature=None, dgammaQ=None, registered_gammaQ: bool = False) -> dict:
    """The four lift components of the horizontal Christoffel function of G_Q.

    ``curvature(x, a, b, c)`` returns R^H_{a,b} c (default: generic);
    ``dgammaQ(x, xi, eta, v)`` returns (D_xi Gamma^Q)(eta, v) (default:
    frozen-argument central difference).

    The derivative and Gamma^Q(Gamma^H(., .), v) terms see Gamma^Q off the
    horizontal space (normal first argument, non-horizontal v), so they are
    evaluated with the projected extension Gamma^H(ttH w, v) - B(w, v), which
    is the one consistent with Gamma^Q[w] eta = Gamma^H(eta, w) used by the
    other parts.  ``registered_gammaQ`` switches to the structure's own
    closed form instead (only meaningful together with a matching
    ``dgammaQ``).

    In the vh part the tangent component carries Gamma^H(eta_m, C xi~): the
    field direction is the first slot of Gamma^Q[.] and Gamma^H is not
    symmetric on horizontal pairs (the two orders differ by 2 A).
    """
    S = Ssub.total
    x, v = np.asarray(x, float), np.asarray(v, float)
    if curvature is None:
        curvature = lambda y, a, b, c: curvature_submersed(Ssub, y, a, b, c, check=False)
    xm, _ = split(xi2)
    em, _ = split(eta2)
    cxi, ceta = connection_Q(Ssub, x, v, xi2), connection_Q(Ssub, x, v, eta2)
    GH = lambda a, b: _gammaH_raw(Ssub, x, a, b)
    gq = gamma_Q_op if registered_gammaQ else gamma_Q_generic
    GQ = lambda a: gq(Ssub, x, v, a)
    gi = lambda a, b: inner(a, S.g(x, b))
    a_ = ab.values(norm2_g(S, x, v))[0]

    if dgammaQ is None:
        dG = _frozen(S, lambda y: gq(Ssub, y, v, em), x, xm)
    else:
        dG = np.asarray(dgammaQ(x, xm, em, v), dtype=float)
    gxe = GH(xm, em)
    hh = pair(gxe, -GQ(gxe) + dG - GH(em, GH(xm, v)) + 0.5 * curvature(x, xm, em, v))
    r1 = curvature(x, v, ceta, xm)
    hv = pair(-0.5 * a_ * r1, 0.5 * a_ * GH(r1, v) + GH(xm, ceta))
    r2 = curvature(x, v, cxi, em)
    vh = pair(-0.5 * a_ * r2, 0.5 * a_ * GH(r2, v) + GH(em, cxi))
    vv = pair(np.zeros_like(v), _vv_t(S, ab, x, v, cxi, ceta, gi))
    return {"hh": hh, "hv": hv, "vh": vh, "vv": vv}


def gamma_HQ(Ssub: SubmersedStructure, ab: AlphaBeta, x, v, xi2, eta2, check=True, **kw):
    """Horizontal Christoffel function of G_Q on elements of QHM."""
    if check:
        from .bundles import is_QHM
        for q in (xi2, eta2):
            rep = is_QHM(Ssub, (x, v, q[0], q[1]), tol=1e-7)
            if not rep["passed"]:
                from .errors import MembershipError
                raise MembershipError(f"{Ssub.name}: argument not in QHM "
                                      f"(max residual {rep['max']:.3e})", rep)
    parts = gamma_HQ_parts(Ssub, ab, x, v, xi2, eta2, **kw)
    return sum(parts[k] for k in PARTS)


def _field_deriv(X, Y, x, h=1e-5):
    """D_{X(x)} Y at x by central differences along X(x)."""
    d = X(x)
    s = fd_step_for(x, d, h)
    return (Y(x + s * d) - Y(x - s * d)) / (2.0 * s)


def nabla_QHM_lifts(Ssub: SubmersedStructure, ab: AlphaBeta, x, v, X: Callable,
                    Y: Callable, which: str, curvature=None):
    """ttQ nabla~ of lifted horizontal fields, from the lift formulas.

    ``X`` and ``Y`` are horizontal vector fields on the total space given as
    callables y -> X(y); directional derivatives are taken numerically.
    """
    if which not in PARTS:
        raise InvalidInputError(f"unknown lift combination {which!r}")
    S = Ssub.total
    x, v = np.asarray(x, float), np.asarray(v, float)
    if curvature is None:
        curvature = lambda y, a, b, c: curvature_submersed(Ssub, y, a, b, c, check=False)
    Xx, Yx = np.asarray(X(x), float), np.asarray(Y(x), float)
    Ssub.require_horizontal(x, Xx, Yx, tol=1e-7)
    t = norm2_g(S, x, v)
    a, _, da, _ = ab.values(t)
    hl = lambda w: lifts_Q(Ssub, x, v, w, check=False)[0]
    vl = lambda w: pair(np.zeros_like(w), w)
    nablaH = lambda: Ssub.ttH(x, _field_deriv(X, Y, x) + christoffel(S, x, Xx, Yx))
    if which == "hh":
        return hl(nablaH()) + vl(0.5 * curvature(x, Xx, Yx, v))
    if which == "hv":
        return vl(nablaH()) - 0.5 * a * hl(curvature(x, v, Yx, Xx))
    if which == "vh":
        return -0.5 * a * hl(curvature(x, v, Xx, Yx))
    gi = lambda p, q: inner(p, S.g(x, q))
    return vl(_vv_t(S, ab, x, v, Xx, Yx, gi))


def lifted_field(Ssub: SubmersedStructure, X: Callable, kind: str):
    """Extension to E^2 of the h- or v-lift of a horizontal field X."""
    if kind == "h":
        def F(z):
            y, w = split(z)
            Xy = X(y)
            return pair(Xy, -gamma_Q_op(Ssub, y, w, Xy))
    elif kind == "v":
        def F(z):
            y, _ = split(z)
            Xy = X(y)
            return pair(np.zeros_like(Xy), Xy)
    else:
        raise InvalidInputError(f"unknown lift kind {kind!r}")
    return F


def nabla_via_gamma_HQ(Ssub: SubmersedStructure, ab: AlphaBeta, x, v, X, Y, which: str, **kw):
    """D_{X~} Y~ + Gamma^H_{G_Q}(X~, Y~) for the lifted fields selected by ``which``."""
    if which not in PARTS:
        raise InvalidInputError(f"unknown lift combination {which!r}")
    Xt = lifted_field(Ssub, X, which[0])
    Yt = lifted_field(Ssub, Y, which[1])
    z = pair(x, v)
    D = _field_deriv(Xt, Yt, z)
    return D + gamma_HQ(Ssub, ab, x, v, Xt(z), Yt(z), check=False, **kw)


def hh_vertical_part(Ssub: SubmersedStructure, ab: AlphaBeta, x, v, X, Y, **kw):
    """C^Q of ttQ nabla~_{X^h} Y^h (should be 1/2 R^H_{X,Y} v)."""
    out = nabla_via_gamma_HQ(Ssub, ab, x, v, X, Y, "hh", **kw)
    return connection_Q(Ssub, x, v, out)


def horizontal_p_field(Ssub: SubmersedStructure, xi):
    """The horizontal field y -> ttH_y xi."""
    xi = np.asarray(xi, dtype=float)
    return lambda y: Ssub.ttH(y, xi)

"""Catalog of closed-form example manifolds.

Each constructor returns a :class:`CatalogEntry` holding the embedded (and,
for quotients, submersed) structure, seeded samplers and the closed-form
expressions that the generic pipelines are checked against.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .ambient import EmbeddedStructure
from .curvature import zero_gamma_E
from .errors import InvalidParameterError
from .matfun import csr, expm, frechet, ssr
from .submersion import SubmersedStructure


def sym(a):
    return 0.5 * (a + a.T)


def skew(a):
    return 0.5 * (a - a.T)


def _qr_orthonormal(rng, n, p):
    q, r = np.linalg.qr(rng.standard_normal((n, p)))
    return q * np.sign(np.diag(r))


@dataclass
class CatalogEntry:
    name: str
    params: dict
    structure: EmbeddedStructure
    submersed: Optional[SubmersedStructure] = None
    liedata: object = None
    closed: dict = field(default_factory=dict)

    def random_point(self, rng):
        return self.structure.sample_point(rng)

    def random_tangent(self, rng, x, normalize=True):
        return self.structure.random_tangent(rng, x, normalize)

    def random_horizontal(self, rng, x, normalize=True):
        from .submersion import random_horizontal
        return random_horizontal(self.submersed, rng, x, normalize)


# ---------------------------------------------------------------------------
# sphere


def sphere(n: int) -> CatalogEntry:
    """Unit sphere S^{n-1} in R^n with the induced metric."""
    if int(n) != n or n < 2:
        raise InvalidParameterError(f"sphere needs n >= 2, got {n}")
    n = int(n)

    def proj(x, w):
        return w - x * (x @ w)

    def dproj(x, xi, w):
        return -xi * (x @ w) - x * (xi @ w)

    def gamma(x, xi, w):
        return x * (xi @ w)

    def random_point(rng):
        x = rng.standard_normal(n)
        return x / np.linalg.norm(x)

    S = EmbeddedStructure(
        name="sphere", shape=(n,), proj=proj, metric=lambda x, w: np.asarray(w, dtype=float),
        metric_inv=lambda x, w: np.asarray(w, dtype=float), dproj=dproj, christoffel_fn=gamma,
        constant_metric=True, gamma_E=zero_gamma_E((n,)),
        membership=lambda x: abs(float(x @ x) - 1.0), random_point=random_point,
        params={"n": n})

    def geodesic(x, v, t):
        s = np.linalg.norm(v)
        if s == 0:
            return x.copy(), v.copy()
        return (x * np.cos(t * s) + v * np.sin(t * s) / s,
                -x * s * np.sin(t * s) + v * np.cos(t * s))

    def curvature(x, xi, eta, phi):
        return (xi @ phi) * eta - (eta @ phi) * xi

    return CatalogEntry("sphere", {"n": n}, S,
                        closed={"geodesic": geodesic, "curvature": curvature})


# ---------------------------------------------------------------------------
# SO(n)


def so_n(n: int) -> CatalogEntry:
    """SO(n) in R^{n x n} with the constant metric operator g = 1/2 I."""
    if int(n) != n or n < 2:
        raise InvalidParameterError(f"so_n needs n >= 2, got {n}")
    n = int(n)

    def proj(U, w):
        return 0.5 * (w - U @ w.T @ U)

    def dproj(U, xi, w):
        return -0.5 * (xi @ w.T @ U + U @ w.T @ xi)

    def gamma(U, xi, w):
        return 0.5 * (xi @ w.T @ U + U @ w.T @ xi)

    def membership(U):
        return float(np.linalg.norm(U.T @ U - np.eye(n)) + abs(np.linalg.det(U) - 1.0))

    def random_point(rng):
        U = _qr_orthonormal(rng, n, n)
        if np.linalg.det(U) < 0:
            U[:, 0] = -U[:, 0]
        return U

    S = EmbeddedStructure(
        name="so_n", shape=(n, n), proj=proj, metric=lambda U, w: 0.5 * np.asarray(w, dtype=float),
        metric_inv=lambda U, w: 2.0 * np.asarray(w, dtype=float), dproj=dproj,
        christoffel_fn=gamma, constant_metric=True, gamma_E=zero_gamma_E((n, n)),
        membership=membership, random_point=random_point, params={"n": n})

    def geodesic(U, eta, t):
        A = U.T @ eta
        G = U @ expm(t * A)
        return G, G @ A

    def curvature(U, xi, eta, phi):
        A, B, C = U.T @ xi, U.T @ eta, U.T @ phi
        AB = A @ B - B @ A
        return 0.25 * U @ (AB @ C - C @ AB)

    def span_adjoint(U, w):
        # N: a -> U a on antisymmetric a; N^T w = skew(U^T w) under g = I/2
        return skew(U.T @ w)

    from .jacobi import jacobi_son
    return CatalogEntry("so_n", {"n": n}, S,
                        closed={"geodesic": geodesic, "curvature": curvature,
                                "jacobi": jacobi_son, "span_adjoint": span_adjoint})


# ---------------------------------------------------------------------------
# Sasaki metric on T S^{n-1}


def sasaki_sphere_tangent(n: int) -> CatalogEntry:
    """T S^{n-1} in R^{2n} with the Sasaki metric operator.

    Points and vectors are flat arrays (x, v) of length 2n.
    """
    if int(n) != n or n < 2:
        raise InvalidParameterError(f"sasaki_sphere_tangent needs n >= 2, got {n}")
    n = int(n)

    def split(w):
        return w[:n], w[n:]

    def proj(z, w):
        x, v = split(z)
        wm, wt = split(w)
        return np.concatenate([wm - x * (x @ wm), -x * (v @ wm) + wt - x * (x @ wt)])

    def dproj(z, xi, w):
        x, v = split(z)
        xm, xt = split(xi)
        wm, wt = split(w)
        top = -xm * (x @ wm) - x * (xm @ wm)
        bot = -xm * (v @ wm) - x * (xt @ wm) - xm * (x @ wt) - x * (xm @ wt)
        return np.concatenate([top, bot])

    def metric(z, w):
        x, v = split(z)
        wm, wt = split(w)
        return np.concatenate([wm + v * (v @ wm) + v * (x @ wt), x * (v @ wm) + wt])

    def metric_inv(z, w):
        x, v = split(z)
        wm, wt = split(w)
        return np.concatenate([wm - v * (x @ wt),
                               -x * (v @ wm) + wt + x * ((v @ v) * (x @ wt))])

    def dmetric(z, phi, w):
        x, v = split(z)
        pm, pt = split(phi)
        wm, wt = split(w)
        top = pt * (v @ wm) + v * (pt @ wm) + pt * (x @ wt) + v * (pm @ wt)
        bot = pm * (v @ wm) + x * (pt @ wm)
        return np.concatenate([top, bot])

    def x_raiser(z, xi, eta):
        x, v = split(z)
        xm, xt = split(xi)
        em, et = split(eta)
        return np.concatenate([xt * (em @ v) + et * (xm @ v),
                               em * (xm @ v + xt @ x) + xm * (em @ v + et @ x)])

    def membership(z):
        x, v = split(z)
        return abs(float(x @ x) - 1.0) + abs(float(x @ v))

    def random_point(rng):
        x = rng.standard_normal(n)
        x /= np.linalg.norm(x)
        v = rng.standard_normal(n)
        v -= x * (x @ v)
        return np.concatenate([x, v])

    S = EmbeddedStructure(
        name="sasaki_sphere_tangent", shape=(2 * n,), proj=proj, metric=metric,
        metric_inv=metric_inv, dproj=dproj, dmetric=dmetric, x_raiser=x_raiser,
        membership=membership, random_point=random_point, params={"n": n})

    def normal_span(z):
        x, _ = split(z)
        N = np.zeros((2 * n, 2))
        N[:n, 0] = x
        N[n:, 1] = x
        return N

    def proj_matrix(z):
        x, v = split(z)
        I = np.eye(n)
        return np.block([[I - np.outer(x, x), np.zeros((n, n))],
                         [-np.outer(x, v), I - np.outer(x, x)]])

    def metric_matrix(z):
        x, v = split(z)
        return np.block([[np.eye(n) + np.outer(v, v), np.outer(v, x)],
                         [np.outer(x, v), np.eye(n)]])

    return CatalogEntry("sasaki_sphere_tangent", {"n": n}, S,
                        closed={"normal_span": normal_span, "proj_matrix": proj_matrix,
                                "metric_matrix": metric_matrix})


# ---------------------------------------------------------------------------
# Stiefel with the alpha metric


def stiefel(n: int, p: int, alpha: float = 1.0) -> CatalogEntry:
    """St(p, n) in R^{n x p} with g w = w + (alpha - 1) Y Y^T w."""
    if int(n) != n or int(p) != p or not (n > p >= 1):
        raise InvalidParameterError(f"stiefel needs n > p >= 1, got n={n}, p={p}")
    alpha = float(alpha)
    if not alpha > 0:
        raise InvalidParameterError(f"stiefel needs alpha > 0, got {alpha}")
    n, p = int(n), int(p)
    a1 = alpha - 1.0

    def proj(Y, w):
        return w - Y @ sym(Y.T @ w)

    def dproj(Y, xi, w):
        return -xi @ sym(Y.T @ w) - Y @ sym(xi.T @ w)

    def metric(Y, w):
        return w + a1 * Y @ (Y.T @ w)

    def metric_inv(Y, w):
        return w + (1.0 / alpha - 1.0) * Y @ (Y.T @ w)

    def dmetric(Y, phi, w):
        return a1 * (phi @ (Y.T @ w) + Y @ (phi.T @ w))

    def x_raiser(Y, xi, eta):
        return a1 * (eta @ (xi.T @ Y) + xi @ (eta.T @ Y))

    def membership(Y):
        return float(np.linalg.norm(Y.T @ Y - np.eye(p)))

    constant = alpha == 1.0
    gamma = None
    if constant:
        def gamma(Y, xi, w):
            return xi @ sym(Y.T @ w) + Y @ sym(xi.T @ w)

    S = EmbeddedStructure(
        name="stiefel", shape=(n, p), proj=proj, metric=metric, metric_inv=metric_inv,
        dproj=dproj, dmetric=None if constant else dmetric,
        x_raiser=None if constant else x_raiser, christoffel_fn=gamma,
        constant_metric=constant, gamma_E=zero_gamma_E((n, p)) if constant else None,
        membership=membership, random_point=lambda rng: _qr_orthonormal(rng, n, p),
        params={"n": n, "p": p, "alpha": alpha})
    return CatalogEntry("stiefel", {"n": n, "p": p, "alpha": alpha}, S)


# ---------------------------------------------------------------------------
# flag manifolds as quotients of SO(n)


def _check_partition(n, partition):
    partition = tuple(int(d) for d in partition)
    if not partition or any(d <= 0 for d in partition) or sum(partition) != n:
        raise InvalidParameterError(f"partition {partition} must be positive and sum to {n}")
    if len(partition) < 2:
        raise InvalidParameterError("partition needs at least two blocks")
    return partition


def block_indicators(partition):
    """Diagonal 0/1 matrices K_i selecting the diagonal blocks."""
    n = sum(partition)
    out = []
    start = 0
    for d in partition:
        K = np.zeros((n, n))
        K[start:start + d, start:start + d] = np.eye(d)
        out.append(K)
        start += d
    return out


def flag(n: int, partition) -> CatalogEntry:
    """Flag manifold SO(n) / S(O(d_1) x ... x O(d_q)) via horizontal lifts in SO(n)."""
    base = so_n(n)
    n = int(n)
    partition = _check_partition(n, partition)
    Ks = block_indicators(partition)
    # sum_i K_i M K_i = M * mask with mask the 0/1 block-diagonal pattern
    mask = sum(K @ np.ones((n, n)) @ K for K in Ks)

    def kpart(M):
        return M * mask

    def bpart(M):
        return M - M * mask

    def ttH(U, w):
        s = U.T @ w - w.T @ U
        return 0.5 * (w - U @ w.T @ U - U @ kpart(s))

    def ttV(U, w):
        return 0.5 * U @ kpart(U.T @ w - w.T @ U)

    def dttH(U, xi, w):
        return -0.5 * (xi @ w.T @ U + U @ w.T @ xi + xi @ kpart(U.T @ w - w.T @ U)
                       + U @ kpart(xi.T @ w - w.T @ xi))

    def gammaH(U, xi, w):
        # Gamma-ring vanishes on SO(n) (constant metric), so Gamma^H = -(D_xi ttH) w
        return -dttH(U, xi, w)

    def vertical_span_fn(U):
        cols = []
        for i in range(n):
            for j in range(i + 1, n):
                if mask[i, j]:
                    D = np.zeros((n, n))
                    D[i, j], D[j, i] = 1.0, -1.0
                    cols.append((U @ D).ravel())
        return np.column_stack(cols) if cols else np.zeros((n * n, 0))

    sub = SubmersedStructure(base.structure, ttH_fn=ttH, ttV_fn=ttV, dttH=dttH,
                             vertical_span=vertical_span_fn, gammaH_fn=gammaH, name="flag",
                             params={"n": n, "partition": list(partition)})

    def curvature(U, xi, eta, phi):
        A, B, C = U.T @ xi, U.T @ eta, U.T @ phi
        br = lambda X, Y: X @ Y - Y @ X
        AB = br(A, B)
        return 0.25 * U @ (bpart(br(AB, C)) + 2 * br(kpart(AB), C)
                           - br(kpart(br(B, C)), A) - br(kpart(br(C, A)), B))

    def curvature_natret(U, xi, eta, phi):
        # 4R = U{4[[A,B]_k, C] - [A,[B,C]_b]_b - [B,[C,A]_b]_b + 2[[A,B]_b, C]_b}
        A, B, C = U.T @ xi, U.T @ eta, U.T @ phi
        br = lambda X, Y: X @ Y - Y @ X
        return 0.25 * U @ (4 * br(kpart(br(A, B)), C) - bpart(br(A, bpart(br(B, C))))
                           - bpart(br(B, bpart(br(C, A)))) + 2 * bpart(br(bpart(br(A, B)), C)))

    def oneil_A(U, xi, eta):
        A, B = U.T @ xi, U.T @ eta
        return 0.5 * U @ kpart(A @ B - B @ A)

    def gamma_h_closed(U, xi, eta):
        A, B = U.T @ xi, U.T @ eta
        return 0.5 * U @ (A @ B.T + B.T @ A + A @ kpart(B - B.T) + kpart(A.T @ B - B.T @ A))

    def b_map_closed(U, eta, eps):
        return eta @ (U.T @ eps)

    from .jacobi import flag_liedata
    L = flag_liedata(n, partition)
    return CatalogEntry("flag", {"n": n, "partition": list(partition)}, base.structure,
                        submersed=sub, liedata=L,
                        closed={"curvature": curvature, "curvature_natret": curvature_natret,
                                "oneil_A": oneil_A, "gamma_h": gamma_h_closed,
                                "b_map": b_map_closed, "geodesic": base.closed["geodesic"],
                                "kpart": kpart, "bpart": bpart})


# ---------------------------------------------------------------------------
# Grassmann as a quotient of the Stiefel manifold


def grassmann(n: int, p: int) -> CatalogEntry:
    """Gr(p, n) = St(p, n) / O(p) with horizontal lifts Y^T eta = 0."""
    base = stiefel(n, p, 1.0)
    n, p = int(n), int(p)

    def ttH(Y, w):
        return w - Y @ (Y.T @ w)

    def ttV(Y, w):
        return Y @ skew(Y.T @ w)

    def dttH(Y, xi, w):
        return -xi @ (Y.T @ w) - Y @ (xi.T @ w)

    def gammaH(Y, xi, w):
        return Y @ (xi.T @ w) + xi @ (Y.T @ w)

    def gammaQ(Y, w, v):
        # Gamma^Q[v] w = Y w^T v - v Y^T w
        return Y @ (w.T @ v) - v @ (Y.T @ w)

    def vertical_span_fn(Y):
        cols = []
        for i in range(p):
            for j in range(i + 1, p):
                b = np.zeros((p, p))
                b[i, j], b[j, i] = 1.0, -1.0
                cols.append((Y @ b).ravel())
        return np.column_stack(cols) if cols else np.zeros((n * p, 0))

    sub = SubmersedStructure(base.structure, ttH_fn=ttH, ttV_fn=ttV, dttH=dttH,
                             vertical_span=vertical_span_fn, gammaH_fn=gammaH, gammaQ_fn=gammaQ,
                             name="grassmann", params={"n": n, "p": p})

    def geodesic(Y, eta, t):
        M = t * t * (eta.T @ eta)
        c, s = csr(M), ssr(M)
        return (Y @ c + t * eta @ s, eta @ c - t * Y @ (eta.T @ eta) @ s)

    def curvature(Y, xi, eta, phi):
        return (-xi @ (eta.T @ phi) + eta @ (xi.T @ phi)
                + phi @ (xi.T @ eta) - phi @ (eta.T @ xi))

    def oneil_A(Y, xi, eta):
        return -0.5 * Y @ (xi.T @ eta - eta.T @ xi)

    def sectional_numerator(B1, B2):
        return (np.linalg.norm(B2.T @ B1 - B1.T @ B2) ** 2
                + np.linalg.norm(B1 @ B2.T - B2 @ B1.T) ** 2)

    def complement(Y, rng=None):
        """Orthonormal Y_perp; a random rotation of it when ``rng`` is given."""
        U, _, _ = np.linalg.svd(np.eye(n) - Y @ Y.T)
        Yp = U[:, : n - p]
        if rng is not None:
            Yp = Yp @ _qr_orthonormal(rng, n - p, n - p)
        return Yp

    def b_map_closed(Y, eta, eps):
        return eta @ (Y.T @ eps)

    def flip_closed(Y, eta, dm, dt):
        return Y, dm, eta, dt + Y @ (dm.T @ eta - eta.T @ dm)

    def connection_q_closed(Y, eta, dm, dt):
        return dt + Y @ (dm.T @ eta)

    from .jacobi import jacobi_grassmann
    return CatalogEntry("grassmann", {"n": n, "p": p}, base.structure, submersed=sub,
                        closed={"geodesic": geodesic, "curvature": curvature,
                                "oneil_A": oneil_A, "sectional_numerator": sectional_numerator,
                                "complement": complement, "b_map": b_map_closed,
                                "flip": flip_closed, "connection_q": connection_q_closed,
                                "jacobi": jacobi_grassmann, "gamma_q": gammaQ})


def stiefel_homogeneous_liedata(n: int, p: int):
    """LieData of SO(n)/SO(n-p): k is the bottom-right (n-p) block of o(n)."""
    from .jacobi import stiefel_liedata
    return stiefel_liedata(n, p)


CATALOG = {
    "sphere": sphere,
    "so_n": so_n,
    "sasaki_sphere_tangent": sasaki_sphere_tangent,
    "stiefel": stiefel,
    "flag": flag,
    "grassmann": grassmann,
}


def build(name: str, **params) -> CatalogEntry:
    """Catalog lookup by name with keyword parameters."""
    if name not in CATALOG:
        raise KeyError(name)
    fn = CATALOG[name]
    if name in ("sphere", "so_n", "sasaki_sphere_tangent"):
        return fn(params.get("n", 3 if name != "so_n" else 4))
    if name == "stiefel":
        return fn(params.get("n", 5), params.get("p", 2), params.get("alpha", 1.0))
    if name == "grassmann":
        return fn(params.get("n", 5), params.get("p", 2))
    return fn(params.get("n", 5), params.get("partition", (2, 2, 1)))

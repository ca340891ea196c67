"""Riemannian curvature of embedded ambient structures.

Sign convention: R_{xi,eta} phi is the negative of nabla_[xi,eta] - [nabla_xi,
nabla_eta] in the usual textbook sense, so that on the unit sphere

    R_{xi,eta} phi = <xi, phi> eta - <eta, phi> xi

and the sectional-curvature numerator <R_{xi,eta} xi, g eta> is nonnegative
for spheres and Grassmannians.

Derivatives of Christoffel functions are taken with *frozen* ambient
arguments: D_xi [y -> Gamma_y(eta, phi)] at y = x.  Because Gamma projects its
first argument at y this is the derivative along the projected field
p_eta(y) = Pi_y eta, and the extra chain-rule terms cancel in the
antisymmetrized combination ([p_xi, p_eta] = 0 at x).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ambient import (
    EmbeddedStructure,
    christoffel,
    fd_step_for,
    gamma_ring,
    inner,
    norm,
)
from .errors import IncompleteStructureError, InvalidInputError

VARIANTS = ("rc1", "rc1a", "rc2")


def _frozen_diff(S: EmbeddedStructure, fun, x, xi):
    """Central difference of y -> fun(y) at x in direction xi."""
    h = fd_step_for(x, xi, S.outer_fd_step)
    return (fun(x + h * xi) - fun(x - h * xi)) / (2.0 * h)


def _gamma_sym(S, y, a, b):
    # Gamma with both arguments projected at y
    return christoffel(S, y, S.P(y, a), S.P(y, b))


def _check_tangent(S, x, *vecs):
    for v in vecs:
        if not S.is_tangent(x, v, tol=max(S.tol, 1e-7)):
            raise InvalidInputError(
                f"{S.name}: vector not tangent (residual {S.tangency_residual(x, v):.3e})")


@dataclass
class CurvatureRequest:
    """R_{xi,eta} phi at x on structure S, computed with ``variant``."""

    structure: EmbeddedStructure
    x: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    phi: np.ndarray
    variant: str = "rc1"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidInputError(f"unknown curvature variant {self.variant!r}")
        S = self.structure
        self.x, self.xi, self.eta, self.phi = (np.asarray(a, dtype=float) for a in
                                               (self.x, self.xi, self.eta, self.phi))
        S.check_shape(self.x, self.xi, self.eta, self.phi)

    def compute(self):
        return curvature_embedded(self.structure, self.x, self.xi, self.eta, self.phi,
                                  self.variant)


def curvature_embedded(S: EmbeddedStructure, x, xi, eta, phi, variant: str = "rc1",
                       check: bool = True):
    """R_{xi,eta} phi for tangent xi, eta, phi at x.

    ``rc1``  uses Gamma in both the derivative and quadratic terms;
    ``rc1a`` uses the fully projected Gamma(Pi a, Pi b) with the quadratic
             terms in the order Gamma(Gamma(phi, .), .);
    ``rc2``  differentiates Gamma-ring = D Pi + Gamma instead of Gamma.
    """
    if variant not in VARIANTS:
        raise InvalidInputError(f"unknown curvature variant {variant!r}")
    x, xi, eta, phi = (np.asarray(a, dtype=float) for a in (x, xi, eta, phi))
    S.check_shape(x, xi, eta, phi)
    if check:
        S.require_on_manifold(x)
        _check_tangent(S, x, xi, eta, phi)

    if variant == "rc1":
        d1 = _frozen_diff(S, lambda y: christoffel(S, y, eta, phi), x, xi)
        d2 = _frozen_diff(S, lambda y: christoffel(S, y, xi, phi), x, eta)
        q = (christoffel(S, x, eta, christoffel(S, x, xi, phi))
             - christoffel(S, x, xi, christoffel(S, x, eta, phi)))
    elif variant == "rc2":
        d1 = _frozen_diff(S, lambda y: gamma_ring(S, y, eta, phi), x, xi)
        d2 = _frozen_diff(S, lambda y: gamma_ring(S, y, xi, phi), x, eta)
        q = (christoffel(S, x, eta, christoffel(S, x, xi, phi))
             - christoffel(S, x, xi, christoffel(S, x, eta, phi)))
    else:
        d1 = _frozen_diff(S, lambda y: _gamma_sym(S, y, eta, phi), x, xi)
        d2 = _frozen_diff(S, lambda y: _gamma_sym(S, y, xi, phi), x, eta)
        q = (_gamma_sym(S, x, _gamma_sym(S, x, phi, xi), eta)
             - _gamma_sym(S, x, _gamma_sym(S, x, phi, eta), xi))
    return -d1 + d2 + q


def sectional_numerator(S: EmbeddedStructure, x, xi, eta, variant="rc1") -> float:
    """<R_{xi,eta} xi, g eta>; equals |xi|^2|eta|^2 - <xi,eta>^2 on the unit sphere."""
    R = curvature_embedded(S, x, xi, eta, xi, variant)
    return inner(R, S.g(x, eta))


def sectional_curvature(S: EmbeddedStructure, x, xi, eta, variant="rc1") -> float:
    num = sectional_numerator(S, x, xi, eta, variant)
    gxx = inner(xi, S.g(x, xi))
    gyy = inner(eta, S.g(x, eta))
    gxy = inner(xi, S.g(x, eta))
    den = gxx * gyy - gxy * gxy
    if den <= 1e-14 * max(gxx * gyy, 1e-300):
        raise InvalidInputError("xi and eta are (numerically) collinear")
    return num / den


# ---------------------------------------------------------------------------
# Gauss-Codazzi


def _gamma_E(S: EmbeddedStructure):
    if S.gamma_E is None:
        raise IncompleteStructureError(f"{S.name}: no ambient Christoffel function Gamma^E")
    return S.gamma_E


def second_fundamental(S: EmbeddedStructure, x, xi, eta):
    """Two(xi, eta) = Gamma^E(xi, eta) - Gamma(xi, eta); normal-valued on tangent pairs."""
    gE = _gamma_E(S)
    return np.asarray(gE(x, xi, eta), dtype=float) - christoffel(S, x, xi, eta)


def second_fundamental_adjoint(S: EmbeddedStructure, x, xi, omega):
    """Two^dagger(xi, omega) = (D_xi Pi)(I - Pi) omega - Pi Gamma^E(xi, (I - Pi) omega).

    This is -Gamma(xi, (I - Pi) omega) written so that it does not depend on
    how Gamma is extended to normal second arguments.
    """
    gE = _gamma_E(S)
    omega = np.asarray(omega, dtype=float)
    nrm = omega - S.P(x, omega)
    return S.DP(x, xi, nrm) - S.P(x, np.asarray(gE(x, xi, nrm), dtype=float))


def curvature_E(S: EmbeddedStructure, x, xi, eta, phi):
    """Curvature of (E, g) from Gamma^E; identically zero when Gamma^E = 0."""
    gE = _gamma_E(S)
    if getattr(gE, "is_zero", False):
        return np.zeros(S.shape)
    G = lambda y, a, b: np.asarray(gE(y, a, b), dtype=float)
    h = lambda v: fd_step_for(x, v, S.outer_fd_step)
    d1 = (G(x + h(xi) * xi, eta, phi) - G(x - h(xi) * xi, eta, phi)) / (2 * h(xi))
    d2 = (G(x + h(eta) * eta, xi, phi) - G(x - h(eta) * eta, xi, phi)) / (2 * h(eta))
    return -d1 + d2 - G(x, xi, G(x, eta, phi)) + G(x, eta, G(x, xi, phi))


def zero_gamma_E(shape):
    """Gamma^E for a constant metric operator (flagged so curvature_E short-circuits)."""
    def gE(x, xi, eta):
        return np.zeros(shape)
    gE.is_zero = True
    return gE


def gauss_codazzi_check(S: EmbeddedStructure, x, xi, eta, phi, variant="rc1") -> dict:
    """Compare R^M with Pi R^E + Two^dag(eta, Two(xi, phi)) - Two^dag(xi, Two(eta, phi))."""
    lhs = curvature_embedded(S, x, xi, eta, phi, variant)
    rhs = (S.P(x, curvature_E(S, x, xi, eta, phi))
           + second_fundamental_adjoint(S, x, eta, second_fundamental(S, x, xi, phi))
           - second_fundamental_adjoint(S, x, xi, second_fundamental(S, x, eta, phi)))
    res = norm(lhs - rhs)
    return {"lhs": lhs, "rhs": rhs, "residual": res,
            "scale": max(norm(lhs), norm(rhs))}

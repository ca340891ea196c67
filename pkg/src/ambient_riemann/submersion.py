"""Submersed ambient structures: horizontal/vertical splitting of TM.

A :class:`SubmersedStructure` wraps an :class:`EmbeddedStructure` (the total
space) together with the horizontal projection ttH and vertical projection
ttV, with ttH + ttV = Pi.  Quantities of the base manifold are represented
by their horizontal lifts; the base is never constructed.

The horizontal Christoffel function

    Gamma^H(xi, omega) = -(D_xi ttH) omega + ttH Gamma-ring(xi, omega)

must be valid for *ambient* omega (not just horizontal ones) for the curvature
formulas to hold, so any analytic closure registered here is expected to be
the ambient-valid expression.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .ambient import (
    DEFAULT_FD_STEP,
    NESTED_FD_STEP,
    EmbeddedStructure,
    central_diff,
    fd_step_for,
    gamma_ring,
    norm,
    projection_from_span,
)
from .curvature import curvature_embedded
from .errors import IncompleteStructureError, InvalidInputError, NonHorizontalError

METHODS = ("cursubmer", "cursubmer2", "oneil13")


@dataclass
class SubmersedStructure:
    """Total-space structure plus horizontal / vertical projections.

    At least one of ``ttH_fn``, ``ttV_fn`` or ``vertical_span`` is needed.
    ``vertical_span(x)`` returns a dim x k matrix whose columns span V_xM;
    ttV is then the g-orthogonal projection onto that span.
    """

    total: EmbeddedStructure
    ttH_fn: Optional[Callable] = None
    ttV_fn: Optional[Callable] = None
    dttH: Optional[Callable] = None
    vertical_span: Optional[Callable] = None
    gammaH_fn: Optional[Callable] = None
    gammaQ_fn: Optional[Callable] = None
    name: str = ""
    tol: float = 1e-8
    params: dict = None

    def __post_init__(self):
        if self.ttH_fn is None and self.ttV_fn is None and self.vertical_span is None:
            raise IncompleteStructureError("need ttH, ttV or a vertical span")
        if not self.name:
            self.name = self.total.name
        if self.params is None:
            self.params = dict(self.total.params)

    @property
    def shape(self):
        return self.total.shape

    def _ttV_span(self, x, w):
        S = self.total
        N = np.asarray(self.vertical_span(x), dtype=float)
        G = S.metric_field.matrix(x)
        Pv = projection_from_span(N, G)
        return (Pv @ np.asarray(w, dtype=float).ravel()).reshape(S.shape)

    def ttV(self, x, w):
        if self.ttV_fn is not None:
            return np.asarray(self.ttV_fn(x, w), dtype=float)
        if self.ttH_fn is not None:
            return self.total.P(x, w) - np.asarray(self.ttH_fn(x, w), dtype=float)
        return self._ttV_span(x, w)

    def ttH(self, x, w):
        if self.ttH_fn is not None:
            return np.asarray(self.ttH_fn(x, w), dtype=float)
        return self.total.P(x, w) - self.ttV(x, w)

    def DttH(self, x, xi, w):
        if self.dttH is not None:
            return np.asarray(self.dttH(x, xi, w), dtype=float)
        return central_diff(lambda y: self.ttH(y, w), x, xi, base=self.total.fd_step)

    def DttV(self, x, xi, w):
        return self.total.DP(x, xi, w) - self.DttH(x, xi, w)

    def vertical_residual(self, x, w) -> float:
        return norm(self.ttV(x, w))

    def is_horizontal(self, x, w, tol=None) -> bool:
        tol = self.tol if tol is None else tol
        return (self.vertical_residual(x, w) <= tol * (1.0 + norm(w))
                and self.total.is_tangent(x, w, tol))

    def require_horizontal(self, x, *ws, tol=None):
        tol = self.tol if tol is None else tol
        for w in ws:
            r = self.vertical_residual(x, w)
            if r > tol * (1.0 + norm(w)):
                raise NonHorizontalError(f"{self.name}: vector not horizontal (|ttV w|={r:.3e})", r)

    def has_analytic_gammaH(self) -> bool:
        return self.gammaH_fn is not None or (self.dttH is not None and
                                              self.total.has_analytic_gamma())

    @property
    def outer_fd_step(self) -> float:
        return DEFAULT_FD_STEP if self.has_analytic_gammaH() else NESTED_FD_STEP

    def without_gammaH(self) -> "SubmersedStructure":
        """Copy assembling Gamma^H from ttH and Gamma-ring (no closed form)."""
        return replace(self, gammaH_fn=None)

    def fd_only(self) -> "SubmersedStructure":
        return replace(self, gammaH_fn=None, dttH=None, total=self.total.fd_only())


# ---------------------------------------------------------------------------
# horizontal Christoffel function and O'Neil tensor


def _gammaH_raw(S: SubmersedStructure, y, xi, omega):
    # No checks.  The first argument is extended by Pi_y (not ttH_y): the
    # fields y -> Pi_y xi commute at x, while y -> ttH_y xi do not (their
    # bracket is 2 A_xi eta), which would spoil frozen-argument derivatives.
    xi = S.total.P(y, xi)
    omega = np.asarray(omega, dtype=float)
    if S.gammaH_fn is not None:
        return np.asarray(S.gammaH_fn(y, xi, omega), dtype=float)
    return -S.DttH(y, xi, omega) + S.ttH(y, gamma_ring(S.total, y, xi, omega))


def gamma_h(S: SubmersedStructure, x, xi, omega, check: bool = True):
    """Gamma^H(xi, omega) for horizontal xi and ambient omega."""
    xi = np.asarray(xi, dtype=float)
    S.total.check_shape(x, xi, omega)
    if check:
        S.require_horizontal(x, xi)
    return _gammaH_raw(S, x, xi, omega)


def oneil_A(S: SubmersedStructure, x, xi, eta):
    """A_xi eta = -(D_xi ttV) ttH eta + ttV Gamma-ring(xi, ttH eta) (vertical)."""
    h = S.ttH(x, eta)
    return -S.DttV(x, xi, h) + S.ttV(x, gamma_ring(S.total, x, xi, h))


def oneil_A_dagger(S: SubmersedStructure, x, xi, eta):
    """A^dagger_xi eta = (D_xi ttH) ttV eta - ttH Gamma-ring(xi, ttV eta) (horizontal)."""
    v = S.ttV(x, eta)
    return S.DttH(x, xi, v) - S.ttH(x, gamma_ring(S.total, x, xi, v))


def oneil_A_via_bracket(S: SubmersedStructure, x, xi, eta, check: bool = True):
    """A_xi eta = 1/2 ((D_xi ttH) eta - (D_eta ttH) xi) for horizontal xi, eta."""
    if check:
        S.require_horizontal(x, xi, eta)
    return 0.5 * (S.DttH(x, xi, eta) - S.DttH(x, eta, xi))


def curvature_submersed(S: SubmersedStructure, x, xi, eta, phi, method: str = "cursubmer",
                        check: bool = True, variant: str = "rc1"):
    """Horizontal lift R^H_{xi,eta} phi of the base curvature.

    ``cursubmer`` differentiates Gamma^H; ``cursubmer2`` differentiates
    ttH Gamma-ring; ``oneil13`` goes through the total-space curvature and
    the O'Neil tensor.
    """
    if method not in METHODS:
        raise InvalidInputError(f"unknown method {method!r}")
    x, xi, eta, phi = (np.asarray(a, dtype=float) for a in (x, xi, eta, phi))
    S.total.check_shape(x, xi, eta, phi)
    if check:
        S.total.require_on_manifold(x)
        S.require_horizontal(x, xi, eta, phi, tol=max(S.tol, 1e-7))

    if method == "oneil13":
        RM = curvature_embedded(S.total, x, xi, eta, phi, variant, check=False)
        return (S.ttH(x, RM)
                + 2.0 * oneil_A_dagger(S, x, phi, oneil_A(S, x, xi, eta))
                - oneil_A_dagger(S, x, xi, oneil_A(S, x, eta, phi))
                + oneil_A_dagger(S, x, eta, oneil_A(S, x, xi, phi)))

    if method == "cursubmer":
        F = lambda y, a, b: _gammaH_raw(S, y, a, b)
    else:
        F = lambda y, a, b: S.ttH(y, gamma_ring(S.total, y, a, b))

    def d(fun, v):
        h = fd_step_for(x, v, S.outer_fd_step)
        return (fun(x + h * v) - fun(x - h * v)) / (2.0 * h)

    d1 = d(lambda y: F(y, eta, phi), xi)
    d2 = d(lambda y: F(y, xi, phi), eta)
    G = lambda a, b: _gammaH_raw(S, x, a, b)
    return (2.0 * oneil_A_dagger(S, x, phi, oneil_A(S, x, xi, eta))
            - d1 + d2 - G(xi, G(eta, phi)) + G(eta, G(xi, phi)))


def sectional_numerator_h(S: SubmersedStructure, x, xi, eta, method="cursubmer") -> float:
    """<R^H_{xi,eta} xi, g eta> for horizontal xi, eta."""
    R = curvature_submersed(S, x, xi, eta, xi, method)
    return float(np.vdot(R.ravel(), S.total.g(x, eta).ravel()))


def random_horizontal(S: SubmersedStructure, rng, x, normalize=True):
    """Gaussian ambient draw pushed through ttH."""
    for _ in range(100):
        w = S.ttH(x, rng.standard_normal(S.shape))
        n = norm(w)
        if n >= 1e-6:
            return w / n if normalize else w
    raise InvalidInputError(f"{S.name}: could not draw a horizontal vector")


def random_vertical(S: SubmersedStructure, rng, x):
    return S.ttV(x, rng.standard_normal(S.shape))

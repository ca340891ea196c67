"""Double tangent bundles TTM and THM = QHM + VHM.

Elements are quadruples (x, v, dm, dt) of ambient arrays: (x, v) is a point
of TM (or HM) and (dm, dt) a tangent vector to it.  TTM membership reads

    Pi_x v = v,   Pi_x dm = dm,   (D_dm Pi) v + Pi_x dt = dt.

For a submersion, THM replaces the last two conditions by ttH_x v = v and
(D_dm ttH) v + ttH_x dt = dt; QHM additionally asks ttH_x dm = dm.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ambient import EmbeddedStructure, christoffel, norm
from .errors import InvalidInputError, MembershipError
from .submersion import SubmersedStructure, _gammaH_raw

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class DoubleTangent:
    x: np.ndarray
    v: np.ndarray
    dm: np.ndarray
    dt: np.ndarray

    def astuple(self):
        return self.x, self.v, self.dm, self.dt

    def __add__(self, other):
        if norm(self.x - other.x) + norm(self.v - other.v) > 0:
            raise InvalidInputError("cannot add double tangents at different base points")
        return DoubleTangent(self.x, self.v, self.dm + other.dm, self.dt + other.dt)

    def scaled(self, a):
        return DoubleTangent(self.x, self.v, a * self.dm, a * self.dt)

    def distance(self, other) -> float:
        return max(norm(a - b) for a, b in zip(self.astuple(), other.astuple()))


def _as_dt(q) -> DoubleTangent:
    if isinstance(q, DoubleTangent):
        return q
    x, v, dm, dt = (np.asarray(a, dtype=float) for a in q)
    return DoubleTangent(x, v, dm, dt)


def _report(residuals: dict, tol) -> dict:
    out = dict(residuals)
    out["max"] = max(residuals.values())
    out["passed"] = bool(out["max"] <= tol)
    return out


# ---------------------------------------------------------------------------
# TTM


def is_double_tangent(S: EmbeddedStructure, q, tol: float = DEFAULT_TOL) -> dict:
    """Residuals of the three TTM constraints (diagnostic, never raises)."""
    x, v, dm, dt = _as_dt(q).astuple()
    return _report({
        "v_tangent": norm(S.P(x, v) - v),
        "dm_tangent": norm(S.P(x, dm) - dm),
        "dt_constraint": norm(S.DP(x, dm, v) + S.P(x, dt) - dt),
    }, tol)


def require_double_tangent(S, q, tol=DEFAULT_TOL):
    rep = is_double_tangent(S, q, tol)
    if not rep["passed"]:
        raise MembershipError(f"{S.name}: not in TTM (max residual {rep['max']:.3e})", rep)


def connection_map(S: EmbeddedStructure, q, check: bool = True):
    """C(dm, dt) = dt + Gamma(dm, v)."""
    q = _as_dt(q)
    if check:
        require_double_tangent(S, q)
    return q.dt + christoffel(S, q.x, q.dm, q.v)


def connection_map_inverse(S: EmbeddedStructure, x, v, dm, dc) -> DoubleTangent:
    """The element of TTM over (x, v) with base part dm and connection image dc."""
    x, v, dm, dc = (np.asarray(a, dtype=float) for a in (x, v, dm, dc))
    return DoubleTangent(x, v, dm, dc - christoffel(S, x, dm, v))


def canonical_flip(q, S: EmbeddedStructure = None) -> DoubleTangent:
    """j(x, v, dm, dt) = (x, dm, v, dt); membership is checked when S is given."""
    q = _as_dt(q)
    if S is not None:
        require_double_tangent(S, q)
    x, v, dm, dt = q.astuple()
    return DoubleTangent(x, dm, v, dt)


def canonical_vector_field(x, v) -> DoubleTangent:
    """(x, v, 0, v)."""
    v = np.asarray(v, dtype=float)
    return DoubleTangent(np.asarray(x, dtype=float), v, np.zeros_like(v), v)


def random_double_tangent(S: EmbeddedStructure, rng, x=None) -> DoubleTangent:
    """Random element of TTM: dt = w + (D_dm Pi) v with w tangent."""
    if x is None:
        x = S.sample_point(rng)
    v = S.random_tangent(rng, x, normalize=False)
    dm = S.random_tangent(rng, x, normalize=False)
    w = S.random_tangent(rng, x, normalize=False)
    return DoubleTangent(x, v, dm, w + S.DP(x, dm, v))


# ---------------------------------------------------------------------------
# THM, QHM and VHM


def is_THM(Ssub: SubmersedStructure, q, tol: float = DEFAULT_TOL) -> dict:
    x, v, dm, dt = _as_dt(q).astuple()
    S = Ssub.total
    return _report({
        "v_horizontal": norm(Ssub.ttH(x, v) - v),
        "dm_tangent": norm(S.P(x, dm) - dm),
        "dt_constraint": norm(Ssub.DttH(x, dm, v) + Ssub.ttH(x, dt) - dt),
    }, tol)


def is_QHM(Ssub: SubmersedStructure, q, tol: float = DEFAULT_TOL) -> dict:
    rep = is_THM(Ssub, q, tol)
    x, _, dm, _ = _as_dt(q).astuple()
    res = {k: v for k, v in rep.items() if k not in ("max", "passed")}
    res["dm_horizontal"] = norm(Ssub.ttH(x, dm) - dm)
    return _report(res, tol)


def _require(rep, what, name):
    if not rep["passed"]:
        raise MembershipError(f"{name}: not in {what} (max residual {rep['max']:.3e})", rep)


def random_THM(Ssub: SubmersedStructure, rng, x=None, horizontal_dm=False) -> DoubleTangent:
    """Random element of THM (of QHM when ``horizontal_dm``)."""
    from .submersion import random_horizontal
    S = Ssub.total
    if x is None:
        x = S.sample_point(rng)
    v = random_horizontal(Ssub, rng, x, normalize=False)
    if horizontal_dm:
        dm = random_horizontal(Ssub, rng, x, normalize=False)
    else:
        dm = S.random_tangent(rng, x, normalize=False)
    w = random_horizontal(Ssub, rng, x, normalize=False)
    return DoubleTangent(x, v, dm, w + Ssub.DttH(x, dm, v))


def B_operator(Ssub: SubmersedStructure, x, v, eps):
    """B_v eps = (D_eps ttH) v - (D_v ttH) eps."""
    return Ssub.DttH(x, eps, v) - Ssub.DttH(x, v, eps)


def b_map(Ssub: SubmersedStructure, x, v, eps, tol: float = 1e-8) -> DoubleTangent:
    """The VHM element (x, v, eps, B_v eps) over (x, v) for vertical eps."""
    x, v, eps = (np.asarray(a, dtype=float) for a in (x, v, eps))
    r = norm(Ssub.ttH(x, eps)) + norm(Ssub.total.P(x, eps) - eps)
    if r > tol * (1.0 + norm(eps)):
        raise InvalidInputError(f"{Ssub.name}: eps is not vertical (residual {r:.3e})")
    return DoubleTangent(x, v, eps, B_operator(Ssub, x, v, eps))


def ttQ_project(Ssub: SubmersedStructure, q) -> DoubleTangent:
    """ttQ(dm, dt) = (ttH dm, (D_{ttH dm} ttH) v + ttH dt)."""
    x, v, dm, dt = _as_dt(q).astuple()
    hm = Ssub.ttH(x, dm)
    return DoubleTangent(x, v, hm, Ssub.DttH(x, hm, v) + Ssub.ttH(x, dt))


def decompose_THM(Ssub: SubmersedStructure, q, check: bool = True):
    """Split q in THM into (Q-part in QHM, V-part in VHM)."""
    q = _as_dt(q)
    if check:
        _require(is_THM(Ssub, q), "THM", Ssub.name)
    x, v, dm, dt = q.astuple()
    eps = Ssub.ttV(x, dm)
    Beps = B_operator(Ssub, x, v, eps)
    return (DoubleTangent(x, v, Ssub.ttH(x, dm), dt - Beps),
            DoubleTangent(x, v, eps, Beps))


def horizontal_flip(Ssub: SubmersedStructure, q, check: bool = True) -> DoubleTangent:
    """j_H(x, v, dm, dt) = (x, ttH dm, v, (D_v ttH) dm + ttH dt)."""
    q = _as_dt(q)
    if check:
        _require(is_THM(Ssub, q), "THM", Ssub.name)
    x, v, dm, dt = q.astuple()
    return DoubleTangent(x, Ssub.ttH(x, dm), v, Ssub.DttH(x, v, dm) + Ssub.ttH(x, dt))


def connection_map_Q(Ssub: SubmersedStructure, q, check: bool = True):
    """C^Q(dm, dt) = dt + Gamma^H(dm, v) for q in QHM."""
    q = _as_dt(q)
    if check:
        _require(is_QHM(Ssub, q), "QHM", Ssub.name)
    return q.dt + _gammaH_raw(Ssub, q.x, q.dm, q.v)


def connection_map_Q_inverse(Ssub: SubmersedStructure, x, v, dm, dc) -> DoubleTangent:
    x, v, dm, dc = (np.asarray(a, dtype=float) for a in (x, v, dm, dc))
    return DoubleTangent(x, v, dm, dc - _gammaH_raw(Ssub, x, dm, v))

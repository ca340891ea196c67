from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ambient_riemann import ambient as am
from ambient_riemann import manifolds as mf
from ambient_riemann.errors import (IncompleteStructureError, InvalidInputError,
                                    InvalidMetricError, OffManifoldError, SingularSpanError)


# ---------------------------------------------------------------------------
# projection_from_span


def test_projection_sphere_normal_span():
    x = np.array([0.6, 0.0, 0.8])
    Pn = am.projection_from_span(x, np.eye(3), mode="normal")
    assert np.allclose(np.eye(3) - Pn, np.eye(3) - np.outer(x, x), atol=1e-15)


def test_projection_full_span_is_identity(rng):
    N = rng.standard_normal((4, 4))
    assert np.allclose(am.projection_from_span(N, np.eye(4)), np.eye(4), atol=1e-12)


def test_projection_is_g_orthogonal(rng):
    N = rng.standard_normal((5, 2))
    B = rng.standard_normal((5, 5))
    g = B @ B.T + 5 * np.eye(5)
    P = am.projection_from_span(N, g)
    assert np.abs(P @ P - P).max() < 1e-12
    assert np.abs(g @ P - (g @ P).T).max() < 1e-11


def test_projection_sasaki_normal_span(catalog, rng):
    e = catalog["sasaki"]
    z = e.random_point(rng)
    N = e.closed["normal_span"](z)
    g = e.structure.metric_field.matrix(z)
    # the normal span is g-orthonormal
    assert np.abs(N.T @ g @ N - np.eye(2)).max() < 1e-14
    # g N spans the Euclidean normals of {|x| = 1, x.v = 0}, so N spans the
    # g-normal space and the tangent projection is its g-complement
    x, v = z[:3], z[3:]
    assert np.abs(g @ N - np.column_stack([np.r_[x, 0 * x], np.r_[v, x]])).max() < 1e-14
    Pn = am.projection_from_span(N, g, mode="normal")
    assert np.abs(np.eye(6) - Pn - e.closed["proj_matrix"](z)).max() < 1e-12


def test_projection_errors():
    with pytest.raises(SingularSpanError):
        am.projection_from_span(np.array([[1.0, 2.0], [2.0, 4.0]]), np.eye(2))
    with pytest.raises(InvalidInputError):
        am.projection_from_span(np.eye(2), np.eye(3))
    with pytest.raises(InvalidInputError):
        am.projection_from_span(np.eye(2), np.eye(2), mode="other")


# ---------------------------------------------------------------------------
# projection derivative and Christoffel functions


def test_sphere_dproj_closed_form(catalog, rng):
    e = catalog["sphere4"]
    S = e.structure
    x = e.random_point(rng)
    xi, w = e.random_tangent(rng, x), rng.standard_normal(4)
    fd = am.central_diff(lambda y: S.proj(y, w), x, xi)
    assert np.abs(S.DP(x, xi, w) - fd).max() < 1e-9
    assert np.abs(S.DP(x, xi, w) - (-xi * (x @ w) - x * (xi @ w))).max() < 1e-15


def test_dproj_symmetric_in_tangent_pair(catalog, rng):
    # (D_xi Pi) eta is symmetric for tangent xi, eta (second fundamental form)
    for key in ("sphere4", "so4", "stiefel"):
        e = catalog[key]
        S = e.structure
        x = e.random_point(rng)
        a, b = e.random_tangent(rng, x), e.random_tangent(rng, x)
        assert np.abs(S.DP(x, a, b) - S.DP(x, b, a)).max() < 1e-12


def test_christoffel_sphere(catalog, rng):
    e = catalog["sphere4"]
    x = e.random_point(rng)
    a, b = e.random_tangent(rng, x), e.random_tangent(rng, x)
    assert np.allclose(am.christoffel(e.structure, x, a, b), x * (a @ b), atol=1e-15)
    assert np.abs(am.christoffel(e.structure.fd_only(), x, a, b) - x * (a @ b)).max() < 1e-8


def test_christoffel_son(catalog, rng):
    e = catalog["so4"]
    S = e.structure
    U = e.random_point(rng)
    a, b = e.random_tangent(rng, U), e.random_tangent(rng, U)
    ref = 0.5 * (a @ b.T @ U + U @ b.T @ a)
    assert np.abs(am.christoffel(S.without_christoffel(), U, a, b) - ref).max() < 1e-13


def test_gamma_ring_vanishes_for_constant_metric(catalog, rng):
    e = catalog["so4"]
    U = e.random_point(rng)
    a, b = e.random_tangent(rng, U), e.random_tangent(rng, U)
    assert np.abs(am.gamma_ring(e.structure, U, a, b)).max() < 1e-14


def test_gamma_ring_two_expressions_stiefel(catalog, rng):
    e = catalog["stiefel"]
    S = e.structure
    Y = e.random_point(rng)
    a, b = e.random_tangent(rng, Y), e.random_tangent(rng, Y)
    assert np.abs(am.gamma_ring(S, Y, a, b) - am.gamma_ring_projected(S, Y, a, b)).max() < 1e-12


def test_christoffel_symmetric_stiefel(catalog, rng):
    e = catalog["stiefel"]
    S = e.structure
    Y = e.random_point(rng)
    a, b = e.random_tangent(rng, Y), e.random_tangent(rng, Y)
    assert np.abs(am.christoffel(S, Y, a, b) - am.christoffel(S, Y, b, a)).max() < 1e-12


def test_christoffel_metric_compatible(catalog, rng):
    for key in ("sphere4", "so4", "stiefel", "sasaki"):
        e = catalog[key]
        x = e.random_point(rng)
        a, b = e.random_tangent(rng, x), e.random_tangent(rng, x)
        assert am.metric_compatibility_residual(e.structure, x, a, b) < 1e-6


# ---------------------------------------------------------------------------
# the X raiser


def test_x_raiser_pairing_identity(catalog, rng):
    e = catalog["stiefel"]
    S = e.structure
    Y = e.random_point(rng)
    a, b, phi = (e.random_tangent(rng, Y) for _ in range(3))
    X = am.x_raiser(S, Y, a, b)
    assert am.inner(X, phi) == pytest.approx(am.inner(S.Dg(Y, phi, a), b), abs=1e-12)


def test_x_raiser_sasaki_closed_vs_generic(catalog, rng):
    e = catalog["sasaki"]
    S = e.structure
    z = e.random_point(rng)
    a, b, phi = (e.random_tangent(rng, z) for _ in range(3))
    Xc = am.x_raiser(S, z, a, b)
    Xg = am.x_raiser_generic(S, z, a, b)
    # only the tangent pairing is determined
    assert am.inner(Xc - Xg, phi) == pytest.approx(0.0, abs=1e-9)
    gam_c = am.christoffel(S, z, a, b)
    gam_g = am.christoffel(replace(S, x_raiser=None, generic_x_raiser=True), z, a, b)
    assert np.abs(gam_c - gam_g).max() < 1e-8


def test_x_raiser_requires_opt_in(catalog, rng):
    e = catalog["stiefel"]
    S = replace(e.structure, x_raiser=None)
    Y = e.random_point(rng)
    a = e.random_tangent(rng, Y)
    with pytest.raises(IncompleteStructureError):
        am.x_raiser(S, Y, a, a)
    assert np.isfinite(am.x_raiser(S.with_generic_x_raiser(), Y, a, a)).all()


# ---------------------------------------------------------------------------
# p-fields, metric extension, invariants


def test_bracket_of_p_fields_is_tangent(catalog, rng):
    e = catalog["sphere4"]
    S = e.structure
    x = e.random_point(rng)
    a, b = e.random_tangent(rng, x), e.random_tangent(rng, x)
    br = am.bracket_p_fields(S, x, a, b)
    # [p_a, p_b] = (D_a Pi) b - (D_b Pi) a = 0 at x on tangent pairs
    assert np.abs(br).max() < 1e-9
    assert am.norm(am.p_field(S, a, x) - a) < 1e-15


def test_standard_metric_extension(rng):
    e = mf.stiefel(4, 2, 1.0)
    S = e.structure
    alpha = 3.0
    g_R = lambda Y, w: w + (alpha - 1) * Y @ (Y.T @ w)
    metric = am.standard_metric_extension(S.proj, g_R, (4, 2))
    Y = e.random_point(rng)
    assert metric.check(Y)
    w = rng.standard_normal((4, 2))
    pw = S.proj(Y, w)
    assert np.abs(metric(Y, pw) - g_R(Y, pw)).max() < 1e-14
    assert np.abs(metric(Y, w - pw) - (w - pw)).max() < 1e-14

    skewed = np.array([[1.0, 2.0], [0.0, 1.0]])
    bad = am.standard_metric_extension(S.proj, lambda Y, w: w @ skewed, (4, 2))
    with pytest.raises(InvalidMetricError):
        bad.check(Y)


@pytest.mark.parametrize("key", ["sphere4", "so4", "stiefel", "sasaki", "stiefel1"])
def test_structure_invariants(catalog, rng, key):
    e = catalog[key]
    for _ in range(3):
        inv = am.structure_invariants(e.structure, e.random_point(rng))
        assert inv["g_symmetry"] < 1e-12
        assert inv["g_min_eig"] > 0
        assert inv["proj_idempotent"] < 1e-12
        assert inv["gP_selfadjoint"] < 1e-12


def test_off_manifold_rejected(catalog):
    S = catalog["sphere4"].structure
    with pytest.raises(OffManifoldError):
        S.require_on_manifold(np.array([1.0, 1.0, 0.0, 0.0]))


def test_tangent_basis_rank(catalog, rng):
    e = catalog["so4"]
    Q = am.tangent_basis(e.structure, e.random_point(rng))
    assert Q.shape == (16, 6)
    assert np.abs(Q.T @ Q - np.eye(6)).max() < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_projection_keeps_tangent_vectors(seed):
    rng = np.random.default_rng(seed)
    e = mf.stiefel(5, 2, 2.0)
    S = e.structure
    Y = e.random_point(rng)
    w = rng.standard_normal((5, 2))
    t = S.P(Y, w)
    assert np.abs(S.P(Y, t) - t).max() < 1e-12
    assert S.is_tangent(Y, t)

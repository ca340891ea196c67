import numpy as np
import pytest

from ambient_riemann import ambient as am
from ambient_riemann import manifolds as mf
from ambient_riemann import submersion as sb
from ambient_riemann.errors import InvalidInputError, NonHorizontalError

SUBS = ["grassmann", "flag"]


def horizontal_triple(e, rng, x):
    return tuple(e.random_horizontal(rng, x) for _ in range(3))


@pytest.mark.parametrize("key", SUBS)
def test_projections_split_tangent_space(catalog, rng, key):
    e = catalog[key]
    T = e.submersed
    x = e.random_point(rng)
    w = e.random_tangent(rng, x)
    h, v = T.ttH(x, w), T.ttV(x, w)
    assert np.abs(h + v - w).max() < 1e-13
    assert np.abs(T.ttH(x, h) - h).max() < 1e-13
    assert np.abs(T.ttV(x, v) - v).max() < 1e-13
    assert abs(am.inner(h, T.total.g(x, v))) < 1e-13


@pytest.mark.parametrize("key", SUBS)
def test_vertical_span_matches_ttV(catalog, rng, key):
    e = catalog[key]
    T = e.submersed
    x = e.random_point(rng)
    N = T.vertical_span(x)
    for col in N.T:
        c = col.reshape(T.shape)
        assert np.abs(T.ttV(x, c) - c).max() < 1e-13


@pytest.mark.parametrize("key", SUBS)
def test_dttH_vs_fd(catalog, rng, key):
    e = catalog[key]
    T = e.submersed
    x = e.random_point(rng)
    xi = e.random_tangent(rng, x)
    w = rng.standard_normal(T.shape)
    fd = am.central_diff(lambda y: T.ttH(y, w), x, xi)
    assert np.abs(T.DttH(x, xi, w) - fd).max() < 1e-8


def test_flag_gamma_h_closed_form(catalog, rng):
    e = catalog["flag"]
    T = e.submersed
    U = e.random_point(rng)
    a, b = e.random_horizontal(rng, U), e.random_horizontal(rng, U)
    assert np.abs(sb.gamma_h(T, U, a, b) - e.closed["gamma_h"](U, a, b)).max() < 1e-13
    # generic assembly from D ttH and the total-space Gamma-ring
    assert np.abs(sb.gamma_h(T.without_gammaH(), U, a, b) - e.closed["gamma_h"](U, a, b)).max() < 1e-12


@pytest.mark.parametrize("key", SUBS)
def test_oneil_A_closed_and_bracket(catalog, rng, key):
    e = catalog[key]
    T = e.submersed
    x = e.random_point(rng)
    a, b = e.random_horizontal(rng, x), e.random_horizontal(rng, x)
    A = sb.oneil_A(T, x, a, b)
    assert np.abs(A - e.closed["oneil_A"](x, a, b)).max() < 1e-12
    assert np.abs(A - sb.oneil_A_via_bracket(T, x, a, b)).max() < 1e-12
    # vertical and alternating
    assert np.abs(T.ttV(x, A) - A).max() < 1e-13
    assert np.abs(A + sb.oneil_A(T, x, b, a)).max() < 1e-12


@pytest.mark.parametrize("key", SUBS)
def test_oneil_A_adjoint(catalog, rng, key):
    e = catalog[key]
    T = e.submersed
    S = T.total
    x = e.random_point(rng)
    a, b = e.random_horizontal(rng, x), e.random_horizontal(rng, x)
    v = sb.random_vertical(T, rng, x)
    lhs = am.inner(sb.oneil_A(T, x, a, b), S.g(x, v))
    rhs = am.inner(b, S.g(x, sb.oneil_A_dagger(T, x, a, v)))
    assert lhs == pytest.approx(rhs, abs=1e-12)


@pytest.mark.parametrize("key", SUBS)
@pytest.mark.parametrize("method", sb.METHODS)
def test_curvature_methods_vs_closed(catalog, rng, key, method):
    e = catalog[key]
    T = e.submersed
    x = e.random_point(rng)
    a, b, c = horizontal_triple(e, rng, x)
    R = sb.curvature_submersed(T, x, a, b, c, method)
    assert np.abs(R - e.closed["curvature"](x, a, b, c)).max() < 1e-6


@pytest.mark.parametrize("key", SUBS)
def test_curvature_fd_only_structure(catalog, rng, key):
    e = catalog[key]
    T = e.submersed
    x = e.random_point(rng)
    a, b, c = horizontal_triple(e, rng, x)
    R = sb.curvature_submersed(T.fd_only(), x, a, b, c)
    assert np.abs(R - e.closed["curvature"](x, a, b, c)).max() < 1e-4


def test_grassmann_sectional_numerator_trace_form(catalog, rng):
    # <R xi, eta> equals the trace expression, which is one half of the sum of
    # the two squared commutator norms
    e = catalog["grassmann"]
    T = e.submersed
    Y = e.random_point(rng)
    Yp = e.closed["complement"](Y)
    B1, B2 = rng.standard_normal((3, 2)), rng.standard_normal((3, 2))
    num = sb.sectional_numerator_h(T, Y, Yp @ B1, Yp @ B2)
    tr = np.trace(B1 @ B1.T @ B2 @ B2.T + B2 @ B1.T @ B1 @ B2.T - 2 * B1 @ B2.T @ B1 @ B2.T)
    assert num == pytest.approx(tr, rel=1e-8)
    assert num == pytest.approx(0.5 * e.closed["sectional_numerator"](B1, B2), rel=1e-8)


def test_grassmann_numerator_independent_of_complement(catalog, rng):
    e = catalog["grassmann"]
    Y = e.random_point(rng)
    B1, B2 = rng.standard_normal((3, 2)), rng.standard_normal((3, 2))
    vals = []
    for _ in range(3):
        Yp = e.closed["complement"](Y, rng)
        xi, eta = Yp @ B1, Yp @ B2
        vals.append(np.vdot(e.closed["curvature"](Y, xi, eta, xi), eta))
    assert np.ptp(vals) < 1e-12


def test_projective_space_has_unit_curvature(rng):
    # Gr(1, n) = RP^{n-1}: constant curvature one
    e = mf.grassmann(4, 1)
    T = e.submersed
    for _ in range(3):
        Y = e.random_point(rng)
        a = e.random_horizontal(rng, Y)
        b = e.random_horizontal(rng, Y)
        b = b - np.vdot(a, b) * a
        b /= np.linalg.norm(b)
        assert sb.sectional_numerator_h(T, Y, a, b) == pytest.approx(1.0, rel=1e-7)


def test_non_horizontal_rejected(catalog, rng):
    e = catalog["grassmann"]
    T = e.submersed
    Y = e.random_point(rng)
    a = e.random_horizontal(rng, Y)
    v = sb.random_vertical(T, rng, Y)
    with pytest.raises(NonHorizontalError):
        sb.curvature_submersed(T, Y, a, v, a)
    with pytest.raises(NonHorizontalError):
        sb.gamma_h(T, Y, v, a)
    with pytest.raises(InvalidInputError):
        sb.curvature_submersed(T, Y, a, a, a, method="none")

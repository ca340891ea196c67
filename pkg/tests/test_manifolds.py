import numpy as np
import pytest

from ambient_riemann import ambient as am
from ambient_riemann import manifolds as mf
from ambient_riemann import submersion as sb
from ambient_riemann.errors import InvalidParameterError

ALL = ["sphere4", "so4", "stiefel", "stiefel1", "sasaki", "grassmann", "flag"]


@pytest.mark.parametrize("key", ALL)
def test_random_points_and_tangents(catalog, rng, key):
    e = catalog[key]
    S = e.structure
    x = e.random_point(rng)
    assert S.membership_residual(x) < 1e-12
    t = e.random_tangent(rng, x)
    assert S.is_tangent(x, t)
    assert am.norm(t) == pytest.approx(1.0)
    if e.submersed is not None:
        h = e.random_horizontal(rng, x)
        assert e.submersed.is_horizontal(x, h)


@pytest.mark.parametrize("name", sorted(mf.CATALOG))
def test_build_defaults(name):
    e = mf.build(name)
    assert e.name == name
    assert e.structure.shape


def test_build_unknown():
    with pytest.raises(KeyError):
        mf.build("torus")


@pytest.mark.parametrize("fn,args", [
    (mf.sphere, (1,)), (mf.so_n, (1.5,)), (mf.sasaki_sphere_tangent, (0,)),
    (mf.stiefel, (3, 3)), (mf.stiefel, (4, 2, -1.0)), (mf.stiefel, (4, 0)),
    (mf.grassmann, (3, 3)),
    (mf.flag, (5, (2, 2))), (mf.flag, (5, (5,))), (mf.flag, (4, (2, 0, 2))),
])
def test_invalid_parameters(fn, args):
    with pytest.raises(InvalidParameterError):
        fn(*args)


def test_so_n_points_have_unit_determinant(catalog, rng):
    e = catalog["so4"]
    for _ in range(5):
        assert np.linalg.det(e.random_point(rng)) == pytest.approx(1.0)


def test_geodesics_stay_on_manifold(catalog, rng):
    for key in ("sphere4", "so4", "grassmann"):
        e = catalog[key]
        x = e.random_point(rng)
        v = 2.0 * (e.random_horizontal(rng, x) if e.submersed else e.random_tangent(rng, x))
        g, u = e.closed["geodesic"](x, v, 1.7)
        assert e.structure.membership_residual(g) < 1e-12
        assert e.structure.is_tangent(g, u)


def test_sphere_geodesic_zero_velocity(catalog):
    e = catalog["sphere4"]
    x = np.array([1.0, 0, 0, 0])
    g, u = e.closed["geodesic"](x, np.zeros(4), 1.0)
    assert np.array_equal(g, x) and np.array_equal(u, np.zeros(4))


def test_grassmann_complement(catalog, rng):
    e = catalog["grassmann"]
    Y = e.random_point(rng)
    Yp = e.closed["complement"](Y, rng)
    Q = np.hstack([Yp, Y])
    assert np.abs(Q.T @ Q - np.eye(5)).max() < 1e-13
    assert np.abs(Yp @ Yp.T - (np.eye(5) - Y @ Y.T)).max() < 1e-13


def test_grassmann_invariant_under_right_rotation(catalog, rng):
    # R^H at Y Q is R^H at Y right-multiplied by Q
    e = catalog["grassmann"]
    Y = e.random_point(rng)
    a, b, c = (e.random_horizontal(rng, Y) for _ in range(3))
    Q = mf._qr_orthonormal(rng, 2, 2)
    R1 = e.closed["curvature"](Y, a, b, c) @ Q
    R2 = e.closed["curvature"](Y @ Q, a @ Q, b @ Q, c @ Q)
    assert np.abs(R1 - R2).max() < 1e-13


def test_flag_with_singleton_blocks_is_so_n_quotient_by_finite_group(rng):
    # all blocks of size one: k = 0 and the base curvature is that of SO(n)
    e = mf.flag(3, (1, 1, 1))
    U = e.random_point(rng)
    a, b, c = (e.random_horizontal(rng, U) for _ in range(3))
    assert np.abs(e.closed["curvature"](U, a, b, c)
                  - mf.so_n(3).closed["curvature"](U, a, b, c)).max() < 1e-14
    assert np.abs(sb.oneil_A(e.submersed, U, a, b)).max() < 1e-14


def test_flag_kpart_bpart(catalog, rng):
    e = catalog["flag"]
    M = rng.standard_normal((5, 5))
    k, b = e.closed["kpart"](M), e.closed["bpart"](M)
    assert np.abs(k + b - M).max() == 0
    assert np.abs(k[:2, 2:]).max() == 0 and np.abs(b[:2, :2]).max() == 0


def test_block_indicators():
    Ks = mf.block_indicators((2, 1))
    assert np.array_equal(sum(Ks), np.eye(3))
    assert np.array_equal(Ks[1], np.diag([0.0, 0.0, 1.0]))


def test_stiefel_alpha_one_has_closed_christoffel(rng):
    e = mf.stiefel(4, 2, 1.0)
    assert e.structure.has_analytic_gamma()
    S2 = mf.stiefel(4, 2, 2.0).structure
    assert not S2.constant_metric


def test_sasaki_metric_matrix_is_structure_metric(catalog, rng):
    e = catalog["sasaki"]
    z = e.random_point(rng)
    assert np.abs(e.structure.metric_field.matrix(z) - e.closed["metric_matrix"](z)).max() < 1e-14
    assert np.abs(e.structure.proj_field.matrix(z) - e.closed["proj_matrix"](z)).max() < 1e-14

import math

import numpy as np
import pytest

from kinverify.quadrature import (QuadratureBudget, QuadratureError,
                                  ellipsoid_section_integral,
                                  hyperplane_integral, sphere_grid,
                                  sphere_integral, sphere_section_integral,
                                  verify_weighted_trafo,
                                  verify_weighted_trafo_ellipsoid)

E2 = np.array([1.0, 0.0])
E3 = np.array([1.0, 0.0, 0.0])


def gauss_nd(pts):
    return np.exp(-np.sum(np.atleast_2d(pts) ** 2, axis=-1))


def test_budget_validation():
    with pytest.raises(ValueError):
        QuadratureBudget(rel_tol=-1.0)
    with pytest.raises(ValueError):
        QuadratureBudget(max_evals=0)


def test_hyperplane_gaussian():
    val, _ = hyperplane_integral(gauss_nd, np.array([0.0, 0.0, 1.0]))
    assert val == pytest.approx(math.pi, rel=1e-10)
    val, _ = hyperplane_integral(gauss_nd, np.array([3.0, 4.0]))
    assert val == pytest.approx(math.sqrt(math.pi), rel=1e-10)


def test_hyperplane_ball_indicator():
    ind = lambda pts: (np.sum(np.atleast_2d(pts) ** 2, -1) <= 1.0).astype(float)
    budget = QuadratureBudget(rel_tol=1e-3, truncation_radius=1.5,
                              max_evals=10 ** 7)
    val, err = hyperplane_integral(ind, np.array([0.0, 0.0, 1.0]), budget)
    assert val == pytest.approx(math.pi, rel=2e-2)


def test_hyperplane_zero_normal_rejected():
    with pytest.raises(ValueError):
        hyperplane_integral(gauss_nd, np.zeros(2))


def test_hyperplane_homogeneity_scaling():
    # g(w) -> g(lam w) rescales a degree-d homogeneous integrand by
    # lam^d, and the (n-1)-plane measure contributes lam^-(n-1) overall
    budget = QuadratureBudget(truncation_radius=20.0)

    def g(pts):
        pts = np.atleast_2d(pts)
        return np.sum(pts ** 2, -1) * np.exp(-np.sum(pts ** 2, -1))

    base, _ = hyperplane_integral(g, E3, budget)
    lam = 2.0
    scaled, _ = hyperplane_integral(
        lambda p: g(lam * np.atleast_2d(p)), E3, budget)
    # int g(lam w) dw = lam^-(n-1) int g; with n = 3 that is lam^-2
    assert scaled == pytest.approx(base / lam ** 2, rel=1e-8)


def test_sphere_integrals():
    one = lambda th: np.ones(np.atleast_2d(th).shape[0])
    assert sphere_integral(one, 3) == pytest.approx(4 * math.pi, rel=1e-12)
    assert sphere_integral(one, 2) == pytest.approx(2 * math.pi, rel=1e-12)
    g = lambda th: (np.atleast_2d(th) @ E3) ** 2
    assert sphere_integral(g, 3) == pytest.approx(4 * math.pi / 3, rel=1e-10)


def test_sphere_section_cosine_constant():
    g3 = lambda th: (np.atleast_2d(th) @ E3) ** 2
    # z perp e: the great circle sees cos^2 with mean 1/2 -> c(3) = pi
    val = sphere_section_integral(g3, np.array([0.0, 0.0, 1.0]), 3)
    assert val == pytest.approx(math.pi, rel=1e-10)
    # z parallel e: every theta in the section is orthogonal to e
    assert sphere_section_integral(g3, E3, 3) == pytest.approx(0.0, abs=1e-14)
    # n = 2: two antipodal atoms, each contributing |theta . e|^2 = 1
    g2 = lambda th: (np.atleast_2d(th) @ E2) ** 2
    val = sphere_section_integral(g2, np.array([0.0, 1.0]), 2)
    assert val == pytest.approx(2.0)


def test_weighted_trafo_closed_form_case():
    def g(w, th):
        return np.exp(-np.sum(np.atleast_2d(w) ** 2, axis=-1))

    lhs, rhs, rel = verify_weighted_trafo(g, 3)
    assert lhs == pytest.approx(4 * math.pi ** 2, rel=1e-8)
    assert rhs == pytest.approx(4 * math.pi ** 2, rel=1e-8)
    assert rel < 1e-8


def test_weighted_trafo_zero_integrand():
    zero = lambda w, th: np.zeros(np.atleast_2d(w).shape[0])
    lhs, rhs, rel = verify_weighted_trafo(zero, 2)
    assert (lhs, rhs, rel) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("n", [2, 3])
def test_weighted_trafo_suite(n):
    e = np.zeros(n)
    e[0] = 1.0

    def dir2(w, th):
        w, th = np.atleast_2d(w), np.atleast_2d(th)
        return np.exp(-np.sum(w ** 2, -1)) * (th @ e) ** 2

    def mixed(w, th):
        w, th = np.atleast_2d(w), np.atleast_2d(th)
        return np.exp(-np.sum(w ** 2, -1)) * (1 + 0.5 * (th @ e)) ** 2

    def poly(w, th):
        w = np.atleast_2d(w)
        return np.exp(-np.sum(w ** 2, -1)) * (1 + np.sum(w ** 2, -1))

    for g in (dir2, mixed, poly):
        lhs, rhs, rel = verify_weighted_trafo(g, n)
        assert rel < 1e-2
        assert lhs > 0


def test_ellipsoid_section_disc_diameter():
    # |v0| = 1 keeps E_r spherical: any section is a diameter segment
    one = lambda pts: np.ones(np.atleast_2d(pts).shape[0])
    for w in (np.array([1.0, 0.0]), np.array([0.6, 0.8])):
        val = ellipsoid_section_integral(one, np.array([1.0, 0.0]), 0.75, w)
        assert val == pytest.approx(1.5, rel=1e-10)


def test_ellipsoid_section_radial_closed_form():
    # circular section of radius rho: int |h|^(2-2s-(n-1)) over the
    # (n-1)-disc equals |S^(n-2)| rho^(2-2s) / (2-2s)
    s = 0.5
    v0 = np.array([3.0, 0.0, 0.0])
    r = 1.0
    g = lambda pts: np.sum(np.atleast_2d(pts) ** 2, -1) ** (-s)
    # w parallel to v0: the section is the full circular cross-section
    val = ellipsoid_section_integral(g, v0, r, v0)
    expected = 2 * math.pi * r ** (2 - 2 * s) / (2 - 2 * s)
    assert val == pytest.approx(expected, rel=1e-3)


def test_ellipsoid_section_min_radius_bound():
    # the section area is at least that of its smallest-radius ball
    one = lambda pts: np.ones(np.atleast_2d(pts).shape[0])
    v0 = np.array([4.0, 0.0, 0.0])
    r = 1.0
    u = np.array([1.0, 1.0, 0.0])
    area = ellipsoid_section_integral(one, v0, r, u)
    speed = np.linalg.norm(v0)
    c2 = (v0 @ u) ** 2 / (speed ** 2 * (u @ u))
    rho = r * (speed ** 2 * (1 - c2) + c2) ** -0.5
    assert area >= math.pi * rho ** 2 - 1e-10


def test_weighted_trafo_ellipsoid_cases():
    def g(w, th):
        return np.exp(-np.sum(np.atleast_2d(w) ** 2, axis=-1))

    for r, speed in ((0.5, 2.0), (1.0, 2.0), (0.5, 10.0), (1.0, 10.0)):
        lhs, rhs, rel = verify_weighted_trafo_ellipsoid(
            g, np.array([speed, 0.0]), r)
        assert rel < 1e-2, (r, speed, rel)


def test_budget_exhaustion_raises():
    # the hyperplane orthogonal to e1 spans the second coordinate
    wild = lambda pts: np.cos(40.0 * np.atleast_2d(pts)[..., 1]) ** 2
    budget = QuadratureBudget(rel_tol=1e-14, max_evals=64,
                              truncation_radius=10.0)
    with pytest.raises(QuadratureError) as err:
        hyperplane_integral(wild, E2, budget)
    assert np.isfinite(err.value.best_estimate)


def test_sphere_grid_weights_sum():
    for n, total in ((2, 2 * math.pi), (3, 4 * math.pi)):
        _, w = sphere_grid(n, 32)
        assert w.sum() == pytest.approx(total, rel=1e-12)

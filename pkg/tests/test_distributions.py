import math

import numpy as np
import pytest
import scipy.integrate as si

from kinverify.distributions import (BallComponent, BoxComponent,
                                     DimensionMismatchError,
                                     GaussianComponent, VelocityDistribution,
                                     counterexample_family, density,
                                     from_config, line_abs_moment,
                                     line_mass_on_interval, maxwellian,
                                     ray_power_moment, squeezed_gaussian,
                                     support_radius, to_config)


def test_density_standard_gaussian(maxi2):
    assert density(maxi2, np.zeros(2)) == pytest.approx(1.0 / (2 * np.pi))


def test_density_box_weight():
    f = VelocityDistribution(
        2, (BoxComponent(np.zeros(2), np.array([1.0, 1.0]), 3.0),))
    assert density(f, np.array([0.5, 0.5])) == 3.0
    assert density(f, np.array([1.5, 0.0])) == 0.0


def test_density_ball_outside():
    f = VelocityDistribution(2, (BallComponent(np.zeros(2), 1.0, 1.0),))
    assert density(f, np.array([2.0, 0.0])) == 0.0


def test_density_dimension_mismatch(maxi2):
    with pytest.raises(DimensionMismatchError):
        density(maxi2, np.zeros(3))


def test_density_batched_nonnegative(maxi2):
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(50, 2)) * 3
    vals = density(maxi2, pts)
    assert vals.shape == (50,)
    assert np.all(vals >= 0)


def test_counterexample_pointwise_values():
    # f_R = indicator of the two strips plus R^2 times the core square
    R = 10.0
    f = counterexample_family(R)
    cases = [
        (np.array([0.0, 0.0]), R ** 2 + 1.0),       # core cap strips
        (np.array([0.05, 0.05]), R ** 2),           # core only
        (np.array([0.5, 0.0005]), 1.0),             # horizontal strip
        (np.array([0.0005, 0.5]), 1.0),             # vertical strip
        (np.array([1.0, 1.0]), 0.0),
        (np.array([0.05, 0.0005]), R ** 2 + 1.0),   # strip inside core
    ]
    for v, expected in cases:
        assert density(f, v) == pytest.approx(expected)


def test_counterexample_mass_band():
    for R in (5.0, 10.0, 20.0, 40.0):
        f = counterexample_family(R)
        # exact composition: 4 + 8 R^-2 - 4 R^-6
        assert f.total_mass == pytest.approx(4 + 8 * R ** -2 - 4 * R ** -6)
        assert 4.0 <= f.total_mass <= 8.0


def test_counterexample_requires_R_above_one():
    with pytest.raises(ValueError):
        counterexample_family(1.0)


def test_counterexample_density_nonnegative():
    f = counterexample_family(7.0)
    rng = np.random.default_rng(1)
    pts = rng.uniform(-8, 8, size=(500, 2))
    assert np.all(density(f, pts) >= 0)


def test_squeezed_gaussian_limits():
    iso = squeezed_gaussian(1.0, n=2)
    assert np.allclose(iso.components[0].cov, np.eye(2))
    sq = squeezed_gaussian(0.1, n=2)
    assert np.allclose(np.sort(np.linalg.eigvalsh(sq.components[0].cov)),
                       [0.01, 1.0])
    assert sq.total_mass == pytest.approx(1.0)
    with pytest.raises(ValueError):
        squeezed_gaussian(0.0)


def test_mass_independent_of_epsilon():
    for eps in (1.0, 0.3, 0.03):
        assert squeezed_gaussian(eps, n=2).total_mass == pytest.approx(1.0)


def test_config_round_trip():
    f = counterexample_family(5.0)
    g = from_config(to_config(f))
    rng = np.random.default_rng(2)
    pts = rng.uniform(-6, 6, size=(200, 2))
    assert np.allclose(density(f, pts), density(g, pts))


def test_config_named_families():
    f = from_config({"kind": "maxwellian", "dimension": 3})
    assert f.dimension == 3
    f = from_config({"kind": "squeezed_gaussian", "epsilon": 0.5})
    assert f.total_mass == pytest.approx(1.0)
    with pytest.raises(ValueError):
        from_config({"kind": "nope"})


def test_positive_weight_invariant():
    with pytest.raises(ValueError):
        VelocityDistribution(
            2, (BoxComponent(np.zeros(2), np.ones(2), -1.0),))


def test_line_abs_moment_against_quad(maxi2):
    u = np.array([[0.0, 1.0]])
    for p in (0.0, 1.3, 2.0, 3.0):
        got = float(line_abs_moment(maxi2, np.array([[0.7, 0.3]]), u, p)[0])
        oracle = si.quad(
            lambda t: math.exp(-(0.49 + (t + 0.3) ** 2) / 2) / (2 * math.pi)
            * abs(t) ** p, -25, 25)[0]
        assert got == pytest.approx(oracle, rel=1e-10)


def test_line_abs_moment_far_base(maxi2):
    # the far tail switches to the asymptotic expansion
    u = np.array([[0.0, 1.0]])
    base = np.array([[0.0, 90.0]])
    got = float(line_abs_moment(maxi2, base, u, 3.0)[0])
    oracle = si.quad(
        lambda t: math.exp(-((t + 90.0) ** 2) / 2) / (2 * math.pi)
        * abs(t) ** 3, -120, -60)[0]
    assert got == pytest.approx(oracle, rel=1e-6)


def test_line_mass_on_interval_box():
    f = VelocityDistribution(
        2, (BoxComponent(np.zeros(2), np.array([1.0, 2.0]), 1.5),))
    base = np.array([[0.5, 0.0]])
    u = np.array([[0.0, 1.0]])
    got = float(line_mass_on_interval(f, base, u, -1.0, 5.0)[0])
    assert got == pytest.approx(1.5 * 3.0)      # t in [-1, 2], density 1.5


def test_ray_power_moment_interval_bounds():
    f = VelocityDistribution(2, (BallComponent(np.zeros(2), 2.0, 1.0),))
    u = np.array([[1.0, 0.0]])
    base = np.zeros((1, 2))
    got = float(ray_power_moment(f, base, u, 1.0, t_lo=0.5, t_hi=1.5)[0])
    assert got == pytest.approx((1.5 ** 2 - 0.5 ** 2) / 2)


def test_mixture_mass_matches_quadrature():
    f = VelocityDistribution(2, (
        GaussianComponent(np.array([0.5, -0.2]),
                          np.array([[1.0, 0.3], [0.3, 0.5]]), 0.7),
        BoxComponent(np.array([1.0, 1.0]), np.array([0.5, 0.25]), 2.0),
        BallComponent(np.array([-1.0, 0.0]), 0.75, 1.2),
    ))
    total = si.dblquad(
        lambda y, x: float(density(f, np.array([x, y]))),
        -6, 6, -6, 6, epsabs=1e-8)[0]
    assert total == pytest.approx(f.total_mass, rel=1e-3)


def test_support_radius_covers_mass(maxi2):
    R = support_radius(maxi2)
    assert R > 6.0
    # outside the reported radius the density is negligible
    assert density(maxi2, np.array([R + 0.5, 0.0])) < 1e-12


def test_immutability(maxi2):
    c = maxi2.components[0]
    with pytest.raises((ValueError, RuntimeError)):
        c.mean[0] = 1.0

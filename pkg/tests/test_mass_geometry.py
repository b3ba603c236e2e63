import numpy as np
import pytest
import scipy.integrate as si

from kinverify.distributions import (BallComponent, BoxComponent,
                                     VelocityDistribution,
                                     counterexample_family, maxwellian,
                                     squeezed_gaussian)
from kinverify.mass_geometry import (LineSpec, directional_marginal,
                                     halfspace_mass_balance,
                                     slab_second_moment, tube_complement_mass,
                                     worst_tube_scan)

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])


def test_line_spec_normalizes():
    line = LineSpec(np.zeros(2), np.array([0.0, 2.0]))
    assert np.allclose(line.direction, E2)
    with pytest.raises(ValueError):
        LineSpec(np.zeros(2), np.zeros(2))


def test_tube_complement_maxwellian_against_dblquad(maxi2):
    got = tube_complement_mass(maxi2, LineSpec(np.zeros(2), E2), 0.1, 5.0)
    oracle = si.dblquad(
        lambda y, x: np.exp(-(x * x + y * y) / 2) / (2 * np.pi)
        if (x * x + y * y <= 25 and abs(x) >= 0.1) else 0.0,
        -5, 5, -5, 5, epsabs=1e-9)[0]
    assert got == pytest.approx(oracle, rel=1e-6)
    assert got >= 0.8


def test_tube_complement_counterexample():
    # survivors sit in the horizontal strip: 2(R - delta) * 2 R^-3 exactly
    R = 10.0
    f = counterexample_family(R)
    got = tube_complement_mass(f, LineSpec(np.zeros(2), E2), 0.5, 20.0)
    assert got == pytest.approx(2 * (R - 0.5) * 2 * R ** -3, rel=1e-9)
    assert got <= 4 * R ** -2


def test_tube_far_from_support_keeps_full_mass():
    f = VelocityDistribution(2, (BallComponent(np.zeros(2), 1.0, 1.0),))
    got = tube_complement_mass(
        f, LineSpec(np.array([10.0, 0.0]), E2), 0.5, 5.0)
    assert got == pytest.approx(np.pi, rel=1e-6)


def test_tube_monotonicity(maxi2):
    line = LineSpec(np.zeros(2), E2)
    vals_delta = [tube_complement_mass(maxi2, line, d, 5.0)
                  for d in (0.05, 0.2, 0.5)]
    assert vals_delta[0] > vals_delta[1] > vals_delta[2]
    vals_R = [tube_complement_mass(maxi2, line, 0.2, R)
              for R in (1.0, 2.0, 5.0)]
    assert vals_R[0] < vals_R[1] < vals_R[2]


def test_tube_complement_3d(maxi3):
    got = tube_complement_mass(
        maxi3, LineSpec(np.zeros(3), np.array([0.0, 0.0, 1.0])), 0.5, 6.0)
    # oracle: mass with cylindrical radius >= 0.5 = exp(-1/8)
    assert got == pytest.approx(np.exp(-0.125), rel=1e-3)


def test_worst_tube_center_line_is_worst(maxi2):
    val, line = worst_tube_scan(maxi2, 0.1, 5.0, direction_grid_size=8,
                                offset_grid=np.linspace(-2, 2, 5))
    direct = tube_complement_mass(maxi2, LineSpec(np.zeros(2), E1), 0.1, 5.0)
    assert val == pytest.approx(direct, rel=1e-6)
    assert np.linalg.norm(line.point) < 1e-8
    assert val > 0.8


def test_worst_tube_degenerates_with_squeezing():
    vals = []
    for eps in (1.0, 0.3, 0.1, 0.03):
        f = squeezed_gaussian(eps, n=2)
        val, _ = worst_tube_scan(f, 0.25, 5.0, direction_grid_size=8,
                                 offset_grid=np.linspace(-1, 1, 3),
                                 refine=False)
        vals.append(val)
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.1 * vals[0]


def test_worst_tube_counterexample_bound():
    for R in (5.0, 10.0):
        f = counterexample_family(R)
        val, _ = worst_tube_scan(f, 0.5, 25.0, direction_grid_size=4,
                                 offset_grid=np.array([0.0]), refine=False)
        assert val <= 4 * R ** -2 + 1e-9


def test_worst_tube_empty_grids_rejected(maxi2):
    with pytest.raises(ValueError):
        worst_tube_scan(maxi2, 0.1, 5.0, direction_grid_size=0)
    with pytest.raises(ValueError):
        worst_tube_scan(maxi2, 0.1, 5.0, offset_grid=np.array([]))


def test_directional_marginal_matches_gaussian(maxi2):
    taus = np.linspace(-3, 3, 7)
    got = directional_marginal(maxi2, np.zeros(2), E1, taus)
    expect = np.exp(-taus ** 2 / 2) / np.sqrt(2 * np.pi)
    assert np.allclose(got, expect, rtol=1e-12)


def test_directional_marginal_box_section():
    f = VelocityDistribution(
        2, (BoxComponent(np.zeros(2), np.array([1.0, 2.0]), 1.5),))
    got = directional_marginal(f, np.zeros(2), E1, np.array([0.5, 1.5]))
    assert got[0] == pytest.approx(1.5 * 4.0)   # section length 4, weight 1.5
    assert got[1] == 0.0


def test_slab_second_moment_maxwellian(maxi2, maxi3):
    # eta = 0 recovers the perpendicular directional pressure
    assert slab_second_moment(maxi2, E1, 0.0) == pytest.approx(1.0, rel=1e-6)
    assert slab_second_moment(
        maxi3, np.array([1.0, 0, 0]), 0.0) == pytest.approx(1.0, rel=1e-3)
    # vanishing domain
    assert slab_second_moment(maxi2, E1, 8.0) < 1e-9


def test_slab_second_moment_proof_choice(maxi2):
    # eta = sqrt((p0 - lam)/M0) must leave at least lam of the moment
    p0, lam, M0 = 1.0, 0.5, 1.0
    eta = np.sqrt((p0 - lam) / M0)
    assert slab_second_moment(maxi2, E1, eta) >= lam


def test_halfspace_balance_symmetric(maxi2):
    fwd, bwd = halfspace_mass_balance(maxi2, E1, 1.0, 5.0)
    # forward: one-sided Gaussian tail; backward: half the B_5 mass
    from scipy.stats import norm
    assert fwd == pytest.approx(norm.sf(1.0), rel=1e-6)
    assert bwd == pytest.approx(0.5, rel=1e-4)


def test_halfspace_balance_offset_box_recentered():
    # a box at +2 e1 has vbar = +2 e1, so the balance recenters and the
    # backward half-space regains half the mass
    f = VelocityDistribution(
        2, (BoxComponent(np.array([2.0, 0.0]), np.array([0.5, 0.5]), 1.0),))
    fwd, bwd = halfspace_mass_balance(f, E1, 0.25, 5.0)
    assert fwd == pytest.approx(0.25, rel=1e-6)   # {w.e >= 0.25} quarter
    assert bwd == pytest.approx(0.5, rel=1e-6)


def test_halfspace_two_balls(maxi2):
    f = VelocityDistribution(2, (
        BallComponent(np.array([2.0, 0.0]), 0.5, 1.0),
        BallComponent(np.array([-2.0, 0.0]), 0.5, 1.0)))
    fwd, bwd = halfspace_mass_balance(f, E1, 1.0, 5.0)
    half = 0.5 * f.total_mass
    assert fwd == pytest.approx(half, rel=1e-6)
    assert bwd == pytest.approx(half, rel=1e-6)


def test_mean_zero_identity():
    # int f(w) (w - vbar) . e dw vanishes for every direction; checked
    # against a smooth mixture so the oracle quadrature is sharp
    from kinverify.distributions import GaussianComponent
    from kinverify.observables import mean_velocity
    f = VelocityDistribution(2, (
        GaussianComponent(np.array([1.0, -0.5]),
                          np.array([[0.5, 0.1], [0.1, 0.8]]), 0.9),
        GaussianComponent(np.array([-1.0, 0.3]), 0.3 * np.eye(2), 1.1)))
    rho, vbar = mean_velocity(f)
    rng = np.random.default_rng(5)
    for _ in range(5):
        e = rng.normal(size=2)
        e /= np.linalg.norm(e)
        val = si.dblquad(
            lambda y, x: float(f.density(np.array([x, y])))
            * float((np.array([x, y]) - vbar) @ e),
            -8, 8, -8, 8, epsabs=1e-10)[0]
        assert abs(val) < 1e-7

import numpy as np
import pytest
import scipy.integrate as si

from kinverify.distributions import (counterexample_family, maxwellian,
                                     squeezed_gaussian)
from kinverify.observables import (check_hydro_bounds, compute_observables,
                                   energy_direct, entropy, moment,
                                   pressure_condition_directional,
                                   pressure_condition_two_directions,
                                   pressure_two_directions_grid)


def test_maxwellian_observables(maxi2):
    rep = compute_observables(maxi2, [2.0, 4.0])
    assert rep.rho == pytest.approx(1.0)
    assert np.allclose(rep.vbar, 0.0)
    assert np.allclose(rep.pressure, np.eye(2))
    assert rep.temperature == pytest.approx(1.0)
    assert rep.energy == pytest.approx(1.0)          # E = (n/2) rho T
    # oracle: 1D radial quadrature of |v|^4 (2 pi)^-1 exp(-|v|^2/2)
    oracle = si.quad(lambda r: r ** 5 * np.exp(-r * r / 2), 0, 40)[0]
    assert oracle == pytest.approx(8.0, rel=1e-12)
    assert rep.moments[4.0] == pytest.approx(8.0, rel=1e-9)


def test_maxwellian_entropy_closed_form(maxi2):
    rep = compute_observables(maxi2, [])
    assert rep.entropy == pytest.approx(-np.log(2 * np.pi) - 1.0)


def test_energy_identity_against_quadrature(maxi2):
    # (1/2) int f |v|^2 by independent quadrature equals the closed form
    direct = 0.5 * si.quad(
        lambda r: r ** 3 * np.exp(-r * r / 2), 0, 40)[0]
    assert energy_direct(maxi2) == pytest.approx(direct, rel=1e-10)


def test_counterexample_rho_band():
    rep = compute_observables(counterexample_family(10.0), [])
    assert 4.0 <= rep.rho <= 8.0


def test_counterexample_entropy_bound():
    # density <= R^2 + 1 on a mass-4 set gives h <= rho log(R^2+1);
    # the four-panel decomposition is exact for the all-box family
    for R in (5.0, 10.0, 40.0):
        f = counterexample_family(R)
        rep = compute_observables(f, [])
        assert rep.entropy <= rep.rho * np.log(R ** 2 + 1.0) + 1e-9
        assert np.isfinite(rep.entropy)


def test_counterexample_entropy_exact_value():
    # hand decomposition: core-only panels at R^2, strip-cap panels at
    # R^2+1, unit-density strips contribute zero
    R = 10.0
    hand = ((4 * R ** -2 - 8 * R ** -4 + 4 * R ** -6) * R ** 2
            * np.log(R ** 2)
            + (8 * R ** -4 - 4 * R ** -6) * (R ** 2 + 1)
            * np.log(R ** 2 + 1))
    assert entropy(counterexample_family(R)) == pytest.approx(hand)


def test_mixture_entropy_matches_quadrature():
    from kinverify.distributions import GaussianComponent, VelocityDistribution
    mix = VelocityDistribution(2, (
        GaussianComponent(np.zeros(2), np.eye(2), 0.6),
        GaussianComponent(np.array([1.0, 0.5]), 0.5 * np.eye(2), 0.4)))
    oracle = si.dblquad(
        lambda y, x: (lambda d: d * np.log(d) if d > 0 else 0.0)(
            float(mix.density(np.array([x, y])))),
        -9, 9, -9, 9, epsabs=1e-9)[0]
    assert entropy(mix) == pytest.approx(oracle, rel=1e-6)


def test_moment_nonneg_order_required(maxi2):
    with pytest.raises(ValueError):
        moment(maxi2, -1.0)


def test_moment_noninteger_against_radial_quad(maxi2):
    oracle = si.quad(lambda r: r ** 3.5 * np.exp(-r * r / 2), 0, 40)[0]
    assert moment(maxi2, 2.5) == pytest.approx(oracle, rel=1e-6)


def test_counterexample_third_moment_oracle():
    # oracle: per-box tensor Gauss-Legendre of (x^2+y^2)^(3/2)
    x, w = np.polynomial.legendre.leggauss(400)

    def box_m3(hx, hy, wt):
        X, Y = np.meshgrid(hx * x, hy * x, indexing="ij")
        W = np.outer(w * hx, w * hy)
        return wt * np.sum(W * (X ** 2 + Y ** 2) ** 1.5)

    R = 10.0
    oracle = (box_m3(R ** -3, R, 1) + box_m3(R, R ** -3, 1)
              + box_m3(R ** -3, R ** -3, -1) + box_m3(1 / R, 1 / R, R ** 2))
    assert moment(counterexample_family(R), 3.0) == pytest.approx(
        oracle, rel=1e-6)


def test_counterexample_moment_growth():
    # third moment grows like R^(q-2) = R while mass stays bounded
    Rs = np.array([5.0, 10.0, 20.0, 40.0])
    m3 = np.array([moment(counterexample_family(R), 3.0) for R in Rs])
    slope = np.polyfit(np.log(Rs), np.log(m3), 1)[0]
    assert abs(slope - 1.0) < 0.10


def test_counterexample_stability_across_R():
    # E and both pressure conditions stay put while the moment blows up.
    # The mass itself moves by 4 + 8 R^-2, i.e. 7.9 percent between R=5
    # and R=40 by the exact composition, so it is checked against its
    # closed form rather than a 5-percent band.
    rows = []
    for R in (5.0, 10.0, 20.0, 40.0):
        f = counterexample_family(R)
        rep = compute_observables(f, [], with_entropy=False)
        rows.append((rep.rho, rep.energy,
                     pressure_condition_directional(rep.pressure),
                     pressure_condition_two_directions(rep.pressure)))
        assert rep.rho == pytest.approx(4 + 8 * R ** -2 - 4 * R ** -6)
    arr = np.array(rows)
    for col in (1, 2, 3):
        vals = arr[:, col]
        assert vals.max() / vals.min() < 1.05


def test_pressure_directional_examples():
    assert pressure_condition_directional(np.eye(3)) == pytest.approx(1.0)
    assert pressure_condition_directional(
        np.diag([3.0, 2.0, 0.1])) == pytest.approx(0.1)
    rep = compute_observables(squeezed_gaussian(0.1, n=2), [])
    assert pressure_condition_directional(rep.pressure) == pytest.approx(
        0.01, rel=1e-9)


def test_pressure_two_directions_examples():
    assert pressure_condition_two_directions(np.eye(3)) == pytest.approx(1.0)
    assert pressure_condition_two_directions(
        np.diag([3.0, 2.0, 0.1])) == pytest.approx(2.0)
    eps = 0.1
    assert pressure_condition_two_directions(
        np.diag([1.0, eps ** 2])) == pytest.approx(0.01)


def test_pressure_two_directions_non_symmetric_rejected():
    with pytest.raises(ValueError):
        pressure_condition_two_directions(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_spectral_reduction_matches_grid():
    rng = np.random.default_rng(42)
    for n in (2, 3):
        for _ in range(10):
            B = rng.normal(size=(n, n))
            P = B @ B.T
            fast = pressure_condition_two_directions(P)
            grid = pressure_two_directions_grid(
                P, 720 if n == 2 else 2562)
            assert fast == pytest.approx(grid, rel=0.02)


def test_hydro_bounds_maxwellian(maxi2):
    rep = compute_observables(maxi2, [4.0], with_entropy=False)
    res = check_hydro_bounds(rep, 0.5, 2.0, 0.5, 10.0, 4.0)
    assert res["all_pass"]


def test_hydro_bounds_squeezed_pressure_fails():
    rep = compute_observables(squeezed_gaussian(0.01, n=2), [4.0],
                              with_entropy=False)
    res = check_hydro_bounds(rep, 0.5, 2.0, 0.5, 10.0, 4.0)
    assert not res["pressure_two_directions"]
    assert res["mass_bounds"]


def test_hydro_bounds_counterexample_moment_eventually_fails():
    # any fixed q > 2 threshold is overrun as R grows
    rep = compute_observables(counterexample_family(40.0), [3.0],
                              with_entropy=False)
    res = check_hydro_bounds(rep, 4.0, 8.0, 0.1, Mq=30.0, q=3.0)
    assert not res["moment_bound"]


def test_hydro_bounds_missing_moment(maxi2):
    rep = compute_observables(maxi2, [2.0], with_entropy=False)
    with pytest.raises(KeyError):
        check_hydro_bounds(rep, 0.5, 2.0, 0.5, 10.0, 4.0)


def test_report_serialization(maxi2):
    rep = compute_observables(maxi2, [2.0])
    blob = rep.to_json()
    assert blob["rho"] == pytest.approx(1.0)
    assert {"q": 2.0, "value": pytest.approx(2.0)} in [
        {"q": m["q"], "value": m["value"]} for m in blob["moments"]]

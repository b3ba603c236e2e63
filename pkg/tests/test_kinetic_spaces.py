import numpy as np
import pytest

from kinverify.kinetic_spaces import (KineticPoint, NormSpec,
                                      build_sample_plan, cylinder_contains,
                                      giusti_constant, giusti_verify,
                                      interpolation_constant,
                                      kinetic_distance, kinetic_distance_grid,
                                      sampled_holder_norm,
                                      verify_interpolation)

Z0 = (0.0, np.zeros(2), np.zeros(2))


def test_distance_coincident_points():
    assert kinetic_distance(Z0, Z0, 0.5) == 0.0


def test_distance_velocity_gap_midpoint():
    z2 = (0.0, np.zeros(2), np.array([2.0, 0.0]))
    assert kinetic_distance(Z0, z2, 0.5) == pytest.approx(1.0, rel=1e-9)


def test_distance_time_gap():
    z1 = (1.0, np.zeros(2), np.zeros(2))
    assert kinetic_distance(z1, Z0, 0.5) == pytest.approx(1.0, rel=1e-9)


def test_distance_symmetry_in_velocities():
    rng = np.random.default_rng(30)
    for _ in range(10):
        t, x = rng.normal(), rng.normal(size=2)
        v1, v2 = rng.normal(size=2), rng.normal(size=2)
        d12 = kinetic_distance((t, x, v1), (t, x, v2), 0.7)
        d21 = kinetic_distance((t, x, v2), (t, x, v1), 0.7)
        assert d12 == pytest.approx(d21, rel=1e-9)


def test_distance_beats_grid_oracle():
    rng = np.random.default_rng(31)
    for s in (0.3, 0.7, 1.0):
        for _ in range(34):
            z1 = (rng.normal(), rng.normal(size=2), rng.normal(size=2))
            z2 = (rng.normal(), rng.normal(size=2), rng.normal(size=2))
            mine = kinetic_distance(z1, z2, s)
            grid = kinetic_distance_grid(z1, z2, s, resolution=31)
            assert mine <= grid + 1e-3


def test_distance_scaling_equivariance():
    rng = np.random.default_rng(32)
    for s in (0.3, 0.7, 1.0):
        for _ in range(10):
            z1 = (rng.normal(), rng.normal(size=2), rng.normal(size=2))
            z2 = (rng.normal(), rng.normal(size=2), rng.normal(size=2))
            d0 = kinetic_distance(z1, z2, s)
            for lam in (0.5, 2.0):
                zs1 = (lam ** (2 * s) * z1[0], lam ** (1 + 2 * s) * z1[1],
                       lam * z1[2])
                zs2 = (lam ** (2 * s) * z2[0], lam ** (1 + 2 * s) * z2[1],
                       lam * z2[2])
                ds = kinetic_distance(zs1, zs2, s)
                assert ds == pytest.approx(lam * d0, rel=1e-6)


def test_cylinder_predicate():
    assert cylinder_contains(Z0, 1.0, 0.5, Z0)
    # strict lower time bound
    assert not cylinder_contains(Z0, 1.0, 0.5, (-1.0, np.zeros(2), np.zeros(2)))
    # strict velocity bound
    assert not cylinder_contains(Z0, 1.0, 0.5,
                                 (0.0, np.zeros(2), np.array([1.0, 0.0])))
    # drift enters the space window
    z0 = (1.0, np.zeros(2), np.array([2.0, 0.0]))
    inside = (0.5, np.array([-1.0, 0.0]), np.array([2.1, 0.0]))
    assert cylinder_contains(z0, 1.0, 0.5, inside)


def test_norm_spec_validation():
    with pytest.raises(ValueError):
        NormSpec(alpha=1.0, p=0.0)
    with pytest.raises(ValueError):
        NormSpec(alpha=0.5, p=-1.0)


def _plan(spec, s=0.5, seed=0):
    return build_sample_plan(spec, s, n_cylinders=10, points_per_cylinder=5,
                             seed=seed)


def test_sample_plan_points_inside_cylinders():
    spec = NormSpec(alpha=0.5, p=1.0)
    plan = _plan(spec)
    for cyl in plan.cylinders:
        for z in cyl.points:
            assert cylinder_contains(
                (cyl.center.t, cyl.center.x, cyl.center.v), cyl.r, plan.s,
                (z.t, z.x, z.v))


def test_constant_field_has_zero_seminorm():
    spec = NormSpec(alpha=0.5, p=0.0)
    plan = _plan(spec)
    F = lambda ts, xs, vs: np.ones(np.asarray(ts).shape)
    norms = sampled_holder_norm(F, spec, plan)
    assert norms.seminorm == 0.0
    assert norms.c0 == pytest.approx(1.0)


def test_weighted_decay_field_unit_norm():
    # (1 + |v|)^-p against the (1 + |v_center|)^p weight: the sampled
    # value straddles one within the cylinder-radius slack
    p = 1.5
    spec = NormSpec(alpha=0.5, p=p)
    plan = _plan(spec)
    F = lambda ts, xs, vs: (1.0 + np.linalg.norm(
        np.asarray(vs), axis=-1)) ** -p
    norms = sampled_holder_norm(F, spec, plan)
    assert 1.0 <= norms.c0 <= 3.0


def test_distance_power_field_seminorm_bounded():
    # F = d((t,x,v), zhat)^alpha has Holder quotient at most about one
    spec = NormSpec(alpha=0.5, p=0.0)
    plan = _plan(spec)
    zhat = (0.5, np.array([0.1, -0.2]), np.array([0.3, 0.4]))

    def F(ts, xs, vs):
        ts = np.asarray(ts, dtype=float)
        flat = ts.ravel()
        xs2 = np.asarray(xs, float).reshape(flat.size, -1)
        vs2 = np.asarray(vs, float).reshape(flat.size, -1)
        out = np.array([kinetic_distance((t, x, v), zhat, plan.s) ** 0.5
                        for t, x, v in zip(flat, xs2, vs2)])
        return out.reshape(ts.shape)

    norms = sampled_holder_norm(F, spec, plan)
    # quasi-triangle inequality of the kinetic distance: empirical
    # quotients stay within a modest constant
    assert norms.seminorm <= 2.0


def test_interpolation_constant_value():
    # 2^(p+n) over the unit-ball volume
    assert interpolation_constant(2, 0.0) == pytest.approx(4.0 / np.pi)


def test_interpolation_zero_field():
    spec = NormSpec(alpha=0.5, p=1.0)
    plan = _plan(spec)
    F = lambda ts, xs, vs: np.zeros(np.asarray(ts).shape)
    rows = verify_interpolation(F, spec, [0.5, 0.1], plan)
    for row in rows:
        assert row["holds"]
        assert row["lhs"] == 0.0
        assert row["slack"] == row["rhs"]


def test_interpolation_bump_and_decay_fields():
    spec = NormSpec(alpha=0.5, p=0.75)
    plan = _plan(spec)

    def bump_v(ts, xs, vs):
        d2 = np.sum(np.asarray(vs) ** 2, axis=-1)
        out = np.zeros(np.asarray(ts).shape)
        inside = d2 < 4.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - d2[inside] / 4.0))
        return out

    def weighted(ts, xs, vs):
        vn = np.linalg.norm(np.asarray(vs), axis=-1)
        damp = np.exp(-np.sum(np.asarray(xs) ** 2, axis=-1)
                      - np.asarray(ts) ** 2)
        return (1.0 + vn) ** -0.75 * damp

    for F in (bump_v, weighted):
        rows = verify_interpolation(F, spec, [0.5, 0.1, 0.02], plan)
        for row in rows:
            assert row["holds"]
            assert row["slack"] > 0


def test_giusti_constant_gamma_one():
    # sigma = 2^(-1/2): the split constant collapses to (1 - sigma)^-2
    assert giusti_constant(1.0) == pytest.approx(
        (1 - 2 ** -0.5) ** -2, rel=1e-14)
    assert giusti_constant(1.0) == pytest.approx(11.65685424949238)


def test_giusti_zero_function():
    hyp, con, c = giusti_verify(lambda t: 0.0, 1.0, 0.0)
    assert hyp and con
    assert c == pytest.approx(11.65685424949238)


def test_giusti_constant_violator_flagged():
    hyp, con, _ = giusti_verify(lambda t: 100.0, 1.0, 1.0)
    assert hyp is False
    assert con is None


def test_giusti_admissible_profile_passes():
    # A (2 - t)^(-gamma) on [0, 1.9] satisfies the halving hypothesis
    # (a^-g <= b^-g/2 + (a-b)^-g for a > b) and hence the conclusion
    for gamma in (0.5, 1.0, 2.0):
        F = lambda t: 2.0 * (2.0 - t) ** -gamma
        hyp, con, _ = giusti_verify(F, gamma, 2.0, interval=(0.0, 1.9))
        assert hyp and con


def test_giusti_dense_pairs_conclusion():
    # any hypothesis-passing profile keeps the conclusion with the
    # explicit constant on a dense pair sample
    rng = np.random.default_rng(33)
    pairs = np.sort(rng.uniform(0.0, 1.9, size=(300, 2)), axis=1)
    pairs = [tuple(p) for p in pairs if p[0] < p[1]]
    F = lambda t: 1.0 * (2.0 - t) ** -1.0
    hyp, con, _ = giusti_verify(F, 1.0, 1.0, pair_samples=pairs)
    assert hyp and con

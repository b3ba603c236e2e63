"""Kinetic distance, cylinders, sampled weighted Holder norms, and the
interpolation / iteration lemma verifiers.

Points live in (t, x, v) space.  The distance minimizes a max of four
scale-matched terms over an intermediate velocity; norms are sampled
functionals over explicit cylinder plans so every reported value is
reproducible from the plan's seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .quadrature import gauss_legendre


@dataclass(frozen=True)
class KineticPoint:
    t: float
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if x.shape != v.shape:
            raise ValueError("x and v must share a dimension")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)


def _unpack(z):
    if isinstance(z, KineticPoint):
        return z.t, z.x, z.v
    t, x, v = z
    return float(t), np.asarray(x, dtype=float), np.asarray(v, dtype=float)


def cylinder_contains(z0, r: float, s: float, z) -> bool:
    """Exact kinetic-cylinder predicate:
    t0 - r^(2s) < t <= t0, |x - x0 - (t - t0) v0| < r^(1+2s), |v - v0| < r.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    t0, x0, v0 = _unpack(z0)
    t, x, v = _unpack(z)
    if not (t0 - r ** (2.0 * s) < t <= t0):
        return False
    if np.linalg.norm(x - x0 - (t - t0) * v0) >= r ** (1.0 + 2.0 * s):
        return False
    return bool(np.linalg.norm(v - v0) < r)


def _distance_objective(w, tn, xn, v1n, v2n, s):
    """max of the four scale-matched terms at intermediate velocity w."""
    terms = (abs(tn) ** (1.0 / (2.0 * s)),
             np.linalg.norm(xn - tn * w) ** (1.0 / (1.0 + 2.0 * s)),
             np.linalg.norm(v1n - w),
             np.linalg.norm(v2n - w))
    return max(terms)


def kinetic_distance(z1, z2, s: float) -> float:
    """min over w of max(|dt|^(1/2s), |dx - dt w|^(1/(1+2s)),
    |v1 - w|, |v2 - w|).

    The problem is normalized to unit scale before optimizing, which
    makes the result exactly equivariant under the kinetic scaling
    (t, x, v) -> (k^(2s) t, k^(1+2s) x, k v).  Multi-start local search
    from the analytic seeds; the objective is a max of quasiconvex
    terms, so local minima are global.
    """
    if not 0.0 < s <= 1.0:
        raise ValueError("s must be in (0, 1]")
    t1, x1, v1 = _unpack(z1)
    t2, x2, v2 = _unpack(z2)
    dt = t1 - t2
    dx = x1 - x2
    scale = max(abs(dt) ** (1.0 / (2.0 * s)),
                float(np.linalg.norm(dx)) ** (1.0 / (1.0 + 2.0 * s)),
                float(np.linalg.norm(v1)), float(np.linalg.norm(v2)))
    if scale == 0.0:
        return 0.0
    tn = dt / scale ** (2.0 * s)
    xn = dx / scale ** (1.0 + 2.0 * s)
    v1n, v2n = v1 / scale, v2 / scale
    seeds = [v1n, v2n, 0.5 * (v1n + v2n)]
    if abs(tn) > 1e-300:
        seeds.append(xn / tn)
    best = min(_distance_objective(w, tn, xn, v1n, v2n, s) for w in seeds)
    for w0 in seeds:
        res = minimize(_distance_objective, w0,
                       args=(tn, xn, v1n, v2n, s), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-13,
                                "maxiter": 4000, "maxfev": 4000})
        best = min(best, float(res.fun))
    return scale * best


def kinetic_distance_grid(z1, z2, s: float, resolution: int = 41,
                          padding: float = 1.5) -> float:
    """Brute-force grid oracle for the distance minimization."""
    t1, x1, v1 = _unpack(z1)
    t2, x2, v2 = _unpack(z2)
    rough = kinetic_distance(z1, z2, s)
    center = 0.5 * (v1 + v2)
    half = max(float(np.linalg.norm(v1 - v2)), rough, 1e-6) * padding
    axes = [np.linspace(c - half, c + half, resolution) for c in center]
    grids = np.meshgrid(*axes, indexing="ij")
    ws = np.stack([g.ravel() for g in grids], axis=-1)
    dt, dx = t1 - t2, x1 - x2
    term_t = abs(dt) ** (1.0 / (2.0 * s))
    term_x = np.linalg.norm(dx - dt * ws, axis=-1) ** (1.0 / (1.0 + 2.0 * s))
    term_1 = np.linalg.norm(v1 - ws, axis=-1)
    term_2 = np.linalg.norm(v2 - ws, axis=-1)
    vals = np.maximum(np.maximum(term_t, term_x), np.maximum(term_1, term_2))
    return float(vals.min())


# ---------------------------------------------------------------------------
# sampled norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormSpec:
    alpha: float
    p: float
    window: tuple = (0.0, 1.0)
    radii: tuple = (1.0, 0.5, 0.25)

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must be in [0, 1)")
        if self.p < 0:
            raise ValueError("p must be >= 0")


@dataclass
class CylinderSample:
    center: KineticPoint
    r: float
    points: list                      # KineticPoint samples inside


@dataclass
class SamplePlan:
    s: float
    cylinders: list
    seed: int

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "seed": self.seed,
            "cylinders": [
                {"t": c.center.t, "x": c.center.x.tolist(),
                 "v": c.center.v.tolist(), "r": c.r,
                 "n_points": len(c.points)}
                for c in self.cylinders],
        }


def build_sample_plan(spec: NormSpec, s: float, dimension: int = 2,
                      n_cylinders: int = 24, points_per_cylinder: int = 8,
                      seed: int = 0, x_halfwidth: float = 2.0,
                      v_halfwidth: float = 3.0) -> SamplePlan:
    """Seeded cylinders covering the window at the spec's radii, with
    uniform samples inside each."""
    tau, T = spec.window
    rng = np.random.default_rng(seed)
    cylinders = []
    for k in range(n_cylinders):
        r = spec.radii[k % len(spec.radii)]
        t_lo = tau + r ** (2.0 * s)
        if t_lo >= T:
            r = min(spec.radii)
            t_lo = tau + r ** (2.0 * s)
            if t_lo >= T:
                raise ValueError("window too short for the cylinder radii")
        t0 = rng.uniform(t_lo, T)
        x0 = rng.uniform(-x_halfwidth, x_halfwidth, size=dimension)
        v0 = rng.uniform(-v_halfwidth, v_halfwidth, size=dimension)
        center = KineticPoint(t0, x0, v0)
        points = []
        for _ in range(points_per_cylinder):
            t = t0 - rng.uniform(0.0, r ** (2.0 * s) * 0.999)
            xdir = rng.normal(size=dimension)
            xdir /= np.linalg.norm(xdir)
            x = (x0 + (t - t0) * v0
                 + rng.uniform(0.0, r ** (1.0 + 2.0 * s)) ** 1.0 * xdir
                 * rng.uniform(0.0, 0.999))
            vdir = rng.normal(size=dimension)
            vdir /= np.linalg.norm(vdir)
            v = v0 + r * 0.999 * rng.uniform(0.0, 1.0) ** (1.0 / dimension) * vdir
            points.append(KineticPoint(t, x, v))
        cylinders.append(CylinderSample(center, r, points))
    return SamplePlan(s, cylinders, seed)


@dataclass
class HolderNorms:
    c0: float                 # weighted sup norm, weight (1+|v_center|)^p
    seminorm: float           # weighted Holder seminorm
    full: float               # weighted (sup + seminorm)
    l1: float                 # L^inf_(t,x) L^1 functional with (1+|v|)^p dv
    c0_unweighted: float


def sampled_holder_norm(F, spec: NormSpec, plan: SamplePlan,
                        l1_radial_order: int = 24,
                        l1_angular_order: int = 32) -> HolderNorms:
    """Empirical norms over the plan's cylinders.

    `F(ts, xs, vs)` must accept batched arrays.  The Holder quotient
    uses the kinetic distance; the L^1 functional integrates |F| in v
    over each cylinder's velocity ball at each sampled (t, x).
    """
    if not plan.cylinders:
        raise ValueError("empty sample plan")
    alpha, p = spec.alpha, spec.p
    s = plan.s
    c0 = semi = full = l1 = c0_unw = 0.0
    for cyl in plan.cylinders:
        wgt = (1.0 + float(np.linalg.norm(cyl.center.v))) ** p
        vals = np.array([_eval_point(F, z) for z in cyl.points])
        sup_here = float(np.max(np.abs(vals)))
        c0_unw = max(c0_unw, sup_here)
        sem_here = 0.0
        pts = cyl.points
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                d = kinetic_distance((pts[i].t, pts[i].x, pts[i].v),
                                     (pts[j].t, pts[j].x, pts[j].v), s)
                if d > 1e-12 and alpha > 0:
                    sem_here = max(sem_here,
                                   abs(vals[i] - vals[j]) / d ** alpha)
                elif alpha == 0:
                    sem_here = max(sem_here, abs(vals[i] - vals[j]))
        c0 = max(c0, wgt * sup_here)
        semi = max(semi, wgt * sem_here)
        full = max(full, wgt * (sup_here + sem_here))
        l1 = max(l1, _l1_ball(F, cyl, p, l1_radial_order, l1_angular_order))
    return HolderNorms(c0, semi, full, l1, c0_unw)


def _eval_point(F, z: KineticPoint) -> float:
    return float(np.asarray(F(np.array([z.t]), z.x[None, :],
                              z.v[None, :])).ravel()[0])


def _l1_ball(F, cyl: CylinderSample, p: float, radial_order: int,
             angular_order: int) -> float:
    n = cyl.center.v.size
    if n != 2:
        raise ValueError("L1 functional implemented for n = 2")
    rho, rw = gauss_legendre(radial_order, 0.0, cyl.r)
    phi = (np.arange(angular_order) + 0.5) * (2.0 * np.pi / angular_order)
    om = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    vs = cyl.center.v + rho[:, None, None] * om[None, :, :]
    wnorm = (1.0 + np.linalg.norm(vs, axis=-1)) ** p
    best = 0.0
    for z in cyl.points:
        ts = np.full(vs.shape[:2], z.t)
        xs = np.broadcast_to(z.x, vs.shape)
        vals = np.abs(np.asarray(F(ts, xs, vs))) * wnorm
        ang = vals.sum(axis=1) * (2.0 * np.pi / angular_order)
        best = max(best, float((ang * rho) @ rw))
    return best


def interpolation_constant(n: int, p: float) -> float:
    """Ball-average constant 2^(p+n) / omega_n: the 1/(omega_n r^n)
    average bound combined with (1+|w|) >= (1+|v|)/2 on unit balls."""
    omega = math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
    return 2.0 ** (p + n) / omega


def verify_interpolation(F, spec: NormSpec, epsilon_list, plan: SamplePlan,
                         ball_directions: int = 16,
                         ball_radii: int = 6) -> list:
    """Check, per epsilon: weighted sup norm of F is at most
    eps^alpha (C^alpha norm at weight p - alpha)
    + C eps^(-n) (L^1 functional at weight p + n).

    The right-hand norms are sampled over the plan plus, for each
    sampled point, the velocity ball of radius eps/(1+|v|) that powers
    the pointwise average bound, so the chain is checked samplewise.
    Returns one row per epsilon with the measured slack.
    """
    alpha, p = spec.alpha, spec.p
    n = plan.cylinders[0].center.v.size
    s = plan.s
    C = interpolation_constant(n, p)
    base = sampled_holder_norm(F, spec, plan)

    rows = []
    phi = (np.arange(ball_directions) + 0.5) * (2.0 * np.pi / ball_directions)
    dirs = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    for eps in epsilon_list:
        if not 0.0 < eps < 1.0:
            raise ValueError("epsilon must be in (0, 1)")
        lhs = semi = l1w = 0.0
        for cyl in plan.cylinders:
            for z in cyl.points:
                val = abs(_eval_point(F, z))
                vnorm = float(np.linalg.norm(z.v))
                lhs = max(lhs, (1.0 + vnorm) ** p * val)
                r = eps / (1.0 + vnorm)
                # local Holder quotients across the ball
                radii = np.linspace(r / ball_radii, r, ball_radii)
                ws = (z.v[None, None, :]
                      + radii[:, None, None] * dirs[None, :, :]).reshape(-1, n)
                ts = np.full(ws.shape[0], z.t)
                xs = np.broadcast_to(z.x, ws.shape)
                fw = np.asarray(F(ts, xs, ws))
                dv = np.linalg.norm(ws - z.v, axis=-1)
                quo = np.abs(fw - _eval_point(F, z)) / (0.5 * dv) ** alpha
                semi = max(semi, (1.0 + vnorm) ** (p - alpha) * float(quo.max()))
                # weighted L1 over the same ball
                rho, rw = gauss_legendre(24, 0.0, r)
                vs = z.v + rho[:, None, None] * dirs[None, :, :]
                wnorm = (1.0 + np.linalg.norm(vs, axis=-1)) ** (p + n)
                tts = np.full(vs.shape[:2], z.t)
                xxs = np.broadcast_to(z.x, vs.shape)
                vals = np.abs(np.asarray(F(tts, xxs, vs))) * wnorm
                ang = vals.sum(axis=1) * (2.0 * np.pi / ball_directions)
                l1w = max(l1w, float((ang * rho) @ rw))
        semi = max(semi, base.seminorm)
        l1w = max(l1w, base.l1)
        rhs = eps ** alpha * semi + C * eps ** (-float(n)) * l1w
        rows.append({"epsilon": float(eps), "lhs": lhs, "rhs": rhs,
                     "seminorm_term": eps ** alpha * semi,
                     "l1_term": C * eps ** (-float(n)) * l1w,
                     "slack": rhs - lhs, "holds": bool(lhs <= rhs + 1e-12),
                     "constant": C})
    return rows


# ---------------------------------------------------------------------------
# iteration lemma verifier
# ---------------------------------------------------------------------------

def giusti_constant(gamma: float) -> float:
    """(1 - sigma)^(-gamma) / (1 - 2^(-1/2)) with sigma = 2^(-1/(2 gamma)):
    the geometric-splitting constant of the iteration argument."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    sigma = 2.0 ** (-1.0 / (2.0 * gamma))
    return (1.0 - sigma) ** (-gamma) / (1.0 - 2.0 ** -0.5)


def giusti_verify(F, gamma: float, A: float, pair_samples=200,
                  interval=(0.0, 1.0), tol: float = 1e-9):
    """Check the halving hypothesis F(t1) <= F(t2)/2 + A (t2-t1)^(-gamma)
    on sampled pairs and, when it holds, the conclusion
    F(s1) <= c A (s2-s1)^(-gamma) with the explicit constant.

    Returns (hypothesis_ok, conclusion_ok, c_used); conclusion_ok is
    None when the hypothesis already fails.
    """
    if A < 0:
        raise ValueError("A must be >= 0")
    c = giusti_constant(gamma)
    if isinstance(pair_samples, int):
        T1, T2 = interval
        ts = np.linspace(T1, T2, max(3, int(math.isqrt(pair_samples)) + 2))
        pairs = [(a, b) for a in ts for b in ts if a < b]
    else:
        pairs = [(float(a), float(b)) for a, b in pair_samples if a < b]
    hypothesis_ok = True
    for t1, t2 in pairs:
        bound = 0.5 * F(t2) + (A * (t2 - t1) ** -gamma if A > 0 else 0.0)
        if F(t1) > bound + tol:
            hypothesis_ok = False
            break
    if not hypothesis_ok:
        return False, None, c
    conclusion_ok = True
    for s1, s2 in pairs:
        bound = c * A * (s2 - s1) ** -gamma if A > 0 else 0.0
        if F(s1) > bound + tol:
            conclusion_ok = False
            break
    return True, conclusion_ok, c

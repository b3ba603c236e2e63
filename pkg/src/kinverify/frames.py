"""Velocity-adapted change of variables and uniformity scans.

The frame rescales the component along the base velocity v0 by 1/|v0|
once |v0| >= 2 (identity below), together with the matching kinetic
time/space scaling.  Under the frame the transformed kernel stays
homogeneous, and the ellipticity measurements can be swept across base
velocities to quantify how uniform their constants are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import VelocityDistribution, ray_power_moment
from .kernel import (EllipticityReport, KernelParams, SurrogateAngular,
                     condition_cancellation, condition_nondegeneracy,
                     condition_upper_bound, kernel_exact, kernel_surrogate,
                     surrogate_density, gressman_strain_distance)
from .quadrature import (DEFAULT_BUDGET, QuadratureBudget, gauss_legendre,
                         _ellipsoid_section_basis)

FAR_SPEED = 2.0


@dataclass(frozen=True)
class FrameTransform:
    """Kinetic frame at base point z0 = (t0, x0, v0) for given kernel
    parameters (the time scaling uses gamma + 2s)."""

    t0: float
    x0: np.ndarray
    v0: np.ndarray
    params: KernelParams

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float)
        v0 = np.asarray(self.v0, dtype=float)
        if x0.shape != v0.shape:
            raise ValueError("x0 and v0 must share a dimension")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "v0", v0)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.v0))

    @property
    def far(self) -> bool:
        return self.speed >= FAR_SPEED

    @property
    def regime(self) -> str:
        return "far" if self.far else "near"

    @property
    def det_tau0(self) -> float:
        return 1.0 / self.speed if self.far else 1.0

    @property
    def time_scale(self) -> float:
        """|v0|^(gamma+2s) in the far regime, 1 near."""
        if not self.far:
            return 1.0
        return self.speed ** (self.params.gamma + 2.0 * self.params.s)

    def _vhat(self) -> np.ndarray:
        return self.v0 / self.speed

    def tau0(self, x) -> np.ndarray:
        """Scale the v0-component by 1/|v0| (far); identity near."""
        x = np.asarray(x, dtype=float)
        if not self.far:
            return x.copy()
        vhat = self._vhat()
        along = x @ vhat
        return x + np.multiply.outer(along * (1.0 / self.speed - 1.0), vhat)

    def tau0_inv(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.far:
            return x.copy()
        vhat = self._vhat()
        along = x @ vhat
        return x + np.multiply.outer(along * (self.speed - 1.0), vhat)

    def tau0_matrix(self) -> np.ndarray:
        n = self.v0.size
        if not self.far:
            return np.eye(n)
        vhat = self._vhat()
        return np.eye(n) + (1.0 / self.speed - 1.0) * np.outer(vhat, vhat)

    def transform_point(self, t: float, x, v):
        """The kinetic change of variables applied to (t, x, v)."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if not self.far:
            return self.t0 + t, self.x0 + x + t * self.v0, self.v0 + v
        sc = self.time_scale
        return (self.t0 + t / sc,
                self.x0 + (self.tau0(x) + t * self.v0) / sc,
                self.v0 + self.tau0(v))

    def inverse_point(self, t: float, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if not self.far:
            tt = t - self.t0
            return tt, x - self.x0 - tt * self.v0, v - self.v0
        sc = self.time_scale
        tt = (t - self.t0) * sc
        return (tt,
                self.tau0_inv((x - self.x0) * sc - tt * self.v0),
                self.tau0_inv(v - self.v0))

    def shifted_velocity(self, v) -> np.ndarray:
        """v0 + tau0(v), the velocity the transformed kernel sees."""
        return self.v0 + self.tau0(v)


def transform_norm_squared(frame: FrameTransform, e) -> float:
    """|tau0^-1(e)|^2 = 1 + (|v0|^2 - 1) cos^2(v0, e) for unit e (far)."""
    e = np.asarray(e, dtype=float)
    if not frame.far:
        return float(e @ e)
    c = float(frame.v0 @ e) / frame.speed
    return 1.0 + (frame.speed ** 2 - 1.0) * c ** 2


def transformed_kernel(f: VelocityDistribution, params: KernelParams,
                       frame: FrameTransform, v, h,
                       budget: QuadratureBudget = DEFAULT_BUDGET,
                       path: str = "surrogate") -> float:
    """The frame-transformed kernel at (v, v + h).

    Far regime: |v0|^(-1-gamma-2s) K_f(v0 + tau0(v), v0 + tau0(v+h));
    near regime: K_f(v0 + v, v0 + v + h).  `path` selects the surrogate
    or the exact Carleman evaluation of K_f.
    """
    v = np.asarray(v, dtype=float)
    h = np.asarray(h, dtype=float)
    evaluate = kernel_surrogate if path == "surrogate" else kernel_exact
    if not frame.far:
        base = frame.v0 + v
        if path == "surrogate":
            return evaluate(f, params, base, h)
        return evaluate(f, params, base, base + h, budget)
    pref = frame.speed ** (-1.0 - params.gamma - 2.0 * params.s)
    vt = frame.shifted_velocity(v)
    th = frame.tau0(h)
    if path == "surrogate":
        return pref * evaluate(f, params, vt, th)
    return pref * evaluate(f, params, vt, vt + th, budget)


class TransformedAngular:
    """Angular densities of the transformed kernel at base point v.

    K~(v, v + rho theta) = kappa rho^(-n-2s) A(theta) with
    A(theta) = |v0|^(-1-gamma-2s) |tau0 theta|^(-n-2s) a(v~; tau0 theta / |.|),
    which is the surrogate form pushed through the frame; the reverse
    density shifts the surrogate base point along tau0(theta).
    """

    def __init__(self, f, params: KernelParams, frame: FrameTransform, v):
        self.f = f
        self.params = params
        self.frame = frame
        self.v = np.asarray(v, dtype=float)
        self.vt = frame.shifted_velocity(self.v)
        if frame.far:
            self.pref = frame.speed ** (-1.0 - params.gamma - 2.0 * params.s)
        else:
            self.pref = 1.0

    def _mapped(self, thetas):
        if not self.frame.far:
            return np.ones(thetas.shape[0]), thetas
        t0 = self.frame.tau0(thetas)
        norms = np.linalg.norm(t0, axis=-1)
        return norms, t0 / norms[:, None]

    def at_base(self, thetas) -> np.ndarray:
        norms, hats = self._mapped(thetas)
        a = surrogate_density(self.f, self.params,
                              np.broadcast_to(self.vt, hats.shape), hats)
        return self.pref * norms ** (-self.params.n - 2.0 * self.params.s) * a

    def reversed_shifted(self, rho, thetas) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        norms, hats = self._mapped(thetas)
        scaled = norms ** (-self.params.n - 2.0 * self.params.s)
        bases = (self.vt[None, None, :]
                 + rho[:, None, None] * (norms[:, None] * hats)[None, :, :])
        th = np.broadcast_to(hats, bases.shape)
        a = surrogate_density(self.f, self.params,
                              bases.reshape(-1, self.params.n),
                              th.reshape(-1, self.params.n))
        return self.pref * scaled[None, :] * a.reshape(rho.size, thetas.shape[0])


class ShiftedAngular:
    """Angular densities of the untransformed kernel K_f(v0 + ., v0 + .),
    the comparison baseline for uniformity scans."""

    def __init__(self, f, params: KernelParams, v0, v):
        self.inner = SurrogateAngular(f, params, np.asarray(v0, float) + np.asarray(v, float))

    def at_base(self, thetas):
        return self.inner.at_base(thetas)

    def reversed_shifted(self, rho, thetas):
        return self.inner.reversed_shifted(rho, thetas)


def ellipsoid_sets(frame: FrameTransform, r: float):
    """Membership predicates for E_r(v0) (velocity space) and for the
    transformed cylinder (kinetic space).

    E_r(v0) = v0 + tau0(B_r); the kinetic set is the image of the
    centered kinetic cylinder of radius r under the frame map.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    from .kinetic_spaces import cylinder_contains

    def in_velocity_ellipsoid(v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        y = frame.tau0_inv(v - frame.v0)
        return np.linalg.norm(np.atleast_2d(y), axis=-1) < r

    def in_kinetic_set(t, x, v) -> bool:
        tt, xx, vv = frame.inverse_point(t, x, v)
        return cylinder_contains((0.0, np.zeros_like(frame.x0),
                                  np.zeros_like(frame.v0)), r,
                                 frame.params.s, (tt, xx, vv))

    return in_velocity_ellipsoid, in_kinetic_set


def section_min_radius(frame: FrameTransform, r: float, u) -> float:
    """Smallest radius of the planar section E_r cap {h perp u}:
    r (|v0|^2 sin^2(v0,u) + cos^2(v0,u))^(-1/2).  Far regime only."""
    if not frame.far:
        raise ValueError("section radius formula applies to the far regime")
    u = np.asarray(u, dtype=float)
    un = np.linalg.norm(u)
    if un == 0:
        raise ValueError("u must be nonzero")
    c2 = (float(frame.v0 @ u) / (frame.speed * un)) ** 2
    return r * (frame.speed ** 2 * (1.0 - c2) + c2) ** -0.5


def section_min_radius_singular(frame: FrameTransform, r: float, u) -> float:
    """The same radius from the section's quadratic form, as a guard."""
    _, M = _ellipsoid_section_basis(frame.v0, r, np.asarray(u, float))
    return r / math.sqrt(float(np.max(np.linalg.eigvalsh(M))))


def fit_distance_comparison(frame: FrameTransform, n_pairs: int = 200,
                            seed: int = 0, box_radius: float = 3.0):
    """Fitted two-sided constant in
    c0 |v - v'| <= d(v0 + tau0 v, v0 + tau0 v') <= |v - v'| / c0
    over sampled pairs, where d is the anisotropic collision distance.

    Returns (c0, min_ratio, max_ratio).
    """
    rng = np.random.default_rng(seed)
    n = frame.v0.size
    a = rng.uniform(-box_radius, box_radius, size=(n_pairs, n))
    b = rng.uniform(-box_radius, box_radius, size=(n_pairs, n))
    keep = np.linalg.norm(a - b, axis=-1) > 1e-9
    a, b = a[keep], b[keep]
    ta = frame.v0 + frame.tau0(a)
    tb = frame.v0 + frame.tau0(b)
    ratios = gressman_strain_distance(ta, tb) / np.linalg.norm(a - b, axis=-1)
    lo, hi = float(ratios.min()), float(ratios.max())
    return min(lo, 1.0 / hi), lo, hi


# ---------------------------------------------------------------------------
# uniformity scans
# ---------------------------------------------------------------------------

@dataclass
class UniformityRow:
    v0_norm: float
    lambda_meas: float | None
    Lambda_meas: float | None
    contrast: float | None
    tail_integral: float | None
    inconsistent: bool = False

    def to_row(self) -> dict:
        return {
            "v0_norm": self.v0_norm,
            "lambda": "" if self.lambda_meas is None else self.lambda_meas,
            "Lambda": "" if self.Lambda_meas is None else self.Lambda_meas,
            "ratio": "" if self.contrast is None else self.contrast,
            "tail_integral": "" if self.tail_integral is None else self.tail_integral,
        }


@dataclass
class UniformityScan:
    condition: str
    transformed: bool
    rows: list
    lambda_ratio: float | None = None
    Lambda_ratio: float | None = None
    contrast_max: float | None = None

    def to_json(self) -> dict:
        return {
            "condition": self.condition,
            "transformed": self.transformed,
            "rows": [r.to_row() for r in self.rows],
            "lambda_ratio": self.lambda_ratio,
            "Lambda_ratio": self.Lambda_ratio,
            "contrast_max": self.contrast_max,
        }


def _scan_condition(condition: str):
    if condition in ("upper", "i"):
        return condition_upper_bound, "upper"
    if condition in ("nondeg", "ii"):
        return condition_nondegeneracy, "nondeg"
    if condition in ("cancel", "iv"):
        return condition_cancellation, "cancel"
    raise ValueError("unknown scan condition %r" % condition)


def uniformity_scan(f: VelocityDistribution, params: KernelParams,
                    condition: str, v0_list, v_grid=None,
                    r_list=(0.5,), transformed: bool = True,
                    budget: QuadratureBudget = DEFAULT_BUDGET,
                    with_tail: bool = True) -> UniformityScan:
    """Run one ellipticity measurement across base velocities.

    For each v0 the selected condition is measured with the transformed
    kernel (or, for the comparison baseline, the plainly shifted kernel
    K_f(v0 + ., v0 + .)), on a velocity grid inside B_2.  Each row
    carries the measured extremal constants, their per-row contrast
    Lambda/lambda where both exist, and the bounded-tail integral of
    f K_f over the far annulus-ball set.  The scan summary holds the
    max/min ratios across v0.
    """
    if len(np.atleast_1d(v0_list)) == 0:
        raise ValueError("v0_list must be nonempty")
    measure, name = _scan_condition(condition)
    n = params.n
    if v_grid is None:
        v_grid = default_scan_grid(n)
    rows = []
    for v0 in v0_list:
        v0 = np.asarray(v0, dtype=float)
        frame = FrameTransform(0.0, np.zeros(n), v0, params)
        if transformed:
            factory = lambda v, fr=frame: TransformedAngular(f, params, fr, v)
        else:
            factory = lambda v, base=v0: ShiftedAngular(f, params, base, v)
        kwargs = {"angular_factory": factory, "budget": budget}
        if name == "nondeg":
            kwargs["cross_check"] = False
        report: EllipticityReport = measure(f, params, r_list, v_grid, **kwargs)
        lam, Lam = report.lambda_meas, report.Lambda_meas
        contrast = None
        if lam is not None and Lam is not None and lam > 0:
            contrast = Lam / lam
        tail = tail_mass_integral(f, params, v0) if with_tail else None
        rows.append(UniformityRow(float(np.linalg.norm(v0)), lam, Lam,
                                  contrast, tail, report.inconsistent))
    scan = UniformityScan(name, transformed, rows)
    lams = [r.lambda_meas for r in rows if r.lambda_meas is not None]
    Lams = [r.Lambda_meas for r in rows if r.Lambda_meas is not None]
    if lams and min(lams) > 0:
        scan.lambda_ratio = max(lams) / min(lams)
    if Lams and min(Lams) > 0:
        scan.Lambda_ratio = max(Lams) / min(Lams)
    contrasts = [r.contrast for r in rows if r.contrast is not None]
    if contrasts:
        scan.contrast_max = max(contrasts)
    return scan


def default_scan_grid(n: int) -> np.ndarray:
    """Symmetric velocity grid inside B_2 used when none is given."""
    if n == 2:
        pts = [np.zeros(2)]
        for radius in (1.0, 1.9):
            for k in range(8):
                ang = k * math.pi / 4.0
                pts.append(radius * np.array([math.cos(ang), math.sin(ang)]))
        return np.array(pts)
    pts = [np.zeros(n)]
    for radius in (1.0, 1.9):
        for i in range(n):
            for sgn in (-1.0, 1.0):
                e = np.zeros(n)
                e[i] = sgn * radius
                pts.append(e)
    return np.array(pts)


def tail_mass_integral(f: VelocityDistribution, params: KernelParams,
                       v0) -> float | None:
    """integral of f(v0 + h) K_f(v0, v0 + h) over the far set
    {|v0 + h| < |v0|/8, |h| > 1/2 + |v0|/8}, surrogate kernel.

    The set is empty unless |v0| > 2/3; substituting z = v0 + h it is
    the centered ball of radius |v0|/8 minus a far condition that the
    ball already satisfies for |v0| > 2/3.  Reported per base velocity
    as a boundedness check on the far-tail coupling.
    """
    v0 = np.asarray(v0, dtype=float)
    speed = float(np.linalg.norm(v0))
    if speed <= 2.0 / 3.0:
        return None
    n = params.n
    radius = speed / 8.0
    if n == 2:
        m_ang = 128
        phi = (np.arange(m_ang) + 0.5) * (2.0 * np.pi / m_ang)
        omegas = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        wang = 2.0 * np.pi / m_ang
    else:
        from .quadrature import sphere_grid
        omegas, wang_arr = sphere_grid(3, 16)
        wang = None
    rho, rw = gauss_legendre(48, 0.0, radius)
    pts = rho[:, None, None] * omegas[None, :, :]
    zs = pts.reshape(-1, n)
    dens = np.asarray(f.density(zs)).reshape(rho.size, -1)
    hvec = zs - v0
    hnorm = np.linalg.norm(hvec, axis=-1)
    theta = hvec / hnorm[:, None]
    a = surrogate_density(f, params, np.broadcast_to(v0, theta.shape), theta)
    kern = (params.kappa * hnorm ** (-n - 2.0 * params.s) * a).reshape(rho.size, -1)
    inner = dens * kern
    if n == 2:
        ang = inner.sum(axis=1) * wang
    else:
        ang = inner @ wang_arr
    return float((ang * rho ** (n - 1)) @ rw)

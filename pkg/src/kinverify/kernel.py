"""Collision kernel in Carleman and homogeneous surrogate form, the four
ellipticity measurements, the nonlocal/collision operators, and the
anisotropic reference energy.

The angular cross-section is pinned to exact equality
b(cos t) = kappa(s) |sin(t/2)|^(-(n-1)-2s), under which the Carleman
integrand collapses to a closed hyperplane weight and the exact kernel
dominates 2^(n-1) times the homogeneous surrogate whenever
gamma + 2s + 1 >= 0.  Physical prefactors are set to one; every
measured constant is meant for ratio comparisons only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import (VelocityDistribution, line_abs_moment,
                            ray_power_moment, support_radius)
from .quadrature import (DEFAULT_BUDGET, QuadratureBudget, gauss_legendre,
                         orthonormal_complement, sphere_grid)


@dataclass(frozen=True)
class KernelParams:
    """Dimension, singularity order, potential exponent, normalization."""

    n: int = 2
    s: float = 0.5
    gamma: float = 0.0
    normalization: str = "grazing"
    q_reference: float = 4.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not 0.0 < self.s < 1.0:
            raise ValueError("s must be in (0, 1)")
        if self.gamma <= -self.n:
            raise ValueError("gamma must be > -n")
        if self.normalization not in ("plain", "grazing"):
            raise ValueError("normalization must be 'plain' or 'grazing'")
        if self.q_reference <= 2:
            raise ValueError("q_reference must be > 2")

    @property
    def kappa(self) -> float:
        """Angular normalization: 1, or (1-s) in the grazing convention."""
        return 1.0 - self.s if self.normalization == "grazing" else 1.0

    @property
    def hyperplane_exponent(self) -> float:
        """gamma + 2s + 1, the closed Carleman hyperplane weight order."""
        return self.gamma + 2.0 * self.s + 1.0

    def admissible(self) -> bool:
        return 0.0 <= self.gamma + 2.0 * self.s <= self.q_reference

    def assert_admissible(self):
        if not self.admissible():
            raise ValueError(
                "gamma + 2s = %.3g outside [0, %.3g]"
                % (self.gamma + 2.0 * self.s, self.q_reference))


def sin_squared_constant(n: int) -> float:
    """c(n) in: integral of |theta.e|^2 over the unit subsphere
    perpendicular to z equals c(n) sin^2(z, e).

    The two-atom counting measure in 2D gives 2; the great circle in
    3D gives pi.
    """
    if n == 2:
        return 2.0
    if n == 3:
        return math.pi
    raise ValueError("n must be 2 or 3")


# ---------------------------------------------------------------------------
# surrogate density a(v; theta) and the two kernel forms
# ---------------------------------------------------------------------------

def surrogate_density(f: VelocityDistribution, params: KernelParams,
                      vs, thetas) -> np.ndarray:
    """a(v; theta): the |w|^(gamma+2s+1)-weighted mass of f(v + .) on the
    hyperplane through the origin orthogonal to theta.

    Closed form in 2D; plane-polar quadrature with exact ray moments in
    3D.  Batched over matching leading axes of `vs` and `thetas`.
    """
    p = params.hyperplane_exponent
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    vs, thetas = np.broadcast_arrays(vs, thetas)
    if params.n == 2:
        us = np.stack([-thetas[..., 1], thetas[..., 0]], axis=-1)
        return line_abs_moment(f, vs, us, p)
    # n = 3: polar in the plane; each ray contributes a power moment of
    # order p + 1 (the extra power is the polar jacobian)
    flat_v = vs.reshape(-1, 3)
    flat_t = thetas.reshape(-1, 3)
    out = np.empty(flat_v.shape[0])
    m_ang = 64
    phi = (np.arange(m_ang) + 0.5) * (2.0 * np.pi / m_ang)
    cphi, sphi = np.cos(phi), np.sin(phi)
    for k in range(flat_v.shape[0]):
        B = orthonormal_complement(flat_t[k])
        omegas = np.outer(cphi, B[:, 0]) + np.outer(sphi, B[:, 1])
        rays = ray_power_moment(f, np.broadcast_to(flat_v[k], omegas.shape),
                                omegas, p + 1.0)
        out[k] = float(rays.sum() * 2.0 * np.pi / m_ang)
    return out.reshape(vs.shape[:-1])


def kernel_surrogate(f: VelocityDistribution, params: KernelParams,
                     v, h) -> float:
    """kappa |h|^(-n-2s) a(v; h/|h|), the homogeneous comparison kernel."""
    h = np.asarray(h, dtype=float)
    hnorm = float(np.linalg.norm(h))
    if hnorm == 0:
        raise ValueError("h must be nonzero")
    a = surrogate_density(f, params, np.asarray(v, float)[None, :],
                          (h / hnorm)[None, :])
    return params.kappa * hnorm ** (-params.n - 2.0 * params.s) * float(a[0])


def kernel_exact(f: VelocityDistribution, params: KernelParams,
                 v, vprime, budget: QuadratureBudget = DEFAULT_BUDGET) -> float:
    """Carleman-form kernel K_f(v, v').

    Equals 2^(n-1) kappa |v-v'|^(-n-2s) times the hyperplane integral of
    f(v + w) (|v-v'|^2 + |w|^2)^((gamma+2s+1)/2) over w perp (v'-v).
    """
    v = np.asarray(v, dtype=float)
    vprime = np.asarray(vprime, dtype=float)
    d = vprime - v
    dnorm = float(np.linalg.norm(d))
    if dnorm == 0:
        raise ValueError("v and v' must differ")
    p = params.hyperplane_exponent
    if p <= -(params.n - 1):
        raise ValueError("gamma + 2s + 1 must exceed -(n-1)")
    n = params.n
    if n == 2:
        u = np.array([-d[1], d[0]]) / dnorm
        planar = 0.0
        for sign in (1.0, -1.0):
            planar += float(ray_power_moment(
                f, v[None, :], (sign * u)[None, :], 0.0,
                weight_fn=lambda t: (dnorm ** 2 + t ** 2) ** (p / 2.0))[0])
    else:
        B = orthonormal_complement(d)
        m_ang = 64
        phi = (np.arange(m_ang) + 0.5) * (2.0 * np.pi / m_ang)
        omegas = np.outer(np.cos(phi), B[:, 0]) + np.outer(np.sin(phi), B[:, 1])
        rays = ray_power_moment(
            f, np.broadcast_to(v, omegas.shape), omegas, 1.0,
            weight_fn=lambda t: (dnorm ** 2 + t ** 2) ** (p / 2.0))
        planar = float(rays.sum() * 2.0 * np.pi / m_ang)
    return (2.0 ** (n - 1) * params.kappa
            * dnorm ** (-n - 2.0 * params.s) * planar)


@dataclass(frozen=True)
class KernelEvaluation:
    v: np.ndarray
    vprime: np.ndarray
    exact_value: float
    surrogate_value: float


def evaluate_kernel(f, params, v, vprime,
                    budget: QuadratureBudget = DEFAULT_BUDGET) -> KernelEvaluation:
    v = np.asarray(v, dtype=float)
    vprime = np.asarray(vprime, dtype=float)
    return KernelEvaluation(
        v=v, vprime=vprime,
        exact_value=kernel_exact(f, params, v, vprime, budget),
        surrogate_value=kernel_surrogate(f, params, v, vprime - v))


# ---------------------------------------------------------------------------
# angular kernels: what the ellipticity measurements actually consume
#
# Every kernel in scope is homogeneous of order -(n+2s) in the jump h,
# so a measurement cell only needs the angular density A(theta) with
# K(v, v + rho theta) = kappa rho^(-n-2s) A(theta), plus the
# rho-dependent reverse density for the cancellation families.
# ---------------------------------------------------------------------------

class SurrogateAngular:
    """Angular densities of the plain surrogate kernel at base point v."""

    def __init__(self, f: VelocityDistribution, params: KernelParams, v):
        self.f = f
        self.params = params
        self.v = np.asarray(v, dtype=float)

    def at_base(self, thetas) -> np.ndarray:
        vs = np.broadcast_to(self.v, thetas.shape)
        return surrogate_density(self.f, self.params, vs, thetas)

    def reversed_shifted(self, rho, thetas) -> np.ndarray:
        """A'(rho, theta) with K(v + rho theta, v) = kappa rho^(-n-2s) A'.

        Uses a(.}; -theta) = a(.; theta).
        """
        rho = np.asarray(rho, dtype=float)
        bases = self.v[None, None, :] + rho[:, None, None] * thetas[None, :, :]
        th = np.broadcast_to(thetas, bases.shape)
        vals = surrogate_density(self.f, self.params,
                                 bases.reshape(-1, self.params.n),
                                 th.reshape(-1, self.params.n))
        return vals.reshape(rho.size, thetas.shape[0])


def _default_factory(f, params):
    return lambda v: SurrogateAngular(f, params, v)


# ---------------------------------------------------------------------------
# ellipticity reports
# ---------------------------------------------------------------------------

@dataclass
class CellResult:
    condition: str
    v: np.ndarray
    r: float
    e: np.ndarray | None
    value: float
    method: str = "surrogate"
    extra: dict = field(default_factory=dict)

    def to_row(self) -> dict:
        return {
            "condition": self.condition,
            "v": " ".join("%.6g" % x for x in np.atleast_1d(self.v)),
            "r": self.r,
            "e": "" if self.e is None else " ".join(
                "%.6g" % x for x in np.atleast_1d(self.e)),
            "value": self.value,
            "method": self.method,
        }


@dataclass
class EllipticityReport:
    condition: str
    params: KernelParams
    cells: list
    lambda_meas: float | None = None
    Lambda_meas: float | None = None
    extras: dict = field(default_factory=dict)
    inconsistent: bool = False

    def to_json(self) -> dict:
        return {
            "condition": self.condition,
            "params": {
                "n": self.params.n, "s": self.params.s,
                "gamma": self.params.gamma,
                "normalization": self.params.normalization,
            },
            "lambda_meas": self.lambda_meas,
            "Lambda_meas": self.Lambda_meas,
            "inconsistent": self.inconsistent,
            "extras": self.extras,
            "n_cells": len(self.cells),
        }

    def to_csv_rows(self) -> list:
        return [c.to_row() for c in self.cells]


def direction_grid(n: int, size: int) -> np.ndarray:
    """Antipodally identified direction grid (half circle / sphere rule)."""
    if n == 2:
        phi = np.arange(size) * (math.pi / size)
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    order = max(4, int(round(math.sqrt(size / 2.0))))
    thetas, _ = sphere_grid(3, order)
    return thetas


def _sphere_rule(n: int, m: int = 0):
    if n == 2:
        m = m or 512
        phi = (np.arange(m) + 0.5) * (2.0 * np.pi / m)
        thetas = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return thetas, np.full(m, 2.0 * np.pi / m)
    return sphere_grid(3, m or 24)


def _inf_directional(values, thetas, weights, e_grid):
    """min/argmin/max over e of sum a(theta) (theta.e)_+^2, with one
    golden-section refinement around the 2D grid argmin."""
    dots = thetas @ e_grid.T
    cell = (values * weights) @ np.clip(dots, 0.0, None) ** 2
    k = int(np.argmin(cell))
    best, best_e, worst = float(cell[k]), e_grid[k], float(cell.max())
    if thetas.shape[-1] == 2:
        span = math.pi / e_grid.shape[0]
        phi0 = math.atan2(e_grid[k, 1], e_grid[k, 0])

        def val(phi):
            e = np.array([math.cos(phi), math.sin(phi)])
            return float((values * weights) @ np.clip(thetas @ e, 0.0, None) ** 2)

        a, b = phi0 - span, phi0 + span
        g = (math.sqrt(5.0) - 1.0) / 2.0
        c, d = b - g * (b - a), a + g * (b - a)
        fc, fd = val(c), val(d)
        for _ in range(24):
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - g * (b - a)
                fc = val(c)
            else:
                a, c, fc = c, d, fd
                d = a + g * (b - a)
                fd = val(d)
        phi = 0.5 * (a + b)
        refined = val(phi)
        if refined < best:
            best = refined
            best_e = np.array([math.cos(phi), math.sin(phi)])
    return best, best_e, worst


def condition_upper_bound(f, params: KernelParams, r_list, v_grid,
                          budget: QuadratureBudget = DEFAULT_BUDGET,
                          angular_factory=None) -> EllipticityReport:
    """Tail-mass condition: [int_{|h|>r} K(v,v+h) + K(v+h,v) dh] r^(2s).

    Measured on the homogeneous angular kernel at v, whose radial tail
    integral is exactly r^(-2s)/(2s); the cell value is then
    r-independent by homogeneity, and the reverse direction coincides
    with the forward one by evenness of the angular density.
    """
    factory = angular_factory or _default_factory(f, params)
    thetas, weights = _sphere_rule(params.n)
    cells = []
    for v in np.atleast_2d(np.asarray(v_grid, dtype=float)):
        a = factory(v).at_base(thetas)
        base = 2.0 * params.kappa / (2.0 * params.s) * float(a @ weights)
        for r in np.atleast_1d(r_list):
            cells.append(CellResult("upper", v.copy(), float(r), None, base))
    Lam = max(c.value for c in cells)
    return EllipticityReport("upper", params, cells, Lambda_meas=Lam)


def condition_nondegeneracy(f, params: KernelParams, r_list, v_grid,
                            e_grid=None,
                            budget: QuadratureBudget = DEFAULT_BUDGET,
                            angular_factory=None,
                            cross_check: bool = True) -> EllipticityReport:
    """inf_e int_{B_r} K(v,v+h) (h.e)_+^2 dh / r^(2-2s) per cell.

    Method (a): sphere quadrature of A(v;theta)(theta.e)_+^2 times the
    exact radial factor kappa r^(2-2s)/(2-2s).  Method (b), run when the
    plain surrogate kernel is measured: the full-space reformulation
    int f(v+z) c(n) sin^2(z,e) |z|^(gamma+2s) dz via ray moments, halved
    through the positive-part identity.  Cells whose two paths disagree
    beyond 5 percent flag the report as inconsistent.
    """
    n = params.n
    if e_grid is None:
        e_grid = direction_grid(n, 360 if n == 2 else 2562)
    factory = angular_factory or _default_factory(f, params)
    thetas, weights = _sphere_rule(n)
    radial = params.kappa / (2.0 - 2.0 * params.s)
    cells = []
    inconsistent = False
    for v in np.atleast_2d(np.asarray(v_grid, dtype=float)):
        a = factory(v).at_base(thetas)
        best, best_e, worst = _inf_directional(a, thetas, weights, e_grid)
        val_a = radial * best
        extra = {"sup_directional": radial * worst}
        if cross_check and angular_factory is None:
            val_b = radial * 0.5 * nondegeneracy_fullspace(f, params, v, best_e)
            agree = abs(val_a - val_b) / max(abs(val_a), abs(val_b), 1e-300)
            extra.update({"value_b": val_b, "cross_rel_err": agree})
            if agree > 0.05:
                inconsistent = True
        for r in np.atleast_1d(r_list):
            cells.append(CellResult("nondeg", v.copy(), float(r), best_e,
                                    val_a, extra=dict(extra)))
    lam = min(c.value for c in cells)
    Lam = max(c.extra["sup_directional"] for c in cells)
    return EllipticityReport("nondeg", params, cells, lambda_meas=lam,
                             Lambda_meas=Lam, inconsistent=inconsistent)


def nondegeneracy_fullspace(f, params: KernelParams, v, e) -> float:
    """int f(v+z) c(n) sin^2(z,e) |z|^(gamma+2s) dz by ray decomposition.

    Independent of the hyperplane path: the integrand is sliced along
    rays from v, not along hyperplanes.
    """
    n = params.n
    q = params.gamma + 2.0 * params.s + n - 1.0
    omegas, ws = _sphere_rule(n, 1024 if n == 2 else 32)
    rays = ray_power_moment(f, np.broadcast_to(np.asarray(v, float),
                                               omegas.shape), omegas, q)
    dots = omegas @ np.asarray(e, float)
    sin2 = np.clip(1.0 - dots ** 2, 0.0, None)
    return sin_squared_constant(n) * float((rays * sin2) @ ws)


def condition_cancellation(f, params: KernelParams, r_list, v_grid,
                           budget: QuadratureBudget = DEFAULT_BUDGET,
                           angular_factory=None) -> EllipticityReport:
    """Antisymmetry bounds on K(v,v+h) - K(v+h,v) over B_r.

    Pairing theta with -theta makes the scalar angular difference
    second order and the vector one first order in rho, so the radial
    integrands rho^(-1-2s) resp. rho^(-2s) against them are integrable
    for every s.  Family one is scaled by r^(2s); family two (only for
    s >= 1/2) by 1/(1 + r^(1-2s)).  Inside the radial split the
    integrand is replaced by its homogeneity limit times the analytic
    radial factor (for s near 1 essentially all radial mass sits at
    scales far below any floating-point-stable difference quotient).
    """
    n, s = params.n, params.s
    factory = angular_factory or _default_factory(f, params)
    thetas, weights = _sphere_rule(n, 256 if n == 2 else 16)
    cells = []
    for v in np.atleast_2d(np.asarray(v_grid, dtype=float)):
        angular = factory(v)
        a_here = angular.at_base(thetas)
        for r in np.atleast_1d(r_list):
            r = float(r)
            if not 0.0 < r < 1.0:
                raise ValueError("cancellation radii must lie in (0, 1)")
            split = 0.1 * r
            rho_out, ow = gauss_legendre(48, split, r)
            rho = np.concatenate([[split], rho_out])
            a_shift = angular.reversed_shifted(rho, thetas)
            diff = a_here[None, :] - a_shift
            scal = diff @ weights                      # ~ c2 rho^2
            vec = np.einsum("rk,ki,k->ri", diff, thetas, weights)  # ~ c1 rho
            inner_factor = split ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
            fam1_int = (scal[0] / split ** 2) * inner_factor \
                + float((scal[1:] * rho_out ** (-1.0 - 2.0 * s)) @ ow)
            fam1 = params.kappa * abs(fam1_int) * r ** (2.0 * s)
            cells.append(CellResult("cancel", v.copy(), r, None, fam1,
                                    extra={"family": 1}))
            if s >= 0.5:
                fam2_int = (vec[0] / split) * inner_factor \
                    + np.einsum("ri,r->i", vec[1:],
                                rho_out ** (-2.0 * s) * ow)
                fam2 = params.kappa * float(np.linalg.norm(fam2_int)) \
                    / (1.0 + r ** (1.0 - 2.0 * s))
                cells.append(CellResult("cancel", v.copy(), r, None, fam2,
                                        extra={"family": 2}))
    Lam = max(c.value for c in cells)
    return EllipticityReport("cancel", params, cells, Lambda_meas=Lam)


# ---------------------------------------------------------------------------
# coercivity energies and the anisotropic reference form
# ---------------------------------------------------------------------------

def gressman_strain_distance(w, wprime) -> np.ndarray:
    """sqrt(|w-w'|^2 + (|w|^2 - |w'|^2)^2 / 4)."""
    w = np.asarray(w, dtype=float)
    wprime = np.asarray(wprime, dtype=float)
    dv = w - wprime
    q = np.einsum("...i,...i->...", w, w) - np.einsum(
        "...i,...i->...", wprime, wprime)
    return np.sqrt(np.einsum("...i,...i->...", dv, dv) + 0.25 * q ** 2)


@dataclass(frozen=True)
class CoercivityEnergies:
    kernel_energy: float      # (g - g')^2 against the surrogate kernel
    aniso_energy: float       # anisotropic reference form
    hs_energy: float          # plain fractional Sobolev energy
    l2: float


def _grid_ball(radius: float, spacing: float, n: int):
    axes = np.arange(-radius, radius + 0.5 * spacing, spacing)
    grids = np.meshgrid(*([axes] * n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    pts = pts[np.linalg.norm(pts, axis=-1) <= radius]
    return pts, spacing ** n


def coercivity_energies(f, params: KernelParams, g, grad_g=None,
                        grid_radius: float = 4.0, spacing: float = 0.1,
                        budget: QuadratureBudget = DEFAULT_BUDGET,
                        rho_split: float = 0.1) -> CoercivityEnergies:
    """The three quadratic forms of g on a truncated grid (n = 2).

    kernel_energy pairs (g - g')^2 with the surrogate kernel frozen at
    the left point; aniso_energy with the weighted anisotropic-distance
    kernel cut at distance one; hs_energy with the plain |h|^(-n-2s)
    kernel.  Ordered pairs at distance > rho_split are summed on the
    grid; the singular diagonal is the analytic radial factor against
    (grad g . theta)^2 in all three energies.
    """
    if params.n != 2:
        raise ValueError("coercivity grid evaluation implemented for n = 2")
    if spacing > 0.1 + 1e-12:
        raise ValueError("grid spacing must be <= 0.1")
    pts, cellvol = _grid_ball(grid_radius, spacing, 2)
    gv = np.asarray(g(pts))
    grad = np.asarray(grad_g(pts)) if grad_g is not None else _fd_gradient(g, pts)
    supp = np.abs(gv) > 0
    if not np.any(supp):
        return CoercivityEnergies(0.0, 0.0, 0.0, 0.0)
    l2 = float(np.sum(gv ** 2)) * cellvol

    kappa, s, n = params.kappa, params.s, params.n
    expo = params.hyperplane_exponent
    e_k = e_a = e_h = 0.0
    chunk = 128
    M = pts.shape[0]
    for start in range(0, M, chunk):
        vi = pts[start:start + chunk]
        gvi = gv[start:start + chunk]
        dv = pts[None, :, :] - vi[:, None, :]
        dist = np.linalg.norm(dv, axis=-1)
        dg2 = (gv[None, :] - gvi[:, None]) ** 2
        mask = (dist > rho_split) & (dg2 > 0)
        rows, cols = np.nonzero(mask)
        if not rows.size:
            continue
        left = vi[rows]
        right = pts[cols]
        dd = dist[rows, cols]
        contrib = dg2[rows, cols]
        thetas = dv[rows, cols] / dd[:, None]
        av = surrogate_density(f, params, left, thetas)
        e_k += float(np.sum(contrib * kappa * dd ** (-n - 2.0 * s) * av))
        dgs = gressman_strain_distance(left, right)
        wgt = ((1.0 + np.sum(left ** 2, -1))
               * (1.0 + np.sum(right ** 2, -1))) ** (expo / 4.0)
        close = dgs <= 1.0
        e_a += float(np.sum(contrib[close] * wgt[close] * kappa
                            * dgs[close] ** (-n - 2.0 * s)))
        e_h += float(np.sum(contrib * kappa * dd ** (-n - 2.0 * s)))
    e_k *= cellvol ** 2
    e_a *= cellvol ** 2
    e_h *= cellvol ** 2

    # singular diagonal: (g(v+h) - g(v))^2 ~ (grad g . h)^2 against the
    # exact radial integral of rho^(1-2s) up to the split
    radial = kappa * rho_split ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    m_theta = 128
    phi = (np.arange(m_theta) + 0.5) * (2.0 * np.pi / m_theta)
    theta_nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    wtheta = 2.0 * np.pi / m_theta
    active = np.linalg.norm(grad, axis=-1) > 0
    vact = pts[active]
    if vact.size:
        dots = grad[active] @ theta_nodes.T
        av = surrogate_density(
            f, params,
            np.repeat(vact, m_theta, axis=0),
            np.tile(theta_nodes, (vact.shape[0], 1))).reshape(-1, m_theta)
        e_k += float(np.sum(dots ** 2 * av) * wtheta) * radial * cellvol
        aweight = (1.0 + np.sum(vact ** 2, -1)) ** (expo / 2.0)
        # d(v, v + h) ~ |h| sqrt(1 + (v.theta)^2) to first order
        loc = (1.0 + (vact @ theta_nodes.T) ** 2) ** (-(n + 2.0 * s) / 2.0)
        e_a += float(np.sum(dots ** 2 * loc * aweight[:, None])
                     * wtheta) * radial * cellvol
        e_h += float(np.sum(dots ** 2) * wtheta) * radial * cellvol

    return CoercivityEnergies(e_k, e_a, e_h, l2)


def _fd_gradient(g, pts, h: float = 1e-5):
    n = pts.shape[-1]
    grad = np.empty_like(pts)
    for i in range(n):
        dp = np.zeros(n)
        dp[i] = h
        grad[:, i] = (np.asarray(g(pts + dp)) - np.asarray(g(pts - dp))) / (2 * h)
    return grad


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def apply_nonlocal_operator(f, params: KernelParams, g, v,
                            budget: QuadratureBudget = DEFAULT_BUDGET) -> float:
    """(1/2) int (g(v+h) + g(v-h) - 2 g(v)) K(v, v+h) dh.

    Symmetrized compensation licensed by the evenness of the angular
    density; inside the radial split the second difference is replaced
    by its rho^2 homogeneity limit against the analytic radial factor.
    """
    v = np.asarray(v, dtype=float)
    n, s, kappa = params.n, params.s, params.kappa
    thetas, weights = _sphere_rule(n, 256 if n == 2 else 16)
    av = surrogate_density(f, params, np.broadcast_to(v, thetas.shape), thetas)
    g0 = float(np.asarray(g(v[None, :])).ravel()[0])
    split = 0.1
    T = budget.truncation_radius

    def second_diff(rho):
        plus = np.asarray(g(v[None, None, :] + rho[:, None, None] * thetas))
        minus = np.asarray(g(v[None, None, :] - rho[:, None, None] * thetas))
        return plus + minus - 2.0 * g0

    d2_split = second_diff(np.array([split]))[0]
    inner = float(d2_split @ (av * weights)) / split ** 2 \
        * split ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)

    rho_out, ow = gauss_legendre(128, split, T)
    d2o = second_diff(rho_out)
    outer = float(np.einsum("rk,k,r->", d2o, av * weights,
                            ow * rho_out ** (-1.0 - 2.0 * s)))
    return 0.5 * kappa * (inner + outer)


def convolution_term(f, params: KernelParams, v,
                     budget: QuadratureBudget = DEFAULT_BUDGET) -> float:
    """(f * |.|^gamma)(v): near components by ray decomposition around
    v, far ones in their own frame."""
    from .distributions import convolution_weighted
    return float(convolution_weighted(f, np.asarray(v, float),
                                      params.gamma, tensor="scalar"))


def collision_operator(f, params: KernelParams, g, v,
                       budget: QuadratureBudget = DEFAULT_BUDGET) -> float:
    """Nonlocal part plus g(v) times the |.|^gamma convolution (c_b = 1)."""
    v = np.asarray(v, dtype=float)
    gval = float(np.asarray(g(v[None, :])).ravel()[0])
    return (apply_nonlocal_operator(f, params, g, v, budget)
            + gval * convolution_term(f, params, v, budget))


# ---------------------------------------------------------------------------
# collision-energy identity cross-check
# ---------------------------------------------------------------------------

def carleman_energy_identity(f, params: KernelParams, g,
                             g_support_radius: float = 1.0,
                             v_order: int = 20, vstar_order: int = 24,
                             sigma_order: int = 384, rho_order: int = 128):
    """Compare the sigma-representation collision energy with the
    Carleman double integral of (g - g')^2 against the exact kernel.

    Both sides restrict the outer velocity to the same box around the
    support of g; at fixed v the reparametrization from (v*, sigma) to
    (v', w) is exact, so the two quadratures must agree.  Returns
    (sigma_form, carleman_form, rel_err).  2D only.
    """
    if params.n != 2:
        raise ValueError("energy identity check implemented for n = 2")
    kappa, s, gamma = params.kappa, params.s, params.gamma
    L = g_support_radius
    x, xw = gauss_legendre(v_order, -L, L)
    vx, vy = np.meshgrid(x, x, indexing="ij")
    v_pts = np.stack([vx.ravel(), vy.ravel()], axis=-1)
    v_w = np.outer(xw, xw).ravel()
    g_v = np.asarray(g(v_pts))

    # sigma side; the collision partner is integrated in polar
    # coordinates around v, where the |v - v*| kink is radial-smooth
    R = support_radius(f) + 1.0
    psi = (np.arange(sigma_order) + 0.5) * (2.0 * np.pi / sigma_order)
    sig = np.stack([np.cos(psi), np.sin(psi)], axis=-1)
    wsig = 2.0 * np.pi / sigma_order
    m_om = vstar_order * 4
    chi = (np.arange(m_om) + 0.5) * (2.0 * np.pi / m_om)
    om = np.stack([np.cos(chi), np.sin(chi)], axis=-1)
    wom = 2.0 * np.pi / m_om

    cos_t = -(om @ sig.T)                         # (v - v*)/|.| = -omega
    sin_half = np.sqrt(np.clip(0.5 * (1.0 - cos_t), 1e-300, None))
    bfun = kappa * sin_half ** (-(params.n - 1) - 2.0 * s)
    vdirs = 0.5 * (om[:, None, :] + sig[None, :, :])   # v' = v + rho * vdir
    lhs = 0.0
    for k, v in enumerate(v_pts):
        rr, rrw = gauss_legendre(2 * vstar_order, 0.0,
                                 R + float(np.linalg.norm(v)))
        vs = v[None, None, :] + rr[:, None, None] * om[None, :, :]
        f_vs = np.asarray(f.density(vs.reshape(-1, 2))).reshape(rr.size, m_om)
        radial = np.empty(rr.size)
        for i, rho_star in enumerate(rr):
            vprime = v + rho_star * vdirs
            dgs = (g_v[k] - np.asarray(
                g(vprime.reshape(-1, 2))).reshape(m_om, -1)) ** 2
            inner = np.einsum("os,os->o", bfun, dgs) * wsig
            radial[i] = float(f_vs[i] @ inner) * wom
        lhs += v_w[k] * float((radial * rr ** (1.0 + gamma)) @ rrw)

    # Carleman side, polar around each v; the hyperplane passes through
    # the far point v' = v + rho theta
    m_theta = 256
    phi = (np.arange(m_theta) + 0.5) * (2.0 * np.pi / m_theta)
    thetas = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    wtheta = 2.0 * np.pi / m_theta
    Tmax = R + 2.0 * L
    rho, rw = gauss_legendre(rho_order, 0.0, Tmax)
    p = params.hyperplane_exponent
    rhs = 0.0
    for k, v in enumerate(v_pts):
        total = 0.0
        for theta in thetas:
            u = np.array([-theta[1], theta[0]])
            vprimes = v[None, :] + rho[:, None] * theta
            dg2 = (g_v[k] - np.asarray(g(vprimes))) ** 2
            planar = np.zeros(rho.size)
            for sign in (1.0, -1.0):
                planar += ray_power_moment(
                    f, vprimes, np.broadcast_to(sign * u, vprimes.shape), 0.0,
                    weight_fn=lambda t, r_=rho: (
                        r_[:, None] ** 2 + t ** 2) ** (p / 2.0))
            kern = 2.0 * kappa * rho ** (-params.n - 2.0 * s) * planar
            total += float((dg2 * kern * rho ** (params.n - 1)) @ rw)
        rhs += v_w[k] * total * wtheta
    denom = max(abs(lhs), abs(rhs), 1e-300)
    return lhs, rhs, abs(lhs - rhs) / denom

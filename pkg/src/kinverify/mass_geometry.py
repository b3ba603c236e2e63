"""Mass location outside tubes, slabs and half-spaces.

Quantifies how much of a distribution's mass survives removing a linear
tube from a ball, the worst tube over a direction/offset grid, the
directional slab second moments, and the two-sided mass balance around
the mean velocity.  All integrals reduce to line-adapted coordinates
with exact per-component cross sections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (BallComponent, BoxComponent, GaussianComponent,
                            VelocityDistribution, line_mass_on_interval,
                            indicator_line_interval, ray_power_moment,
                            support_radius)
from .observables import mean_velocity
from .quadrature import (DEFAULT_BUDGET, QuadratureBudget,
                         gauss_legendre, orthonormal_complement)


@dataclass(frozen=True)
class LineSpec:
    """Line {point + t * direction}; the direction is normalized."""

    point: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        point = np.asarray(self.point, dtype=float)
        direction = np.asarray(self.direction, dtype=float)
        norm = np.linalg.norm(direction)
        if norm == 0:
            raise ValueError("direction must be nonzero")
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "direction", direction / norm)


def _axis_breakpoints(f: VelocityDistribution, origin, e0) -> list:
    """t-values along the line where component support edges cross.

    Delimits the piecewise-smooth segments of the cross-section mass so
    indicator edges cannot slip between quadrature nodes.
    """
    pts = []
    for c in f.components:
        if isinstance(c, GaussianComponent):
            top = math.sqrt(float(np.max(np.linalg.eigvalsh(c.cov))))
            center_t = float((c.mean - origin) @ e0)
            pts += [center_t - 10.0 * top, center_t, center_t + 10.0 * top]
        elif isinstance(c, BoxComponent):
            lo = c.center - c.half_widths
            hi = c.center + c.half_widths
            corners = np.array(np.meshgrid(*zip(lo, hi))).T.reshape(-1, c.dimension)
            pts += list((corners - origin) @ e0)
        else:
            center_t = float((c.center - origin) @ e0)
            pts += [center_t - c.radius, center_t + c.radius]
    return pts


def _segments(lo: float, hi: float, inner_pts) -> list:
    pts = sorted({lo, hi} | {p for p in inner_pts if lo < p < hi})
    return list(zip(pts[:-1], pts[1:]))


def _adaptive_segment_sum(fn, segments, budget: QuadratureBudget,
                          start_order: int = 16) -> float:
    """Sum of integrals of a vectorized scalar fn over the segments,
    each refined by order doubling."""
    total = 0.0
    for a, b in segments:
        if b - a <= 1e-14:
            continue
        prev = None
        order = start_order
        while True:
            t, w = gauss_legendre(order, a, b)
            val = float(np.asarray(fn(t)) @ w)
            if prev is not None and abs(val - prev) <= max(
                    budget.abs_tol, budget.rel_tol * max(abs(val), 1e-12)):
                break
            if order >= 1024:
                break
            prev = val
            order *= 2
        total += val
    return total


def tube_complement_mass(f: VelocityDistribution, line: LineSpec,
                         delta: float, R: float,
                         budget: QuadratureBudget = DEFAULT_BUDGET) -> float:
    """Mass of f on B_R (origin-centered) minus the tube of radius delta
    around the line.

    Cylindrical coordinates adapted to the line: the axial integral runs
    over segments delimited by component edges, the cross-section mass
    at each axial station is exact per component.
    """
    if delta <= 0 or R <= 0:
        raise ValueError("delta and R must be positive")
    n = f.dimension
    e0 = line.direction
    a0 = line.point
    alpha = float(a0 @ e0)
    if n == 2:
        B = orthonormal_complement(e0)
        eperp = B[:, 0]
        betac = float(a0 @ eperp)

        def cross_mass(ts):
            # allowed u: inside the disc slice, outside the tube
            s2 = R ** 2 - (ts + alpha) ** 2
            s = np.sqrt(np.clip(s2, 0.0, None))
            lo_disc, hi_disc = -betac - s, -betac + s
            bases = a0 + np.outer(ts, e0)
            us = np.broadcast_to(eperp, bases.shape)
            total = np.zeros_like(ts)
            for seg_lo, seg_hi in ((lo_disc, np.minimum(hi_disc, -delta)),
                                   (np.maximum(lo_disc, delta), hi_disc)):
                good = seg_hi > seg_lo
                total = total + np.where(
                    good,
                    line_mass_on_interval(f, bases, us,
                                          np.where(good, seg_lo, 0.0),
                                          np.where(good, seg_hi, 0.0)),
                    0.0)
            return total

        segments = _segments(-alpha - R, -alpha + R,
                             _axis_breakpoints(f, a0, e0))
        return _adaptive_segment_sum(cross_mass, segments, budget)

    if n != 3:
        raise ValueError("tube integrals implemented for n in {2, 3}")
    B = orthonormal_complement(e0)
    b_perp = np.array([float(a0 @ B[:, 0]), float(a0 @ B[:, 1])])
    m_ang = 96
    phi = (np.arange(m_ang) + 0.5) * (2.0 * np.pi / m_ang)
    omega2 = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    omega3 = omega2 @ B.T
    wphi = 2.0 * np.pi / m_ang

    def cross_mass(ts):
        out = np.zeros_like(ts)
        for i, t in enumerate(ts):
            s2 = R ** 2 - (t + alpha) ** 2
            if s2 <= delta ** 2:
                # the disc slice has radius <= delta: nothing survives
                continue
            base = a0 + t * e0
            # per angular ray: rho in [delta, rho_max(phi)] with
            # rho_max solving |rho w + b_perp|^2 = s2
            bw = omega2 @ b_perp
            disc = bw ** 2 - (b_perp @ b_perp - s2)
            rho_max = np.where(disc > 0, -bw + np.sqrt(np.clip(disc, 0, None)), 0.0)
            ok = rho_max > delta
            if not np.any(ok):
                continue
            vals = ray_power_moment(
                f, np.broadcast_to(base, omega3[ok].shape), omega3[ok], 1.0,
                t_lo=delta, t_hi=rho_max[ok])
            out[i] = float(vals.sum() * wphi)
        return out

    segments = _segments(-alpha - R, -alpha + R,
                         _axis_breakpoints(f, a0, e0))
    return _adaptive_segment_sum(cross_mass, segments, budget, start_order=24)


def worst_tube_scan(f: VelocityDistribution, delta: float, R: float,
                    direction_grid_size: int = 24,
                    offset_grid=None,
                    budget: QuadratureBudget = DEFAULT_BUDGET,
                    refine: bool = True, with_table: bool = False):
    """Minimize tube_complement_mass over direction and offset grids.

    Directions use antipodal identification (half circle / half
    sphere); offsets move the line base perpendicular to its direction
    inside a box of half-width 2R around the mean velocity (farther
    tubes cannot reduce the objective below the full ball mass).  One
    local pattern-search pass refines the grid argmin.  Returns
    (min_mass, argmin LineSpec), plus the grid rows when `with_table`.
    """
    if direction_grid_size < 1:
        raise ValueError("direction grid must be nonempty")
    n = f.dimension
    _, vbar = mean_velocity(f)
    if offset_grid is None:
        offset_grid = np.linspace(-2.0 * R, 2.0 * R, 9)
    offset_grid = np.asarray(offset_grid, dtype=float)
    if offset_grid.size == 0:
        raise ValueError("offset grid must be nonempty")

    if n == 2:
        angles = np.arange(direction_grid_size) * (math.pi / direction_grid_size)
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    else:
        from .quadrature import sphere_grid
        thetas, _ = sphere_grid(3, max(4, direction_grid_size // 4))
        dirs = thetas[thetas[:, 2] >= 0]

    def objective(e0, offsets):
        B = orthonormal_complement(e0)
        a0 = vbar + B @ np.atleast_1d(offsets)
        return tube_complement_mass(f, LineSpec(a0, e0), delta, R, budget)

    best = (np.inf, None, None)
    table = []
    for e0 in dirs:
        n_off = 1 if n == 2 else 2
        grids = np.meshgrid(*([offset_grid] * n_off), indexing="ij")
        for off in np.stack([g.ravel() for g in grids], axis=-1):
            val = objective(e0, off)
            if with_table:
                table.append({
                    "direction": " ".join("%.6g" % x for x in e0),
                    "offset": " ".join("%.6g" % x for x in np.atleast_1d(off)),
                    "mass": val})
            if val < best[0] - 1e-15:
                best = (val, e0.copy(), np.atleast_1d(off).copy())

    val, e0, off = best
    if refine and offset_grid.size > 1:
        step_off = float(offset_grid[1] - offset_grid[0]) / 2.0
        step_ang = (math.pi / direction_grid_size) / 2.0 if n == 2 else 0.0
        for _ in range(6):
            improved = False
            for d_off in (-step_off, step_off):
                for k in range(off.size):
                    trial = off.copy()
                    trial[k] += d_off
                    tv = objective(e0, trial)
                    if tv < val - 1e-15:
                        val, off, improved = tv, trial, True
            if n == 2 and step_ang > 0:
                ang = math.atan2(e0[1], e0[0])
                for d_ang in (-step_ang, step_ang):
                    e_try = np.array([math.cos(ang + d_ang),
                                      math.sin(ang + d_ang)])
                    tv = objective(e_try, off)
                    if tv < val - 1e-15:
                        val, e0, improved = tv, e_try, True
            step_off /= 2.0
            step_ang /= 2.0
            if not improved and step_off < 1e-6:
                break
    B = orthonormal_complement(e0)
    line = LineSpec(vbar + B @ off, e0)
    if with_table:
        return val, line, table
    return val, line


def directional_marginal(f: VelocityDistribution, base, e, taus) -> np.ndarray:
    """Cross-section mass m(tau) of f(base + .) on the hyperplanes
    {w . e = tau}: Gaussian marginals are closed form, indicator
    sections are exact lengths (2D) or sliced areas (3D)."""
    e = np.asarray(e, dtype=float)
    base = np.asarray(base, dtype=float)
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    n = f.dimension
    out = np.zeros(taus.shape)
    B = orthonormal_complement(e)
    for c in f.components:
        if isinstance(c, GaussianComponent):
            m = float((c.mean - base) @ e)
            s2 = float(e @ c.cov @ e)
            out = out + c.weight * np.exp(-0.5 * (taus - m) ** 2 / s2) \
                / math.sqrt(2.0 * math.pi * s2)
        elif n == 2 or isinstance(c, BallComponent):
            if n == 2:
                bases = base + np.outer(taus, e)
                us = np.broadcast_to(B[:, 0], bases.shape)
                t1, t2 = indicator_line_interval(c, bases, us)
                out = out + c.weight * (t2 - t1)
            else:
                d = np.abs(taus - float((c.center - base) @ e))
                r2 = np.clip(c.radius ** 2 - d ** 2, 0.0, None)
                out = out + c.weight * math.pi * r2
        else:
            # 3D box: slice area by one more level of line sections
            x, w = gauss_legendre(64, -_box_extent(c, base), _box_extent(c, base))
            for i, tau in enumerate(taus):
                bases = base + tau * e + np.outer(x, B[:, 0])
                us = np.broadcast_to(B[:, 1], bases.shape)
                t1, t2 = indicator_line_interval(c, bases, us)
                out[i] += c.weight * float((t2 - t1) @ w)
    return out


def _box_extent(c: BoxComponent, base) -> float:
    return float(np.linalg.norm(np.abs(c.center - base) + c.half_widths)) + 1e-9


def slab_second_moment(f: VelocityDistribution, sigma, eta: float,
                       budget: QuadratureBudget = DEFAULT_BUDGET,
                       e_grid_size: int = 64) -> float:
    """sup over unit e perp sigma of
    int over {|w.e| >= eta} of f(vbar + w) |w.e|^2 dw.

    At eta = 0 this is the directional pressure sup over the plane
    perpendicular to sigma.  In 2D the perpendicular direction is
    unique; in 3D the sup runs over a grid in the sigma-plane.
    """
    if eta < 0:
        raise ValueError("eta must be >= 0")
    sigma = np.asarray(sigma, dtype=float)
    _, vbar = mean_velocity(f)
    B = orthonormal_complement(sigma)
    n = f.dimension
    if n == 2:
        es = [B[:, 0]]
    else:
        phis = (np.arange(e_grid_size) + 0.5) * (math.pi / e_grid_size)
        es = [math.cos(p) * B[:, 0] + math.sin(p) * B[:, 1] for p in phis]

    Tmax = support_radius(f) + float(np.linalg.norm(vbar)) + 1.0
    best = 0.0
    for e in es:
        if eta >= Tmax:
            continue
        val = 0.0
        breaks = _axis_breakpoints(f, vbar, e)
        for lo, hi in ((eta, Tmax), (-Tmax, -eta)):
            if hi <= lo:
                continue
            val += _adaptive_segment_sum(
                lambda t, e=e: directional_marginal(f, vbar, e, t) * t ** 2,
                _segments(lo, hi, breaks), budget)
        best = max(best, val)
    return best


def halfspace_mass_balance(f: VelocityDistribution, e0, eta: float,
                           varrho: float,
                           budget: QuadratureBudget = DEFAULT_BUDGET):
    """(forward, backward) masses around the mean velocity:

    forward  = mass of f(vbar + w) on {w . e0 >= eta},
    backward = mass of f(vbar + w) on B_varrho intersect {w . e0 <= 0}.
    """
    if eta <= 0 or varrho <= 0:
        raise ValueError("eta and varrho must be positive")
    e0 = np.asarray(e0, dtype=float)
    e0 = e0 / np.linalg.norm(e0)
    _, vbar = mean_velocity(f)
    n = f.dimension
    Tmax = support_radius(f) + float(np.linalg.norm(vbar)) + 1.0
    breaks = _axis_breakpoints(f, vbar, e0)

    forward = _adaptive_segment_sum(
        lambda t: directional_marginal(f, vbar, e0, t),
        _segments(eta, max(Tmax, eta + 1.0), breaks), budget)

    B = orthonormal_complement(e0)

    def back_slice(taus):
        s = np.sqrt(np.clip(varrho ** 2 - taus ** 2, 0.0, None))
        if n == 2:
            bases = vbar + np.outer(taus, e0)
            us = np.broadcast_to(B[:, 0], bases.shape)
            return line_mass_on_interval(f, bases, us, -s, s)
        m_ang = 64
        phi = (np.arange(m_ang) + 0.5) * (2.0 * np.pi / m_ang)
        omega3 = np.stack([np.cos(phi), np.sin(phi)], axis=-1) @ B.T
        out = np.empty(taus.size)
        for i, tau in enumerate(taus):
            base = vbar + tau * e0
            vals = ray_power_moment(
                f, np.broadcast_to(base, omega3.shape), omega3, 1.0,
                t_hi=s[i])
            out[i] = float(vals.sum() * (2.0 * np.pi / m_ang))
        return out

    backward = _adaptive_segment_sum(
        back_slice, _segments(-varrho, 0.0, breaks), budget)
    return forward, backward

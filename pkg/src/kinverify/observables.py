"""Macroscopic observables and hydrodynamic admissibility checks.

Mass, mean velocity, pressure tensor, temperature, energy, entropy and
the |v|^q moment table, together with the directional and
two-directional pressure conditions and the combined bound check that
gates every kernel measurement downstream.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import (BallComponent, BoxComponent, GaussianComponent,
                            VelocityDistribution, component_view,
                            ray_power_moment, support_radius)
from .quadrature import (DEFAULT_BUDGET, QuadratureBudget, QuadratureError,
                         gauss_legendre, sphere_grid)


@dataclass(frozen=True)
class ObservableReport:
    rho: float
    vbar: np.ndarray
    pressure: np.ndarray
    temperature: float
    energy: float
    entropy: float
    moments: dict
    pressure_eigs: np.ndarray = field(default=None)

    def __post_init__(self):
        eigs = np.sort(np.linalg.eigvalsh(self.pressure))
        object.__setattr__(self, "pressure_eigs", eigs)

    def to_json(self) -> dict:
        return {
            "rho": self.rho,
            "vbar": np.asarray(self.vbar).tolist(),
            "pressure": np.asarray(self.pressure).tolist(),
            "temperature": self.temperature,
            "energy": self.energy,
            "entropy": self.entropy,
            "moments": [{"q": q, "value": m} for q, m in sorted(self.moments.items())],
            "pressure_eigs": self.pressure_eigs.tolist(),
        }


def _component_mean(c) -> np.ndarray:
    if isinstance(c, GaussianComponent):
        return c.mean
    return c.center


def _component_central_second(c) -> np.ndarray:
    """Second central moment of the component's unit-mass shape."""
    n = c.dimension
    if isinstance(c, GaussianComponent):
        return c.cov
    if isinstance(c, BoxComponent):
        return np.diag(c.half_widths ** 2 / 3.0)
    return (c.radius ** 2 / (n + 2.0)) * np.eye(n)


def raw_second_moment(f: VelocityDistribution) -> np.ndarray:
    """integral of f(v) v (x) v dv, closed form."""
    n = f.dimension
    out = np.zeros((n, n))
    for c in f.components:
        mu = _component_mean(c)
        out += c.mass * (_component_central_second(c) + np.outer(mu, mu))
    return out


def mean_velocity(f: VelocityDistribution):
    rho = f.total_mass
    m1 = sum(c.mass * _component_mean(c) for c in f.components)
    return rho, np.asarray(m1) / rho


def pressure_tensor(f: VelocityDistribution) -> np.ndarray:
    rho, vbar = mean_velocity(f)
    return raw_second_moment(f) - rho * np.outer(vbar, vbar)


def moment(f: VelocityDistribution, q: float,
           budget: QuadratureBudget = DEFAULT_BUDGET) -> float:
    """integral of f(v) |v|^q dv.

    Isotropic Gaussians are closed form.  Boxes use tensor rules in
    their own frame, split at the coordinate axes so the |v|^q kink
    never crosses a panel; balls and anisotropic Gaussians switch
    between origin-polar (exact radial powers, wide viewing angles)
    and component-frame rules depending on where they sit.
    """
    if q < 0:
        raise ValueError("moment order must be >= 0")
    total = 0.0
    for c in f.components:
        if isinstance(c, GaussianComponent):
            if _is_isotropic(c):
                total += _gaussian_isotropic_moment(c, q)
            else:
                total += _moment_gaussian(c, q, budget)
        elif isinstance(c, BoxComponent):
            total += _moment_box(c, q)
        else:
            total += _moment_ball(c, q, budget)
    return total


def _is_isotropic(c: GaussianComponent) -> bool:
    sigma2 = c.cov[0, 0]
    return np.allclose(c.cov, sigma2 * np.eye(c.dimension), atol=1e-14)


def _gaussian_isotropic_moment(c: GaussianComponent, q: float) -> float:
    """E|X|^q for X ~ N(mu, sigma^2 I) scaled by the weight.

    |X|^2/sigma^2 is noncentral chi-square; the q/2 absolute moment has
    a closed Kummer form.
    """
    from scipy.special import gammaln, hyp1f1
    n = c.dimension
    sigma2 = float(c.cov[0, 0])
    lam = float(np.dot(c.mean, c.mean)) / sigma2
    logpref = (0.5 * q * math.log(2.0 * sigma2)
               + gammaln((n + q) / 2.0) - gammaln(n / 2.0))
    val = math.exp(logpref - 0.5 * lam) * hyp1f1((n + q) / 2.0, n / 2.0, 0.5 * lam)
    return c.weight * val


def _moment_box(c: BoxComponent, q: float, order: int = 48) -> float:
    """Tensor Gauss-Legendre over the box, panel-split at each
    coordinate axis the box straddles; |v|^q is analytic per panel."""
    n = c.dimension
    edges_per_axis = []
    for i in range(n):
        lo = c.center[i] - c.half_widths[i]
        hi = c.center[i] + c.half_widths[i]
        cuts = [lo, hi]
        if lo < 0.0 < hi:
            cuts = [lo, 0.0, hi]
        edges_per_axis.append(list(zip(cuts[:-1], cuts[1:])))
    m = order if n == 2 else 24
    total = 0.0
    for panel in itertools.product(*edges_per_axis):
        axes, wts = [], []
        for lo, hi in panel:
            x, w = gauss_legendre(m, lo, hi)
            axes.append(x)
            wts.append(w)
        grids = np.meshgrid(*axes, indexing="ij")
        pts2 = sum(g ** 2 for g in grids)
        wg = np.meshgrid(*wts, indexing="ij")
        wprod = np.ones_like(pts2)
        for g in wg:
            wprod = wprod * g
        total += float(np.sum(wprod * pts2 ** (q / 2.0)))
    return c.weight * total


def _moment_ball(c: BallComponent, q: float,
                 budget: QuadratureBudget) -> float:
    n = c.dimension
    dist = float(np.linalg.norm(c.center))
    if dist <= c.radius:
        # origin inside: exact radial powers along rays from the origin
        def value(order):
            om, ws = _angular(n, order)
            rays = ray_power_moment(component_view(c),
                                    np.zeros((om.shape[0], n)), om,
                                    q + n - 1.0)
            return float(rays @ ws)
        return _refine_scalar(value, budget)

    # origin outside: polar around the center, smooth integrand
    def value(order):
        om, ws = _angular(n, order)
        x, w = gauss_legendre(64, 0.0, c.radius)
        pts = c.center + x[:, None, None] * om[None, :, :]
        vals = np.sum(pts ** 2, axis=-1) ** (q / 2.0)
        radial = vals * (w * x ** (n - 1))[:, None]
        return c.weight * float(radial.sum(axis=0) @ ws)
    return _refine_scalar(value, budget)


def _moment_gaussian(c: GaussianComponent, q: float,
                     budget: QuadratureBudget) -> float:
    n = c.dimension
    top = math.sqrt(float(np.max(np.linalg.eigvalsh(c.cov))))
    if float(np.linalg.norm(c.mean)) <= 8.0 * top + 2.0:
        def value(order):
            om, ws = _angular(n, order)
            rays = ray_power_moment(component_view(c),
                                    np.zeros((om.shape[0], n)), om,
                                    q + n - 1.0)
            return float(rays @ ws)
        return _refine_scalar(value, budget)
    # mass far from the origin: Gauss-Hermite in the component frame
    from .distributions import _component_frame_nodes
    pts, wts = _component_frame_nodes(c, n)
    return float((np.sum(pts ** 2, axis=-1) ** (q / 2.0)) @ wts)


def _angular(n: int, order: int):
    if n == 2:
        phi = (np.arange(order) + 0.5) * (2.0 * np.pi / order)
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1), \
            np.full(order, 2.0 * np.pi / order)
    return sphere_grid(n, max(8, order // 16))


def _refine_scalar(value, budget: QuadratureBudget, start: int = 128) -> float:
    prev = None
    order = start
    while True:
        val = value(order)
        if prev is not None and abs(val - prev) <= max(
                budget.abs_tol, budget.rel_tol * abs(val)):
            return val
        if order > 8192:
            raise QuadratureError("moment quadrature did not converge",
                                  val, abs(val - prev))
        prev = val
        order *= 2


def entropy(f: VelocityDistribution, tol: float = 1e-6,
            budget: QuadratureBudget = DEFAULT_BUDGET) -> float:
    """integral of f log f with the 0 log 0 = 0 convention.

    All-box mixtures are evaluated exactly on the arrangement of box
    edges; Gaussian mixtures by per-component Gauss-Hermite; other
    mixtures by refined tensor quadrature over the support box.
    """
    comps = f.components
    if all(isinstance(c, BoxComponent) for c in comps):
        return _entropy_boxes(f)
    if all(isinstance(c, GaussianComponent) for c in comps):
        return _entropy_gaussians(f)
    return _entropy_tensor(f, tol, budget)


def _entropy_boxes(f: VelocityDistribution) -> float:
    n = f.dimension
    cuts = [set() for _ in range(n)]
    for c in f.components:
        for i in range(n):
            cuts[i].add(c.center[i] - c.half_widths[i])
            cuts[i].add(c.center[i] + c.half_widths[i])
    grids = [sorted(s) for s in cuts]
    total = 0.0
    for cell in itertools.product(*(zip(g[:-1], g[1:]) for g in grids)):
        lows = np.array([a for a, _ in cell])
        highs = np.array([b for _, b in cell])
        mid = 0.5 * (lows + highs)
        rho_c = float(f.density(mid))
        if rho_c > 0:
            total += float(np.prod(highs - lows)) * rho_c * math.log(rho_c)
    return total


def _entropy_gaussians(f: VelocityDistribution) -> float:
    if len(f.components) == 1:
        c = f.components[0]
        n = c.dimension
        _, logdet = np.linalg.slogdet(c.cov)
        return c.weight * (math.log(c.weight)
                           - 0.5 * (n * math.log(2.0 * math.pi) + logdet)
                           - 0.5 * n)
    # per-component Gauss-Hermite: int w_c N_c log f over each component's
    # own whitened frame, so anisotropy costs nothing
    from numpy.polynomial.hermite_e import hermegauss
    x, w = hermegauss(48)
    n = f.dimension
    zgrids = np.meshgrid(*([x] * n), indexing="ij")
    z = np.stack([g.ravel() for g in zgrids], axis=-1)
    wgrids = np.meshgrid(*([w] * n), indexing="ij")
    wprod = np.ones(z.shape[0])
    for g in wgrids:
        wprod *= g.ravel()
    total = 0.0
    for c in f.components:
        L = np.linalg.cholesky(c.cov)
        pts = c.mean + z @ L.T
        dens = np.asarray(f.density(pts))
        logd = np.where(dens > 0, np.log(np.maximum(dens, 1e-300)), 0.0)
        total += c.weight * (2.0 * math.pi) ** (-n / 2.0) * float(wprod @ logd)
    return total


def _entropy_tensor(f: VelocityDistribution, tol: float,
                    budget: QuadratureBudget) -> float:
    n = f.dimension
    L = support_radius(f) + 0.5
    prev = None
    order = 64 if n == 2 else 32
    while True:
        x, w = gauss_legendre(order, -L, L)
        grids = np.meshgrid(*([x] * n), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        dens = np.asarray(f.density(pts))
        vals = np.where(dens > 0, dens * np.log(np.maximum(dens, 1e-300)), 0.0)
        wprod = np.ones(pts.shape[0])
        for i in range(n):
            wprod *= w[np.indices((x.size,) * n)[i].ravel()]
        val = float(vals @ wprod)
        if prev is not None and abs(val - prev) <= max(tol * abs(val), 1e-10):
            return val
        if order >= (2048 if n == 2 else 256):
            raise QuadratureError("entropy quadrature did not converge",
                                  val, abs(val - (prev or val)))
        prev = val
        order *= 2


def energy_direct(f: VelocityDistribution) -> float:
    """(1/2) integral of f |v|^2, closed form."""
    return 0.5 * float(np.trace(raw_second_moment(f)))


def compute_observables(f: VelocityDistribution, moment_orders=(),
                        tol: float = 1e-6,
                        budget: QuadratureBudget = DEFAULT_BUDGET,
                        with_entropy: bool = True) -> ObservableReport:
    rho, vbar = mean_velocity(f)
    P = pressure_tensor(f)
    n = f.dimension
    T = float(np.trace(P)) / (n * rho)
    E = 0.5 * rho * float(np.dot(vbar, vbar)) + 0.5 * n * rho * T
    h = entropy(f, tol, budget) if with_entropy else float("nan")
    moments = {float(q): moment(f, float(q), budget) for q in moment_orders}
    moments.setdefault(0.0, rho)
    return ObservableReport(rho=rho, vbar=vbar, pressure=P, temperature=T,
                            energy=E, entropy=h, moments=moments)


def pressure_condition_directional(P) -> float:
    """inf over unit e of e . P e  =  the smallest eigenvalue."""
    P = _check_symmetric(P)
    return float(np.linalg.eigvalsh(P)[0])


def pressure_condition_two_directions(P) -> float:
    """inf over sigma of sup over unit e perp sigma of e . P e.

    Spectral reduction: the value is the second-largest eigenvalue.  For
    sigma along the top eigenvector the sup is the second eigenvalue,
    and any other sigma admits some e perp sigma inside the top-two
    eigenspace.
    """
    P = _check_symmetric(P)
    eigs = np.sort(np.linalg.eigvalsh(P))[::-1]
    return float(eigs[1])


def pressure_two_directions_grid(P, n_dirs: int = 720) -> float:
    """Brute-force inf-sup over direction grids; guards the reduction."""
    P = _check_symmetric(P)
    n = P.shape[0]
    sigmas, _ = sphere_grid(n, n_dirs if n == 2 else max(16, int(math.sqrt(n_dirs / 2))))
    best = np.inf
    for sigma in sigmas:
        from .quadrature import orthonormal_complement
        B = orthonormal_complement(sigma)
        if n == 2:
            e = B[:, 0]
            val = float(e @ P @ e)
        else:
            # sup over the circle perp sigma = top eigenvalue of the
            # projected 2x2 form
            M = B.T @ P @ B
            val = float(np.linalg.eigvalsh(M)[-1])
        best = min(best, val)
    return best


def _check_symmetric(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("pressure tensor must be square")
    if not np.allclose(P, P.T, atol=1e-10 * max(1.0, float(np.abs(P).max()))):
        raise ValueError("pressure tensor must be symmetric")
    return 0.5 * (P + P.T)


HYDRO_CONDITIONS = ("mass_bounds", "pressure_two_directions", "moment_bound")


def check_hydro_bounds(report: ObservableReport, m0: float, M0: float,
                       p0: float, Mq: float, q: float) -> dict:
    """Per-condition pass/fail against the admissibility thresholds.

    mass_bounds:               m0 <= rho <= M0
    pressure_two_directions:   second-largest pressure eigenvalue >= p0
    moment_bound:              |v|^q moment <= Mq
    """
    if min(m0, M0, p0, Mq) <= 0:
        raise ValueError("thresholds must be positive")
    qkey = float(q)
    if qkey not in report.moments:
        raise KeyError("moment order %g missing from report" % q)
    two_dir = pressure_condition_two_directions(report.pressure)
    results = {
        "mass_bounds": bool(m0 <= report.rho <= M0),
        "pressure_two_directions": bool(two_dir >= p0),
        "moment_bound": bool(report.moments[qkey] <= Mq),
    }
    results["all_pass"] = all(results.values())
    return results

"""Velocity distributions as finite mixtures of analytic primitives.

A distribution is a weighted sum of Gaussians, axis-aligned boxes and
balls.  Every primitive has an exact pointwise density and exact
restrictions to lines and rays, which is what the quadrature layers
build on.  Values are immutable after construction; all operations are
pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class DimensionMismatchError(ValueError):
    """Evaluation point does not match the distribution's dimension."""


@dataclass(frozen=True)
class GaussianComponent:
    """weight * normal density with the given mean and covariance."""

    mean: np.ndarray
    cov: np.ndarray
    weight: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance shape does not match mean")
        if not np.allclose(cov, cov.T):
            raise ValueError("covariance must be symmetric")
        eigs = np.linalg.eigvalsh(cov)
        if np.min(eigs) <= 0:
            raise ValueError("covariance must be positive definite")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))
        object.__setattr__(self, "_cov_inv", _frozen(np.linalg.inv(cov)))
        object.__setattr__(self, "_norm", (2.0 * np.pi) ** (-mean.size / 2.0)
                           / math.sqrt(np.linalg.det(cov)))

    @property
    def dimension(self) -> int:
        return self.mean.size

    @property
    def mass(self) -> float:
        return self.weight

    def density(self, v: np.ndarray) -> np.ndarray:
        d = v - self.mean
        q = np.einsum("...i,ij,...j->...", d, self._cov_inv, d)
        return self.weight * self._norm * np.exp(-0.5 * q)


@dataclass(frozen=True)
class BoxComponent:
    """weight * indicator of an axis-aligned box."""

    center: np.ndarray
    half_widths: np.ndarray
    weight: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        hw = np.asarray(self.half_widths, dtype=float)
        if hw.shape != center.shape:
            raise ValueError("half_widths shape does not match center")
        if np.min(hw) <= 0:
            raise ValueError("half_widths must be positive")
        object.__setattr__(self, "center", _frozen(center))
        object.__setattr__(self, "half_widths", _frozen(hw))

    @property
    def dimension(self) -> int:
        return self.center.size

    @property
    def mass(self) -> float:
        return self.weight * float(np.prod(2.0 * self.half_widths))

    def density(self, v: np.ndarray) -> np.ndarray:
        inside = np.all(np.abs(v - self.center) < self.half_widths, axis=-1)
        return self.weight * inside.astype(float)


@dataclass(frozen=True)
class BallComponent:
    """weight * indicator of a ball."""

    center: np.ndarray
    radius: float
    weight: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", _frozen(center))

    @property
    def dimension(self) -> int:
        return self.center.size

    @property
    def mass(self) -> float:
        n = self.dimension
        vol = math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0) * self.radius ** n
        return self.weight * vol

    def density(self, v: np.ndarray) -> np.ndarray:
        d = v - self.center
        inside = np.einsum("...i,...i->...", d, d) < self.radius ** 2
        return self.weight * inside.astype(float)


Component = GaussianComponent | BoxComponent | BallComponent


@dataclass(frozen=True)
class VelocityDistribution:
    """Finite mixture of analytic primitives on R^n, n >= 2."""

    dimension: int
    components: tuple
    allow_negative_weights: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("dimension must be >= 2")
        object.__setattr__(self, "components", tuple(self.components))
        for c in self.components:
            if c.dimension != self.dimension:
                raise DimensionMismatchError(
                    "component dimension %d != %d" % (c.dimension, self.dimension))
            if c.weight <= 0 and not self.allow_negative_weights:
                raise ValueError("component weights must be positive")
        mass = self.total_mass
        if not (mass > 0 and np.isfinite(mass)):
            raise ValueError("total mass must be finite and positive")

    @property
    def total_mass(self) -> float:
        return float(sum(c.mass for c in self.components))

    def density(self, v) -> np.ndarray:
        return density(self, v)


def density(f: VelocityDistribution, v) -> np.ndarray:
    """Exact pointwise density; `v` may carry leading batch axes."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != f.dimension:
        raise DimensionMismatchError(
            "point dimension %d != %d" % (v.shape[-1], f.dimension))
    out = np.zeros(v.shape[:-1])
    for c in f.components:
        out = out + c.density(v)
    if out.ndim == 0:
        return float(out)
    return out


def maxwellian(n: int = 2) -> VelocityDistribution:
    """Unit-mass Gaussian equilibrium with zero mean and identity covariance."""
    comp = GaussianComponent(np.zeros(n), np.eye(n), 1.0)
    return VelocityDistribution(n, (comp,))


def squeezed_gaussian(epsilon: float, axis=None, n: int = 2) -> VelocityDistribution:
    """Unit-mass Gaussian with variance 1 along `axis` and epsilon^2 across.

    Probes the degenerate limit of mass concentrating on a line.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must be in (0, 1]")
    if axis is None:
        axis = np.zeros(n)
        axis[0] = 1.0
    axis = np.asarray(axis, dtype=float)
    n = axis.size
    axis = axis / np.linalg.norm(axis)
    cov = epsilon ** 2 * np.eye(n) + (1.0 - epsilon ** 2) * np.outer(axis, axis)
    comp = GaussianComponent(np.zeros(n), cov, 1.0)
    return VelocityDistribution(n, (comp,))


def counterexample_family(R: float) -> VelocityDistribution:
    """Cross-of-strips density with a heavy square core, 2D only.

    Mass, energy and pressure stay bounded uniformly in R while every
    moment of order q > 2 grows like R^(q-2), and the mass outside the
    vertical tube of any radius > 1/R vanishes like 4/R^2.  The union of
    the two strips is encoded as strip1 + strip2 - overlap so that all
    moments stay closed-form exact.
    """
    if R <= 1.0:
        raise ValueError("R must be > 1")
    a1 = BoxComponent(np.zeros(2), np.array([R ** -3, R]), 1.0)
    a2 = BoxComponent(np.zeros(2), np.array([R, R ** -3]), 1.0)
    overlap = BoxComponent(np.zeros(2), np.array([R ** -3, R ** -3]), -1.0)
    core = BoxComponent(np.zeros(2), np.array([1.0 / R, 1.0 / R]), R ** 2)
    return VelocityDistribution(
        2, (a1, a2, overlap, core), allow_negative_weights=True)


def from_config(spec: dict) -> VelocityDistribution:
    """Build a distribution from its JSON description.

    Accepts either the explicit component list
    ``{"dimension": n, "components": [{"kind": ..., ...}, ...]}``
    or one of the named families ``{"kind": "maxwellian", "dimension": n}``,
    ``{"kind": "squeezed_gaussian", "epsilon": e, "axis": [...]}`` and
    ``{"kind": "counterexample_family", "R": r}``.
    """
    if "kind" in spec:
        kind = spec["kind"]
        if kind == "maxwellian":
            return maxwellian(int(spec.get("dimension", 2)))
        if kind == "squeezed_gaussian":
            axis = spec.get("axis")
            n = int(spec.get("dimension", 2))
            return squeezed_gaussian(float(spec["epsilon"]), axis, n=n)
        if kind == "counterexample_family":
            return counterexample_family(float(spec["R"]))
        raise ValueError("unknown distribution kind %r" % kind)
    n = int(spec["dimension"])
    comps = []
    for c in spec["components"]:
        kind = c["kind"]
        w = float(c["weight"])
        if kind == "gaussian":
            comps.append(GaussianComponent(
                np.asarray(c["mean"], float), np.asarray(c["covariance"], float), w))
        elif kind == "box":
            comps.append(BoxComponent(
                np.asarray(c["center"], float), np.asarray(c["half_widths"], float), w))
        elif kind == "ball":
            comps.append(BallComponent(
                np.asarray(c["center"], float), float(c["radius"]), w))
        else:
            raise ValueError("unknown component kind %r" % kind)
    allow_neg = any(c.weight < 0 for c in comps)
    return VelocityDistribution(n, tuple(comps), allow_negative_weights=allow_neg)


def to_config(f: VelocityDistribution) -> dict:
    comps = []
    for c in f.components:
        if isinstance(c, GaussianComponent):
            comps.append({"kind": "gaussian", "mean": c.mean.tolist(),
                          "covariance": c.cov.tolist(), "weight": c.weight})
        elif isinstance(c, BoxComponent):
            comps.append({"kind": "box", "center": c.center.tolist(),
                          "half_widths": c.half_widths.tolist(), "weight": c.weight})
        else:
            comps.append({"kind": "ball", "center": c.center.tolist(),
                          "radius": c.radius, "weight": c.weight})
    return {"dimension": f.dimension, "components": comps}


# ---------------------------------------------------------------------------
# Exact restrictions to lines and rays.
#
# For a base point b and unit direction u, the restriction of each
# primitive to {b + t u} is either a 1D Gaussian profile
# C * exp(-(t - m)^2 / (2 sigma^2)) or a constant on an interval.
# These closed forms power the hyperplane, tube and radial integrals.
# ---------------------------------------------------------------------------

def gaussian_line_profile(comp: GaussianComponent, bases: np.ndarray,
                          us: np.ndarray):
    """(C, m, sigma) arrays of the 1D profile of `comp` along each line."""
    d = bases - comp.mean
    A = comp._cov_inv
    uAu = np.einsum("...i,ij,...j->...", us, A, us)
    uAd = np.einsum("...i,ij,...j->...", us, A, d)
    dAd = np.einsum("...i,ij,...j->...", d, A, d)
    sigma2 = 1.0 / uAu
    m = -uAd * sigma2
    c0 = 0.5 * dAd - 0.5 * m * m / sigma2
    C = comp.weight * comp._norm * np.exp(-np.minimum(c0, 700.0))
    return C, m, np.sqrt(sigma2)


def indicator_line_interval(comp, bases: np.ndarray, us: np.ndarray):
    """(t1, t2) arrays with t1 <= t2 on hits, t1 = t2 = 0 on misses.

    Works for boxes and balls; the indicator value is comp.weight.
    """
    if isinstance(comp, BallComponent):
        d = bases - comp.center
        b = np.einsum("...i,...i->...", us, d)
        c = np.einsum("...i,...i->...", d, d) - comp.radius ** 2
        disc = b * b - c
        hit = disc > 0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        t1 = np.where(hit, -b - sq, 0.0)
        t2 = np.where(hit, -b + sq, 0.0)
        return t1, t2
    # box: intersect the per-axis slabs
    lo = comp.center - comp.half_widths
    hi = comp.center + comp.half_widths
    t1 = np.full(bases.shape[:-1], -np.inf)
    t2 = np.full(bases.shape[:-1], np.inf)
    for i in range(comp.dimension):
        ui = us[..., i]
        bi = bases[..., i]
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (lo[i] - bi) / ui
            tb = (hi[i] - bi) / ui
        parallel = np.abs(ui) < 1e-300
        inside_slab = (bi > lo[i]) & (bi < hi[i])
        ta_, tb_ = np.minimum(ta, tb), np.maximum(ta, tb)
        t1 = np.where(parallel, np.where(inside_slab, t1, np.inf), np.maximum(t1, ta_))
        t2 = np.where(parallel, np.where(inside_slab, t2, -np.inf), np.minimum(t2, tb_))
    hit = t1 < t2
    t1 = np.where(hit, t1, 0.0)
    t2 = np.where(hit, t2, 0.0)
    return t1, t2


def _abs_power_antideriv(t: np.ndarray, p: float) -> np.ndarray:
    # antiderivative of |t|^p, valid for p > -1
    return np.sign(t) * np.abs(t) ** (p + 1.0) / (p + 1.0)


def gaussian_abs_moment(m: np.ndarray, sigma: np.ndarray, p: float) -> np.ndarray:
    """E|X|^p for X ~ N(m, sigma^2), exact via Kummer's function."""
    from scipy.special import hyp1f1, gammaln
    if p == 0.0:
        return np.ones_like(np.asarray(m, dtype=float))
    x = 0.5 * (np.asarray(m) / np.asarray(sigma)) ** 2
    pref = np.exp(0.5 * p * math.log(2.0) + gammaln((p + 1.0) / 2.0)
                  - 0.5 * math.log(math.pi))
    out = pref * np.asarray(sigma) ** p * hyp1f1(-p / 2.0, 0.5, -x)
    # Kummer evaluation loses accuracy far in the tail; the two-term
    # delta-method expansion is exact to O((sigma/m)^4) there.
    far = x > 2500.0
    if np.any(far):
        mm, ss = np.broadcast_arrays(np.asarray(m, float), np.asarray(sigma, float))
        approx = np.abs(mm) ** p * (1.0 + p * (p - 1.0) / 2.0 * (ss / mm) ** 2)
        out = np.where(far, approx, out)
    return out


def line_abs_moment(f: VelocityDistribution, bases, us, p: float) -> np.ndarray:
    """integral over t of f(base + t u) |t|^p dt, exact per component.

    `bases` and `us` may carry leading batch axes; `us` must be unit.
    """
    bases = np.atleast_2d(np.asarray(bases, dtype=float))
    us = np.atleast_2d(np.asarray(us, dtype=float))
    bases, us = np.broadcast_arrays(bases, us)
    out = np.zeros(bases.shape[:-1])
    for c in f.components:
        if isinstance(c, GaussianComponent):
            C, m, sigma = gaussian_line_profile(c, bases, us)
            out = out + C * np.sqrt(2.0 * np.pi) * sigma * \
                gaussian_abs_moment(m, sigma, p)
        else:
            t1, t2 = indicator_line_interval(c, bases, us)
            out = out + c.weight * (_abs_power_antideriv(t2, p)
                                    - _abs_power_antideriv(t1, p))
    return out


def line_mass_on_interval(f: VelocityDistribution, bases, us, ta, tb) -> np.ndarray:
    """integral over t in [ta, tb] of f(base + t u) dt, exact per component."""
    from scipy.special import erf
    bases = np.atleast_2d(np.asarray(bases, dtype=float))
    us = np.atleast_2d(np.asarray(us, dtype=float))
    bases, us = np.broadcast_arrays(bases, us)
    ta = np.broadcast_to(np.asarray(ta, dtype=float), bases.shape[:-1])
    tb = np.broadcast_to(np.asarray(tb, dtype=float), bases.shape[:-1])
    out = np.zeros(bases.shape[:-1])
    for c in f.components:
        if isinstance(c, GaussianComponent):
            C, m, sigma = gaussian_line_profile(c, bases, us)
            s2 = sigma * math.sqrt(2.0)
            out = out + C * sigma * math.sqrt(2.0 * np.pi) * 0.5 * (
                erf((tb - m) / s2) - erf((ta - m) / s2))
        else:
            t1, t2 = indicator_line_interval(c, bases, us)
            lo = np.maximum(t1, ta)
            hi = np.minimum(t2, tb)
            out = out + c.weight * np.maximum(hi - lo, 0.0)
    return out


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def ray_power_moment(f: VelocityDistribution, bases, us, q: float,
                     weight_fn=None, t_lo=0.0, t_hi=None) -> np.ndarray:
    """integral over t in [t_lo, t_hi] of f(base + t u) t^q w(t) dt,
    with [0, infinity) as the default range.

    Indicator components are closed-form when w is None; Gaussian
    profiles use Gauss-Legendre on their effective support.  `weight_fn`
    (optional, vectorized) multiplies an extra smooth factor into the
    integrand, in which case indicators fall back to the same rule.
    `t_lo`/`t_hi` may be scalars or arrays over the batch.
    """
    bases = np.atleast_2d(np.asarray(bases, dtype=float))
    us = np.atleast_2d(np.asarray(us, dtype=float))
    bases, us = np.broadcast_arrays(bases, us)
    shape = bases.shape[:-1]
    t_lo = np.broadcast_to(np.asarray(t_lo, dtype=float), shape)
    if t_hi is None:
        t_hi = np.full(shape, np.inf)
    else:
        t_hi = np.broadcast_to(np.asarray(t_hi, dtype=float), shape)
    out = np.zeros(shape)
    for c in f.components:
        if isinstance(c, GaussianComponent):
            C, m, sigma = gaussian_line_profile(c, bases, us)
            lo = np.clip(m - 10.0 * sigma, t_lo, t_hi)
            hi = np.clip(m + 10.0 * sigma, t_lo, t_hi)
            mid = 0.5 * (lo + hi)[..., None]
            half = 0.5 * (hi - lo)[..., None]
            t = mid + half * _GL_NODES
            vals = t ** q * np.exp(-0.5 * ((t - m[..., None]) / sigma[..., None]) ** 2)
            if weight_fn is not None:
                vals = vals * weight_fn(t)
            out = out + C * np.einsum("...k,k->...", vals * half, _GL_WEIGHTS)
        else:
            t1, t2 = indicator_line_interval(c, bases, us)
            lo = np.clip(t1, t_lo, t_hi)
            hi = np.clip(t2, t_lo, t_hi)
            if weight_fn is None:
                term = (np.abs(hi) ** (q + 1.0) - np.abs(lo) ** (q + 1.0)) / (q + 1.0)
                out = out + c.weight * np.where(hi > lo, term, 0.0)
            else:
                mid = 0.5 * (lo + hi)[..., None]
                half = 0.5 * (hi - lo)[..., None]
                t = mid + half * _GL_NODES
                vals = t ** q * weight_fn(t)
                out = out + c.weight * np.einsum(
                    "...k,k->...", vals * half, _GL_WEIGHTS)
    return out


def component_view(c) -> "VelocityDistribution":
    """Single-component view for per-component reductions; bypasses the
    mixture-level mass invariant (correction components have negative
    weight on their own)."""
    import types
    return types.SimpleNamespace(components=(c,), dimension=c.dimension)


def _component_center_radius(c):
    if isinstance(c, GaussianComponent):
        return c.mean, 8.0 * math.sqrt(float(np.max(np.linalg.eigvalsh(c.cov))))
    if isinstance(c, BoxComponent):
        return c.center, float(np.linalg.norm(c.half_widths))
    return c.center, c.radius


def _component_frame_nodes(c, n: int):
    """Quadrature nodes/weights adapted to one component's own geometry:
    integral of c.density(x) h(x) dx ~ sum w_k h(x_k) for smooth h."""
    if isinstance(c, GaussianComponent):
        from numpy.polynomial.hermite_e import hermegauss
        m = 32 if n == 2 else 16
        z1, w1 = hermegauss(m)
        grids = np.meshgrid(*([z1] * n), indexing="ij")
        z = np.stack([g.ravel() for g in grids], axis=-1)
        wg = np.meshgrid(*([w1] * n), indexing="ij")
        wprod = np.ones(z.shape[0])
        for g in wg:
            wprod *= g.ravel()
        L = np.linalg.cholesky(c.cov)
        pts = c.mean + z @ L.T
        weights = c.weight * wprod / (2.0 * np.pi) ** (n / 2.0)
        return pts, weights
    if isinstance(c, BoxComponent):
        m = 24 if n == 2 else 16
        x1, w1 = np.polynomial.legendre.leggauss(m)
        axes = [c.center[i] + c.half_widths[i] * x1 for i in range(n)]
        wts = [c.half_widths[i] * w1 for i in range(n)]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        wg = np.meshgrid(*wts, indexing="ij")
        wprod = np.ones(pts.shape[0])
        for g in wg:
            wprod *= g.ravel()
        return pts, c.weight * wprod
    # ball: polar around the center
    m_r, m_a = 24, 64
    x1, w1 = np.polynomial.legendre.leggauss(m_r)
    rho = 0.5 * c.radius * (x1 + 1.0)
    wrho = 0.5 * c.radius * w1
    if n == 2:
        phi = (np.arange(m_a) + 0.5) * (2.0 * np.pi / m_a)
        om = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        wom = np.full(m_a, 2.0 * np.pi / m_a)
    else:
        from .quadrature import sphere_grid
        om, wom = sphere_grid(3, 16)
    pts = (c.center + rho[:, None, None] * om[None, :, :]).reshape(-1, n)
    weights = (c.weight * (wrho * rho ** (n - 1))[:, None]
               * wom[None, :]).ravel()
    return pts, weights


def convolution_weighted(f: VelocityDistribution, v, q: float,
                         tensor: str = "scalar", angular_order: int = 0):
    """integral of k(w) |w|^q f(v - w) dw with k = 1 ("scalar"),
    w/|w| ("vector"), or I - (w/|w|)(x)(w/|w|) ("projector").

    Per-component dispatch: components near v are integrated in polar
    coordinates around v (which absorbs the |w|^q singularity into
    exact ray moments), far components in their own frame (where the
    weight is smooth and the narrow viewing cone would defeat a fixed
    angular rule).
    """
    v = np.asarray(v, dtype=float)
    n = f.dimension
    if n == 2:
        m = angular_order or 720
        phi = (np.arange(m) + 0.5) * (2.0 * np.pi / m)
        om = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        wom = np.full(m, 2.0 * np.pi / m)
    else:
        from .quadrature import sphere_grid
        om, wom = sphere_grid(3, angular_order or 32)

    if tensor == "scalar":
        acc = 0.0
    elif tensor == "vector":
        acc = np.zeros(n)
    elif tensor == "projector":
        acc = np.zeros((n, n))
    else:
        raise ValueError("tensor must be scalar, vector or projector")

    for c in f.components:
        center, radius = _component_center_radius(c)
        near = float(np.linalg.norm(v - center)) <= radius + 4.0
        if near:
            sub = component_view(c)
            rays = ray_power_moment(sub, np.broadcast_to(v, om.shape),
                                    -om, q + n - 1.0)
            if tensor == "scalar":
                acc = acc + float(rays @ wom)
            elif tensor == "vector":
                acc = acc + np.einsum("k,ki,k->i", rays, om, wom)
            else:
                proj = np.eye(n)[None] - om[:, :, None] * om[:, None, :]
                acc = acc + np.einsum("k,kij,k->ij", rays, proj, wom)
        else:
            pts, wts = _component_frame_nodes(c, n)
            w = v - pts
            wnorm = np.linalg.norm(w, axis=-1)
            powq = wnorm ** q
            if tensor == "scalar":
                acc = acc + float((powq * wts).sum())
            elif tensor == "vector":
                what = w / wnorm[:, None]
                acc = acc + np.einsum("k,ki->i", powq * wts, what)
            else:
                what = w / wnorm[:, None]
                proj = np.eye(n)[None] - what[:, :, None] * what[:, None, :]
                acc = acc + np.einsum("k,kij->ij", powq * wts, proj)
    return acc


def support_radius(f: VelocityDistribution, tail: float = 1e-12) -> float:
    """Radius beyond which the density is zero or Gaussian-negligible."""
    r = 0.0
    for c in f.components:
        if isinstance(c, GaussianComponent):
            top = math.sqrt(np.max(np.linalg.eigvalsh(c.cov)))
            k = math.sqrt(max(2.0 * math.log(max(abs(c.weight), 1.0) / tail), 4.0))
            r = max(r, float(np.linalg.norm(c.mean)) + k * top)
        elif isinstance(c, BoxComponent):
            r = max(r, float(np.linalg.norm(np.abs(c.center) + c.half_widths)))
        else:
            r = max(r, float(np.linalg.norm(c.center)) + c.radius)
    return r


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a

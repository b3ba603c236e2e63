"""Deterministic geometric integration engines.

Hyperplane, sphere, sphere-section and ellipsoid-section integrals in
dimensions 2 and 3, plus executable verifiers for the two
change-of-variables identities relating them.  All rules are nested
Gauss-Legendre with doubling refinement; no Monte Carlo, so results are
bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_REL_TOL = 1e-6
DEFAULT_MAX_EVALS = 2_000_000
DEFAULT_TRUNCATION = 12.0


class QuadratureError(RuntimeError):
    """Budget exhausted before convergence; carries the best estimate."""

    def __init__(self, message, best_estimate, error_estimate):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class QuadratureBudget:
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = 1e-12
    max_evals: int = DEFAULT_MAX_EVALS
    truncation_radius: float = DEFAULT_TRUNCATION

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")
        if self.truncation_radius <= 0:
            raise ValueError("truncation_radius must be positive")


DEFAULT_BUDGET = QuadratureBudget()

_GL_CACHE: dict = {}


def gauss_legendre(order: int, a: float = -1.0, b: float = 1.0):
    """Nodes and weights on [a, b], cached per order."""
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    x, w = _GL_CACHE[order]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _refine(evaluate, budget: QuadratureBudget, start_order: int = 16,
            what: str = "integral"):
    """Run `evaluate(order)` with doubling order until two passes agree."""
    prev = None
    order = start_order
    evals = 0
    best, err = np.nan, np.inf
    while True:
        value, n_evals = evaluate(order)
        evals += n_evals
        if prev is not None:
            err = abs(value - prev)
            best = value
            if err <= max(budget.abs_tol, budget.rel_tol * abs(value)):
                return value, err
        else:
            best = value
        if evals >= budget.max_evals:
            raise QuadratureError(
                "%s did not converge within %d evaluations (err ~ %.3g)"
                % (what, budget.max_evals, err), best, err)
        prev = value
        order *= 2


def orthonormal_complement(vec: np.ndarray) -> np.ndarray:
    """Columns form an orthonormal basis of vec-perp."""
    vec = np.asarray(vec, dtype=float)
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError("zero vector has no normal complement")
    n = vec.size
    # Householder reflection mapping e1 to vec/|vec|: remaining columns
    # span the complement exactly.
    e1 = np.zeros(n)
    e1[0] = 1.0
    u = vec / norm - e1
    if np.linalg.norm(u) < 1e-14:
        Q = np.eye(n)
    else:
        u = u / np.linalg.norm(u)
        Q = np.eye(n) - 2.0 * np.outer(u, u)
    return Q[:, 1:]


def hyperplane_integral(g, normal, budget: QuadratureBudget = DEFAULT_BUDGET,
                        center=None):
    """integral of g over the hyperplane through `center` (default 0)
    orthogonal to `normal`, truncated at the budget's radius.

    Returns (value, error_estimate).  `g` must accept (..., n) batches.
    """
    normal = np.asarray(normal, dtype=float)
    basis = orthonormal_complement(normal)
    n = normal.size
    T = budget.truncation_radius
    if center is None:
        center = np.zeros(n)

    def evaluate(order):
        x, w = gauss_legendre(order, -T, T)
        if n == 2:
            pts = center + np.outer(x, basis[:, 0])
            vals = np.asarray(g(pts))
            return float(vals @ w), x.size
        xx, yy = np.meshgrid(x, x, indexing="ij")
        pts = (center + xx[..., None] * basis[:, 0]
               + yy[..., None] * basis[:, 1])
        vals = np.asarray(g(pts))
        return float(np.einsum("ij,i,j->", vals, w, w)), x.size ** 2

    return _refine(evaluate, budget, what="hyperplane integral")


def circle_nodes(order: int):
    """Midpoint rule on the unit circle: exact for trig polynomials."""
    phi = (np.arange(order) + 0.5) * (2.0 * np.pi / order)
    thetas = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    weights = np.full(order, 2.0 * np.pi / order)
    return thetas, weights


def sphere_nodes(order: int):
    """Product Gauss-Legendre x uniform-azimuth rule on the unit 2-sphere."""
    mu, wmu = gauss_legendre(order)              # mu = cos(polar)
    phi = (np.arange(2 * order) + 0.5) * (np.pi / order)
    wphi = np.pi / order
    smu = np.sqrt(1.0 - mu ** 2)
    thetas = np.empty((order, 2 * order, 3))
    thetas[..., 0] = smu[:, None] * np.cos(phi)[None, :]
    thetas[..., 1] = smu[:, None] * np.sin(phi)[None, :]
    thetas[..., 2] = mu[:, None]
    weights = (wmu[:, None] * wphi) * np.ones((order, 2 * order))
    return thetas.reshape(-1, 3), weights.reshape(-1)


def sphere_grid(n: int, order: int):
    """Quadrature nodes/weights on S^(n-1) for n in {2, 3}."""
    if n == 2:
        return circle_nodes(order)
    if n == 3:
        return sphere_nodes(order)
    raise ValueError("sphere rules implemented for n in {2, 3} only")


def sphere_integral(g, n: int, budget: QuadratureBudget = DEFAULT_BUDGET):
    """integral of g over S^(n-1), n in {2, 3}."""

    def evaluate(order):
        thetas, weights = sphere_grid(n, order if n == 3 else 8 * order)
        vals = np.asarray(g(thetas))
        return float(vals @ weights), weights.size

    value, _ = _refine(evaluate, budget, what="sphere integral")
    return value


def sphere_section_integral(g, z, n: int,
                            budget: QuadratureBudget = DEFAULT_BUDGET):
    """integral of g over S^(n-1) intersected with the plane z-perp.

    For n = 3 this is a circle integral; for n = 2 the section is two
    antipodal points and the value is their plain sum (counting
    measure), the convention under which the weighted change of
    variables identity holds in 2D.
    """
    z = np.asarray(z, dtype=float)
    if np.linalg.norm(z) == 0:
        raise ValueError("z must be nonzero")
    basis = orthonormal_complement(z)
    if n == 2:
        theta0 = basis[:, 0]
        pts = np.stack([theta0, -theta0])
        vals = np.asarray(g(pts))
        return float(vals[0] + vals[1])
    if n != 3:
        raise ValueError("sphere sections implemented for n in {2, 3} only")

    def evaluate(order):
        m = 8 * order
        phi = (np.arange(m) + 0.5) * (2.0 * np.pi / m)
        pts = (np.cos(phi)[:, None] * basis[:, 0]
               + np.sin(phi)[:, None] * basis[:, 1])
        vals = np.asarray(g(pts))
        return float(vals.sum() * 2.0 * np.pi / m), m

    value, _ = _refine(evaluate, budget, what="sphere section integral")
    return value


def verify_weighted_trafo(g, n: int, budget: QuadratureBudget = DEFAULT_BUDGET):
    """Check the hyperplane <-> radial change of variables identity.

    lhs = int_{S^(n-1)} int_{w perp theta} g(w, theta) dw dtheta
    rhs = int_{R^n} ( int_{theta perp z} g(z, theta) dtheta ) |z|^-1 dz

    Returns (lhs, rhs, rel_err).  `g(points, thetas)` must broadcast.
    """
    ang_order = 256 if n == 2 else 16

    thetas, tw = sphere_grid(n, ang_order)
    lhs = 0.0
    for theta, w_ang in zip(thetas, tw):
        val, _ = hyperplane_integral(
            lambda pts, th=theta: g(pts, np.broadcast_to(th, pts.shape)),
            theta, budget)
        lhs += w_ang * val

    # rhs in polar coordinates: |z|^-1 dz = r^(n-2) dr dtheta
    omegas, ow = sphere_grid(n, ang_order)
    T = budget.truncation_radius
    r, rw = gauss_legendre(96, 0.0, T)
    rhs = 0.0
    for omega, w_ang in zip(omegas, ow):
        pts = r[:, None] * omega
        inner = np.array([
            sphere_section_integral(
                lambda th, p=p: g(np.broadcast_to(p, th.shape), th),
                omega, n, budget)
            for p in pts])
        rhs += w_ang * float((inner * r ** (n - 2)) @ rw)

    denom = max(abs(lhs), abs(rhs))
    rel = 0.0 if denom == 0 else abs(lhs - rhs) / denom
    return lhs, rhs, rel


def _ellipsoid_section_basis(v0, r: float, w):
    """Orthonormal basis of w-perp plus the section's quadratic form.

    E_r = tau0(B_r) has semi-axis r/|v0| along v0 and r across; the
    section with the plane w-perp is {y : y^T M y <= r^2} in the basis
    coordinates.
    """
    v0 = np.asarray(v0, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.linalg.norm(w) == 0:
        raise ValueError("w must be nonzero")
    n = v0.size
    speed = np.linalg.norm(v0)
    if speed == 0:
        raise ValueError("v0 must be nonzero for an ellipsoid spec")
    vhat = v0 / speed
    # |tau0^-1 h|^2 = |h|^2 + (|v0|^2 - 1)(h . vhat)^2
    Q = np.eye(n) + (speed ** 2 - 1.0) * np.outer(vhat, vhat)
    B = orthonormal_complement(w)
    M = B.T @ Q @ B
    return B, M


def ellipsoid_section_integral(g, v0, r: float, w,
                               budget: QuadratureBudget = DEFAULT_BUDGET):
    """integral of g over E_r(0) intersected with the plane w-perp.

    E_r is the tau0-image of B_r for base velocity v0 (semi-axis r/|v0|
    along v0, r across).  Membership is enforced exactly through the
    section's quadratic form.  For n = 2 the section is a segment.
    """
    B, M = _ellipsoid_section_basis(v0, r, w)
    n = np.asarray(v0).size
    if n == 2:
        m = float(M[0, 0])
        half = r / math.sqrt(m)

        def evaluate(order):
            t, tw = gauss_legendre(order, -half, half)
            pts = t[:, None] * B[:, 0]
            vals = np.asarray(g(pts))
            return float(vals @ tw), t.size

        value, _ = _refine(evaluate, budget, what="ellipsoid section")
        return value

    if n != 3:
        raise ValueError("ellipsoid sections implemented for n in {2, 3} only")
    evals, vecs = np.linalg.eigh(M)
    if np.min(evals) <= 0:
        raise ValueError("degenerate ellipsoid section")
    axes = r / np.sqrt(evals)          # semi-axes of the planar section

    def evaluate(order):
        # map the unit disc onto the section: y = V diag(axes) u
        rho, rw = gauss_legendre(order, 0.0, 1.0)
        m = 4 * order
        phi = (np.arange(m) + 0.5) * (2.0 * np.pi / m)
        wphi = 2.0 * np.pi / m
        uu = np.concatenate([
            (rho[:, None] * np.cos(phi)[None, :]).reshape(-1, 1),
            (rho[:, None] * np.sin(phi)[None, :]).reshape(-1, 1)], axis=1)
        yy = uu @ (vecs * axes).T
        pts = yy @ B.T
        vals = np.asarray(g(pts)).reshape(rho.size, m)
        jac = axes[0] * axes[1]
        radial = (vals.sum(axis=1) * wphi) * rho
        return float(jac * (radial @ rw)), rho.size * m

    value, _ = _refine(evaluate, budget, what="ellipsoid section")
    return value


def verify_weighted_trafo_ellipsoid(g, v0, r: float,
                                    budget: QuadratureBudget = DEFAULT_BUDGET):
    """Check the E_r generalization of the weighted trafo identity.

    lhs = int_{E_r} int_{w perp h} g(w, h) dw dh
    rhs = int_{R^n} int_{E_r cap {h perp w}} g(w, h) |h|/|w| dh dw

    Returns (lhs, rhs, rel_err).
    """
    v0 = np.asarray(v0, dtype=float)
    n = v0.size
    speed = np.linalg.norm(v0)
    vhat = v0 / speed
    Bv = orthonormal_complement(v0)
    ang_order = 192 if n == 2 else 24

    # lhs: map B_r through tau0 (h = t1 * vhat/|v0| + across), polar in y
    def tau0(y):
        along = y @ vhat
        return (y - np.outer(along, vhat)) + np.outer(along / speed, vhat)

    det_tau0 = 1.0 / speed
    omegas, ow = sphere_grid(n, ang_order)
    rho, rw = gauss_legendre(64, 0.0, r)
    lhs = 0.0
    for omega, w_ang in zip(omegas, ow):
        hs = tau0(rho[:, None] * omega)
        inner = np.empty(rho.size)
        for i, h in enumerate(hs):
            inner[i], _ = hyperplane_integral(
                lambda pts, h=h: g(pts, np.broadcast_to(h, pts.shape)),
                h, budget)
        lhs += w_ang * float((inner * rho ** (n - 1)) @ rw) * det_tau0

    # rhs: polar in w, exact ellipsoid sections in h
    rhs = 0.0
    T = budget.truncation_radius
    rr, rrw = gauss_legendre(96, 0.0, T)
    for omega, w_ang in zip(omegas, ow):
        ws = rr[:, None] * omega
        inner = np.empty(rr.size)
        for i, wvec in enumerate(ws):
            wnorm = rr[i]

            def gg(hs, wvec=wvec, wnorm=wnorm):
                hs = np.atleast_2d(hs)
                hn = np.linalg.norm(hs, axis=-1)
                return g(np.broadcast_to(wvec, hs.shape), hs) * hn / wnorm

            inner[i] = ellipsoid_section_integral(gg, v0, r, wvec, budget)
        rhs += w_ang * float((inner * rr ** (n - 1)) @ rrw)

    denom = max(abs(lhs), abs(rhs))
    rel = 0.0 if denom == 0 else abs(lhs - rhs) / denom
    return lhs, rhs, rel

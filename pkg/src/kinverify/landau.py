"""Diffusion-limit collision coefficients and their frame-transformed
ellipticity scan.

The matrix coefficient pairs the projection away from the collision
direction with a |w|^(gamma+2) weight; the vector and scalar
coefficients carry |w|^gamma.  All three physical constants are set to
one, so comparisons are ratio-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import VelocityDistribution, convolution_weighted
from .frames import FrameTransform
from .kernel import KernelParams
from .quadrature import DEFAULT_BUDGET, QuadratureBudget


def landau_A(f: VelocityDistribution, gamma: float, v,
             budget: QuadratureBudget = DEFAULT_BUDGET) -> np.ndarray:
    """integral of (I - what (x) what) |w|^(gamma+2) f(v - w) dw.

    Components near v are sliced in polar coordinates around the
    singular point w = 0 (the projector depends only on the ray
    direction, the radial factor is an exact or Gauss-Legendre power
    moment); far components are integrated in their own frame, where
    the weight is smooth.
    """
    v = np.asarray(v, dtype=float)
    if gamma <= -v.size:
        raise ValueError("gamma must be > -n")
    return convolution_weighted(f, v, gamma + 2.0, tensor="projector")


def landau_b_c(f: VelocityDistribution, gamma: float, v,
               budget: QuadratureBudget = DEFAULT_BUDGET):
    """(vector, scalar) coefficients:
    b = int w |w|^gamma f(v-w) dw, c = int |w|^gamma f(v-w) dw.

    The ray moments absorb the |w|^gamma singularity exactly for every
    gamma > -n; gamma <= -n is rejected.
    """
    v = np.asarray(v, dtype=float)
    if gamma <= -v.size:
        raise ValueError("gamma must be > -n")
    b = convolution_weighted(f, v, gamma + 1.0, tensor="vector")
    c = convolution_weighted(f, v, gamma, tensor="scalar")
    return b, c


@dataclass(frozen=True)
class LandauCoefficients:
    A: np.ndarray
    b: np.ndarray
    c: float


def landau_coefficients(f, gamma: float, v,
                        budget: QuadratureBudget = DEFAULT_BUDGET) -> LandauCoefficients:
    A = landau_A(f, gamma, v, budget)
    b, c = landau_b_c(f, gamma, v, budget)
    return LandauCoefficients(A=A, b=b, c=c)


def transformed_A_quadratic(f, gamma: float, frame: FrameTransform, v, e,
                            budget: QuadratureBudget = DEFAULT_BUDGET) -> float:
    """e . A~(v) e for the frame-transformed matrix coefficient.

    Far regime: |v0|^(-gamma-2) (tau0^-1 e) . A(v~) (tau0^-1 e) with
    v~ = v0 + tau0(v); near regime: e . A(v0 + v) e.
    """
    e = np.asarray(e, dtype=float)
    if frame.far:
        vt = frame.shifted_velocity(np.asarray(v, float))
        te = frame.tau0_inv(e)
        A = landau_A(f, gamma, vt, budget)
        return frame.speed ** (-gamma - 2.0) * float(te @ A @ te)
    A = landau_A(f, gamma, frame.v0 + np.asarray(v, float), budget)
    return float(e @ A @ e)


def transformed_b_c(f, gamma: float, frame: FrameTransform, v,
                    budget: QuadratureBudget = DEFAULT_BUDGET):
    """(b~, c~) at v: |v0|^(-gamma-2) (tau0^-1 b(v~), c(v~)) far,
    the plain shifted coefficients near."""
    if frame.far:
        vt = frame.shifted_velocity(np.asarray(v, float))
        b, c = landau_b_c(f, gamma, vt, budget)
        pref = frame.speed ** (-gamma - 2.0)
        return pref * frame.tau0_inv(b), pref * c
    b, c = landau_b_c(f, gamma, frame.v0 + np.asarray(v, float), budget)
    return b, c


@dataclass
class LandauScanRow:
    v0_norm: float
    min_eig: float
    max_eig: float
    b_norm: float
    c_value: float

    def to_row(self) -> dict:
        return {"v0_norm": self.v0_norm, "min_eig": self.min_eig,
                "max_eig": self.max_eig, "b_norm": self.b_norm,
                "c_value": self.c_value}


@dataclass
class LandauScan:
    rows: list
    min_ratio: float | None
    untransformed_shape: list

    def to_json(self) -> dict:
        return {"rows": [r.to_row() for r in self.rows],
                "min_ratio": self.min_ratio,
                "untransformed_shape": self.untransformed_shape}


def landau_ellipticity_scan(f: VelocityDistribution, gamma: float, v0_list,
                            v_grid=None, e_grid=None,
                            budget: QuadratureBudget = DEFAULT_BUDGET) -> LandauScan:
    """Min/max of e . A~ e over a velocity grid in B_2 and a direction
    grid, for each base velocity, plus the transformed lower-order
    coefficient sizes and the untransformed shape
    e . A(v) e / (1 + |v|)^gamma along the base list.

    The ellipticity scan follows the hard-potential convention
    gamma >= 0; the raw coefficients themselves accept any
    gamma > -n.
    """
    if gamma < 0:
        raise ValueError("ellipticity scan assumes gamma >= 0")
    n = f.dimension
    if v_grid is None:
        from .frames import default_scan_grid
        v_grid = default_scan_grid(n)
    if e_grid is None:
        from .kernel import direction_grid
        e_grid = direction_grid(n, 90 if n == 2 else 266)
    params = KernelParams(n=n, s=0.99, gamma=gamma, normalization="grazing")
    rows = []
    shape_rows = []
    for v0 in v0_list:
        v0 = np.asarray(v0, dtype=float)
        frame = FrameTransform(0.0, np.zeros(n), v0, params)
        lo, hi = math.inf, -math.inf
        bmax = cmax = 0.0
        for v in np.atleast_2d(np.asarray(v_grid, float)):
            vt = frame.shifted_velocity(v) if frame.far else frame.v0 + v
            A = landau_A(f, gamma, vt, budget)
            if frame.far:
                pref = frame.speed ** (-gamma - 2.0)
                quad = np.array([pref * float(frame.tau0_inv(e) @ A
                                              @ frame.tau0_inv(e))
                                 for e in e_grid])
            else:
                quad = np.array([float(e @ A @ e) for e in e_grid])
            lo = min(lo, float(quad.min()))
            hi = max(hi, float(quad.max()))
            bt, ct = transformed_b_c(f, gamma, frame, v, budget)
            bmax = max(bmax, float(np.linalg.norm(bt)))
            cmax = max(cmax, abs(ct))
        rows.append(LandauScanRow(float(np.linalg.norm(v0)), lo, hi,
                                  bmax, cmax))
        # untransformed shape at the base point itself
        A0 = landau_A(f, gamma, v0, budget)
        eigs = np.linalg.eigvalsh(A0)
        shape_rows.append({
            "v_norm": float(np.linalg.norm(v0)),
            "min_eig_over_shape": float(eigs[0])
            / (1.0 + float(np.linalg.norm(v0))) ** gamma,
            "max_eig": float(eigs[-1]),
        })
    lams = [r.min_eig for r in rows]
    ratio = max(lams) / min(lams) if min(lams) > 0 else None
    return LandauScan(rows, ratio, shape_rows)

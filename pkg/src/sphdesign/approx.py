"""Least-squares projection onto spherical polynomials and Wendland test functions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sht import FOUR_PI, HarmonicCoeffs, PointSet, SHTPlan

EPS = 2.2204e-16
STAGNATION_WINDOW = 50

OCTAHEDRON_CENTERS = np.vstack((np.eye(3), -np.eye(3)))[[0, 3, 1, 4, 2, 5]]


@dataclass
class ProjectionResult:
    coeffs: HarmonicCoeffs
    fitted: np.ndarray
    residual: np.ndarray
    iterations: int
    residual_norm: float
    stagnated: bool = False


def project(values, points: PointSet, T: int, weights=None, max_iter: int = 1000,
            tol: float = EPS, plan: SHTPlan | None = None) -> ProjectionResult:
    """Solve ``min ||f - Y_T c||`` through CG on ``Y_T^* W Y_T c = Y_T^* W f``.

    ``weights`` defaults to ``4 pi / N``.  The normal-equation operator is only
    applied matrix-free.  The iterate with the smallest residual is returned;
    ``stagnated`` is set when 50 consecutive iterations fail to improve it.
    """
    f = np.asarray(values)
    n = len(points)
    if f.shape != (n,):
        raise ValueError("need one value per point")
    if not np.all(np.isfinite(f)):
        raise ValueError("values must be finite")
    w = np.full(n, FOUR_PI / n) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (n,) or np.any(w <= 0):
        raise ValueError("weights must be positive, one per point")
    if plan is None or plan.t < T or plan.points is not points:
        plan = SHTPlan(points, T)

    def A(c):
        return plan.analysis(w * plan.synthesis(c), T)

    x = np.zeros((T + 1) ** 2, dtype=complex)
    r = plan.analysis(w * f, T)
    rr = float(np.vdot(r, r).real)
    best_x, best_r = x.copy(), math.sqrt(rr)
    k = 0
    since_best = 0
    p = None
    rr_prev = None
    while math.sqrt(rr) > tol and k < max_iter:
        p = r.copy() if p is None else r + (rr / rr_prev) * p
        Ap = A(p)
        pAp = float(np.vdot(p, Ap).real)
        if pAp <= 0:
            break
        alpha = rr / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        rr_prev, rr = rr, float(np.vdot(r, r).real)
        k += 1
        if math.sqrt(rr) < best_r:
            best_x, best_r = x.copy(), math.sqrt(rr)
            since_best = 0
        else:
            since_best += 1
            if since_best >= STAGNATION_WINDOW:
                break
    fitted = plan.synthesis(best_x)
    if np.isrealobj(f):
        fitted = fitted.real
    return ProjectionResult(HarmonicCoeffs(T, best_x), fitted, f - fitted, k, best_r,
                            since_best >= STAGNATION_WINDOW)


def _gamma_half(k: int) -> float:
    """``Gamma(k + 1/2) = (2k)! sqrt(pi) / (4^k k!)``."""
    return math.factorial(2 * k) * math.sqrt(math.pi) / (4**k * math.factorial(k))


def wendland_delta(k: int) -> float:
    _check_k(k)
    return (3 * k + 3) * _gamma_half(k) / (2 * math.factorial(k))


def _check_k(k):
    if k not in (0, 1, 2, 3, 4):
        raise ValueError(f"Wendland smoothness k must be in 0..4, got {k}")


def wendland_raw(k: int, xi):
    """Unscaled Wendland function ``phi~_k``."""
    _check_k(k)
    xi = np.asarray(xi, dtype=float)
    u = np.maximum(1.0 - xi, 0.0)
    if k == 0:
        return u**2
    if k == 1:
        return u**4 * (4 * xi + 1)
    if k == 2:
        return u**6 * (35 * xi**2 + 18 * xi + 3) / 3
    if k == 3:
        return u**8 * (32 * xi**3 + 25 * xi**2 + 8 * xi + 1)
    return u**10 * (429 * xi**4 + 450 * xi**3 + 210 * xi**2 + 50 * xi + 5) / 5


def wendland_phi(k: int, r, normalized: bool = True):
    """Equal-area normalized ``phi_k(r) = phi~_k(r / Delta_k)``.

    With ``normalized=False`` the unscaled ``phi~_k(r)`` (support radius 1) is used;
    that variant reproduces the noise levels of the denoising experiments.
    """
    r = np.asarray(r, dtype=float)
    return wendland_raw(k, r / wendland_delta(k) if normalized else r)


def wendland(k: int, x, normalized: bool = True) -> float:
    """``f_k(x) = sum_i phi_k(||z_i - x||)`` over the octahedron vertices ``z_i``."""
    x = np.asarray(x, dtype=float)
    return float(wendland_phi(k, np.linalg.norm(OCTAHEDRON_CENTERS - x, axis=1), normalized).sum())


def wendland_field(k: int, points: PointSet, normalized: bool = True) -> np.ndarray:
    xyz = points.xyz
    out = np.zeros(len(points))
    for z in OCTAHEDRON_CENTERS:
        out += wendland_phi(k, np.linalg.norm(xyz - z, axis=1), normalized)
    return out


def rel_l2_error(f, f_T) -> float:
    f = np.asarray(f)
    nf = float(np.linalg.norm(f))
    if nf == 0:
        raise ValueError("relative error undefined for a zero reference")
    return float(np.linalg.norm(f - np.asarray(f_T))) / nf

"""Driver that turns an initial point set into a numerical spherical t-design."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .pointsets import fix_gauge, gauge_rotation, spiral
from .sht import PointSet
from .trustregion import TrustRegionConfig, TrustRegionTrace, minimize
from .variational import DesignProblem, ant_gradient, ant_value

NEAR_POLE = 1e-6


@dataclass
class DesignResult:
    points: PointSet
    t: int
    value: float
    gnorm: float
    trace: TrustRegionTrace
    regauges: int

    @property
    def sqrt_value(self) -> float:
        return math.sqrt(max(self.value, 0.0))

    @property
    def converged(self) -> bool:
        return self.trace.converged


def pole_free_frame(points: PointSet, n_axes: int = 2000) -> PointSet:
    """Rotate so the polar axis stays as far as possible from every point and antipode.

    Candidate axes are spiral directions; the winner maximizes ``min |sin theta_i|``.
    """
    axes = spiral(n_axes).xyz
    clearance = np.sqrt(np.clip(1.0 - (points.xyz @ axes.T) ** 2, 0.0, None)).min(axis=0)
    a = axes[int(np.argmax(clearance))]
    helper = np.eye(3)[int(np.argmin(np.abs(a)))]
    R = gauge_rotation(a, helper)
    return PointSet.from_xyz(points.xyz @ R.T)


def _has_free_pole(pts, first):
    s = np.abs(np.sin(pts.theta))
    s[first] = 1.0
    return bool(np.any(s < NEAR_POLE))


def _gauge_indices(n, first, second):
    return (first, n + first, n + second)


def compute_design(points: PointSet, t: int, config: TrustRegionConfig | None = None,
                   hessian_mode: str = "full", anchors: tuple[int, int] = (0, 1),
                   max_regauge: int = 20) -> DesignResult:
    """Minimize ``A_{N,t}`` from ``points`` under the rotation gauge.

    The default gauge puts ``points[anchors[0]]`` on the north pole and
    ``points[anchors[1]]`` on ``phi = 0``.  If a free point sits or drifts
    within ``sin(theta) < 1e-6`` of a pole (always the case for antipodal
    configurations), the set is rotated so the polar axis avoids every point
    and the same three coordinates are frozen where they are; the rotation
    is still removed and the optimization resumes with the remaining budget.
    """
    cfg = config or TrustRegionConfig()
    n = len(points)
    first, second = anchors
    pts = fix_gauge(points, first, second)
    if _has_free_pole(pts, first):
        pts = pole_free_frame(pts)
    trace = TrustRegionTrace()
    regauges = 0
    budget = cfg.max_iters
    while True:
        problem = DesignProblem(t, pts.as_vector(), _gauge_indices(n, first, second), hessian_mode)
        free_theta = problem.free[:n]

        def near_pole(k, z):
            theta = problem.embed(z)[:n]
            return bool(np.any(np.abs(np.sin(theta[free_theta])) < NEAR_POLE))

        z, part = minimize(problem, problem.restrict(pts.as_vector()),
                           replace(cfg, max_iters=max(budget, 1)), callback=near_pole)
        offset = trace.outer_iters
        for r in part.records:
            trace.records.append(replace(r, k=r.k + offset))
        budget -= part.outer_iters
        pts = problem.points(z)
        if part.status != "callback" or regauges >= max_regauge:
            trace.status = part.status if part.status != "callback" else "pole"
            break
        regauges += 1
        pts = pole_free_frame(pts)
        if budget <= 0:
            trace.status = "max_iters"
            break
    out = pts.canonical()
    value = ant_value(out, t)
    g = ant_gradient(PointSet.from_vector(pts.as_vector()), t, frozen=(first,))
    frozen = np.zeros(2 * n, dtype=bool)
    frozen[list(_gauge_indices(n, first, second))] = True
    gnorm = float(np.max(np.abs(g[~frozen]))) if n > 1 else 0.0
    trace.f = value
    trace.gnorm = gnorm
    return DesignResult(out, t, value, gnorm, trace, regauges)

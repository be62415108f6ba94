"""Trust-region minimization with a Steihaug truncated (preconditioned) CG step.

Works with any objective exposing ``value(x)``, ``gradient(x)`` and
``hessian(x)``, the last returning a callable ``v -> B v``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class NonFiniteObjectiveError(FloatingPointError):
    """Raised when the objective or its gradient stops being finite."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def default_inner_tol(gnorm: float) -> float:
    return min(0.5, math.sqrt(gnorm))


@dataclass
class TrustRegionConfig:
    max_iters: int = 10000
    gtol: float = 1e-14
    delta_max: float = 100.0
    delta0: float = 1.0
    eta1: float = 0.25
    eta2: float = 0.75
    nu1: float = 0.25
    nu2: float = 2.0
    cg_max_iter: int | None = None
    inner_tol: Callable[[float], float] = default_inner_tol
    preconditioner: np.ndarray | str | None = None
    delta_min: float = 1e-15
    boundary_slack: float = 1e-10

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.delta0 < self.delta_max:
            raise ValueError("need 0 < delta0 < delta_max")
        if not 0 < self.eta1 <= self.eta2 < 1:
            raise ValueError("need 0 < eta1 <= eta2 < 1")
        if not 0 < self.nu1 < 1 < self.nu2:
            raise ValueError("need 0 < nu1 < 1 < nu2")


@dataclass
class IterRecord:
    k: int
    f: float
    gnorm: float
    delta: float
    tau: float
    accepted: bool
    inner_iters: int


@dataclass
class TrustRegionTrace:
    records: list[IterRecord] = field(default_factory=list)
    status: str = "running"
    f: float = float("nan")
    gnorm: float = float("nan")

    @property
    def outer_iters(self) -> int:
        return len(self.records)

    @property
    def total_inner(self) -> int:
        """``K_TR``: the sum of inner CG iterations."""
        return sum(r.inner_iters for r in self.records)

    @property
    def converged(self) -> bool:
        return self.status in ("gtol", "stagnation")

    def to_csv(self, fh=None) -> str:
        out = fh if fh is not None else io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["iter", "f", "gnorm", "delta", "tau", "accepted", "inner_iters"])
        for r in self.records:
            w.writerow([r.k, repr(r.f), repr(r.gnorm), repr(r.delta), repr(r.tau),
                        int(r.accepted), r.inner_iters])
        return out.getvalue() if fh is None else ""


@dataclass
class SubproblemResult:
    step: np.ndarray
    model_decrease: float
    iters: int
    reason: str


def _wnorm(v, W):
    return math.sqrt(float(v @ (W * v)))


def _to_boundary(z, d, delta, W):
    """Larger root ``rho > 0`` of ``||z + rho d||_W = delta``."""
    a = float(d @ (W * d))
    b = 2.0 * float(z @ (W * d))
    c = float(z @ (W * z)) - delta * delta
    disc = math.sqrt(max(b * b - 4 * a * c, 0.0))
    # c <= 0 inside the region, so the roots have opposite signs
    if b >= 0:
        return -2 * c / (b + disc) if (b + disc) > 0 else 0.0
    return (-b + disc) / (2 * a)


def solve_subproblem(g, hess_apply, delta, W=None, tol=0.5, max_iter=None) -> SubproblemResult:
    """Steihaug-Toint CG for ``min g.s + s.Bs/2`` subject to ``||s||_W <= delta``.

    ``W`` is the diagonal of the preconditioner (identity when ``None``).
    """
    g = np.asarray(g, dtype=float)
    n = g.size
    W = np.ones(n) if W is None else np.asarray(W, dtype=float)
    max_iter = n if max_iter is None else max_iter
    z = np.zeros(n)
    if not np.any(g):
        return SubproblemResult(z, 0.0, 0, "zero-gradient")
    r = g.copy()
    gamma = r / W
    d = -gamma
    rg = float(r @ gamma)
    r0 = _wnorm(r, W)
    q = 0.0  # model value relative to q(0)
    for j in range(max_iter + 1):
        Bd = hess_apply(d)
        curv = float(d @ Bd)
        rd = float(r @ d)
        if curv <= 0:
            rho = _to_boundary(z, d, delta, W)
            q += rho * rd + 0.5 * rho * rho * curv
            return SubproblemResult(z + rho * d, -q, j + 1, "negative-curvature")
        alpha = rg / curv
        z_next = z + alpha * d
        if _wnorm(z_next, W) >= delta:
            rho = _to_boundary(z, d, delta, W)
            q += rho * rd + 0.5 * rho * rho * curv
            return SubproblemResult(z + rho * d, -q, j + 1, "boundary")
        q += alpha * rd + 0.5 * alpha * alpha * curv
        z = z_next
        r = r + alpha * Bd
        if _wnorm(r, W) < tol * r0:
            return SubproblemResult(z, -q, j + 1, "converged")
        gamma = r / W
        rg_next = float(r @ gamma)
        d = -gamma + (rg_next / rg) * d
        rg = rg_next
    return SubproblemResult(z, -q, max_iter + 1, "max-iter")


def _preconditioner(config, hess):
    P = config.preconditioner
    if P is None:
        return None
    if isinstance(P, str):
        if P != "diagonal":
            raise ValueError(f"unknown preconditioner {P!r}")
        return np.maximum(np.abs(hess.diagonal), 1e-8)
    return np.asarray(P, dtype=float)


def minimize(objective, x0, config: TrustRegionConfig | None = None, callback=None):
    """Trust-region loop; returns ``(x_best, trace)``.

    ``callback(k, x)`` runs after each iteration; returning ``True`` stops
    the loop with status ``"callback"``.
    """
    cfg = config or TrustRegionConfig()
    x = np.asarray(x0, dtype=float).copy()
    trace = TrustRegionTrace()
    f = float(objective.value(x))
    g = np.asarray(objective.gradient(x), dtype=float)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        trace.status = "non-finite"
        raise NonFiniteObjectiveError("objective not finite at x0", trace)
    hess = objective.hessian(x)
    delta = cfg.delta0
    k = 0
    gnorm = float(np.max(np.abs(g)))
    while True:
        if gnorm <= cfg.gtol:
            trace.status = "gtol"
            break
        if k > cfg.max_iters:
            trace.status = "max_iters"
            break
        if delta < cfg.delta_min:
            trace.status = "stagnation"
            break
        W = _preconditioner(cfg, hess)
        sub = solve_subproblem(g, hess, delta, W, cfg.inner_tol(gnorm), cfg.cg_max_iter)
        s = sub.step
        x_trial = x + s
        f_trial = float(objective.value(x_trial))
        if not np.isfinite(f_trial):
            trace.status = "non-finite"
            raise NonFiniteObjectiveError(f"objective not finite at iteration {k}", trace)
        pred = sub.model_decrease
        ared = f - f_trial
        if pred > 0:
            tau = ared / pred
        else:
            tau = 1.0 if ared >= 0 else -1.0
        accepted = tau >= cfg.eta1 and ared >= 0
        snorm = _wnorm(s, np.ones(s.size) if W is None else W)
        trace.records.append(IterRecord(k, f, gnorm, delta, tau, accepted, sub.iters))
        if tau < cfg.eta1:
            delta = cfg.nu1 * delta
        elif tau >= cfg.eta2 and snorm >= (1 - cfg.boundary_slack) * delta:
            delta = min(cfg.nu2 * delta, cfg.delta_max)
        if accepted:
            x, f = x_trial, f_trial
            g = np.asarray(objective.gradient(x), dtype=float)
            if not np.all(np.isfinite(g)):
                trace.status = "non-finite"
                raise NonFiniteObjectiveError(f"gradient not finite at iteration {k}", trace)
            gnorm = float(np.max(np.abs(g)))
            hess = objective.hessian(x)
        k += 1
        if callback is not None and callback(k, x):
            trace.status = "callback"
            break
    trace.f = f
    trace.gnorm = gnorm
    return x, trace

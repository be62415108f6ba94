"""Bump-function filter banks and truncated spherical framelet transforms.

A level ``j`` of a :class:`QuadratureChain` is a spherical ``t_j``-design with
equal weights ``w_j = 4 pi / N_j`` and ``t_{j+1} = 2 t_j``.  Filters act on
degree ``l`` through ``xi = l / t_{j+1}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .sht import FOUR_PI, PointSet, SHTPlan, lm_arrays, ncoeffs
from .variational import ant_value


def nu(t):
    """Daubechies' smooth step: ``t^4 (35 - 84 t + 70 t^2 - 20 t^3)`` clamped to ``[0, 1]``."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t**4 * (35 - 84 * t + 70 * t**2 - 20 * t**3)


@dataclass(frozen=True)
class Bump:
    """``chi_{[cL, cR]; eL, eR}``: smooth plateau on ``[cL + eL, cR - eR]``."""

    cL: float
    cR: float
    eL: float
    eR: float

    def __post_init__(self):
        if self.cL + self.eL > self.cR - self.eR + 1e-15:
            raise ValueError("bump plateau is empty")

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.zeros_like(xi)
        rise = (xi > self.cL - self.eL) & (xi < self.cL + self.eL)
        flat = (xi >= self.cL + self.eL) & (xi <= self.cR - self.eR)
        fall = (xi > self.cR - self.eR) & (xi < self.cR + self.eR)
        out[rise] = np.sin(0.5 * np.pi * nu((xi[rise] - self.cL + self.eL) / (2 * self.eL)))
        out[flat] = 1.0
        out[fall] = np.cos(0.5 * np.pi * nu((xi[fall] - self.cR + self.eR) / (2 * self.eR)))
        return out

    @property
    def support(self) -> tuple[float, float]:
        return (self.cL - self.eL, self.cR + self.eR)


def bump(cL, cR, eL, eR) -> Bump:
    return Bump(cL, cR, eL, eR)


@dataclass(frozen=True)
class FilterBank:
    name: str
    a: Callable
    b: tuple

    @property
    def n(self) -> int:
        return len(self.b)

    def puc_residual(self, xi) -> np.ndarray:
        """``|a|^2 + sum |b_s|^2 - 1`` on the given grid."""
        tot = self.a(xi) ** 2
        for bs in self.b:
            tot = tot + bs(xi) ** 2
        return tot - 1.0


_LOW = Bump(-3 / 16, 1 / 8, 1 / 16, 1 / 16)


def standard_banks() -> dict[str, FilterBank]:
    """The three banks ``eta1``, ``eta2`` and ``eta3`` (1, 2 and 3 high-pass filters)."""
    return {
        "eta1": FilterBank("eta1", _LOW, (Bump(1 / 8, 9 / 16, 1 / 16, 1 / 16),)),
        "eta2": FilterBank("eta2", _LOW, (Bump(1 / 8, 3 / 8, 1 / 16, 1 / 8),
                                          Bump(3 / 8, 1.0, 1 / 8, 1 / 8))),
        "eta3": FilterBank("eta3", _LOW, (Bump(1 / 8, 5 / 16, 1 / 16, 1 / 16),
                                          Bump(5 / 16, 7 / 16, 1 / 16, 1 / 16),
                                          Bump(7 / 16, 9 / 16, 1 / 16, 1 / 16))),
    }


def get_bank(name: str) -> FilterBank:
    banks = standard_banks()
    if name not in banks:
        raise ValueError(f"unknown filter bank {name!r}; choose from {sorted(banks)}")
    return banks[name]


class QuadratureChain:
    """Equal-weight designs ``X_{N_j}`` with degrees ``t_{j+1} = 2 t_j``.

    Level 0 is the coarsest (``J_0``), the last level is ``J + 1``.
    Transform plans are built lazily and cached.
    """

    def __init__(self, points: Sequence[PointSet], degrees: Sequence[int], check: bool = True,
                 tol: float = 1e-8):
        if len(points) != len(degrees) or len(points) < 2:
            raise ValueError("a chain needs at least two levels with one degree each")
        for lo, hi in zip(degrees, degrees[1:]):
            if hi != 2 * lo:
                raise ValueError(f"degrees must double between levels, got {list(degrees)}")
        self.points = list(points)
        self.degrees = [int(t) for t in degrees]
        self._plans: dict[int, SHTPlan] = {}
        if check:
            for X, t in zip(self.points, self.degrees):
                err = math.sqrt(max(ant_value(X, t), 0.0))
                if err > tol:
                    raise ValueError(f"level with t={t}, N={len(X)} is not a design (sqrt A = {err:.2e})")

    @property
    def levels(self) -> int:
        return len(self.points)

    @property
    def J(self) -> int:
        """Index of the finest band level (the finest point set is ``J + 1``)."""
        return self.levels - 2

    def weight(self, j: int) -> float:
        return FOUR_PI / len(self.points[j])

    def plan(self, j: int) -> SHTPlan:
        if j not in self._plans:
            self._plans[j] = SHTPlan(self.points[j], self.degrees[j])
        return self._plans[j]


def downsample(c, t_low: int) -> np.ndarray:
    """Restrict a coefficient vector to degrees ``<= t_low``."""
    return np.asarray(c)[: ncoeffs(t_low)].copy()


def upsample(c, t_high: int) -> np.ndarray:
    """Zero-extend a coefficient vector to degree ``t_high``."""
    c = np.asarray(c)
    out = np.zeros(ncoeffs(t_high), dtype=np.result_type(c, complex))
    out[: c.size] = c
    return out


def filter_samples(fn, t_next: int) -> np.ndarray:
    """``fn(l / t_next)`` laid out over ``(l, m)`` for ``l <= t_next``."""
    l, _ = lm_arrays(t_next)
    return fn(l / t_next)


@dataclass
class FrameletPyramid:
    v: np.ndarray
    w: dict = field(default_factory=dict)  # (j, s) -> band coefficients, s from 1

    def bands(self):
        return sorted(self.w)

    def copy(self) -> "FrameletPyramid":
        return FrameletPyramid(self.v.copy(), {k: x.copy() for k, x in self.w.items()})

    def energy(self) -> float:
        e = float(np.vdot(self.v, self.v).real)
        return e + sum(float(np.vdot(x, x).real) for x in self.w.values())


def _truncate(c, t_keep):
    l, _ = lm_arrays(int(round(math.sqrt(c.size))) - 1)
    return np.where(l <= t_keep, c, 0.0)


def decompose(f, chain: QuadratureChain, bank: FilterBank) -> FrameletPyramid:
    """Multi-level decomposition of samples on the finest level.

    ``f`` should lie in ``Pi_{t_J}``; coefficients above ``t_J`` are dropped.
    """
    top = chain.levels - 1
    f = np.asarray(f)
    if f.shape != (len(chain.points[top]),):
        raise ValueError("field length does not match the finest level of the chain")
    fhat = chain.weight(top) * chain.plan(top).analysis(f)
    fhat = _truncate(fhat, chain.degrees[top - 1])
    pyr = FrameletPyramid(np.empty(0))
    for j in range(top - 1, -1, -1):
        tn = chain.degrees[j + 1]
        sw = math.sqrt(chain.weight(j + 1))
        for s, bs in enumerate(bank.b, start=1):
            pyr.w[(j, s)] = sw * chain.plan(j + 1).synthesis(fhat * np.conj(filter_samples(bs, tn)))
        fhat = downsample(fhat * np.conj(filter_samples(bank.a, tn)), chain.degrees[j])
    pyr.v = math.sqrt(chain.weight(0)) * chain.plan(0).synthesis(fhat)
    return pyr


def reconstruct(pyr: FrameletPyramid, chain: QuadratureChain, bank: FilterBank) -> np.ndarray:
    """Inverse of :func:`decompose`; returns samples on the finest level."""
    top = chain.levels - 1
    if pyr.v.shape != (len(chain.points[0]),):
        raise ValueError("coarse coefficients do not match level 0 of the chain")
    fhat = math.sqrt(chain.weight(0)) * chain.plan(0).analysis(pyr.v)
    for j in range(top):
        tn = chain.degrees[j + 1]
        sw = math.sqrt(chain.weight(j + 1))
        fhat = upsample(fhat, tn) * filter_samples(bank.a, tn)
        for s, bs in enumerate(bank.b, start=1):
            wj = pyr.w.get((j, s))
            if wj is None:
                raise ValueError(f"pyramid is missing band j={j} s={s}")
            if wj.shape != (len(chain.points[j + 1]),):
                raise ValueError(f"band j={j} s={s} has the wrong length")
            fhat = fhat + sw * chain.plan(j + 1).analysis(wj) * filter_samples(bs, tn)
    fhat = _truncate(fhat, chain.degrees[top - 1])
    return chain.plan(top).synthesis(fhat)


def cascade(chain: QuadratureChain, bank: FilterBank):
    """Per-degree cascaded profiles ``alpha^{(j)}`` and ``beta_s^{(j)}``.

    Returns ``(alpha, beta)`` with ``alpha[j]`` indexed by ``l <= t_j`` and
    ``beta[(j, s)]`` indexed by ``l <= t_{j+1}``.
    """
    top = chain.levels - 1
    t_top = chain.degrees[top]
    alpha = {top: (np.arange(t_top + 1) <= chain.degrees[top - 1]).astype(float)}
    beta = {}
    for j in range(top - 1, -1, -1):
        tn = chain.degrees[j + 1]
        xi = np.arange(tn + 1) / tn
        for s, bs in enumerate(bank.b, start=1):
            beta[(j, s)] = bs(xi) * alpha[j + 1]
        alpha[j] = (bank.a(xi) * alpha[j + 1])[: chain.degrees[j] + 1]
    return alpha, beta


def framelet_norm(j: int, s: int, chain: QuadratureChain, bank: FilterBank) -> float:
    """``||psi_{j,k}^{(s)}||_{L2}``, which does not depend on ``k``."""
    _, beta = cascade(chain, bank)
    if (j, s) not in beta:
        raise ValueError(f"no band j={j} s={s} in this chain/bank")
    b = beta[(j, s)]
    l = np.arange(b.size)
    return math.sqrt(chain.weight(j + 1) * float(np.sum(b**2 * (2 * l + 1))) / FOUR_PI)


def zero_pyramid(chain: QuadratureChain, bank: FilterBank) -> FrameletPyramid:
    pyr = FrameletPyramid(np.zeros(len(chain.points[0]), dtype=complex))
    for j in range(chain.levels - 1):
        for s in range(1, bank.n + 1):
            pyr.w[(j, s)] = np.zeros(len(chain.points[j + 1]), dtype=complex)
    return pyr

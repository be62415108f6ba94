"""Complex spherical harmonics and dense synthesis/analysis transforms.

Conventions
-----------
``Y_l^m(theta, phi) = Pbar_l^m(cos theta) exp(i m phi)`` where ``Pbar`` is the
orthonormal associated Legendre function including the Condon-Shortley phase,
and ``Y_l^{-m} = (-1)^m conj(Y_l^m)``.  Coefficient vectors of degree ``t``
have length ``(t+1)**2`` and are ordered ``(0,0), (1,-1), (1,0), (1,1), ...``
so that ``(l, m)`` sits at ``l*l + l + m``.

The transforms are the exact dense products ``y = Y_t c`` and ``c = Y_t^* y``
costing ``O(N t^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FOUR_PI = 4.0 * np.pi


def ncoeffs(t: int) -> int:
    return (t + 1) * (t + 1)


def lm_index(l, m):
    """Position of ``(l, m)`` in a coefficient vector."""
    return l * l + l + m


def degree_of(n: int) -> int:
    """Inverse of :func:`ncoeffs`; raises if ``n`` is not a perfect square."""
    t = int(round(np.sqrt(n))) - 1
    if t < 0 or (t + 1) ** 2 != n:
        raise ValueError(f"coefficient length {n} is not (t+1)^2")
    return t


def lm_arrays(t: int) -> tuple[np.ndarray, np.ndarray]:
    """Degree and order arrays matching the coefficient layout of degree ``t``."""
    l = np.repeat(np.arange(t + 1), 2 * np.arange(t + 1) + 1)
    m = np.arange(ncoeffs(t)) - l * l - l
    return l, m


@dataclass
class PointSet:
    """``N`` points on the unit sphere given by polar and azimuthal angles.

    Angles are kept exactly as given.  The optimizer works in an unconstrained
    chart where ``theta`` may leave ``[0, pi]``; :meth:`canonical` maps back to
    ``theta in [0, pi]``, ``phi in [0, 2 pi)`` without moving any point.
    """

    theta: np.ndarray
    phi: np.ndarray
    xyz: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        self.phi = np.atleast_1d(np.asarray(self.phi, dtype=float))
        if self.theta.shape != self.phi.shape or self.theta.ndim != 1:
            raise ValueError("theta and phi must be 1-d arrays of equal length")
        st = np.sin(self.theta)
        self.xyz = np.column_stack(
            (st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta))
        )

    def __len__(self):
        return self.theta.size

    @classmethod
    def from_xyz(cls, xyz) -> "PointSet":
        xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
        xyz = xyz / np.linalg.norm(xyz, axis=1, keepdims=True)
        theta = np.arccos(np.clip(xyz[:, 2], -1.0, 1.0))
        phi = np.mod(np.arctan2(xyz[:, 1], xyz[:, 0]), 2 * np.pi)
        # mod can return 2*pi for tiny negative inputs
        phi[phi >= 2 * np.pi] = 0.0
        return cls(theta, phi)

    @classmethod
    def from_vector(cls, x) -> "PointSet":
        """Build from the stacked variable vector ``(theta_1..theta_N, phi_1..phi_N)``."""
        x = np.asarray(x, dtype=float)
        n = x.size // 2
        return cls(x[:n], x[n:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate((self.theta, self.phi))

    def canonical(self) -> "PointSet":
        theta = np.mod(self.theta, 2 * np.pi)
        phi = self.phi.copy()
        flip = theta > np.pi
        theta[flip] = 2 * np.pi - theta[flip]
        phi[flip] += np.pi
        phi = np.mod(phi, 2 * np.pi)
        phi[phi >= 2 * np.pi] = 0.0
        return PointSet(theta, phi)


@dataclass
class HarmonicCoeffs:
    """Coefficients ``c_l^m`` for ``0 <= l <= t`` in the standard layout."""

    t: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != (ncoeffs(self.t),):
            raise ValueError(f"expected {ncoeffs(self.t)} coefficients for t={self.t}")

    @classmethod
    def zeros(cls, t: int) -> "HarmonicCoeffs":
        return cls(t, np.zeros(ncoeffs(t), dtype=complex))

    @classmethod
    def unit(cls, t: int, l: int, m: int) -> "HarmonicCoeffs":
        c = cls.zeros(t)
        c.data[lm_index(l, m)] = 1.0
        return c

    def __getitem__(self, lm):
        l, m = lm
        return self.data[lm_index(l, m)]


def _check_lm(l: int, m: int):
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid spherical harmonic index (l={l}, m={m})")


def legendre_table(t: int, theta) -> np.ndarray:
    """Orthonormal associated Legendre values ``Pbar_l^m(cos theta)`` for ``m >= 0``.

    Returns an array ``P`` of shape ``(t+1, t+1, N)`` with ``P[m, l]`` holding
    degree ``l`` and order ``m`` (zero for ``m > l``).  Uses the normalized
    three-term recurrence, so nothing overflows for large ``t``.  ``sin(theta)``
    enters with its sign, which keeps the table analytic in ``theta``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    z = np.cos(theta)
    s = np.sin(theta)
    P = np.zeros((t + 1, t + 1, theta.size))
    diag = np.full(theta.size, 1.0 / np.sqrt(FOUR_PI))
    P[0, 0] = diag
    for m in range(1, t + 1):
        diag = -np.sqrt((2 * m + 1) / (2.0 * m)) * s * diag
        P[m, m] = diag
    if t == 0:
        return P
    m_all = np.arange(t + 1)
    P[m_all[:-1], m_all[:-1] + 1] = np.sqrt(2 * m_all[:-1] + 3.0)[:, None] * z * P[m_all[:-1], m_all[:-1]]
    for l in range(2, t + 1):
        m = np.arange(l - 1)
        l2m2 = l * l - m * m
        a = np.sqrt((4.0 * l * l - 1) / l2m2)
        b = np.sqrt(((l - 1) ** 2 - m * m) / (4.0 * (l - 1) ** 2 - 1))
        P[m, l] = a[:, None] * (z * P[m, l - 1] - b[:, None] * P[m, l - 2])
    return P


def eval_ylm(l: int, m: int, theta, phi):
    """``Y_l^m(theta, phi)``; scalar or array input."""
    _check_lm(l, m)
    scalar = np.ndim(theta) == 0 and np.ndim(phi) == 0
    theta_a = np.atleast_1d(np.asarray(theta, dtype=float))
    phi_a = np.atleast_1d(np.asarray(phi, dtype=float))
    mm = abs(m)
    val = legendre_table(l, theta_a)[mm, l] * np.exp(1j * mm * phi_a)
    if m < 0:
        val = (-1) ** mm * np.conj(val)
    return val[0] if scalar else val


def ylm_matrix(points: PointSet, t: int) -> np.ndarray:
    """The dense ``N x (t+1)^2`` matrix ``Y_t`` (testing and small problems)."""
    return SHTPlan(points, t).matrix()


class SHTPlan:
    """Cached Legendre and phase tables for one point set up to degree ``t``.

    Transforms of any degree ``<= t`` reuse the same tables.  Sums run in a
    fixed order (one BLAS product per order ``m``), so repeated calls on the
    same inputs are bit-identical.
    """

    def __init__(self, points: PointSet, t: int):
        self.points = points
        self.t = int(t)
        self.P = legendre_table(self.t, points.theta)
        e1 = np.exp(1j * points.phi)
        E = np.empty((self.t + 1, len(points)), dtype=complex)
        E[0] = 1.0
        for m in range(1, self.t + 1):
            E[m] = E[m - 1] * e1
        self.E = E

    def _deg(self, n: int) -> int:
        td = degree_of(n)
        if td > self.t:
            raise ValueError(f"plan built for t={self.t}, got degree {td}")
        return td

    def synthesis(self, c) -> np.ndarray:
        """``y_i = sum_{l,m} c_l^m Y_l^m(x_i)``."""
        if isinstance(c, HarmonicCoeffs):
            c = c.data
        c = np.asarray(c, dtype=complex)
        td = self._deg(c.size)
        l = np.arange(td + 1)
        c0 = c[l * l + l]
        y = self.P[0, : td + 1].T @ np.column_stack((c0.real, c0.imag))
        y = y[:, 0] + 1j * y[:, 1]
        for m in range(1, td + 1):
            lm = np.arange(m, td + 1)
            base = lm * lm + lm
            pos = c[base + m]
            neg = c[base - m] if m % 2 == 0 else -c[base - m]
            # real matmul on stacked parts avoids promoting P to complex
            r = self.P[m, m : td + 1].T @ np.column_stack((pos.real, pos.imag, neg.real, neg.imag))
            y += self.E[m] * (r[:, 0] + 1j * r[:, 1]) + np.conj(self.E[m]) * (r[:, 2] + 1j * r[:, 3])
        return y

    def analysis(self, y, t: int | None = None) -> np.ndarray:
        """``c_l^m = sum_i conj(Y_l^m(x_i)) y_i`` up to degree ``t``."""
        td = self.t if t is None else int(t)
        if td > self.t:
            raise ValueError(f"plan built for t={self.t}, requested {td}")
        y = np.asarray(y, dtype=complex)
        if y.shape != (len(self.points),):
            raise ValueError("values must have one entry per point")
        c = np.zeros(ncoeffs(td), dtype=complex)
        l = np.arange(td + 1)
        r = self.P[0, : td + 1] @ np.column_stack((y.real, y.imag))
        c[l * l + l] = r[:, 0] + 1j * r[:, 1]
        for m in range(1, td + 1):
            lm = np.arange(m, td + 1)
            base = lm * lm + lm
            ye = y * np.conj(self.E[m])
            yn = y * self.E[m]
            r = self.P[m, m : td + 1] @ np.column_stack((ye.real, ye.imag, yn.real, yn.imag))
            c[base + m] = r[:, 0] + 1j * r[:, 1]
            neg = r[:, 2] + 1j * r[:, 3]
            c[base - m] = -neg if m % 2 else neg
        return c

    def matrix(self, t: int | None = None) -> np.ndarray:
        td = self.t if t is None else int(t)
        Y = np.empty((len(self.points), ncoeffs(td)), dtype=complex)
        for l in range(td + 1):
            for m in range(l + 1):
                v = self.P[m, l] * self.E[m]
                Y[:, lm_index(l, m)] = v
                if m:
                    Y[:, lm_index(l, -m)] = (-1) ** m * np.conj(v)
        return Y


def synthesis(coeffs, points: PointSet) -> np.ndarray:
    if isinstance(coeffs, HarmonicCoeffs):
        coeffs = coeffs.data
    return SHTPlan(points, degree_of(np.size(coeffs))).synthesis(coeffs)


def analysis(values, points: PointSet, t: int) -> HarmonicCoeffs:
    return HarmonicCoeffs(t, SHTPlan(points, t).analysis(values))

"""The variational functional ``A_{N,t}``, its gradient and Hessian action.

For a point set ``X_N`` in spherical coordinates,

    A_{N,t}(X_N) = 4 pi / N^2 * || Y_t^* e ||^2 - 1,

which is nonnegative and vanishes exactly on spherical t-designs.  The
variable vector is ``(theta_1..theta_N, phi_1..phi_N)``.  Everything is built
from one analysis ``c = Y_t^* e`` followed by a few syntheses, using

    d/dtheta Y_l^m = (a_l^m Y_{l+1}^m - b_l^m Y_{l-1}^m) / sin(theta),
    d/dphi   Y_l^m = i m Y_l^m.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sht import FOUR_PI, PointSet, SHTPlan, lm_arrays, ncoeffs

POLE_TOL = 1e-12
HESSIAN_MODES = ("full", "diag", "rank1")


class PoleSingularityError(ValueError):
    """A free point sits on a pole where the spherical chart degenerates."""


def ab_coefficients(t: int) -> tuple[np.ndarray, np.ndarray]:
    """``a_l^m`` and ``b_l^m`` laid out over ``I_t`` (coefficient order)."""
    l, m = lm_arrays(t)
    l = l.astype(float)
    m = m.astype(float)
    a = np.sqrt(l * l * ((l + 1) ** 2 - m * m) / ((2 * l + 1) * (2 * l + 3)))
    with np.errstate(invalid="ignore", divide="ignore"):
        b = np.sqrt((l + 1) ** 2 * (l * l - m * m) / ((2 * l - 1) * (2 * l + 1)))
    b[0] = 0.0
    return a, b


class _Ladder:
    """Index bookkeeping for the degree-raising map behind d/dtheta.

    ``raise_(c)`` maps degree-``t`` coefficients to degree ``t+1`` as
    ``out_L^m = c_{L-1}^m a_{L-1}^m - c_{L+1}^m b_{L+1}^m`` (terms outside
    ``I_t`` are zero).  ``lower(s)`` is its transpose, mapping degree ``t+1``
    to degree ``t``: ``out_l^m = a_l^m s_{l+1}^m - b_l^m s_{l-1}^m``.
    """

    def __init__(self, t: int):
        self.t = t
        L, M = lm_arrays(t + 1)
        a, b = ab_coefficients(t + 2)
        self.a, self.b = a, b
        n = ncoeffs(t)
        # source index of c_{L-1}^m and c_{L+1}^m for each target (L, m)
        dn = (L - 1) ** 2 + (L - 1) + M
        up = (L + 1) ** 2 + (L + 1) + M
        self.dn_ok = (L >= 1) & (np.abs(M) <= L - 1)
        self.up_ok = (L + 1) <= t
        self.dn = np.where(self.dn_ok, dn, 0)
        self.up = np.where(self.up_ok, up, 0)
        self.a_dn = np.where(self.dn_ok, a[self.dn], 0.0)
        self.b_up = np.where(self.up_ok, b[np.where(self.up_ok, up, 0)], 0.0)
        self.n_src = n

    def raise_(self, c: np.ndarray) -> np.ndarray:
        return np.where(self.dn_ok, c[self.dn] * self.a_dn, 0.0) - np.where(
            self.up_ok, c[self.up] * self.b_up, 0.0
        )

    def lower(self, s: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n_src, dtype=complex)
        np.add.at(out, self.dn[self.dn_ok], self.a_dn[self.dn_ok] * s[self.dn_ok])
        np.add.at(out, self.up[self.up_ok], -self.b_up[self.up_ok] * s[self.up_ok])
        return out


_LADDERS: dict[int, _Ladder] = {}


def _ladder(t: int) -> _Ladder:
    if t not in _LADDERS:
        _LADDERS[t] = _Ladder(t)
    return _LADDERS[t]


def _as_points(points) -> PointSet:
    if isinstance(points, PointSet):
        return points
    return PointSet.from_vector(points)


class _State:
    """Shared quantities for one point set: the plan, ``c = Y_t^* e`` and ``sin``."""

    def __init__(self, points: PointSet, t: int):
        self.points = points
        self.t = t
        self.n = len(points)
        self.kappa = 8.0 * np.pi / self.n**2
        self.plan = SHTPlan(points, t + 1)
        self.chat = self.plan.analysis(np.ones(self.n), t)
        self.sin = np.sin(points.theta)
        self.cos = np.cos(points.theta)
        self.ladder = _ladder(t)
        self.l, self.m = lm_arrays(t)

    def value(self) -> float:
        return _value_from_coeffs(self.chat, self.n)

    def inv_sin(self, frozen_theta: np.ndarray) -> np.ndarray:
        small = np.abs(self.sin) < POLE_TOL
        bad = small & ~frozen_theta
        if bad.any():
            idx = np.flatnonzero(bad)
            raise PoleSingularityError(
                f"points {idx.tolist()} lie on a pole; rotate the set (re-gauge) first"
            )
        return np.where(small, 0.0, 1.0 / np.where(small, 1.0, self.sin))

    def gradient(self, frozen_theta: np.ndarray) -> np.ndarray:
        inv_s = self.inv_sin(frozen_theta)
        c0 = self.kappa * self.ladder.raise_(self.chat)
        d0 = self.kappa * 1j * self.m * self.chat
        g_theta = inv_s * self.plan.synthesis(c0).real
        g_phi = self.plan.synthesis(d0).real
        return np.concatenate((g_theta, g_phi))


def _value_from_coeffs(c, n) -> float:
    # the l=0 term of 4pi/N^2 |Y^* e|^2 is exactly 1, so dropping it instead
    # of subtracting 1 avoids cancellation and keeps relative accuracy near 0
    return FOUR_PI / n**2 * float(np.vdot(c[1:], c[1:]).real)


def _frozen_theta_mask(n: int, frozen) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    if frozen is not None:
        idx = np.asarray(list(frozen), dtype=int)
        idx = idx[idx < n]
        mask[idx] = True
    return mask


def ant_value(points, t: int) -> float:
    """``A_{N,t}`` of a point set (a :class:`PointSet` or stacked angle vector)."""
    pts = _as_points(points)
    plan = SHTPlan(pts, t)
    return _value_from_coeffs(plan.analysis(np.ones(len(pts))), len(pts))


def ant_value_direct(points, t: int) -> float:
    """Reference double sum ``4 pi / N^2 sum_{l=1..t} sum_m |sum_i Y_l^m(x_i)|^2``."""
    pts = _as_points(points)
    Y = SHTPlan(pts, t).matrix()
    col = Y.sum(axis=0)
    return FOUR_PI / len(pts) ** 2 * float(np.sum(np.abs(col[1:]) ** 2))


def ant_gradient(points, t: int, frozen=None) -> np.ndarray:
    """Gradient ordered ``(d/dtheta_1..d/dtheta_N, d/dphi_1..d/dphi_N)``.

    ``frozen`` lists gauge-frozen variable indices; a frozen ``theta`` of a
    pole point is reported as 0 instead of raising.
    """
    pts = _as_points(points)
    st = _State(pts, t)
    return st.gradient(_frozen_theta_mask(len(pts), frozen))


@dataclass
class HessianAction:
    """Exact Hessian of ``A_{N,t}`` in structured form.

    ``H = [[F_tt, F_tp], [F_tp, F_pp]] + kappa * Re(J^* J)`` where the ``F``
    blocks are diagonal and ``J`` (size ``(t+1)^2 x 2N``) holds the partial
    derivatives ``dY_l^m(x_j)/dxi_j``.  ``J`` is never formed; products use
    one analysis and one synthesis per angle block.  ``mode`` selects the full
    Hessian, the diagonal part only (``"diag"``) or the low-rank part only
    (``"rank1"``).
    """

    F_tt: np.ndarray
    F_tp: np.ndarray
    F_pp: np.ndarray
    mode: str = "full"
    intermediates: dict = field(default_factory=dict, repr=False)
    _state: _State | None = field(default=None, repr=False)
    _inv_s: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.F_tt.size

    def _apply_diag(self, vt, vp):
        return self.F_tt * vt + self.F_tp * vp, self.F_tp * vt + self.F_pp * vp

    def _apply_lowrank(self, vt, vp):
        st = self._state
        lad = st.ladder
        # u = J v, a degree-t coefficient vector
        s_theta = np.conj(st.plan.analysis(self._inv_s * vt, st.t + 1))
        s_phi = np.conj(st.plan.analysis(vp, st.t))
        u = lad.lower(s_theta) + 1j * st.m * s_phi
        # Re(J^* u) reuses the gradient operators with conj(u)
        ub = np.conj(u)
        ht = self._inv_s * st.plan.synthesis(lad.raise_(ub)).real
        hp = st.plan.synthesis(1j * st.m * ub).real
        return st.kappa * ht, st.kappa * hp

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        n = self.n
        vt, vp = v[:n], v[n:]
        ot = np.zeros(n)
        op = np.zeros(n)
        if self.mode in ("full", "diag"):
            a, b = self._apply_diag(vt, vp)
            ot += a
            op += b
        if self.mode in ("full", "rank1"):
            a, b = self._apply_lowrank(vt, vp)
            ot += a
            op += b
        return np.concatenate((ot, op))

    __call__ = apply

    def diagonal_blocks(self) -> np.ndarray:
        """Diagonal of the F blocks (a cheap preconditioner candidate)."""
        return np.concatenate((self.F_tt, self.F_pp))

    def to_dense(self) -> np.ndarray:
        size = 2 * self.n
        return np.column_stack([self.apply(e) for e in np.eye(size)])


def _hessian_from_state(st: _State, frozen_theta: np.ndarray, mode: str) -> HessianAction:
    if mode not in HESSIAN_MODES:
        raise ValueError(f"unknown Hessian mode {mode!r}; choose from {HESSIAN_MODES}")
    inv_s = st.inv_sin(frozen_theta)
    k = st.kappa
    c, l, m = st.chat, st.l, st.m
    c0 = k * st.ladder.raise_(c)
    c1 = k * (m * m) * c
    c2 = k * (l * (l + 1)) * c
    L1, M1 = lm_arrays(st.t + 1)
    c3 = 1j * M1 * c0
    plan = st.plan
    y_c1 = plan.synthesis(c1).real
    y_c2 = plan.synthesis(c2).real
    y_c0 = plan.synthesis(c0).real
    cot_over_s = st.cos * inv_s
    F_tt = inv_s**2 * y_c1 - y_c2 - cot_over_s * inv_s * y_c0
    F_pp = -y_c1
    F_tp = inv_s * plan.synthesis(c3).real
    d1 = k * (st.ladder.a_dn - st.ladder.b_up)
    d2 = k * 1j * M1 * (L1 <= st.t)
    inter = {"c0": c0, "c1": c1, "c2": c2, "c3": c3, "d0": k * 1j * m * c, "d1": d1, "d2": d2}
    return HessianAction(F_tt, F_tp, F_pp, mode=mode, intermediates=inter, _state=st, _inv_s=inv_s)


def ant_hessian(points, t: int, frozen=None, mode: str = "full") -> HessianAction:
    pts = _as_points(points)
    st = _State(pts, t)
    return _hessian_from_state(st, _frozen_theta_mask(len(pts), frozen), mode)


def default_gauge(n: int) -> tuple[int, ...]:
    """Frozen variable indices ``theta_1, phi_1, phi_2`` for ``N`` points."""
    if n < 2:
        return (0, n) if n == 1 else ()
    return (0, n, n + 1)


@dataclass
class DesignProblem:
    """Reduced objective over the free coordinates of a gauged point set.

    ``x_full`` holds the pinned values of the frozen coordinates (the rest is
    overwritten by the free vector on every call).
    """

    t: int
    x_full: np.ndarray
    gauge: tuple[int, ...] = None
    hessian_mode: str = "full"

    def __post_init__(self):
        self.x_full = np.asarray(self.x_full, dtype=float).copy()
        if self.x_full.size % 2:
            raise ValueError("variable vector must have even length")
        self.n = self.x_full.size // 2
        if self.gauge is None:
            self.gauge = default_gauge(self.n)
        gauge = np.asarray(self.gauge, dtype=int)
        if gauge.size and (gauge.min() < 0 or gauge.max() >= 2 * self.n):
            raise ValueError("gauge indices out of range")
        self.free = np.ones(2 * self.n, dtype=bool)
        self.free[gauge] = False
        self._frozen_theta = ~self.free[: self.n]
        self._cache_key = None
        self._state = None

    @property
    def dim(self) -> int:
        return int(self.free.sum())

    def embed(self, z) -> np.ndarray:
        x = self.x_full.copy()
        x[self.free] = z
        return x

    def restrict(self, x) -> np.ndarray:
        return np.asarray(x)[self.free]

    def points(self, z) -> PointSet:
        return PointSet.from_vector(self.embed(z))

    def _get_state(self, z) -> _State:
        z = np.asarray(z, dtype=float)
        key = z.tobytes()
        if key != self._cache_key:
            self._state = _State(self.points(z), self.t)
            self._cache_key = key
        return self._state

    def value(self, z) -> float:
        return self._get_state(z).value()

    def gradient(self, z) -> np.ndarray:
        return self._get_state(z).gradient(self._frozen_theta)[self.free]

    def hessian(self, z):
        H = _hessian_from_state(self._get_state(z), self._frozen_theta, self.hessian_mode)
        free = self.free
        n2 = 2 * self.n

        def hess_apply(v):
            full = np.zeros(n2)
            full[free] = v
            return H.apply(full)[free]

        hess_apply.diagonal = H.diagonal_blocks()[free]
        return hess_apply


def reduced_objective(problem: DesignProblem) -> DesignProblem:
    """The objective interface consumed by :func:`sphdesign.trustregion.minimize`."""
    return problem

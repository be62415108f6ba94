import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sphdesign.pointsets import icosahedral, octahedron, uniform
from sphdesign.sht import PointSet
from sphdesign.variational import (
    DesignProblem,
    PoleSingularityError,
    ab_coefficients,
    ant_gradient,
    ant_hessian,
    ant_value,
    ant_value_direct,
    default_gauge,
)


def random_points(n, seed):
    rng = np.random.default_rng(seed)
    return PointSet(rng.uniform(0.2, math.pi - 0.2, n), rng.uniform(0, 2 * math.pi, n))


def fd_gradient(pts, t, h=1e-6):
    x = pts.as_vector()
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (ant_value(PointSet.from_vector(x + e), t) - ant_value(PointSet.from_vector(x - e), t)) / (2 * h)
    return g


def test_single_point_value():
    assert ant_value(PointSet([0.3], [1.1]), 2) == pytest.approx(8.0, rel=1e-13)
    assert ant_value_direct(PointSet([0.3], [1.1]), 2) == pytest.approx(8.0, rel=1e-13)


def test_antipodal_pair():
    assert abs(ant_value(PointSet([0.4, math.pi - 0.4], [0.2, 0.2 + math.pi]), 1)) < 1e-15


def test_tetrahedron():
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    assert ant_value(PointSet.from_xyz(v), 2) <= 1e-15


@pytest.mark.parametrize("n,t", [(5, 3), (30, 8), (100, 16)])
def test_value_matches_double_sum(n, t):
    pts = uniform(n, seed=n)
    a, b = ant_value(pts, t), ant_value_direct(pts, t)
    assert a == pytest.approx(b, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 8))
def test_rotation_invariance_and_nonnegativity(seed, t):
    pts = random_points(9, seed)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    rot = PointSet.from_xyz(pts.xyz @ q.T)
    assert ant_value(rot, t) == pytest.approx(ant_value(pts, t), abs=1e-12)
    assert ant_value(pts, t) >= -1e-13


def test_ab_closed_forms():
    a, b = ab_coefficients(6)
    from sphdesign.sht import lm_arrays

    l, m = lm_arrays(6)
    ref_a = np.sqrt(l**2 * ((l + 1) ** 2 - m**2) / ((2 * l + 1) * (2 * l + 3)))
    ref_b = np.sqrt(np.maximum((l + 1) ** 2 * (l**2 - m**2), 0) / np.maximum((2 * l - 1) * (2 * l + 1), 1))
    assert np.allclose(a, ref_a, atol=1e-15)
    assert np.allclose(b, ref_b, atol=1e-15)


def test_gradient_zero_at_octahedron():
    octa = octahedron()
    # rotate off the poles so every theta derivative is defined
    q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(3, 3)))
    g = ant_gradient(PointSet.from_xyz(octa.xyz @ q.T), 3)
    assert np.max(np.abs(g)) <= 1e-12


def test_phi_gradient_sums_to_zero():
    g = ant_gradient(random_points(12, 3), 4)
    assert abs(g[12:].sum()) < 1e-12


@pytest.mark.parametrize("seed", range(20))
def test_gradient_and_hessian_against_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 13))
    t = int(rng.integers(1, 6))
    pts = random_points(n, 100 + seed)
    g = ant_gradient(pts, t)
    fd = fd_gradient(pts, t)
    assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(fd), 1e-12)
    H = ant_hessian(pts, t)
    x = pts.as_vector()
    v = rng.normal(size=x.size)
    h = 1e-5
    fd_hv = (ant_gradient(PointSet.from_vector(x + h * v), t) - ant_gradient(PointSet.from_vector(x - h * v), t)) / (2 * h)
    assert np.linalg.norm(H.apply(v) - fd_hv) <= 1e-4 * np.linalg.norm(fd_hv)
    D = H.to_dense()
    assert np.max(np.abs(D - D.T)) <= 1e-12 * max(1.0, np.max(np.abs(D)))


def test_hessian_symmetric_small():
    D = ant_hessian(random_points(8, 7), 3).to_dense()
    assert np.max(np.abs(D - D.T)) < 1e-12


def test_hessian_modes_sum_to_full():
    pts = random_points(7, 2)
    v = np.random.default_rng(1).normal(size=14)
    full = ant_hessian(pts, 3).apply(v)
    parts = ant_hessian(pts, 3, mode="diag").apply(v) + ant_hessian(pts, 3, mode="rank1").apply(v)
    assert np.allclose(full, parts, atol=1e-13)
    with pytest.raises(ValueError):
        ant_hessian(pts, 3, mode="bogus")


def test_hessian_psd_at_icosahedron():
    from sphdesign.design import pole_free_frame

    pts = pole_free_frame(icosahedral(1))
    D = ant_hessian(pts, 5).to_dense()
    eig = np.linalg.eigvalsh(0.5 * (D + D.T))
    assert eig.min() >= -1e-8 * eig.max()
    # the three rotation directions are flat
    assert np.sum(np.abs(eig) < 1e-8 * eig.max()) >= 3


def test_pole_singularity():
    pts = PointSet([0.0, 1.0, 2.0], [0.0, 0.5, 1.0])
    with pytest.raises(PoleSingularityError):
        ant_gradient(pts, 2)
    g = ant_gradient(pts, 2, frozen=default_gauge(3))
    assert g[0] == 0.0


def test_reduced_objective():
    pts = random_points(6, 5)
    from sphdesign.pointsets import fix_gauge

    gauged = fix_gauge(pts)
    x = gauged.as_vector()
    prob = DesignProblem(2, x)
    assert prob.dim == 2 * 6 - 3
    z = prob.restrict(x)
    assert prob.value(z) == pytest.approx(ant_value(gauged, 2), rel=1e-14)
    full = ant_gradient(gauged, 2, frozen=default_gauge(6))
    assert np.array_equal(prob.gradient(z), np.delete(full, list(default_gauge(6))))


def test_bad_gauge():
    with pytest.raises(ValueError):
        DesignProblem(2, np.zeros(6), gauge=(0, 9))

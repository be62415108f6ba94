"""Initial point configurations and the rotation gauge."""
from __future__ import annotations

import numpy as np

from .sht import PointSet

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


class DegenerateGaugeError(ValueError):
    """The first two points are equal or antipodal, so the gauge is undefined."""


def spiral(N: int) -> PointSet:
    """Fibonacci spiral points with ``phi`` reduced to ``[0, 2 pi)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    u = (2.0 * np.arange(1, N + 1) - (N + 1)) / N
    theta = np.arccos(u)
    phi = np.mod(np.pi * (2.0 * np.arange(1, N + 1) - (N + 1)) / GOLDEN, 2 * np.pi)
    return PointSet(theta, phi)


def uniform(N: int, seed: int | None = 0) -> PointSet:
    """Uniform random points from ``numpy.random.default_rng(seed)`` (PCG64).

    Draws ``N`` values for ``cos theta`` first, then ``N`` for ``phi``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    k = rng.random(N)
    s = rng.random(N)
    return PointSet(np.arccos(1.0 - 2.0 * k), 2.0 * np.pi * s)


def _icosahedron():
    g = GOLDEN
    v = np.array([
        [-1, g, 0], [1, g, 0], [-1, -g, 0], [1, -g, 0],
        [0, -1, g], [0, 1, g], [0, -1, -g], [0, 1, -g],
        [g, 0, -1], [g, 0, 1], [-g, 0, -1], [-g, 0, 1],
    ], dtype=float)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    return v / np.linalg.norm(v, axis=1, keepdims=True), faces


def icosahedral_mesh(level: int):
    """Vertices (unit rows) and triangles after ``level - 1`` bisection rounds."""
    if level < 1:
        raise ValueError("level must be >= 1")
    verts, faces = _icosahedron()
    verts = list(verts)
    for _ in range(level - 1):
        mid = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in mid:
                p = verts[a] + verts[b]
                verts.append(p / np.linalg.norm(p))
                mid[key] = len(verts) - 1
            return mid[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = np.array(new_faces)
    return np.array(verts), faces


def icosahedral(level: int) -> PointSet:
    """Subdivided icosahedron vertices; ``N = 4**(level-1) * 10 + 2``."""
    verts, _ = icosahedral_mesh(level)
    return PointSet.from_xyz(verts)


def icosahedral_degree(N: int) -> int:
    """Companion degree ``floor(sqrt(N) - 1)`` used for these point sets."""
    return int(np.floor(np.sqrt(N) - 1))


def octahedron() -> PointSet:
    return PointSet.from_xyz(np.vstack((np.eye(3), -np.eye(3))))


def gauge_rotation(x1, x2) -> np.ndarray:
    """Rotation ``R`` with ``R x1 = e_z`` and ``R x2`` in the half-plane ``phi = 0``."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    ez = x1 / np.linalg.norm(x1)
    perp = x2 - (x2 @ ez) * ez
    nrm = np.linalg.norm(perp)
    if nrm < 1e-12:
        raise DegenerateGaugeError("x1 and x2 are equal or antipodal")
    ex = perp / nrm
    ey = np.cross(ez, ex)
    return np.vstack((ex, ey, ez))


def fix_gauge(points: PointSet, first: int = 0, second: int = 1) -> PointSet:
    """Rotate so ``points[first]`` is the north pole and ``points[second]`` has ``phi = 0``.

    The result keeps the original ordering; gauge angles are then set exactly
    (``theta_first = phi_first = phi_second = 0``).
    """
    if len(points) < 2:
        raise ValueError("fix_gauge needs at least two points")
    xyz = points.xyz
    R = gauge_rotation(xyz[first], xyz[second])
    out = PointSet.from_xyz(xyz @ R.T)
    out.theta[first] = 0.0
    out.phi[first] = 0.0
    out.phi[second] = 0.0
    return PointSet(out.theta, out.phi)


GENERATORS = {
    "spiral": spiral,
    "uniform": uniform,
    "icosahedral": icosahedral,
}

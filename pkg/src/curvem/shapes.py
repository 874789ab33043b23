"""Standard test shapes: polygons, knots, spheres and cubes."""

from __future__ import annotations

import numpy as np

from .manifold import DiscreteManifold, from_components


def _pad(points: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((len(points), n))
    out[:, : points.shape[1]] = points
    return out


def polygon_from_angles(theta, radius: float = 1.0, n: int = 2) -> DiscreteManifold:
    """Polygon inscribed in a circle at the given vertex angles."""
    theta = np.asarray(theta, dtype=float)
    pts = radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return from_components([_pad(pts, n)])


def regular_polygon(N: int, radius: float = 1.0, n: int = 2, phase: float = 0.0) -> DiscreteManifold:
    """Regular N-gon inscribed in the circle of the given radius."""
    return polygon_from_angles(phase + 2 * np.pi * np.arange(N) / N, radius, n)


def parametric_curve(f, N: int, n: int = 3) -> DiscreteManifold:
    """Closed polygon through f(t) at N equally spaced t in [0, 2 pi)."""
    t = 2 * np.pi * np.arange(N) / N
    return from_components([_pad(np.asarray(f(t), dtype=float).T, n)])


def wavy_circle(N: int, amplitude: float = 0.1, waves: int = 3, n: int = 2) -> DiscreteManifold:
    """Curve r(theta) = 1 + amplitude * cos(waves * theta)."""
    def f(t):
        r = 1 + amplitude * np.cos(waves * t)
        return np.stack([r * np.cos(t), r * np.sin(t)])
    return parametric_curve(f, N, n)


def trefoil(N: int, scale: float = 1.0) -> DiscreteManifold:
    """(2,3) torus knot on a torus with radii 2 and 1, scaled."""
    def f(t):
        r = 2 + np.cos(3 * t)
        return scale * np.stack([r * np.cos(2 * t), r * np.sin(2 * t), np.sin(3 * t)])
    return parametric_curve(f, N, 3)


def ellipse(N: int, a: float = 1.0, b: float = 0.6, n: int = 2) -> DiscreteManifold:
    return parametric_curve(lambda t: np.stack([a * np.cos(t), b * np.sin(t)]), N, n)


def icosphere(subdivisions: int = 2, radius: float = 1.0) -> DiscreteManifold:
    """Subdivided icosahedron with vertices on the sphere."""
    g = (1 + 5 ** 0.5) / 2
    v = [(-1, g, 0), (1, g, 0), (-1, -g, 0), (1, -g, 0), (0, -1, g), (0, 1, g),
         (0, -1, -g), (0, 1, -g), (g, 0, -1), (g, 0, 1), (-g, 0, -1), (-g, 0, 1)]
    f = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
         (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
         (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(p, dtype=float) / np.linalg.norm(p) for p in v]
    faces = f
    for _ in range(subdivisions):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                p = verts[a] + verts[b]
                verts.append(p / np.linalg.norm(p))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return DiscreteManifold(radius * np.array(verts), np.array(faces))


def tetrahedron(edge: float = 1.0) -> DiscreteManifold:
    v = np.array([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)], dtype=float)
    v *= edge / (2 * np.sqrt(2))
    f = np.array([(0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)])
    return DiscreteManifold(v, f)


def cube_surface(k: int = 8, edge: float = 2.0) -> DiscreteManifold:
    """Boundary of a cube, each face split into a k-by-k grid of triangle pairs."""
    verts, index, faces = [], {}, []

    def vid(p):
        key = tuple(np.round(p, 12))
        if key not in index:
            index[key] = len(verts)
            verts.append(p)
        return index[key]

    h = edge / 2
    s = np.linspace(-h, h, k + 1)
    for axis in range(3):
        for sign in (-1.0, 1.0):
            u, w = [a for a in range(3) if a != axis]
            for i in range(k):
                for j in range(k):
                    quad = []
                    for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1)):
                        p = np.zeros(3)
                        p[axis] = sign * h
                        p[u], p[w] = s[i + di], s[j + dj]
                        quad.append(vid(p))
                    a, b, c, d = quad
                    # orientation is irrelevant for the unoriented checks used here
                    faces += [(a, b, c), (a, c, d)]
    return DiscreteManifold(np.array(verts), np.array(faces))

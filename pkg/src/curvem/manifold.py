"""
Discrete closed submanifolds: polylines (m=1) and triangle meshes (m=2).

Provides measure weights, tangent planes, quadrature sampling, exact
point-to-cell distances, Hausdorff distance (sum convention) and file I/O.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .geometry import Plane


class ManifoldError(ValueError):
    """Raised for invalid or unparseable manifold data."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def cell_frames(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Edge vectors from the first vertex of each cell, shape (C, m, n)."""
    v = vertices[cells]
    return v[:, 1:, :] - v[:, :1, :]


def cell_measures_from(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    E = cell_frames(vertices, cells)
    G = np.einsum("cin,cjn->cij", E, E)
    k = cells.shape[1] - 1
    return np.sqrt(np.maximum(np.linalg.det(G), 0.0)) / math.factorial(k)


def cell_bases_from(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Orthonormal tangent bases of the cells, shape (C, m, n)."""
    E = cell_frames(vertices, cells)
    q, _ = np.linalg.qr(np.transpose(E, (0, 2, 1)))
    return np.transpose(q, (0, 2, 1))


def top_eigvecs(P: np.ndarray, k: int) -> np.ndarray:
    """Rows spanning the top-k eigenspace of each symmetric matrix in P."""
    _, v = np.linalg.eigh(P)
    return np.transpose(v[..., -k:], (0, 2, 1))


@dataclass(frozen=True, eq=False)
class DiscreteManifold:
    """Closed polyline or closed triangle mesh in R^n.

    Parameters
    ----------
    vertices : np.ndarray
        Vertex coordinates, shape (V, n).
    cells : np.ndarray
        Vertex indices per cell, shape (C, m+1).
    validate : bool
        Check nondegeneracy, closedness and discrete embeddedness.
    """

    vertices: np.ndarray
    cells: np.ndarray
    validate: bool = True

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        c = np.array(self.cells, dtype=np.int64)
        if v.ndim != 2 or c.ndim != 2:
            raise ManifoldError("vertices and cells must be 2-d arrays")
        object.__setattr__(self, "vertices", _readonly(v))
        object.__setattr__(self, "cells", _readonly(c))
        if c.shape[1] not in (2, 3):
            raise ManifoldError("cells must be edges (m=1) or triangles (m=2)")
        if not self.m < self.n <= 8:
            raise ManifoldError("need m < n <= 8, got m={}, n={}".format(self.m, self.n))
        if c.min() < 0 or c.max() >= len(v):
            raise ManifoldError("cell index out of range")
        if self.validate:
            self._check()

    @property
    def m(self) -> int:
        return self.cells.shape[1] - 1

    @property
    def n(self) -> int:
        return self.vertices.shape[1]

    def _check(self):
        meas = self.cell_measures
        bad = np.flatnonzero(meas <= 1e-14 * max(self.diameter, 1e-300) ** self.m)
        if len(bad):
            raise ManifoldError("degenerate cell {} (vertices {})".format(
                bad[0], self.cells[bad[0]].tolist()))
        if self.m == 1:
            deg = np.bincount(self.cells.ravel(), minlength=len(self.vertices))
            bad = np.flatnonzero(deg != 2)
            if len(bad):
                raise ManifoldError("manifold has boundary: vertex {} has {} incident edges"
                                    .format(bad[0], deg[bad[0]]))
        else:
            counts = Counter(self._edge_keys())
            for e, k in counts.items():
                if k != 2:
                    msg = "manifold has boundary" if k == 1 else "non-manifold edge"
                    raise ManifoldError("{}: edge {} has {} incident triangles".format(msg, e, k))
        d = self.min_nonadjacent_distance
        if not d > 0:
            raise ManifoldError("manifold is not embedded: non-adjacent cells touch")

    def _edge_keys(self) -> List[Tuple[int, int]]:
        keys = []
        for tri in self.cells:
            for i, j in ((0, 1), (1, 2), (2, 0)):
                a, b = int(tri[i]), int(tri[j])
                keys.append((min(a, b), max(a, b)))
        return keys

    def with_vertices(self, vertices: np.ndarray, validate: bool = False) -> "DiscreteManifold":
        """Same connectivity with new vertex positions."""
        return DiscreteManifold(vertices, self.cells, validate=validate)

    @cached_property
    def components(self) -> np.ndarray:
        """Connected-component label of every vertex."""
        nv = len(self.vertices)
        rows = np.repeat(self.cells[:, 0], self.m)
        cols = self.cells[:, 1:].ravel()
        A = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(nv, nv))
        _, labels = connected_components(A, directed=False)
        return _readonly(labels)

    @cached_property
    def cell_measures(self) -> np.ndarray:
        return _readonly(cell_measures_from(self.vertices, self.cells))

    @property
    def total_measure(self) -> float:
        return float(self.cell_measures.sum())

    @cached_property
    def cell_bases(self) -> np.ndarray:
        return _readonly(cell_bases_from(self.vertices, self.cells))

    @cached_property
    def vertex_bases(self) -> np.ndarray:
        """Tangent bases at vertices: measure-weighted average of incident cell projectors."""
        P = np.einsum("cin,cim->cnm", self.cell_bases, self.cell_bases)
        acc = np.zeros((len(self.vertices), self.n, self.n))
        w = self.cell_measures
        for j in range(self.m + 1):
            np.add.at(acc, self.cells[:, j], w[:, None, None] * P)
        return _readonly(top_eigvecs(acc, self.m))

    @cached_property
    def vertex_weights(self) -> np.ndarray:
        """Share of the cell measures attributed to each vertex."""
        acc = np.zeros(len(self.vertices))
        for j in range(self.m + 1):
            np.add.at(acc, self.cells[:, j], self.cell_measures / (self.m + 1))
        return _readonly(acc)

    def vertex_tangent(self, i: int) -> Plane:
        return Plane(self.vertex_bases[i])

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        if self.m == 1:
            e = self.vertices[self.cells[:, 1]] - self.vertices[self.cells[:, 0]]
        else:
            keys = np.array(sorted(set(self._edge_keys())))
            e = self.vertices[keys[:, 1]] - self.vertices[keys[:, 0]]
        return _readonly(np.linalg.norm(e, axis=1))

    @property
    def resolution(self) -> float:
        """Mesh resolution: the longest edge."""
        return float(self.edge_lengths.max())

    @cached_property
    def diameter(self) -> float:
        return diameter(self)

    @cached_property
    def min_nonadjacent_distance(self) -> float:
        return min_nonadjacent_distance(self)

    @cached_property
    def _centroid_tree(self) -> cKDTree:
        return cKDTree(self.vertices[self.cells].mean(axis=1))

    @cached_property
    def _cell_radius(self) -> float:
        c = self.vertices[self.cells].mean(axis=1)
        return float(np.linalg.norm(self.vertices[self.cells] - c[:, None, :], axis=2).max())

    def transformed(self, A: np.ndarray, b: np.ndarray) -> "DiscreteManifold":
        """Image under x -> A x + b."""
        return self.with_vertices(self.vertices @ np.asarray(A).T + np.asarray(b))

    def scaled(self, lam: float) -> "DiscreteManifold":
        return self.with_vertices(lam * self.vertices)

    def translated(self, t) -> "DiscreteManifold":
        return self.with_vertices(self.vertices + np.asarray(t, dtype=float))


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Quadrature nodes on a discrete manifold.

    ``cell`` and ``bary`` record where each node sits so that energies can be
    differentiated with respect to vertex positions.
    """

    points: np.ndarray
    weights: np.ndarray
    bases: np.ndarray
    cell: np.ndarray
    bary: np.ndarray

    @property
    def m(self) -> int:
        return self.bases.shape[1]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)

    @property
    def tangents(self) -> List[Plane]:
        return [Plane(b) for b in self.bases]

    @property
    def projectors(self) -> np.ndarray:
        return np.einsum("kin,kim->knm", self.bases, self.bases)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


def _barycentric_nodes(m: int, density: int) -> np.ndarray:
    if m == 1:
        t = (np.arange(density) + 0.5) / density
        return np.stack([1 - t, t], axis=1)
    s = int(round(math.sqrt(density)))
    if s * s != density:
        raise ManifoldError("triangle sampling density must be a perfect square")
    out = []
    for i in range(s):
        for j in range(s - i):
            out.append(((i + 1 / 3) / s, (j + 1 / 3) / s))
            if i + j < s - 1:
                out.append(((i + 2 / 3) / s, (j + 2 / 3) / s))
    uv = np.array(out)
    return np.column_stack([1 - uv.sum(1), uv])


def sample(M: DiscreteManifold, density: int = 1) -> SampleSet:
    """Midpoint-rule quadrature nodes, ``density`` per cell.

    Weights are cell measure divided by nodes per cell; tangents are the cell
    tangent planes. For triangles ``density`` must be a perfect square (the
    centroids of a uniform subdivision).
    """
    if density < 1:
        raise ManifoldError("density must be >= 1")
    B = _barycentric_nodes(M.m, density)
    q = len(B)
    V = M.vertices[M.cells]
    pts = np.einsum("qj,cjn->cqn", B, V).reshape(-1, M.n)
    w = np.repeat(M.cell_measures / q, q)
    bases = np.repeat(M.cell_bases, q, axis=0)
    cell = np.repeat(np.arange(len(M.cells)), q)
    bary = np.tile(B, (len(M.cells), 1))
    return SampleSet(*(_readonly(a) for a in (pts, w, bases, cell, bary)))


def vertex_samples(M: DiscreteManifold) -> SampleSet:
    """Vertices as nodes with vertex weights and averaged tangents."""
    nv = len(M.vertices)
    cell = np.zeros(nv, dtype=np.int64)
    bary = np.zeros((nv, M.m + 1))
    for j in range(M.m + 1):
        cell[M.cells[:, j]] = np.arange(len(M.cells))
    for i in range(nv):
        bary[i, list(M.cells[cell[i]]).index(i)] = 1.0
    return SampleSet(*(_readonly(np.array(a)) for a in
                       (M.vertices, M.vertex_weights, M.vertex_bases, cell, bary)))


def diameter(M: DiscreteManifold) -> float:
    """Maximal pairwise vertex distance (exact for polytopes)."""
    v = M.vertices
    best = 0.0
    for s in range(0, len(v), 1024):
        d = np.einsum("ijn,ijn->ij", v[s:s + 1024, None] - v[None], v[s:s + 1024, None] - v[None])
        best = max(best, float(d.max()))
    return math.sqrt(best)


# ---------------------------------------------------------------- distances

def closest_on_segments(p: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Closest points on segments [a,b] to points p (all broadcast), with parameter."""
    e = b - a
    ee = np.einsum("...n,...n->...", e, e)
    t = np.einsum("...n,...n->...", p - a, e) / np.where(ee > 0, ee, 1.0)
    t = np.clip(t, 0.0, 1.0)
    c = a + t[..., None] * e
    return c, t


def closest_on_triangles(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray):
    """Closest points on triangles (a,b,c) to points p in R^n, with barycentrics."""
    e1, e2 = b - a, c - a
    r = p - a
    g11 = np.einsum("...n,...n->...", e1, e1)
    g12 = np.einsum("...n,...n->...", e1, e2)
    g22 = np.einsum("...n,...n->...", e2, e2)
    r1 = np.einsum("...n,...n->...", r, e1)
    r2 = np.einsum("...n,...n->...", r, e2)
    det = g11 * g22 - g12 * g12
    s = (g22 * r1 - g12 * r2) / det
    t = (g11 * r2 - g12 * r1) / det
    inside = (s >= 0) & (t >= 0) & (s + t <= 1)
    best = a + s[..., None] * e1 + t[..., None] * e2
    bary = np.stack([1 - s - t, s, t], axis=-1)
    bd = np.where(inside, np.linalg.norm(p - best, axis=-1), np.inf)
    for (x, y, ix, iy) in ((a, b, 0, 1), (b, c, 1, 2), (c, a, 2, 0)):
        q, u = closest_on_segments(p, x, y)
        d = np.linalg.norm(p - q, axis=-1)
        better = d < bd
        bd = np.where(better, d, bd)
        best = np.where(better[..., None], q, best)
        nb = np.zeros(u.shape + (3,))
        nb[..., ix] = 1 - u
        nb[..., iy] = u
        bary = np.where(better[..., None], nb, bary)
    return best, bary


def closest_on_cells(M: DiscreteManifold, p: np.ndarray, cell_ids: np.ndarray):
    V = M.vertices[M.cells[cell_ids]]
    if M.m == 1:
        q, t = closest_on_segments(p, V[..., 0, :], V[..., 1, :])
        return q, np.stack([1 - t, t], axis=-1)
    return closest_on_triangles(p, V[..., 0, :], V[..., 1, :], V[..., 2, :])


def closest_points(M: DiscreteManifold, points: np.ndarray, k: int = 16):
    """Exact closest points on M for each query point.

    Returns
    -------
    dist, closest, cell, bary : arrays
        Distances, closest points, cell indices and barycentric coordinates.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    nc = len(M.cells)
    k = min(k, nc)
    tree = M._centroid_tree
    cd, ci = tree.query(p, k=k)
    if k == 1:
        cd, ci = cd[:, None], ci[:, None]
    q, bary = closest_on_cells(M, p[:, None, :], ci)
    d = np.linalg.norm(q - p[:, None, :], axis=2)
    j = d.argmin(axis=1)
    rows = np.arange(len(p))
    dist, best, cell, bb = d[rows, j], q[rows, j], ci[rows, j], bary[rows, j]
    # a closer cell must have its centroid within dist + cell radius
    unsure = np.flatnonzero(dist + M._cell_radius > cd[:, -1]) if k < nc else []
    for i in unsure:
        cand = np.array(tree.query_ball_point(p[i], dist[i] + M._cell_radius + 1e-12))
        if len(cand) == 0:
            continue
        qq, bq = closest_on_cells(M, p[i][None, :], cand)
        dd = np.linalg.norm(qq - p[i], axis=1)
        jj = dd.argmin()
        if dd[jj] < dist[i]:
            dist[i], best[i], cell[i], bb[i] = dd[jj], qq[jj], cand[jj], bq[jj]
    return dist, best, cell, bb


def distance_to(M: DiscreteManifold, points: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to the manifold M."""
    return closest_points(M, points)[0]


def resample_points(M: DiscreteManifold, resolution: float) -> np.ndarray:
    """Points on M with every cell subdivided until its edges are below ``resolution``."""
    s = max(1, int(math.ceil(M.resolution / resolution)))
    if M.m == 1:
        t = np.arange(s) / s
        B = np.stack([1 - t, t], axis=1)
    else:
        B = np.array([(1 - (i + j) / s, i / s, j / s)
                      for i in range(s + 1) for j in range(s + 1 - i)])
    pts = np.einsum("qj,cjn->cqn", B, M.vertices[M.cells]).reshape(-1, M.n)
    return np.unique(pts, axis=0)


def one_sided_distance(A: DiscreteManifold, B: DiscreteManifold,
                       resolution: Optional[float] = None) -> float:
    """``sup_{a in A} dist(a, B)`` with A resampled and exact distances to B's cells."""
    if A.n != B.n:
        raise ManifoldError("manifolds live in different ambient dimensions")
    res = A.resolution / 8 if resolution is None else resolution
    pts = resample_points(A, res)
    out = 0.0
    for s in range(0, len(pts), 4096):
        out = max(out, float(distance_to(B, pts[s:s + 4096]).max()))
    return out


def hausdorff_distance(A: DiscreteManifold, B: DiscreteManifold,
                       resolution: Optional[float] = None, convention: str = "sum") -> float:
    """Hausdorff distance; ``convention='sum'`` adds both one-sided sups.

    The sum convention is used by every isotopy constant in this package; the
    max convention is available as a diagnostic only.
    """
    a = one_sided_distance(A, B, resolution)
    b = one_sided_distance(B, A, resolution)
    if convention == "sum":
        return a + b
    if convention == "max":
        return max(a, b)
    raise ValueError("convention must be 'sum' or 'max'")


# ------------------------------------------------------------- embeddedness

def _segment_segment_distance(p0, p1, q0, q1):
    d1, d2, r = p1 - p0, q1 - q0, p0 - q0
    a = np.einsum("...n,...n->...", d1, d1)
    e = np.einsum("...n,...n->...", d2, d2)
    f = np.einsum("...n,...n->...", d2, r)
    c = np.einsum("...n,...n->...", d1, r)
    b = np.einsum("...n,...n->...", d1, d2)
    den = a * e - b * b
    s = np.where(den > 1e-300, np.clip((b * f - c * e) / np.where(den > 1e-300, den, 1), 0, 1), 0.0)
    t = (b * s + f) / e
    s = np.where(t < 0, np.clip(-c / a, 0, 1), np.where(t > 1, np.clip((b - c) / a, 0, 1), s))
    t = np.clip(t, 0, 1)
    return np.linalg.norm(p0 + s[..., None] * d1 - q0 - t[..., None] * d2, axis=-1)


def _segment_pierces_triangle(p0, p1, a, b, c):
    # Moller-Trumbore in R^3 with the segment parameter in [0,1]
    d = p1 - p0
    e1, e2 = b - a, c - a
    h = np.cross(d, e2)
    det = np.einsum("...n,...n->...", e1, h)
    ok = np.abs(det) > 1e-300
    inv = 1.0 / np.where(ok, det, 1.0)
    s = p0 - a
    u = inv * np.einsum("...n,...n->...", s, h)
    q = np.cross(s, e1)
    v = inv * np.einsum("...n,...n->...", d, q)
    t = inv * np.einsum("...n,...n->...", e2, q)
    return ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t >= 0) & (t <= 1)


def min_nonadjacent_distance(M: DiscreteManifold) -> float:
    """Minimal distance between cells that share no vertex.

    Exact for polylines. For meshes the distance is the minimum over
    vertex-triangle and edge-edge pairs, with a piercing test in R^3.
    """
    cells = M.cells
    V = M.vertices
    cent = V[cells].mean(axis=1)
    rad = np.linalg.norm(V[cells] - cent[:, None, :], axis=2).max()
    tree = cKDTree(cent)
    diam_cells = 2 * rad
    best = np.inf
    # grow the search radius until some non-adjacent pair is found
    r = 2 * diam_cells
    while True:
        pairs = tree.query_pairs(r, output_type="ndarray")
        if len(pairs):
            share = (cells[pairs[:, 0], :, None] == cells[pairs[:, 1], None, :]).any(axis=(1, 2))
            pairs = pairs[~share]
        if len(pairs) or r > 4 * max(M.diameter, 1e-300):
            break
        r *= 2
    if len(pairs) == 0:
        return float(M.diameter)
    ci, cj = cells[pairs[:, 0]], cells[pairs[:, 1]]
    if M.m == 1:
        d = _segment_segment_distance(V[ci[:, 0]], V[ci[:, 1]], V[cj[:, 0]], V[cj[:, 1]])
        best = float(d.min())
    else:
        best = np.inf
        for (A, B) in ((ci, cj), (cj, ci)):
            for k in range(3):
                _, bq = closest_on_triangles(V[A[:, k]], V[B[:, 0]], V[B[:, 1]], V[B[:, 2]])
                q = np.einsum("pj,pjn->pn", bq, V[B])
                best = min(best, float(np.linalg.norm(q - V[A[:, k]], axis=1).min()))
        for i0, i1 in ((0, 1), (1, 2), (2, 0)):
            for j0, j1 in ((0, 1), (1, 2), (2, 0)):
                d = _segment_segment_distance(V[ci[:, i0]], V[ci[:, i1]], V[cj[:, j0]], V[cj[:, j1]])
                best = min(best, float(d.min()))
        if M.n == 3:
            for (A, B) in ((ci, cj), (cj, ci)):
                for i0, i1 in ((0, 1), (1, 2), (2, 0)):
                    hit = _segment_pierces_triangle(V[A[:, i0]], V[A[:, i1]], V[B[:, 0]], V[B[:, 1]], V[B[:, 2]])
                    if hit.any():
                        return 0.0
    # pairs beyond the search radius are at least r - diam_cells apart
    return min(best, r - diam_cells)


# ---------------------------------------------------------------------- I/O

def from_components(components, closed: bool = True, validate: bool = True) -> DiscreteManifold:
    """Closed polyline(s) from lists of vertices in loop order."""
    if not closed:
        raise ManifoldError("manifold has boundary: open curves are not supported")
    verts, cells, off = [], [], 0
    for comp in components:
        c = np.asarray(comp, dtype=float)
        if c.ndim != 2 or len(c) < 3:
            raise ManifoldError("each component needs at least 3 vertices")
        verts.append(c)
        k = len(c)
        idx = np.arange(k) + off
        cells.append(np.stack([idx, np.roll(idx, -1)], axis=1))
        off += k
    return DiscreteManifold(np.vstack(verts), np.vstack(cells), validate=validate)


def _load_curve_json(path: Path) -> DiscreteManifold:
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifoldError("{}: line {}: {}".format(path, exc.lineno, exc.msg)) from exc
    for key in ("m", "n", "components"):
        if key not in data:
            raise ManifoldError("{}: missing key '{}'".format(path, key))
    if data["m"] != 1:
        raise ManifoldError("{}: curve-json requires m = 1".format(path))
    M = from_components(data["components"], closed=data.get("closed", True))
    if M.n != data["n"]:
        raise ManifoldError("{}: declared n={} but points have {} coordinates".format(
            path, data["n"], M.n))
    return M


def _load_obj(path: Path) -> DiscreteManifold:
    verts, faces = [], []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        toks = line.split()
        if not toks or toks[0].startswith("#"):
            continue
        try:
            if toks[0] == "v":
                verts.append([float(x) for x in toks[1:]])
            elif toks[0] == "f":
                idx = [int(t.partition("/")[0]) for t in toks[1:]]
                if len(idx) != 3:
                    raise ManifoldError("{}: line {}: only triangles are supported".format(path, lineno))
                faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
        except ValueError as exc:
            raise ManifoldError("{}: line {}: {}".format(path, lineno, exc)) from exc
    if not verts or not faces:
        raise ManifoldError("{}: no vertices or faces".format(path))
    if len({len(v) for v in verts}) != 1:
        raise ManifoldError("{}: inconsistent vertex dimensions".format(path))
    return DiscreteManifold(np.array(verts), np.array(faces))


def load(path, format: Optional[str] = None) -> DiscreteManifold:
    """Read a manifold from ``curve-json`` or ``obj``; format inferred from suffix."""
    path = Path(path)
    fmt = format or ("obj" if path.suffix.lower() == ".obj" else "curve-json")
    if fmt == "curve-json":
        return _load_curve_json(path)
    if fmt == "obj":
        return _load_obj(path)
    raise ManifoldError("unknown format '{}'".format(fmt))


def _loops(M: DiscreteManifold) -> List[List[int]]:
    nxt = dict((int(a), int(b)) for a, b in M.cells)
    seen, loops = set(), []
    for start in range(len(M.vertices)):
        if start in seen:
            continue
        loop, v = [], start
        while v not in seen:
            seen.add(v)
            loop.append(v)
            v = nxt[v]
        loops.append(loop)
    return loops


def dumps(M: DiscreteManifold, format: str = "curve-json") -> str:
    if format == "curve-json":
        if M.m != 1:
            raise ManifoldError("curve-json requires m = 1")
        comps = [[[float(x) for x in M.vertices[i]] for i in loop] for loop in _loops(M)]
        return json.dumps({"m": 1, "n": M.n, "closed": True, "components": comps})
    if format == "obj":
        lines = ["v " + " ".join(repr(float(x)) for x in v) for v in M.vertices]
        lines += ["f " + " ".join(str(int(i) + 1) for i in f) for f in M.cells]
        return "\n".join(lines) + "\n"
    raise ManifoldError("unknown format '{}'".format(format))


def save(M: DiscreteManifold, path, format: Optional[str] = None):
    path = Path(path)
    fmt = format or ("obj" if path.suffix.lower() == ".obj" else "curve-json")
    path.write_text(dumps(M, fmt))

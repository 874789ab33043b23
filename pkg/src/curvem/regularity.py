"""
Graph-patch regularity classes.

A manifold is in the class C^{1,alpha}(R, L, d) when it sits in the closed
d-ball and, near every point x, it is the graph over T_x of a function with
f(0) = 0, Df(0) = 0, lip(f) <= 1 and an alpha-Hoelder gradient with
constant L. The checks here are carried out on vertex samples.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from .energy import EnergySpec
from .geometry import GeometryError, Plane, angle
from .manifold import DiscreteManifold, hausdorff_distance


class RegularityError(ValueError):
    """Raised for invalid inputs to regularity checks."""


def rl_from_energy(E: float, spec: EnergySpec, c1: float = 1.0, c2: float = 1.0) -> Tuple[float, float, float]:
    """Patch radius, Hoelder constant and exponent implied by an energy bound.

    Returns ``R = c1 E^(-1/(p-p0))``, ``L = c2 E^(1/p)`` and ``alpha = 1 - p0/p``.
    """
    if not spec.supercritical:
        raise RegularityError("subcritical exponent: need p > p0 = {}".format(spec.p0))
    if not (E > 0 and c1 > 0 and c2 > 0):
        raise RegularityError("E, c1 and c2 must be positive")
    p, p0 = spec.p, spec.p0
    return c1 * E ** (-1.0 / (p - p0)), c2 * E ** (1.0 / p), 1.0 - p0 / p


def c_ang(L: float, A: float) -> float:
    """Constant in the tangent-plane proximity estimate."""
    return L * (1 + (4 * A) ** 2) + 2 * A


@dataclass
class PatchFailure:
    """A vertex where the manifold is not a graph over its tangent plane."""

    center: int
    reason: str
    witness: Tuple[int, int]

    def __bool__(self):
        return False


@dataclass
class GraphPatch:
    """Manifold samples near a point written as a graph over a plane.

    ``xi`` are plane coordinates, ``heights`` coordinates in the orthogonal
    complement, ``gradients`` the estimated Df at each sample.
    """

    center: np.ndarray
    plane: Plane
    radius: float
    points: np.ndarray
    xi: np.ndarray
    heights: np.ndarray
    gradients: np.ndarray
    alpha: float
    lip_estimate: float
    holder_L: float
    method: str = "tangent"
    tangent_bases: Optional[np.ndarray] = None
    holder_radius: Optional[float] = None
    indices: Optional[np.ndarray] = None
    worst_pair: Optional[Tuple[int, int]] = None

    def ungraph(self) -> np.ndarray:
        """Points reconstructed from (xi, height)."""
        N = self.plane.complement().basis
        return self.center + self.xi @ self.plane.basis + self.heights @ N

    def origin_index(self) -> int:
        return int(np.argmin(np.linalg.norm(self.xi, axis=1)))


def _slopes_from_tangents(T: Plane, Nb: np.ndarray, bases: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    A = np.einsum("an,kbn->kab", T.basis, bases)
    H = np.einsum("an,kbn->kab", Nb, bases)
    smin = np.linalg.svd(A, compute_uv=False).min(axis=1)
    ok = smin > 1e-8
    D = np.full(H.shape, np.inf)
    if ok.any():
        D[ok] = np.einsum("kab,kbc->kac", H[ok], np.linalg.inv(A[ok]))
    return D, ok


def _slopes_lstsq(xi: np.ndarray, h: np.ndarray, k: int) -> np.ndarray:
    m = xi.shape[1]
    k = min(k, len(xi))
    tree = cKDTree(xi)
    _, nb = tree.query(xi, k=k)
    nb = nb.reshape(len(xi), k)
    out = np.empty((len(xi), h.shape[1], m))
    for i in range(len(xi)):
        X = np.column_stack([np.ones(k), xi[nb[i]] - xi[i]])
        coef, *_ = np.linalg.lstsq(X, h[nb[i]], rcond=None)
        out[i] = coef[1:].T
    return out


def _pair_quotients(xi, heights, grads, alpha, mask=None):
    dxi = np.linalg.norm(xi[:, None] - xi[None], axis=2)
    dh = np.linalg.norm(heights[:, None] - heights[None], axis=2)
    dg = np.linalg.norm(grads[:, None] - grads[None], ord=2, axis=(-2, -1))
    np.fill_diagonal(dxi, np.inf)
    # coincident projections give infinite quotients, which callers treat as graph failures
    with np.errstate(divide="ignore", invalid="ignore"):
        lipq = dh / dxi
        holq = dg / dxi ** alpha
    if mask is not None:
        holq = np.where(mask[:, None] & mask[None, :], holq, 0.0)
    return lipq, holq, dxi, dh


def build_patch(center, plane: Plane, points: np.ndarray, radius: float, alpha: float,
                tangent_bases: Optional[np.ndarray] = None, method: str = "tangent",
                k: Optional[int] = None, holder_radius: Optional[float] = None,
                indices: Optional[np.ndarray] = None) -> GraphPatch:
    """Graph coordinates, gradients and seminorm estimates for a point set over a plane."""
    center = np.asarray(center, dtype=float)
    Nb = plane.complement().basis
    rel = points - center
    xi = rel @ plane.basis.T
    h = rel @ Nb.T
    if method == "tangent":
        if tangent_bases is None:
            raise RegularityError("tangent gradients need per-sample tangent bases")
        grads, ok = _slopes_from_tangents(plane, Nb, tangent_bases)
        if not ok.all():
            grads[~ok] = np.inf
    elif method == "lstsq":
        grads = _slopes_lstsq(xi, h, k or plane.dim + 3)
    else:
        raise RegularityError("gradient method must be 'tangent' or 'lstsq'")
    mask = None
    if holder_radius is not None:
        mask = np.linalg.norm(xi, axis=1) < holder_radius
    with np.errstate(invalid="ignore"):
        lipq, holq, _, _ = _pair_quotients(xi, h, grads, alpha, mask)
    holq = np.nan_to_num(holq, nan=np.inf)
    lip = float(lipq.max()) if len(xi) > 1 else 0.0
    hol = float(holq.max()) if len(xi) > 1 else 0.0
    worst = tuple(int(i) for i in np.unravel_index(np.argmax(holq), holq.shape)) if len(xi) > 1 else None
    return GraphPatch(center, plane, radius, points, xi, h, grads, alpha, lip, hol, method,
                      tangent_bases, holder_radius, indices, worst)


def fit_patch(M: DiscreteManifold, x: int, R: float, alpha: float = 1.0, method: str = "tangent",
              k: Optional[int] = None, plane: Optional[Plane] = None) -> Union[GraphPatch, PatchFailure]:
    """Write M near vertex x as a graph over its tangent plane.

    Samples are the vertices inside the open ball B(x, R). Fails when two
    samples are closer in plane coordinates than their height difference at
    scale below the mesh resolution (two sheets over the same plane region),
    or when some sample tangent is perpendicular to the plane.
    """
    if not R > 0:
        raise RegularityError("R must be positive")
    c = M.vertices[x]
    idx = np.flatnonzero(np.linalg.norm(M.vertices - c, axis=1) < R)
    T = plane if plane is not None else M.vertex_tangent(x)
    patch = build_patch(c, T, M.vertices[idx], R, alpha, M.vertex_bases[idx], method, k, indices=idx)
    h = M.resolution
    tree = cKDTree(patch.xi)
    pairs = tree.query_pairs(h, output_type="ndarray")
    if len(pairs):
        dxi = np.linalg.norm(patch.xi[pairs[:, 0]] - patch.xi[pairs[:, 1]], axis=1)
        dh = np.linalg.norm(patch.heights[pairs[:, 0]] - patch.heights[pairs[:, 1]], axis=1)
        bad = np.flatnonzero(dh > dxi + 1e-12 * max(h, 1.0))
        if len(bad):
            i, j = pairs[bad[np.argmax(dh[bad] - dxi[bad])]]
            return PatchFailure(int(x), "not a graph: two sheets over the tangent plane",
                                (int(idx[i]), int(idx[j])))
    if not np.all(np.isfinite(patch.gradients)):
        i = int(np.flatnonzero(~np.isfinite(patch.gradients).all(axis=(1, 2)))[0])
        return PatchFailure(int(x), "not a graph: tangent plane perpendicular", (int(x), int(idx[i])))
    return patch


@dataclass
class VertexVerdict:
    vertex: int
    passed: bool
    reason: str = ""
    lip: float = 0.0
    holder: float = 0.0
    witness: Optional[Tuple[int, int]] = None


@dataclass
class RegularityCertificate:
    R: float
    L: float
    d: float
    alpha: float
    verdict: bool
    reason: str
    per_vertex: List[VertexVerdict] = field(default_factory=list)
    enclosing_radius: float = 0.0
    method: str = "tangent"
    slack: float = 0.0
    max_lip: float = 0.0
    max_holder: float = 0.0

    def to_dict(self, vertices: bool = False) -> dict:
        d = asdict(self)
        if not vertices:
            d["per_vertex"] = [v for v in d["per_vertex"] if not v["passed"]][:10]
        return d


def enclosing_radius(M: DiscreteManifold) -> Tuple[float, np.ndarray]:
    """Radius of a ball around a center of M (centroid or box center) containing M."""
    v = M.vertices
    best = (np.inf, None)
    for c in (v.mean(axis=0), 0.5 * (v.min(axis=0) + v.max(axis=0))):
        r = float(np.linalg.norm(v - c, axis=1).max())
        if r < best[0]:
            best = (r, c)
    return best


def verify_class(M: DiscreteManifold, R: float, L: float, d: float, alpha: float,
                 method: str = "tangent", slack: Optional[float] = None,
                 lip_tol: float = 1e-9) -> RegularityCertificate:
    """Check the diameter bound, graph patches and Hoelder bending at every vertex.

    ``slack`` is an absolute allowance on Hoelder quotients; it defaults to
    1e-9 for exact tangent gradients and ``L * resolution**alpha`` for
    least-squares gradients.
    """
    if not (R > 0 and L > 0 and d > 0 and 0 < alpha <= 1):
        raise RegularityError("need R, L, d > 0 and alpha in (0, 1]")
    if slack is None:
        slack = 1e-9 if method == "tangent" else L * M.resolution ** alpha
    rad, _ = enclosing_radius(M)
    cert = RegularityCertificate(R, L, d, alpha, True, "", [], rad, method, slack)
    if rad > d * (1 + 1e-12):
        cert.verdict, cert.reason = False, "diameter"
        return cert
    reasons = []
    for x in range(len(M.vertices)):
        p = fit_patch(M, x, R, alpha, method)
        if isinstance(p, PatchFailure):
            cert.per_vertex.append(VertexVerdict(x, False, p.reason, witness=p.witness))
            reasons.append("graph")
            continue
        v = VertexVerdict(x, True, "", p.lip_estimate, p.holder_L)
        if p.lip_estimate > 1 + lip_tol:
            v.passed, v.reason = False, "lipschitz"
        elif p.holder_L > L + slack:
            v.passed, v.reason = False, "holder"
            if p.worst_pair is not None:
                v.witness = tuple(int(p.indices[i]) for i in p.worst_pair)
        cert.max_lip = max(cert.max_lip, p.lip_estimate)
        cert.max_holder = max(cert.max_holder, p.holder_L)
        if not v.passed:
            reasons.append(v.reason)
        cert.per_vertex.append(v)
    if reasons:
        cert.verdict = False
        cert.reason = max(set(reasons), key=reasons.count)
    return cert


def tilt_graph(patch: GraphPatch, U: Plane) -> GraphPatch:
    """Re-graph the patch's point set over a nearby plane U.

    The Hoelder estimate is restricted to the shrunken radius
    ``radius / (1 + 3 theta)``.
    """
    theta = angle(U, patch.plane)
    if theta >= 0.01:
        raise RegularityError("tilt angle too large: {} >= 1/100".format(theta))
    r = patch.radius / (1 + 3 * theta)
    return build_patch(patch.center, U, patch.points, r, patch.alpha, patch.tangent_bases,
                       patch.method, holder_radius=r, indices=patch.indices)


def tilt_bounds(theta: float, L: float, alpha: float) -> dict:
    """Bounds satisfied by a patch tilted by angle theta."""
    return {
        "lip": (1 + 2 * theta) / (1 - 2 * theta),
        "holder": L * (1 + 12 * theta) * (1 + 3 * theta) ** alpha / (1 - 4 * theta),
        "dg0_sq": theta ** 2 / (1 - theta ** 2),
    }


@dataclass
class ProximityResult:
    angle: float
    bound: float
    ok: bool
    C_ang: float
    d_h: float


def check_tangent_proximity(S1: DiscreteManifold, S2: DiscreteManifold, x: int, y: int, A: float,
                            cert1: RegularityCertificate, cert2: RegularityCertificate,
                            d_h: Optional[float] = None) -> ProximityResult:
    """Compare tangent planes at nearby vertices of two close manifolds of the same class."""
    if A < 1:
        raise RegularityError("A must be >= 1")
    if not (cert1.verdict and cert2.verdict):
        raise RegularityError("both manifolds need a passing regularity certificate")
    if (cert1.R, cert1.L, cert1.alpha) != (cert2.R, cert2.L, cert2.alpha):
        raise RegularityError("certificates are for different classes")
    R, L, alpha = cert1.R, cert1.L, cert1.alpha
    dh = hausdorff_distance(S1, S2) if d_h is None else d_h
    limits = {"2^-6 A^-2 R^2": 2.0 ** -6 / A ** 2 * R ** 2, "L^(-2/alpha)": L ** (-2 / alpha), "1": 1.0}
    for name, val in limits.items():
        if not dh < val:
            raise RegularityError("Hausdorff distance {} violates threshold {} = {}".format(dh, name, val))
    if np.linalg.norm(S1.vertices[x] - S2.vertices[y]) > A * dh * (1 + 1e-12):
        raise RegularityError("|x - y| exceeds A * d_H")
    a = angle(S1.vertex_tangent(x), S2.vertex_tangent(y))
    C = c_ang(L, A)
    bound = C * dh ** (alpha / 2)
    return ProximityResult(a, bound, a <= bound, C, dh)

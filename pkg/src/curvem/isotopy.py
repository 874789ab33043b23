"""
Normal fields, tubular neighbourhoods and isotopy certificates.

An eps-normal field assigns to every point of a manifold a rank-(n-m)
projector within eps of the true normal projector. Along such a field the
map Psi(x, v) = x + v is a bilipschitz tubular chart, and a second manifold
close enough in Hausdorff distance projects onto the first diffeomorphically.
This yields an explicit threshold rho_G below which two members of a
regularity class are ambient isotopic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .energy import EnergySpec
from .manifold import DiscreteManifold, closest_points, distance_to, hausdorff_distance
from .regularity import RegularityCertificate, c_ang, rl_from_energy, verify_class

EPS_CERT = 1.0 / 200


class IsotopyError(ValueError):
    """Raised when a construction is used outside its hypotheses."""


def retract(P: np.ndarray, rank: int) -> np.ndarray:
    """Nearest rank-``rank`` orthogonal projector to each symmetric matrix (spectral rounding)."""
    S = 0.5 * (P + np.swapaxes(P, -1, -2))
    _, v = np.linalg.eigh(S)
    top = v[..., -rank:]
    return top @ np.swapaxes(top, -1, -2)


def _sym_opnorm(D: np.ndarray) -> np.ndarray:
    return np.abs(np.linalg.eigvalsh(D)).max(axis=-1)


def _bump(t: np.ndarray) -> np.ndarray:
    """Smooth radial bump: 1 on [0, 1/2], 0 from 1 on."""
    s = np.clip(2 * t - 1, 0, 1)
    a = np.where(s < 1, np.exp(-1 / np.maximum(1 - s, 1e-300)), 0.0)
    b = np.where(s > 0, np.exp(-1 / np.maximum(s, 1e-300)), 0.0)
    return np.where(s <= 0, 1.0, a / (a + b))


def _quotient_max(X: np.ndarray, P: np.ndarray, alpha: float = 1.0, block: int = 256) -> float:
    """max ||P_i - P_j|| / |x_i - x_j|^alpha over all pairs."""
    best = 0.0
    for s in range(0, len(X), block):
        d = np.linalg.norm(X[s:s + block, None] - X[None], axis=2)
        D = _sym_opnorm(P[s:s + block, None] - P[None])
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(d > 0, D / d ** alpha, 0.0)
        best = max(best, float(q.max()))
    return best


def cell_neighbors(M: DiscreteManifold) -> np.ndarray:
    """Cell across the facet opposite each local vertex, shape (C, m+1)."""
    C = M.cells
    nb = np.full(C.shape, -1, dtype=np.int64)
    facets = {}
    for c, cell in enumerate(C):
        for j in range(M.m + 1):
            key = tuple(sorted(int(v) for k, v in enumerate(cell) if k != j))
            facets.setdefault(key, []).append((c, j))
    for owners in facets.values():
        if len(owners) == 2:
            (c1, j1), (c2, j2) = owners
            nb[c1, j1], nb[c2, j2] = c2, c1
    return nb


@dataclass(frozen=True)
class WorstCaseConstants:
    """Worst-case mollification constants computed from (R, L, alpha)."""

    C0: float
    C1: float
    C2: float
    delta0: float
    radius: float
    lip_bound: float
    rG_limited: bool


def worst_case_constants(R: float, L: float, alpha: float, n: int, epsilon: float,
                         r_G: float = 0.5, C_m: float = 1.0) -> WorstCaseConstants:
    """Worst-case mollification radius and Lipschitz bound for an eps-normal field."""
    C0 = max(2.0 / min(1.0 / (L * math.sqrt(2)), R ** alpha), C_m * L)
    C1 = n * C0
    C2 = 24 * (1 + 2 * C1)
    delta0 = min(r_G, (2.0 / 3.0) ** alpha * C2, 1.0)
    radius = (delta0 / (2 * C2)) ** (1 / alpha) * epsilon ** (1 / alpha)
    lip = (2 * C2) ** (1 + 1 / alpha) * (delta0 * epsilon) ** (-1 / alpha)
    return WorstCaseConstants(C0, C1, C2, delta0, radius, lip, delta0 == r_G)


@dataclass(eq=False)
class NormalField:
    """Projector-valued eps-normal field stored at the vertices of a manifold.

    Between vertices the field is the retraction of the barycentric
    interpolation of vertex projectors.
    """

    manifold: DiscreteManifold
    projectors: np.ndarray
    epsilon: float
    radius: float
    holder_measured: float
    lip_measured: float
    max_deviation: float
    R: float
    L: float
    alpha: float
    worst: WorstCaseConstants

    @property
    def lip_bound(self) -> float:
        return self.worst.lip_bound

    @property
    def rank(self) -> int:
        return self.manifold.n - self.manifold.m

    def at(self, cell: np.ndarray, bary: np.ndarray) -> np.ndarray:
        """Field value at points given by cell index and barycentric coordinates."""
        P = np.einsum("kj,kjab->kab", bary, self.projectors[self.manifold.cells[cell]])
        return retract(P, self.rank)

    @property
    def delta_tub(self) -> float:
        return delta_tub(self.R, self.L, self.alpha, self.epsilon, self.lip_measured)

    def foot(self, q: np.ndarray, max_rounds: int = 12, tol: float = 1e-13):
        """Solve q = a + v with a on the manifold and v in the image of the field at a.

        Returns
        -------
        a, v, cell, bary, ok : arrays
            ``ok`` is False where no solution was found in the searched cells.
        """
        M = self.manifold
        m = M.m
        q = np.atleast_2d(np.asarray(q, dtype=float))
        _, _, cell, bary = closest_points(M, q)
        cell = cell.copy()
        s = bary[:, 1:].copy()
        ok = np.zeros(len(q), bool)
        nbrs = _neighbors(M)
        for _ in range(max_rounds):
            todo = np.flatnonzero(~ok)
            if len(todo) == 0:
                break
            s[todo] = self._newton(q[todo], cell[todo], s[todo], tol)
            b = np.column_stack([1 - s[todo].sum(1), s[todo]])
            inside = (b >= -1e-9).all(axis=1)
            ok[todo[inside]] = True
            out = todo[~inside]
            for i in out:
                bi = np.column_stack([1 - s[i:i + 1].sum(1), s[i:i + 1]])[0]
                j = int(np.argmin(bi))
                new = nbrs[cell[i], j]
                if new < 0:
                    continue
                cell[i] = new
                s[i] = 1.0 / (m + 1)
        b = np.column_stack([1 - s.sum(1), s])
        b = np.clip(b, 0, None)
        b /= b.sum(1, keepdims=True)
        a = np.einsum("kj,kjn->kn", b, M.vertices[M.cells[cell]])
        v = q - a
        P = self.at(cell, b)
        resid = np.linalg.norm(v - np.einsum("kab,kb->ka", P, v), axis=1)
        ok &= resid <= 1e-8 * np.maximum(1.0, np.linalg.norm(v, axis=1))
        return a, v, cell, b, ok

    def _residual(self, q, cell, s):
        M = self.manifold
        b = np.column_stack([1 - s.sum(1), s])
        V = M.vertices[M.cells[cell]]
        a = np.einsum("kj,kjn->kn", b, V)
        P = self.at(cell, b)
        r = q - a
        t = r - np.einsum("kab,kb->ka", P, r)
        E = V[:, 1:] - V[:, :1]
        return np.einsum("kin,kn->ki", E, t)

    def _newton(self, q, cell, s, tol, iters: int = 30):
        m = s.shape[1]
        s = s.copy()
        for _ in range(iters):
            F = self._residual(q, cell, s)
            if np.abs(F).max() <= tol:
                break
            h = 1e-7
            J = np.empty((len(s), m, m))
            for k in range(m):
                e = np.zeros(m)
                e[k] = h
                J[:, :, k] = (self._residual(q, cell, s + e) - F) / h
            step = np.linalg.solve(J, F[..., None])[..., 0]
            step = np.clip(step, -0.5, 0.5)
            s = s - step
            s = np.clip(s, -0.5, 1.5)
            if np.abs(step).max() < 1e-15:
                break
        return s


def _neighbors(M: DiscreteManifold) -> np.ndarray:
    key = "_cell_neighbors"
    if key not in M.__dict__:
        M.__dict__[key] = cell_neighbors(M)
    return M.__dict__[key]


def _local_quadrature(M: DiscreteManifold, x: int, r: float, grid: int = 24):
    """Points, weights and barycentrics of incident cells within B(x_vertex, r)."""
    cells = np.flatnonzero((M.cells == x).any(axis=1))
    pts, wts, cid, bar = [], [], [], []
    for c in cells:
        loc = list(M.cells[c]).index(x)
        others = [k for k in range(M.m + 1) if k != loc]
        V = M.vertices[M.cells[c]]
        E = V[others] - V[loc]
        lens = np.linalg.norm(E, axis=1)
        umax = np.minimum(1.0, r / lens)
        g = (np.arange(grid) + 0.5) / grid
        if M.m == 1:
            U = (g * umax[0])[:, None]
            jac = lens[0] * umax[0] / grid
        else:
            U = np.array([(a * umax[0], b * umax[1]) for a in g for b in g])
            U = U[U.sum(1) <= 1]
            jac = 2 * M.cell_measures[c] * umax[0] * umax[1] / grid ** 2
        P = V[loc] + U @ E
        keep = np.linalg.norm(P - V[loc], axis=1) < r
        B = np.zeros((len(U), M.m + 1))
        B[:, loc] = 1 - U.sum(1)
        B[:, others] = U
        pts.append(P[keep])
        wts.append(np.full(keep.sum(), jac))
        cid.append(np.full(keep.sum(), c))
        bar.append(B[keep])
    return np.vstack(pts), np.concatenate(wts), np.concatenate(cid), np.vstack(bar)


def build_normal_field(M: DiscreteManifold, cert: RegularityCertificate, epsilon: float,
                       r_G: float = 0.5, C_m: float = 1.0, radius: Optional[float] = None) -> NormalField:
    """Mollify the vertex normal projectors and retract onto the Grassmannian.

    The mollification radius defaults to ``(eps / (2 H))^(1/alpha)`` with H the
    measured alpha-Hoelder constant of the vertex normal projectors, so that the
    averaged field moves by at most eps/2 before retraction (which at most
    doubles distances). The worst-case radius and Lipschitz bound computed from
    (R, L, alpha) are reported alongside.
    """
    if not 0 < epsilon < 0.01:
        raise IsotopyError("epsilon must be in (0, 1/100)")
    if not cert.verdict:
        raise IsotopyError("regularity certificate did not pass")
    n, m = M.n, M.m
    I = np.eye(n)
    Phi0 = I - np.einsum("kin,kim->knm", M.vertex_bases, M.vertex_bases)
    alpha = cert.alpha
    H = _quotient_max(M.vertices, Phi0, alpha)
    worst = worst_case_constants(cert.R, cert.L, alpha, n, epsilon, r_G, C_m)
    if radius is None:
        radius = (epsilon / (2 * H)) ** (1 / alpha) if H > 0 else M.resolution
    if radius < 1e-6 * M.resolution:
        raise IsotopyError("mollification radius {:.3g} is below mesh resolution; refine mesh".format(radius))
    local = radius <= 0.5 * M.edge_lengths.min()
    if local:
        acc = np.empty_like(Phi0)
        for x in range(len(M.vertices)):
            P, w, cid, B = _local_quadrature(M, x, radius)
            phi = _bump(np.linalg.norm(P - M.vertices[x], axis=1) / radius) * w
            vals = np.einsum("kj,kjab->kab", B, Phi0[M.cells[cid]])
            acc[x] = np.einsum("k,kab->ab", phi, vals) / phi.sum()
    else:
        acc = _global_mollify(M, Phi0, radius)
    Phi = retract(acc, n - m)
    dev = float(_sym_opnorm(Phi - Phi0).max())
    lip = _quotient_max(M.vertices, Phi, 1.0)
    return NormalField(M, Phi, epsilon, radius, H, lip, dev, cert.R, cert.L, alpha, worst)


def _global_mollify(M: DiscreteManifold, Phi0: np.ndarray, r: float, limit: int = 2_000_000):
    s = max(1, int(math.ceil(4 * M.resolution / r)))
    if M.m == 1:
        t = (np.arange(s) + 0.5) / s
        B = np.stack([1 - t, t], axis=1)
    else:
        B = np.array([(1 - (i + j + 2 / 3) / s, (i + 1 / 3) / s, (j + 1 / 3) / s)
                      for i in range(s) for j in range(s - i)])
    if len(B) * len(M.cells) > limit:
        raise IsotopyError("mollification radius {:.3g} needs too many quadrature points; refine mesh".format(r))
    P = np.einsum("qj,cjn->cqn", B, M.vertices[M.cells]).reshape(-1, M.n)
    w = np.repeat(M.cell_measures / len(B), len(B))
    vals = np.einsum("qj,cjab->cqab", B, Phi0[M.cells]).reshape(-1, M.n, M.n)
    from scipy.spatial import cKDTree
    tree = cKDTree(P)
    out = np.empty_like(Phi0)
    for x, nb in enumerate(tree.query_ball_point(M.vertices, r)):
        nb = np.asarray(nb)
        phi = _bump(np.linalg.norm(P[nb] - M.vertices[x], axis=1) / r) * w[nb]
        out[x] = np.einsum("k,kab->ab", phi, vals[nb]) / phi.sum()
    return out


def delta_tub(R: float, L: float, alpha: float, epsilon: float, lip_phi: float) -> float:
    """Radius of the tubular chart ``Psi(x, v) = x + v``."""
    if not (R > 0 and L > 0 and alpha > 0 and 0 < epsilon < 0.01 and lip_phi >= 0):
        raise IsotopyError("invalid inputs for the tubular radius")
    lip_term = epsilon / (4 * lip_phi) if lip_phi > 0 else math.inf
    return min(R / 4, (epsilon / L) ** (1 / alpha) / 4, lip_term, 1.0)


# ----------------------------------------------------------- tubular checks

def random_points(M: DiscreteManifold, k: int, rng: np.random.Generator):
    """Points distributed by measure on M, with their cells and barycentrics."""
    p = M.cell_measures / M.total_measure
    cell = rng.choice(len(M.cells), size=k, p=p)
    if M.m == 1:
        t = rng.random(k)
        b = np.stack([1 - t, t], axis=1)
    else:
        u = rng.random((k, 2))
        flip = u.sum(1) > 1
        u[flip] = 1 - u[flip]
        b = np.column_stack([1 - u.sum(1), u])
    x = np.einsum("kj,kjn->kn", b, M.vertices[M.cells[cell]])
    return x, cell, b


def _normal_vectors(P: np.ndarray, radius: float, rng: np.random.Generator) -> np.ndarray:
    k, n, _ = P.shape
    g = rng.standard_normal((k, n))
    v = np.einsum("kab,kb->ka", P, g)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * radius * rng.random((k, 1))


@dataclass
class TubularReport:
    delta: float
    pairs: int
    probes: int
    bilip_violations: int = 0
    dist_violations: int = 0
    coverage_failures: int = 0
    min_lower_ratio: float = math.inf
    max_upper_ratio: float = 0.0
    min_dist_ratio: float = math.inf
    max_roundtrip_error: float = 0.0
    witnesses: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.bilip_violations == 0 and self.dist_violations == 0 and self.coverage_failures == 0


def tubular_map_checks(M: DiscreteManifold, fld: NormalField, delta: float, pairs: int = 10_000,
                       probes: int = 1000, seed: int = 0) -> TubularReport:
    """Empirical bilipschitz, distance and coverage checks of the tubular chart.

    Half of the pairs are local (base points within a few delta of each other).
    """
    if not 0 < delta <= fld.delta_tub * (1 + 1e-12):
        raise IsotopyError("delta must lie in (0, delta_tub]")
    rng = np.random.default_rng(seed)
    rep = TubularReport(delta, pairs, probes)
    x, cx, bx = random_points(M, pairs, rng)
    u = _normal_vectors(fld.at(cx, bx), delta, rng)
    # local partners: move along the manifold by at most 4 delta
    half = pairs // 2
    y, cy, by = random_points(M, pairs, rng)
    step = rng.standard_normal((half, M.n)) * 4 * delta / math.sqrt(M.n)
    _, yl, cyl, byl = closest_points(M, x[:half] + step)
    y[:half], cy[:half], by[:half] = yl, cyl, byl
    v = _normal_vectors(fld.at(cy, by), delta, rng)
    base = np.sqrt(np.sum((x - y) ** 2, 1) + np.sum((u - v) ** 2, 1))
    img = np.linalg.norm(x + u - y - v, axis=1)
    nz = base > 0
    lo = img[nz] / base[nz]
    rep.min_lower_ratio = float(lo.min()) if nz.any() else math.inf
    rep.max_upper_ratio = float(lo.max()) if nz.any() else 0.0
    bad = np.flatnonzero(nz)[(lo < 0.25) | (lo > math.sqrt(2) + 1e-12)]
    rep.bilip_violations = len(bad)
    for i in bad[:5]:
        rep.witnesses.append({"check": "bilipschitz", "x": x[i].tolist(), "y": y[i].tolist()})
    d = distance_to(M, x + u)
    nu = np.linalg.norm(u, axis=1)
    pos = nu > 0
    ratio = d[pos] / nu[pos]
    rep.min_dist_ratio = float(ratio.min()) if pos.any() else math.inf
    bad = np.flatnonzero(pos)[ratio <= 0.25]
    rep.dist_violations = len(bad)
    for i in bad[:5]:
        rep.witnesses.append({"check": "distance", "x": x[i].tolist(), "v": u[i].tolist()})
    # coverage: points within delta/2 of the manifold are hit by Psi
    z, _, _ = random_points(M, probes, rng)
    w = rng.standard_normal((probes, M.n))
    w *= (0.5 * delta * rng.random((probes, 1))) / np.linalg.norm(w, axis=1, keepdims=True)
    q = z + w
    a, vv, _, _, ok = fld.foot(q)
    err = np.linalg.norm(a + vv - q, axis=1)
    ok &= np.linalg.norm(vv, axis=1) < delta
    rep.coverage_failures = int((~ok).sum())
    rep.max_roundtrip_error = float(err.max())
    for i in np.flatnonzero(~ok)[:5]:
        rep.witnesses.append({"check": "coverage", "q": q[i].tolist()})
    return rep


# --------------------------------------------------------------- projection

def c_l(L: float, lip_phi: float) -> float:
    """Lipschitz constant factor of the displacement G = F - Id."""
    return 1e4 * (lip_phi + 1) * (L + 1)


def rho_zero(R: float, L: float, alpha: float, delta_tb: float, lip_phi: float) -> float:
    """Smallness threshold on the Hausdorff distance for the projection map."""
    terms = [delta_tb / 8, (2 * L) ** (-2 / alpha), R ** 2 / 64,
             2 ** (-12 / alpha) * c_ang(L, 4) ** (-2 / alpha)]
    if lip_phi > 0:
        terms.append(2.0 ** -9 / lip_phi ** 2)
    return min(terms)


@dataclass
class ProjectionReport:
    rho: float
    C_l: float
    F: np.ndarray
    G: np.ndarray
    max_G: float
    max_G_over_dist: float
    lip_G: float
    bilip_lower: float
    bilip_upper: float
    sandwich: float
    sandwich_ok: bool
    displacement_ok: bool
    coverage_ok: bool
    coverage_gap: float
    failures: List[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.sandwich_ok and self.displacement_ok and self.coverage_ok and not self.failures


def project_onto(S2: DiscreteManifold, S1: DiscreteManifold, field1: NormalField,
                 rho: Optional[float] = None, max_pairs: int = 2_000_000) -> ProjectionReport:
    """Map each vertex of S2 to the base point of its field-normal decomposition over S1."""
    if field1.manifold is not S1:
        raise IsotopyError("normal field does not belong to S1")
    rho = hausdorff_distance(S1, S2) if rho is None else rho
    dt = field1.delta_tub
    if rho >= dt / 8:
        raise IsotopyError("Hausdorff distance {:.6g} >= delta_tub/8 = {:.6g}".format(rho, dt / 8))
    X = S2.vertices
    a, v, _, _, ok = field1.foot(X)
    failures = np.flatnonzero(~ok).tolist()
    G = a - X
    dist = distance_to(S1, X)
    gn = np.linalg.norm(G, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dist > 0, gn / dist, np.where(gn > 0, np.inf, 0.0))
    Cl = c_l(field1.L, field1.lip_measured)
    sand = Cl * rho ** (field1.alpha / 2)
    lo, hi, lipG = np.inf, 0.0, 0.0
    idx = np.arange(len(X))
    if len(X) ** 2 > max_pairs:
        idx = np.random.default_rng(0).choice(len(X), int(math.sqrt(max_pairs)), replace=False)
    for s in range(0, len(idx), 256):
        i = idx[s:s + 256]
        dx = np.linalg.norm(X[i, None] - X[None], axis=2)
        dF = np.linalg.norm(a[i, None] - a[None], axis=2)
        dG = np.linalg.norm(G[i, None] - G[None], axis=2)
        mask = dx > 0
        r = dF[mask] / dx[mask]
        lo, hi = min(lo, float(r.min())), max(hi, float(r.max()))
        lipG = max(lipG, float((dG[mask] / dx[mask]).max()))
    tol = 1e-9
    sandwich_ok = (lo >= 1 - sand - tol) and (hi <= 1 + sand + tol)
    displacement_ok = bool(np.all(gn <= 4 * dist + 1e-12))
    # surjectivity shadow: every vertex of S1 is near the image of F
    gap = float(distance_to(DiscreteManifold(a, S2.cells, validate=False), S1.vertices).max())
    coverage_ok = gap <= 2 * S1.resolution
    return ProjectionReport(rho, Cl, a, G, float(gn.max()), float(np.max(ratio)), lipG, lo, hi, sand,
                            sandwich_ok, displacement_ok, coverage_ok, gap, failures)


def isotopy_path(field1: NormalField, X: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Positions Psi(a, t v) for the decompositions x = a + v, shape (len(t), len(X), n)."""
    a, v, _, _, _ = field1.foot(X)
    t = np.asarray(t, dtype=float)
    return a[None] + t[:, None, None] * v[None]


# ------------------------------------------------------------ certificates

@dataclass
class IsotopyCertificate:
    d_h: float
    epsilon: float
    lip_phi: float
    lip_phi_bound: float
    delta_tub: float
    C_l: float
    rho_G: float
    rho_0: float
    verdict: bool
    constants_provenance: dict
    rho_G_worst_case: float = 0.0
    delta_tub_2: float = 0.0
    rG_limited: bool = False
    rho_limited_by: str = "C_l"

    def to_dict(self) -> dict:
        return asdict(self)


def certify_isotopy(S1: DiscreteManifold, S2: DiscreteManifold, R: float, L: float, d: float,
                    alpha: float, epsilon: float = EPS_CERT, r_G: float = 0.5,
                    c1: Optional[float] = None, c2: Optional[float] = None,
                    certs: Optional[Tuple[RegularityCertificate, RegularityCertificate]] = None,
                    d_h: Optional[float] = None) -> IsotopyCertificate:
    """One-sided certificate that S1 and S2 are ambient isotopic.

    The verdict is true when 0 < d_H(S1, S2) < min(rho_G, rho_0) with
    ``rho_G = C_l^(-2/alpha)`` and ``C_l = 1e4 (lip(Phi_1) + 1)(L + 1)``. A
    false verdict claims nothing.
    """
    if certs is None:
        certs = (verify_class(S1, R, L, d, alpha), verify_class(S2, R, L, d, alpha))
    for name, c in zip(("S1", "S2"), certs):
        if not c.verdict:
            raise IsotopyError("class verification failed for {}: {}".format(name, c.reason))
    f1 = build_normal_field(S1, certs[0], epsilon, r_G)
    f2 = build_normal_field(S2, certs[1], epsilon, r_G)
    dh = hausdorff_distance(S1, S2) if d_h is None else d_h
    Cl = c_l(L, f1.lip_measured)
    rho_G = Cl ** (-2 / alpha)
    dt = f1.delta_tub
    r0 = rho_zero(R, L, alpha, dt, f1.lip_measured)
    worst = c_l(L, f1.lip_bound) ** (-2 / alpha)
    prov = {"R": R, "L": L, "d": d, "alpha": alpha, "c1": c1, "c2": c2, "r_G": r_G,
            "mollification_radius": f1.radius, "max_deviation": f1.max_deviation,
            "holder_normals": f1.holder_measured}
    return IsotopyCertificate(dh, epsilon, f1.lip_measured, f1.lip_bound, dt, Cl, rho_G, r0,
                              bool(0 < dh < min(rho_G, r0)), prov, worst, f2.delta_tub,
                              f1.worst.rG_limited, "C_l" if rho_G <= r0 else "rho_0")


@dataclass
class DiffeoConstants:
    rho_0: float
    C_T: float
    C_J: float
    rho_g: float
    bilip_bound: float


def ambient_diffeo_constants(cert: IsotopyCertificate) -> DiffeoConstants:
    """Constants of the ambient diffeomorphism carrying S2 onto S1."""
    if not cert.verdict:
        raise IsotopyError("certificate verdict is false")
    a = cert.constants_provenance["alpha"]
    Cl = cert.C_l
    dt2 = cert.delta_tub_2 or cert.delta_tub
    rho_star = (1.0 / (800 * Cl)) ** (2 / a)
    r0 = min(dt2 / 16, cert.rho_G / 2, rho_star)
    C_T = 16 ** 2 / r0 ** (a / 2) + 4 * Cl
    C_J = 4 * Cl + C_T
    return DiffeoConstants(r0, C_T, C_J, C_J ** (-2 / a), 1 + C_J * cert.d_h ** (a / 2))


@dataclass
class CountBound:
    R: float
    L: float
    alpha: float
    lip_phi: float
    C_l: float
    log_rho_G: float
    k: float
    log2_k: float
    log2_N: float
    log2_K: float
    loglog_K: float
    shape_ratio: float


def count_isotopy_types(E: float, d: float, spec: EnergySpec, n: int, c1: float = 1.0, c2: float = 1.0,
                        c_phi: float = 1.0, r_G: float = 0.5) -> CountBound:
    """Upper bound on the number of isotopy types with energy <= E and diameter <= d.

    The cube of edge 2d is covered by cubes of edge rho_G / (2 sqrt n); each
    type is determined by the subset of cubes it meets, so K <= 2^N with
    N = k^n and k = ceil(2 d sqrt(n) / rho_G). Large values are kept as logs.
    """
    if not spec.supercritical:
        raise IsotopyError("subcritical exponent: need p > p0 = {}".format(spec.p0))
    if not (E > 0 and d > 0):
        raise IsotopyError("E and d must be positive")
    R, L, alpha = rl_from_energy(E, spec, c1, c2)
    delta0 = min(r_G, 1.0)
    lip = c_phi * (E ** (1 / spec.p) + 1) ** (1 + 1 / alpha) * delta0 ** (-1 / alpha)
    Cl = c_l(L, lip)
    log_rho = -(2 / alpha) * math.log(Cl)
    log_ratio = math.log(2 * d * math.sqrt(n)) - log_rho
    if log_ratio < 700:
        k = float(math.ceil(math.exp(log_ratio)))
        log2_k = math.log2(k)
    else:
        k = math.inf
        log2_k = log_ratio / math.log(2)
    log2_N = n * log2_k
    log2_K = 2.0 ** log2_N if log2_N < 1000 else math.inf
    loglog = log2_N * math.log(2) + math.log(math.log(2))
    shape = loglog / (abs(math.log(d)) + math.log(E ** (1 / spec.p) + 1) + 1)
    return CountBound(R, L, alpha, lip, Cl, log_rho, k, log2_k, log2_N, log2_K, loglog, shape)

"""
Energy minimization inside an isotopy class.

Gradient descent on vertex positions with a backtracking line search, a
rescaling step that keeps total measure (or diameter) fixed, and a step gate
tied to a safety radius so that the discrete manifold never passes through
itself.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from .energy import (EnergyError, EnergySpec, QuadratureConfig, evaluate_samples)
from .manifold import DiscreteManifold, cell_frames, hausdorff_distance, sample


class FlowError(ValueError):
    """Raised for invalid flow options or states."""


# ------------------------------------------------------- kernel gradients

def _tp_pair_terms(r: np.ndarray, B: np.ndarray):
    """Inverse tangent-point radius and its partials for offsets r = y - x."""
    c = np.einsum("...n,...mn->...m", r, B)
    q = r - np.einsum("...m,...mn->...n", c, B)
    s = np.einsum("...n,...n->...", r, r)
    d = np.sqrt(np.einsum("...n,...n->...", q, q))
    ok = (s > 0) & (d > 0)
    s_, d_ = np.where(ok, s, 1.0), np.where(ok, d, 1.0)
    f = np.where(ok, 2 * d / s_, 0.0)
    dfr = np.where(ok[..., None], 2 * q / (d_ * s_)[..., None] - (4 * d_ / s_ ** 2)[..., None] * r, 0.0)
    return f, dfr, q, s_, d_, ok


def _menger_grad(P: np.ndarray):
    """Menger curvature of tuples P (T, k, n) and its gradient wrt each point."""
    T, k, n = P.shape
    E = P[:, 1:] - P[:, :1]
    G = np.einsum("tin,tjn->tij", E, E)
    det = np.linalg.det(G)
    vol = np.sqrt(np.maximum(det, 0.0)) / math.factorial(k - 1)
    diff = P[:, :, None, :] - P[:, None, :, :]
    dist = np.sqrt(np.einsum("tijn,tijn->tij", diff, diff))
    flat = dist.reshape(T, -1).argmax(axis=1)
    a, b = np.divmod(flat, k)
    D = dist[np.arange(T), a, b]
    good = (vol > 1e-14 * D ** (k - 1)) & (D > 0)
    K = np.where(good, vol / np.where(D > 0, D, 1.0) ** k, 0.0)
    g = np.zeros_like(P)
    if good.any():
        t = np.flatnonzero(good)
        Ginv = np.linalg.inv(G[t])
        dvE = vol[t, None, None] * np.einsum("tij,tjn->tin", Ginv, E[t])
        dv = np.concatenate([-dvE.sum(1, keepdims=True), dvE], axis=1)
        u = (P[t, a[t]] - P[t, b[t]]) / D[t, None]
        dD = np.zeros((len(t), k, n))
        dD[np.arange(len(t)), a[t]] = u
        dD[np.arange(len(t)), b[t]] = -u
        Dk = D[t] ** k
        g[t] = dv / Dk[:, None, None] - (k * vol[t] / (Dk * D[t]))[:, None, None] * dD
    return K, g


def node_gradients(S, spec: EnergySpec):
    """Energy and its partials with respect to node positions, tangent projectors and weights."""
    N, n = len(S), S.n
    X, B, w, p = S.points, S.bases, S.weights, spec.p
    gx = np.zeros((N, n))
    gP = np.zeros((N, n, n))
    gw = np.zeros(N)
    total = []
    if spec.kind in ("tp", "tpg"):
        for s in range(0, N, 128):
            rows = np.arange(s, min(N, s + 128))
            r = X[None, :, :] - X[rows, None, :]
            f, dfr, q, s_, d_, ok = _tp_pair_terms(r, B[rows][:, None])
            f[np.arange(len(rows)), rows] = 0.0
            coincident = ~r.any(axis=2)
            coincident[np.arange(len(rows)), rows] = False
            if coincident.any():
                return math.inf, gx, gP, gw
            if spec.kind == "tp":
                fp = f ** p
                c = w[rows, None] * w[None, :] * p * np.where(ok, f, 0.0) ** (p - 1)
                total.append(float(np.sum(w[rows, None] * w[None, :] * fp)))
                gterm = c[..., None] * dfr
                gx[rows] -= gterm.sum(1)
                gx += gterm.sum(0)
                coef = np.where(ok, -2 * c / (s_ * d_), 0.0)
                gP[rows] += np.einsum("ij,ija,ijb->iab", coef, q, r)
                gw[rows] += fp @ w
                gw += w[rows] @ fp
            else:
                j = f.argmax(axis=1)
                ii = np.arange(len(rows))
                fi = f[ii, j]
                total.append(float(np.sum(w[rows] * fi ** p)))
                c = w[rows] * p * fi ** (p - 1)
                okj = ok[ii, j]
                gterm = np.where(okj[:, None], c[:, None] * dfr[ii, j], 0.0)
                gx[rows] -= gterm
                np.add.at(gx, j, gterm)
                coef = np.where(okj, -2 * c / (s_[ii, j] * d_[ii, j]), 0.0)
                gP[rows] += np.einsum("i,ia,ib->iab", coef, q[ii, j], r[ii, j])
                gw[rows] += fi ** p
        return float(np.sum(total)), gx, gP, gw
    k, l = S.m + 2, spec.l
    for i0 in range(N):
        rest = np.stack(np.unravel_index(np.arange(N ** (k - 1)), (N,) * (k - 1)), axis=1)
        idx = np.concatenate([np.full((len(rest), 1), i0), rest], axis=1)
        K, gK = _menger_grad(X[idx])
        if l < k:
            Kr = K.reshape(N ** (l - 1), -1)
            sel = Kr.argmax(axis=1) + np.arange(len(Kr)) * Kr.shape[1]
        else:
            sel = np.arange(len(K))
        idx, K, gK = idx[sel], K[sel], gK[sel]
        rep = np.zeros(len(idx), bool)
        for a, b in itertools.combinations(range(l), 2):
            rep |= idx[:, a] == idx[:, b]
        keep = ~rep
        idx, K, gK = idx[keep], K[keep], gK[keep]
        wb = np.prod(w[idx[:, :l]], axis=1)
        Kp = K ** p
        total.append(float(np.sum(wb * Kp)))
        c = wb * p * K ** (p - 1)
        for a in range(k):
            np.add.at(gx, idx[:, a], c[:, None] * gK[:, a])
        for a in range(l):
            others = np.prod(w[idx[:, [b for b in range(l) if b != a]]], axis=1) if l > 1 else np.ones(len(idx))
            np.add.at(gw, idx[:, a], others * Kp)
    return float(np.sum(total)), gx, gP, gw


def _chain_to_vertices(M: DiscreteManifold, S, gx, gP, gw) -> np.ndarray:
    V, n, m = len(M.vertices), M.n, M.m
    g = np.zeros((V, n))
    for j in range(m + 1):
        np.add.at(g, M.cells[S.cell, j], S.bary[:, j, None] * gx)
    C = len(M.cells)
    q = np.bincount(S.cell, minlength=C)
    gmeas = np.bincount(S.cell, weights=gw, minlength=C) / q
    gPc = np.zeros((C, n, n))
    np.add.at(gPc, S.cell, gP)
    E = cell_frames(M.vertices, M.cells)
    G = np.einsum("cin,cjn->cij", E, E)
    GinvE = np.einsum("cij,cjn->cin", np.linalg.inv(G), E)
    meas = M.cell_measures
    Pc = np.einsum("cin,cim->cnm", M.cell_bases, M.cell_bases)
    sym = gPc + np.swapaxes(gPc, 1, 2)
    gE = (gmeas * meas)[:, None, None] * GinvE
    gE += np.einsum("cin,cnk,ckj->cij", GinvE, sym, np.eye(n) - Pc)
    for a in range(m):
        np.add.at(g, M.cells[:, a + 1], gE[:, a])
        np.add.at(g, M.cells[:, 0], -gE[:, a])
    return g


def energy_and_gradient(M: DiscreteManifold, spec: EnergySpec,
                        quad: QuadratureConfig = QuadratureConfig()) -> Tuple[float, np.ndarray]:
    """Discrete energy and its gradient with respect to vertex positions."""
    if quad.mode != "exhaustive":
        raise EnergyError("analytic gradients need exhaustive quadrature")
    if spec.m != M.m:
        raise EnergyError("energy spec is for m={} but manifold has m={}".format(spec.m, M.m))
    S = sample(M, quad.density)
    E, gx, gP, gw = node_gradients(S, spec)
    if not math.isfinite(E):
        raise EnergyError("energy is infinite")
    return E, _chain_to_vertices(M, S, gx, gP, gw)


def energy_gradient(M: DiscreteManifold, spec: EnergySpec,
                    quad: QuadratureConfig = QuadratureConfig()) -> np.ndarray:
    """Gradient of the discrete energy with respect to vertex positions.

    At ties of a supremum or of the diameter the lexicographically smallest
    attaining tuple is used.
    """
    return energy_and_gradient(M, spec, quad)[1]


def fd_gradient(M: DiscreteManifold, spec: EnergySpec, quad: QuadratureConfig = QuadratureConfig(),
                h: Optional[float] = None) -> np.ndarray:
    """Central finite-difference gradient (oracle for ``energy_gradient``)."""
    h = 1e-6 * M.diameter if h is None else h
    X = M.vertices
    g = np.zeros_like(X)
    for i in range(X.shape[0]):
        for a in range(X.shape[1]):
            Xp, Xm = X.copy(), X.copy()
            Xp[i, a] += h
            Xm[i, a] -= h
            ep = evaluate_samples(sample(M.with_vertices(Xp), quad.density), spec, quad).value
            em = evaluate_samples(sample(M.with_vertices(Xm), quad.density), spec, quad).value
            g[i, a] = (ep - em) / (2 * h)
    return g


# ------------------------------------------------------------------ flow

CONSTRAINTS = ("fixed_total_measure", "fixed_diameter")


def constraint_value(M: DiscreteManifold, constraint: str) -> float:
    if constraint == "fixed_total_measure":
        return M.total_measure
    if constraint == "fixed_diameter":
        return M.diameter
    raise FlowError("constraint must be one of {}".format(", ".join(CONSTRAINTS)))


def renormalize(M: DiscreteManifold, constraint: str, target: float) -> DiscreteManifold:
    """Rescale about the vertex centroid so the constraint value equals target."""
    cur = constraint_value(M, constraint)
    lam = (target / cur) ** (1.0 / M.m) if constraint == "fixed_total_measure" else target / cur
    c = M.vertices.mean(axis=0)
    return M.with_vertices(c + lam * (M.vertices - c))


@dataclass
class FlowOptions:
    sigma: float = 0.5
    backtrack: float = 0.5
    max_backtracks: int = 40
    tol: float = 1e-12
    constraint: str = "fixed_total_measure"
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    rho_G: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.sigma < 1:
            raise FlowError("sigma must be in (0,1)")
        if not 0 < self.backtrack < 1:
            raise FlowError("backtracking ratio must be in (0,1)")
        if self.constraint not in CONSTRAINTS:
            raise FlowError("constraint must be one of {}".format(", ".join(CONSTRAINTS)))


@dataclass(frozen=True)
class HistoryEntry:
    iteration: int
    energy: float
    step: float
    d_h_from_previous: float


@dataclass(frozen=True)
class FlowState:
    manifold: DiscreteManifold
    energy: float
    iteration: int
    step: float
    constraint: str
    target: float
    history: Tuple[HistoryEntry, ...] = ()
    converged: bool = False


def initial_state(M: DiscreteManifold, spec: EnergySpec, opts: FlowOptions) -> FlowState:
    target = constraint_value(M, opts.constraint)
    E = evaluate_samples(sample(M, opts.quad.density), spec, opts.quad).value
    if not math.isfinite(E):
        raise FlowError("initial energy is infinite")
    return FlowState(M, E, 0, 0.0, opts.constraint, target)


def safety_radius(M: DiscreteManifold, rho_G: Optional[float] = None) -> float:
    r = 0.25 * M.min_nonadjacent_distance
    return min(r, rho_G) if rho_G else r


def descend(state: FlowState, spec: EnergySpec, opts: FlowOptions) -> FlowState:
    """One gated backtracking step along the negative gradient."""
    M = state.manifold
    E0, g = energy_and_gradient(M, spec, opts.quad)
    gmax = float(np.abs(np.linalg.norm(g, axis=1)).max())
    if gmax <= opts.tol:
        return replace(state, converged=True)
    safe = safety_radius(M, opts.rho_G)
    limit = opts.sigma * safe
    t = state.step if state.step > 0 else limit / gmax
    t = min(2 * t, limit / gmax)
    for _ in range(opts.max_backtracks):
        cand = M.with_vertices(M.vertices - t * g)
        cand = renormalize(cand, state.constraint, state.target)
        disp = float(np.linalg.norm(cand.vertices - M.vertices, axis=1).max())
        if disp >= limit:
            t *= opts.backtrack
            continue
        if not cand.min_nonadjacent_distance > 0:
            t *= 0.5
            continue
        E1 = evaluate_samples(sample(cand, opts.quad.density), spec, opts.quad).value
        if E1 < E0:
            dh = hausdorff_distance(M, cand)
            if dh >= safe:
                t *= opts.backtrack
                continue
            h = state.history + (HistoryEntry(state.iteration + 1, E1, t, dh),)
            return FlowState(cand, E1, state.iteration + 1, t, state.constraint, state.target, h)
        t *= opts.backtrack
    return replace(state, converged=True)


def run_flow(M: DiscreteManifold, spec: EnergySpec, opts: FlowOptions, max_iters: int,
             callback: Optional[Callable[[FlowState], None]] = None) -> FlowState:
    """Iterate ``descend`` until convergence or the iteration cap."""
    state = initial_state(M, spec, opts)
    for _ in range(max_iters):
        new = descend(state, spec, opts)
        if new.converged:
            return new
        if not new.energy < state.energy:
            raise FlowError("accepted step did not decrease the energy")
        state = new
        if callback is not None:
            callback(state)
    return state


# ------------------------------------------------------------ diagnostics

def projected_crossings(M: DiscreteManifold, direction=(0.3141, 0.2718, 0.9)) -> int:
    """Number of crossings of the projection of a space polygon along a generic direction."""
    if M.m != 1 or M.n != 3:
        raise FlowError("crossings are defined for curves in R^3")
    d = np.asarray(direction, dtype=float)
    d /= np.linalg.norm(d)
    e1 = np.cross(d, [1.0, 0, 0])
    if np.linalg.norm(e1) < 1e-6:
        e1 = np.cross(d, [0, 1.0, 0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    P = M.vertices @ np.stack([e1, e2], axis=1)
    a, b = P[M.cells[:, 0]], P[M.cells[:, 1]]
    i, j = np.triu_indices(len(a), 1)
    share = (M.cells[i][:, :, None] == M.cells[j][:, None, :]).any(axis=(1, 2))
    i, j = i[~share], j[~share]

    def orient(p, q, r):
        return np.sign((q[:, 0] - p[:, 0]) * (r[:, 1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (r[:, 0] - p[:, 0]))

    o1 = orient(a[i], b[i], a[j])
    o2 = orient(a[i], b[i], b[j])
    o3 = orient(a[j], b[j], a[i])
    o4 = orient(a[j], b[j], b[i])
    return int(np.sum((o1 * o2 < 0) & (o3 * o4 < 0)))

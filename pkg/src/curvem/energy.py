"""
Curvature energies on discrete manifolds.

Integrands are the discrete Menger curvature of (m+2)-point simplices and the
inverse tangent-point radius. Energies are weighted quadratures over products
of a sample set, either exhaustive or Monte Carlo.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .geometry import Plane, simplex_diameter, simplex_measure
from .manifold import DiscreteManifold, SampleSet, sample

KINDS = ("menger", "tp", "tpg")
BLOCK = 128


class EnergyError(ValueError):
    """Raised for invalid energy specifications or inputs."""


@dataclass(frozen=True)
class EnergySpec:
    """Which energy to evaluate.

    Parameters
    ----------
    kind : str
        ``'menger'`` (integral Menger curvature with ``l`` integrated
        arguments), ``'tp'`` (tangent-point double integral) or ``'tpg'``
        (tangent-point energy with a supremum in the second argument).
    p : float
        Exponent, positive.
    m : int
        Intrinsic dimension of the manifolds it applies to.
    l : int, optional
        Number of integrated arguments for ``'menger'`` (1..m+2); defaults to m+2.
    """

    kind: str
    p: float
    m: int = 1
    l: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise EnergyError("kind must be one of {}".format(", ".join(KINDS)))
        if not self.p > 0:
            raise EnergyError("p must be positive")
        if self.m not in (1, 2):
            raise EnergyError("m must be 1 or 2")
        if self.kind == "menger":
            l = self.m + 2 if self.l is None else int(self.l)
            if not 1 <= l <= self.m + 2:
                raise EnergyError("l must be in 1..m+2")
            object.__setattr__(self, "l", l)
        elif self.l is not None:
            object.__setattr__(self, "l", None)

    @property
    def p0(self) -> float:
        return scaling_exponent(self)

    @property
    def supercritical(self) -> bool:
        return self.p > self.p0

    @property
    def alpha(self) -> float:
        """Hoelder exponent 1 - p0/p (meaningful when supercritical)."""
        return 1.0 - self.p0 / self.p


def scaling_exponent(spec: EnergySpec) -> float:
    """Exponent p0 at which the energy is invariant under dilations."""
    if spec.kind == "menger":
        return float(spec.m * spec.l)
    if spec.kind == "tp":
        return float(2 * spec.m)
    return float(spec.m)


@dataclass(frozen=True)
class QuadratureConfig:
    """Quadrature settings.

    ``mode`` is ``'exhaustive'`` or ``'monte_carlo'``; ``density`` is the number
    of nodes per cell; ``exclusion_radius`` drops tuples of smaller diameter.
    """

    mode: str = "exhaustive"
    samples: int = 0
    seed: int = 0
    density: int = 1
    exclusion_radius: float = 0.0
    threads: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("exhaustive", "monte_carlo"):
            raise EnergyError("quadrature mode must be 'exhaustive' or 'monte_carlo'")
        if self.mode == "monte_carlo" and self.samples <= 0:
            raise EnergyError("Monte Carlo quadrature needs samples > 0")


@dataclass
class EnergyResult:
    value: float
    quadrature: dict
    stderr_estimate: float = 0.0
    node_count: int = 0
    diagnostics: dict = field(default_factory=dict)


def resolve_threads(threads: Optional[int] = None) -> int:
    env = os.environ.get("CURVEM_THREADS")
    if env:
        return max(1, int(env))
    if threads:
        return max(1, int(threads))
    return 1


# ------------------------------------------------------------------ kernels

def menger_curvature(points) -> float:
    """Simplex measure over diameter^(m+2) for m+2 points.

    Raises
    ------
    EnergyError
        If all points coincide.
    """
    p = np.asarray(points, dtype=float)
    d = simplex_diameter(p)
    if d == 0:
        raise EnergyError("all points coincide")
    k = p.shape[0] - 1
    return simplex_measure(p) / d ** (k + 1)


def menger_batch(P: np.ndarray) -> np.ndarray:
    """Vectorized discrete Menger curvature of tuples P[..., m+2, n].

    Tuples with zero diameter give ``nan``.
    """
    k = P.shape[-2] - 1
    E = P[..., 1:, :] - P[..., :1, :]
    G = np.einsum("...in,...jn->...ij", E, E)
    vol = np.sqrt(np.maximum(np.linalg.det(G), 0.0)) / math.factorial(k)
    diff = P[..., :, None, :] - P[..., None, :, :]
    D = np.sqrt(np.einsum("...ijn,...ijn->...ij", diff, diff).max(axis=(-1, -2)))
    vol = np.where(vol < 1e-14 * D ** k, 0.0, vol)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(D > 0, vol / np.where(D > 0, D, 1.0) ** (k + 1), np.nan)


def tangent_point_radius(x, Tx: Plane, y) -> float:
    """Radius of the smallest sphere tangent to x + Tx at x and passing through y.

    Returns ``inf`` when y lies in the affine tangent plane.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = y - x
    s = float(r @ r)
    if s == 0:
        raise EnergyError("tangent-point radius undefined on the diagonal x = y")
    d = float(np.linalg.norm(r - Tx.project(r)))
    if d <= 1e-15 * math.sqrt(s):
        return math.inf
    return s / (2 * d)


def inverse_tp_block(X: np.ndarray, B: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """``1/R_tp(x_i, T_i, y_j)`` for rows i of X (bases B) and all y_j; nan on x = y."""
    r = Y[None, :, :] - X[:, None, :]
    c = np.einsum("ijn,imn->ijm", r, B)
    q = r - np.einsum("ijm,imn->ijn", c, B)
    s = np.einsum("ijn,ijn->ij", r, r)
    d = np.sqrt(np.einsum("ijn,ijn->ij", q, q))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(s > 0, 2 * d / np.where(s > 0, s, 1.0), np.nan)


def menger_sup_integrand(S: SampleSet, l: int, base) -> float:
    """Supremum of the Menger curvature over completions of ``base`` from S.

    With l = m+2 this is the Menger curvature of ``base`` itself.
    """
    base = np.atleast_2d(np.asarray(base, dtype=float))
    m = S.m
    if base.shape[0] != l or not 1 <= l <= m + 2:
        raise EnergyError("base must contain l points with 1 <= l <= m+2")
    if l == m + 2:
        return menger_curvature(base)
    free = m + 2 - l
    best = 0.0
    for combo in _product_chunks(len(S), free, 1 << 16):
        P = np.concatenate([np.broadcast_to(base, (len(combo), l, S.n)), S.points[combo]], axis=1)
        K = menger_batch(P)
        if np.any(np.isfinite(K)):
            best = max(best, float(np.nanmax(K)))
    return best


def _product_chunks(N: int, r: int, chunk: int):
    """Index tuples of length r over range(N) in lexicographic order, chunked."""
    total = N ** r
    for s in range(0, total, chunk):
        idx = np.arange(s, min(total, s + chunk))
        yield np.stack(np.unravel_index(idx, (N,) * r), axis=1) if r else np.zeros((len(idx), 0), int)


# -------------------------------------------------------------- evaluators

def _pairwise_sum(parts) -> float:
    return float(np.sum(np.asarray(parts, dtype=float)))


def _run_blocks(fn, nblocks: int, threads: int):
    if threads <= 1 or nblocks <= 1:
        return [fn(b) for b in range(nblocks)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, range(nblocks)))


def _tp_block(S: SampleSet, spec: EnergySpec, rows: slice, excl: float):
    f = inverse_tp_block(S.points[rows], S.bases[rows], S.points)
    idx = np.arange(rows.start, rows.stop)
    f[np.arange(len(idx)), idx] = np.nan
    if excl > 0:
        r = np.linalg.norm(S.points[None, :, :] - S.points[rows, None, :], axis=2)
        f = np.where(r < excl, np.nan, f)
    bad = ~np.isfinite(f)
    bad[np.arange(len(idx)), idx] = False
    if excl > 0:
        bad &= ~(r < excl)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        return math.inf, (int(idx[i]), int(j))
    fp = np.where(np.isnan(f), 0.0, f) ** spec.p
    w = S.weights
    if spec.kind == "tp":
        return float(np.sum((w[rows, None] * w[None, :]) * fp)), None
    return float(np.sum(w[rows] * fp.max(axis=1))), None


def _menger_block(S: SampleSet, spec: EnergySpec, i0: int, excl: float):
    """Contribution of base tuples whose first index is i0."""
    m, l, N = S.m, spec.l, len(S)
    k = m + 2
    rest = np.stack(np.unravel_index(np.arange(N ** (k - 1)), (N,) * (k - 1)), axis=1)
    idx = np.concatenate([np.full((len(rest), 1), i0), rest], axis=1)
    K = menger_batch(S.points[idx]).reshape((N,) * (k - 1))
    base_idx = idx[:, :l]
    if excl > 0:
        D = np.linalg.norm(S.points[idx][:, :, None] - S.points[idx][:, None], axis=-1).max((1, 2))
        K = np.where(D.reshape(K.shape) < excl, 0.0, K)
    # repeated base indices lie on the diagonal and are skipped
    rep = np.zeros(len(idx), bool)
    for a, b in itertools.combinations(range(l), 2):
        rep |= base_idx[:, a] == base_idx[:, b]
    if l == k:
        nanbad = np.isnan(K.ravel()) & ~rep
        if nanbad.any():
            return math.inf, tuple(int(t) for t in idx[np.flatnonzero(nanbad)[0]])
    Kp = np.where(np.isnan(K), 0.0, K) ** spec.p
    if l < k:
        Kp = Kp.reshape((N,) * (l - 1) + (-1,)).max(axis=-1)
    mask = ~rep.reshape((N,) * (k - 1))
    if l < k:
        mask = mask.reshape((N,) * (l - 1) + (-1,))[..., 0]
    w = S.weights
    wb = np.full((), w[i0])
    for a in range(1, l):
        shape = [1] * (l - 1)
        shape[a - 1] = N
        wb = wb * w.reshape(shape)
    return float(np.sum(np.where(mask, wb * Kp, 0.0))), None


def _check_compatible(M_m: int, spec: EnergySpec):
    if spec.m != M_m:
        raise EnergyError("energy spec is for m={} but manifold has m={}".format(spec.m, M_m))


def evaluate_samples(S: SampleSet, spec: EnergySpec, quad: QuadratureConfig = QuadratureConfig()) -> EnergyResult:
    """Evaluate an energy on a given sample set."""
    _check_compatible(S.m, spec)
    N = len(S)
    qdesc = {"mode": quad.mode, "density": quad.density}
    if quad.mode == "monte_carlo":
        qdesc.update(samples=quad.samples, seed=quad.seed)
        return _evaluate_mc(S, spec, quad, qdesc)
    threads = resolve_threads(quad.threads)
    if spec.kind in ("tp", "tpg"):
        nb = (N + BLOCK - 1) // BLOCK
        parts = _run_blocks(lambda b: _tp_block(S, spec, slice(b * BLOCK, min(N, (b + 1) * BLOCK)),
                                                quad.exclusion_radius), nb, threads)
    else:
        parts = _run_blocks(lambda i: _menger_block(S, spec, i, quad.exclusion_radius), N, threads)
    for val, witness in parts:
        if witness is not None:
            return EnergyResult(math.inf, qdesc, 0.0, N, {"infinite_at": list(witness)})
    value = _pairwise_sum([v for v, _ in parts])
    return EnergyResult(value, qdesc, 0.0, N)


def evaluate(M: DiscreteManifold, spec: EnergySpec, quad: QuadratureConfig = QuadratureConfig()) -> EnergyResult:
    """Evaluate an energy on a discrete manifold.

    Tuples containing a repeated node are skipped (the diagonal has measure
    zero). Suprema range over the sample set.
    """
    _check_compatible(M.m, spec)
    return evaluate_samples(sample(M, quad.density), spec, quad)


def _evaluate_mc(S: SampleSet, spec: EnergySpec, quad: QuadratureConfig, qdesc: dict) -> EnergyResult:
    N = len(S)
    W = S.total_weight
    prob = S.weights / W
    rng = np.random.Generator(np.random.Philox(key=quad.seed))
    arity = 2 if spec.kind == "tp" else (1 if spec.kind == "tpg" else spec.l)
    vals = []
    chunk = 1 << 14
    for s in range(0, quad.samples, chunk):
        c = min(chunk, quad.samples - s)
        idx = rng.choice(N, size=(c, arity), p=prob)
        vals.append(_mc_values(S, spec, idx))
    v = np.concatenate(vals)
    if not np.all(np.isfinite(v)):
        return EnergyResult(math.inf, qdesc, 0.0, N, {"infinite_at": idx[0].tolist()})
    scale = W ** arity
    mean = float(np.mean(v))
    se = float(np.std(v, ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
    return EnergyResult(scale * mean, qdesc, scale * se, N)


def _menger_sup_batch(S: SampleSet, bases: np.ndarray) -> np.ndarray:
    """Sup of the Menger curvature over completions, for each row of base indices."""
    N, k, l = len(S), S.m + 2, bases.shape[1]
    comp = np.stack(np.unravel_index(np.arange(N ** (k - l)), (N,) * (k - l)), axis=1)
    per = max(1, (1 << 18) // len(comp))
    out = np.empty(len(bases))
    for s in range(0, len(bases), per):
        b = bases[s:s + per]
        idx = np.concatenate([np.repeat(b[:, None], len(comp), 1),
                              np.broadcast_to(comp, (len(b),) + comp.shape)], axis=2)
        K = menger_batch(S.points[idx])
        out[s:s + per] = np.nanmax(np.where(np.isnan(K), -np.inf, K), axis=1)
    return np.maximum(out, 0.0)


def _mc_values(S: SampleSet, spec: EnergySpec, idx: np.ndarray) -> np.ndarray:
    if spec.kind == "tp":
        i, j = idx[:, 0], idx[:, 1]
        r = S.points[j] - S.points[i]
        c = np.einsum("kn,kmn->km", r, S.bases[i])
        q = r - np.einsum("km,kmn->kn", c, S.bases[i])
        s = np.einsum("kn,kn->k", r, r)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(i == j, 0.0, 2 * np.linalg.norm(q, axis=1) / s)
        return f ** spec.p
    if spec.kind == "tpg":
        nodes, inv = np.unique(idx[:, 0], return_inverse=True)
        best = np.empty(len(nodes))
        for s in range(0, len(nodes), BLOCK):
            rows = nodes[s:s + BLOCK]
            f = inverse_tp_block(S.points[rows], S.bases[rows], S.points)
            f[np.arange(len(rows)), rows] = 0.0
            best[s:s + BLOCK] = np.max(f, axis=1)
        return best[inv.ravel()] ** spec.p
    k = S.m + 2
    l = spec.l
    rep = np.zeros(len(idx), bool)
    for a, b in itertools.combinations(range(l), 2):
        rep |= idx[:, a] == idx[:, b]
    if l == k:
        K = menger_batch(S.points[idx])
    else:
        bases, inv = np.unique(idx, axis=0, return_inverse=True)
        K = _menger_sup_batch(S, bases)[inv.ravel()]
    return np.where(rep, 0.0, K) ** spec.p


# ------------------------------------------------------- perturbation constants

@dataclass(frozen=True)
class SineField:
    """Perturbation G(z) = eps * A sin(B z + c) with lip(G) <= eps.

    A and B are rescaled to unit spectral norm, so ``z + G(z)`` is a
    bilipschitz map for eps < 1.
    """

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, frequency: float = 3.0) -> "SineField":
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, n))
        A /= np.linalg.norm(A, 2)
        B *= frequency / np.linalg.norm(B, 2)
        return cls(A / frequency, B, rng.uniform(0, 2 * np.pi, n))

    def apply(self, z: np.ndarray, eps: float) -> np.ndarray:
        return z + eps * np.sin(z @ self.B.T + self.c) @ self.A.T

    def jacobian(self, z: np.ndarray, eps: float) -> np.ndarray:
        """DF(z) for rows of z, shape (..., n, n)."""
        cosv = np.cos(z @ self.B.T + self.c)
        return np.eye(len(self.c)) + eps * np.einsum("ak,...k,kb->...ab", self.A, cosv, self.B)


def menger_perturbation(P: np.ndarray, G: SineField, eps: float) -> np.ndarray:
    """``|K(F(T)) - K(T)| * diam(T)`` for each tuple T of P[..., m+2, n]."""
    diff = P[..., :, None, :] - P[..., None, :, :]
    D = np.sqrt(np.einsum("...ijn,...ijn->...ij", diff, diff).max(axis=(-1, -2)))
    return np.abs(menger_batch(G.apply(P, eps)) - menger_batch(P)) * D


def tp_perturbation(X: np.ndarray, bases: np.ndarray, Y: np.ndarray, G: SineField, eps: float) -> np.ndarray:
    """``|1/R_tp(F(x), DF T, F(y)) - 1/R_tp(x, T, y)| * |x - y|`` for paired rows.

    The tangent plane at F(x) is the image of T under DF(x).
    """
    def inv_r(x, B, y):
        r = y - x
        q = r - np.einsum("km,kmn->kn", np.einsum("kn,kmn->km", r, B), B)
        return 2 * np.linalg.norm(q, axis=1) / np.einsum("kn,kn->k", r, r)

    FB = np.einsum("kab,kmb->kam", G.jacobian(X, eps), bases)
    FB = np.swapaxes(np.linalg.qr(FB)[0], 1, 2)
    before = inv_r(X, bases, Y)
    after = inv_r(G.apply(X, eps), FB, G.apply(Y, eps))
    return np.abs(after - before) * np.linalg.norm(Y - X, axis=1)


def perturbation_constant(deviations: np.ndarray, eps: float) -> float:
    """Smallest C with deviation <= C * eps over the given samples."""
    return float(np.max(deviations) / eps)

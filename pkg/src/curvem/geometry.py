"""
Linear geometry on the Grassmannian.

Planes are stored as orthonormal bases; projectors are derived on demand.
The angle between two planes is the operator norm of the difference of
their orthogonal projectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

TOL = 1e-10


class GeometryError(ValueError):
    """Raised when an operation is called outside its domain."""


class HypothesisError(GeometryError):
    """Raised when the inputs of an inequality check do not satisfy its hypotheses."""


def _orthonormalize(vectors: np.ndarray) -> np.ndarray:
    # two QR passes keep the Gram matrix at identity to ~1e-15
    q = np.asarray(vectors, dtype=float).T
    for _ in range(2):
        q, r = np.linalg.qr(q)
        if np.any(np.abs(np.diag(r)) < 1e-13 * max(1.0, np.abs(r).max())):
            raise GeometryError("vectors are linearly dependent")
    return q.T


@dataclass(frozen=True, eq=False)
class Plane:
    """Linear subspace of R^n stored as an orthonormal basis.

    Parameters
    ----------
    basis : np.ndarray
        Array of shape (m, n) whose rows are orthonormal.
    """

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[0] > b.shape[1]:
            raise GeometryError("basis must have shape (m, n) with 1 <= m <= n")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def from_vectors(cls, vectors) -> "Plane":
        """Span of the given vectors (rows), orthonormalized."""
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        return cls(_orthonormalize(v))

    @classmethod
    def from_projector(cls, P: np.ndarray) -> "Plane":
        """Image of a symmetric idempotent matrix."""
        w, v = np.linalg.eigh(0.5 * (P + P.T))
        k = int(round(np.trace(P)))
        if k < 1:
            raise GeometryError("projector has rank 0")
        return cls(_orthonormalize(v[:, -k:].T))

    @classmethod
    def random(cls, n: int, m: int, rng: np.random.Generator) -> "Plane":
        return cls.from_vectors(rng.standard_normal((m, n)))

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def projector(self) -> np.ndarray:
        return self.basis.T @ self.basis

    def complement(self) -> "Plane":
        """Orthogonal complement; requires dim < ambient_dim."""
        n, m = self.ambient_dim, self.dim
        if m == n:
            raise GeometryError("complement of the whole space is trivial")
        _, _, vt = np.linalg.svd(self.basis, full_matrices=True)
        return Plane(_orthonormalize(vt[m:]))

    def project(self, v: np.ndarray) -> np.ndarray:
        """Orthogonal projection of v (or rows of v) onto the plane."""
        return (np.asarray(v, dtype=float) @ self.basis.T) @ self.basis

    def coords(self, v: np.ndarray) -> np.ndarray:
        """Coordinates of the orthogonal projection in the stored basis."""
        return np.asarray(v, dtype=float) @ self.basis.T

    def contains(self, v: np.ndarray, tol: float = TOL) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.linalg.norm(v - self.project(v)) <= tol * max(1.0, np.linalg.norm(v)))

    def __repr__(self):
        return "Plane(n={}, m={})".format(self.ambient_dim, self.dim)


def _check_pair(U: Plane, V: Plane):
    if U.ambient_dim != V.ambient_dim:
        raise GeometryError("planes live in different ambient spaces")
    if U.dim != V.dim:
        raise GeometryError("planes have different dimensions")


def opnorm(A: np.ndarray) -> float:
    """Spectral norm of a matrix."""
    A = np.atleast_2d(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, ord=2))


def angle(U: Plane, V: Plane) -> float:
    """Angle metric ``||U_proj - V_proj||`` between two planes of equal dimension."""
    _check_pair(U, V)
    return opnorm(U.projector - V.projector)


def angle_projectors(P: np.ndarray, Q: np.ndarray) -> float:
    """Angle metric for planes given directly by projectors."""
    return opnorm(P - Q)


def angle_sup(U: Plane, V: Plane) -> float:
    """``sup |V_perp e|`` over unit vectors e in U, computed from singular values."""
    _check_pair(U, V)
    if V.dim == V.ambient_dim:
        return 0.0
    M = V.complement().basis @ U.basis.T
    return opnorm(M)


def restricted_inverse_norm(U: Plane, V: Plane) -> float:
    """Norm of the inverse of the orthogonal projection onto U restricted to V."""
    _check_pair(U, V)
    if angle(U, V) >= 1.0:
        raise GeometryError("planes not transversal-comparable (angle >= 1)")
    M = U.basis @ V.basis.T
    s = np.linalg.svd(M, compute_uv=False)
    return float(1.0 / s.min())


def oblique_project(X: Plane, Y: Plane, v: np.ndarray) -> np.ndarray:
    """Project v onto X along Y, i.e. the unique point of (v + Y) in X."""
    n = X.ambient_dim
    if Y.ambient_dim != n or X.dim + Y.dim != n:
        raise GeometryError("need dim X + dim Y = n in a common ambient space")
    if X.dim < n and angle(X.complement(), Y) >= 1.0:
        raise GeometryError("X and Y are not complementary (angle >= 1)")
    A = np.vstack([X.basis, Y.basis]).T
    c = np.linalg.solve(A, np.asarray(v, dtype=float))
    return X.basis.T @ c[: X.dim]


def simplex_diameter(points: np.ndarray) -> float:
    p = np.asarray(points, dtype=float)
    d = p[:, None, :] - p[None, :, :]
    return float(np.sqrt((d * d).sum(-1)).max())


def simplex_measure(points: np.ndarray) -> float:
    """k-dimensional measure of the simplex spanned by k+1 points.

    Computed as ``sqrt(det G) / k!`` with G the Gram matrix of the edge vectors
    from the first vertex. Near-degenerate simplices (measure below
    ``1e-14 * diam**k``) return exactly 0.
    """
    p = np.asarray(points, dtype=float)
    k = p.shape[0] - 1
    if k == 0:
        return 1.0
    E = p[1:] - p[0]
    det = np.linalg.det(E @ E.T)
    vol = math.sqrt(max(det, 0.0)) / math.factorial(k)
    if vol < 1e-14 * simplex_diameter(p) ** k:
        return 0.0
    return vol


def _in_plane(P: Plane, v: np.ndarray, tol: float) -> bool:
    return P.contains(v, tol)


def check_prop_tales1(theta: float, lam: float, X: Plane, Y: Plane, Z: Plane,
                      x: np.ndarray, z: np.ndarray, tol: float = 1e-9) -> bool:
    """Check ``|z| <= theta |x| / (1 - lam)`` for x in X, z in Z, z - x in Y.

    Raises
    ------
    HypothesisError
        If the configuration does not satisfy the hypotheses of the estimate.
    """
    n = X.ambient_dim
    k = X.dim
    if not (0 <= theta <= 1 and 0 <= lam < 1):
        raise HypothesisError("hypotheses not met: need theta in [0,1], lambda in [0,1)")
    if Y.dim != k or Z.dim != n - k or not (1 <= k <= n - 1):
        raise HypothesisError("hypotheses not met: plane dimensions")
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if not (_in_plane(X, x, tol) and _in_plane(Z, z, tol) and _in_plane(Y, z - x, tol)):
        raise HypothesisError("hypotheses not met: x in X, z in Z, z - x in Y")
    if angle(X, Y) > theta + tol or angle(Y, Z.complement()) > lam + tol:
        raise HypothesisError("hypotheses not met: angle bounds")
    return bool(np.linalg.norm(z) <= theta * np.linalg.norm(x) / (1 - lam) + tol)


def check_prop_tales2(theta: float, lam: float, gamma: float, W: Plane, T: Plane,
                      U: Plane, V: Plane, w, t, u, v, tol: float = 1e-9) -> bool:
    """Check the two-sided bound on |v| and the bound on |u - v| for u + t = w + v.

    The lower bound on |v| is a product of two factors and only follows from
    the one-sided estimates when ``gamma <= 1 - lam``, so that is required.
    """
    n = W.ambient_dim
    k = W.dim
    if not (0 <= theta <= 1 and 0 <= lam < 1 and 0 <= gamma < 1):
        raise HypothesisError("hypotheses not met: parameter ranges")
    if gamma > 1 - lam:
        raise HypothesisError("hypotheses not met: need gamma <= 1 - lambda")
    if T.dim != k or U.dim != n - k or V.dim != n - k or not (1 <= k <= n - 1):
        raise HypothesisError("hypotheses not met: plane dimensions")
    w, t, u, v = (np.asarray(a, dtype=float) for a in (w, t, u, v))
    scale = max(1.0, *(np.linalg.norm(a) for a in (w, t, u, v)))
    if not all(_in_plane(P, a, tol) for P, a in ((W, w), (T, t), (U, u), (V, v))):
        raise HypothesisError("hypotheses not met: vectors must lie in their planes")
    if np.linalg.norm(u + t - w - v) > tol * scale:
        raise HypothesisError("hypotheses not met: u + t = w + v")
    if (angle(W, T) > theta + tol or angle(T, U.complement()) > lam + tol
            or angle(T, V.complement()) > lam + tol or angle(U, V) > gamma + tol):
        raise HypothesisError("hypotheses not met: angle bounds")
    a = theta / (1 - lam) * np.linalg.norm(w)
    g = gamma / (1 - lam)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    lower = (nu - a) * (1 - g) <= nv + tol * scale
    upper = nv <= (nu + a) * (1 + g) + tol * scale
    diff = np.linalg.norm(u - v) <= g * (nu + a) + a + tol * scale
    return bool(lower and upper and diff)


def solve_near_identity(F: Callable[[np.ndarray], np.ndarray], y: np.ndarray, rho: float,
                        sigma: float, rng: Optional[np.random.Generator] = None,
                        starts: int = 8, iters: int = 200, tol: float = 1e-10) -> np.ndarray:
    """Find x in the closed rho-ball with F(x) = y when |F(x) - x| <= sigma rho.

    Uses a damped fixed-point iteration ``x <- x - beta (F(x) - y)`` from several
    starting points (y itself first). Returns the best iterate found.
    """
    if not 0 <= sigma < 1:
        raise GeometryError("sigma must be in [0, 1)")
    y = np.asarray(y, dtype=float)
    if np.linalg.norm(y) >= (1 - sigma) * rho:
        raise GeometryError("target outside B(0, (1 - sigma) rho)")
    rng = np.random.default_rng(0) if rng is None else rng
    best, best_res = y.copy(), np.inf
    for s in range(starts):
        if s == 0:
            x = y.copy()
        else:
            d = rng.standard_normal(y.shape)
            x = y + sigma * rho * rng.random() * d / np.linalg.norm(d)
        beta = 1.0
        res = np.linalg.norm(F(x) - y)
        for _ in range(iters):
            if res <= tol:
                break
            xn = x - beta * (F(x) - y)
            nrm = np.linalg.norm(xn)
            if nrm > rho:
                xn *= rho / nrm
            rn = np.linalg.norm(F(xn) - y)
            if rn < res:
                x, res = xn, rn
                beta = min(1.0, 1.5 * beta)
            else:
                beta *= 0.5
                if beta < 1e-12:
                    break
        if res < best_res:
            best, best_res = x, res
        if best_res <= tol:
            break
    return best

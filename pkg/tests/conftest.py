import numpy as np
import pytest

from curvem.geometry import Plane, oblique_project
from curvem.shapes import regular_polygon


def near_plane(P: Plane, eps: float, rng) -> Plane:
    """Plane whose basis is a small random perturbation of P's basis."""
    return Plane.from_vectors(P.basis + eps * rng.standard_normal(P.basis.shape))


def tales1_config(rng, n=3, k=1, eps=0.3):
    """Random valid configuration x in X, z in Z, z - x in Y."""
    X = Plane.random(n, k, rng)
    Y = near_plane(X, eps * rng.random(), rng)
    Z = near_plane(Y.complement(), eps * rng.random(), rng)
    x = X.basis.T @ rng.standard_normal(k)
    z = oblique_project(Z, Y, x)
    return X, Y, Z, x, z


def tales2_config(rng, n=4, k=2, eps=0.2):
    """Random valid configuration u + t = w + v with w, t, u, v in W, T, U, V."""
    W = Plane.random(n, k, rng)
    T = near_plane(W, eps * rng.random(), rng)
    U = near_plane(T.complement(), eps * rng.random(), rng)
    V = near_plane(U, eps * rng.random(), rng)
    w = W.basis.T @ rng.standard_normal(k)
    u = U.basis.T @ rng.standard_normal(n - k)
    t = oblique_project(T, V, w - u)
    v = t - (w - u)
    return W, T, U, V, w, t, u, v


@pytest.fixture(scope="session")
def circle512():
    return regular_polygon(512)


@pytest.fixture(scope="session")
def circle64():
    return regular_polygon(64)


def smooth_patch(rng, m=2, n=3, k=25, radius=0.4, alpha=1.0, curvature=1.0):
    """Samples of a random cubic graph over a random plane, with exact tangents.

    Returns ``(patch, theta_plane)`` where the patch is built over the graph's
    own tangent plane at the origin.
    """
    from curvem.regularity import build_patch
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    T, Nb = Q[:m], Q[m:]
    A = 0.5 * curvature * rng.standard_normal((n - m, m, m))
    A = A + np.swapaxes(A, 1, 2)
    C = 0.3 * curvature * rng.standard_normal((n - m, m, m, m))
    g = rng.uniform(-1, 1, (k * k if m == 2 else k, m))
    g = g[np.linalg.norm(g, axis=1) < 1] * radius * 0.999
    g = np.vstack([np.zeros(m), g])
    f = np.einsum("cab,ka,kb->kc", A, g, g) + np.einsum("cabd,ka,kb,kd->kc", C, g, g, g)
    Df = 2 * np.einsum("cab,kb->kca", A, g) + 3 * np.einsum("cabd,kb,kd->kca", C, g, g)
    pts = g @ T + f @ Nb
    tang = T[None] + np.einsum("kca,cn->kan", Df, Nb)
    bases = np.stack([np.linalg.qr(t.T)[0].T for t in tang])
    return build_patch(np.zeros(n), Plane(T), pts, radius, alpha, bases, "tangent")

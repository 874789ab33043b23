import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvem.energy import EnergySpec
from curvem.geometry import Plane, angle
from curvem.manifold import from_components
from curvem.regularity import (GraphPatch, PatchFailure, RegularityError, c_ang, check_tangent_proximity,
                               fit_patch, rl_from_energy, tilt_bounds, tilt_graph, verify_class)
from curvem.shapes import cube_surface, icosphere, regular_polygon, trefoil
from conftest import near_plane, smooth_patch


def test_rl_from_energy_examples():
    for spec in (EnergySpec("tp", 3.0), EnergySpec("menger", 5.0, l=3), EnergySpec("tpg", 2.0, m=1)):
        R, L, a = rl_from_energy(1.0, spec)
        assert (R, L) == (1.0, 1.0) and a == pytest.approx(1 - spec.p0 / spec.p)
    assert rl_from_energy(16.0, EnergySpec("tp", 4.0)) == pytest.approx((0.25, 2.0, 0.5))
    with pytest.raises(RegularityError, match="subcritical exponent"):
        rl_from_energy(1.0, EnergySpec("tp", 2.0))


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e6), st.floats(2.1, 12), st.floats(0.1, 10), st.floats(0.1, 10))
def test_rl_product_invariant(E, p, c1, c2):
    spec = EnergySpec("tp", p)
    R, L, a = rl_from_energy(E, spec, c1, c2)
    assert R ** a * L == pytest.approx(c1 ** a * c2, rel=1e-12)
    R2, L2, _ = rl_from_energy(2 * E, spec, c1, c2)
    assert R2 < R and L2 > L


def test_c_ang():
    assert c_ang(2, 4) == 2 * (1 + 16 ** 2) + 8 == 522


def test_flat_patch():
    M = cube_surface(4, 2.0)
    x = int(np.argmin(np.linalg.norm(M.vertices - np.array([0, 0, 1.0]), axis=1)))
    p = fit_patch(M, x, 0.9)
    assert isinstance(p, GraphPatch)
    assert np.abs(p.heights).max() < 1e-14
    assert p.lip_estimate < 1e-14 and p.holder_L < 1e-12


def test_circle_patch_closed_form():
    M = regular_polygon(512)
    p = fit_patch(M, 0, 0.5)
    xi = np.abs(p.xi[:, 0])
    assert np.allclose(np.abs(p.heights[:, 0]), 1 - np.sqrt(1 - xi ** 2), atol=1e-12)
    xm = xi.max()
    assert p.lip_estimate <= xm / math.sqrt(1 - xm ** 2)
    assert p.heights[p.origin_index()] == pytest.approx(0.0, abs=1e-15)
    assert np.abs(p.gradients[p.origin_index()]).max() < 1e-12


def test_parallel_circles_fail():
    a = regular_polygon(128, n=3).vertices
    M = from_components([a, a + np.array([0, 0, 0.01])])
    p = fit_patch(M, 0, 0.5)
    assert isinstance(p, PatchFailure) and not p
    i, j = p.witness
    assert (i < 128) != (j < 128)


def test_verify_class_examples(circle512):
    cert = verify_class(circle512, 0.5, 2.0, 1.0, 0.5)
    assert cert.verdict and cert.reason == ""
    bad = verify_class(circle512, 0.5, 0.01, 1.0, 0.5)
    assert not bad.verdict and bad.reason == "holder"
    big = verify_class(circle512.scaled(1.5), 0.5, 2.0, 1.0, 0.5)
    assert not big.verdict and big.reason == "diameter"


def test_verify_class_lstsq(circle512):
    assert verify_class(circle512, 0.5, 2.0, 1.0, 0.5, method="lstsq").verdict


def test_verify_class_monotone():
    M = regular_polygon(256)
    assert verify_class(M, 0.5, 2.0, 1.0, 0.5).verdict
    for R, L in [(0.3, 2.0), (0.5, 3.0), (0.2, 10.0)]:
        assert verify_class(M, R, L, 1.0, 0.5).verdict


def test_verify_class_surfaces():
    assert verify_class(icosphere(3), 0.5, 3.0, 1.0, 1.0).verdict
    assert verify_class(trefoil(300, 0.25), 0.1, 20.0, 1.0, 1.0).verdict


def test_two_sheets_fail_class():
    a = regular_polygon(128, n=3).vertices
    M = from_components([a, a + np.array([0, 0, 0.01])])
    cert = verify_class(M, 0.5, 2.0, 1.1, 0.5)
    assert not cert.verdict and cert.reason == "graph"


def test_improved_height_estimate(circle512):
    L, alpha = 2.0, 0.5
    for x in range(0, 512, 37):
        p = fit_patch(circle512, x, 0.5, alpha)
        r = np.linalg.norm(p.xi, axis=1)
        assert np.all(np.linalg.norm(p.heights, axis=1) <= L * r ** (1 + alpha) + 1e-12)


def test_tilt_identity():
    p = fit_patch(regular_polygon(256), 3, 0.5)
    q = tilt_graph(p, p.plane)
    assert np.allclose(q.xi, p.xi) and np.allclose(q.heights, p.heights)


def test_tilt_circle():
    p = fit_patch(regular_polygon(512), 0, 0.5)
    t = 0.005
    B = p.plane.basis[0]
    N = p.plane.complement().basis[0]
    U = Plane.from_vectors([math.cos(t) * B + math.sin(t) * N])
    q = tilt_graph(p, U)
    assert np.abs(q.ungraph() - p.points).max() < 1e-9
    b = tilt_bounds(angle(U, p.plane), p.holder_L, p.alpha)
    assert q.lip_estimate <= b["lip"]
    back = tilt_graph(q, p.plane)
    assert np.abs(back.heights - p.heights).max() < 1e-8


def test_tilt_too_large():
    p = fit_patch(regular_polygon(64), 0, 0.5)
    with pytest.raises(RegularityError, match="tilt angle too large"):
        tilt_graph(p, Plane.from_vectors([[1.0, 0.05]]))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_tilt_bounds_random(seed, m):
    rng = np.random.default_rng(seed)
    p = smooth_patch(rng, m=m)
    U = near_plane(p.plane, 0.009 * rng.random() / math.sqrt(m), rng)
    theta = angle(U, p.plane)
    if not 0 < theta < 0.009:
        return
    q = tilt_graph(p, U)
    b = tilt_bounds(theta, p.holder_L, p.alpha)
    assert np.abs(q.ungraph() - p.points).max() < 1e-8
    assert q.lip_estimate <= b["lip"] * max(1.0, p.lip_estimate) + 1e-12
    assert q.holder_L <= b["holder"] + 1e-9
    o = q.origin_index()
    assert np.linalg.norm(q.gradients[o], 2) ** 2 <= b["dg0_sq"] + 1e-15


def test_tangent_proximity():
    R, L, d, a = 0.5, 2.0, 1.1, 0.5
    S1 = regular_polygon(512)
    S2 = regular_polygon(512, radius=1 + 1e-4)
    c1, c2 = verify_class(S1, R, L, d, a), verify_class(S2, R, L, d, a)
    res = check_tangent_proximity(S1, S2, 0, 0, 4.0, c1, c2)
    assert res.ok and res.C_ang == 522
    assert res.d_h == pytest.approx(2e-4, rel=1e-3)
    same = check_tangent_proximity(S1, S1, 5, 5, 4.0, c1, c1, d_h=0.0)
    assert same.angle < 1e-12 and same.ok


def test_tangent_proximity_threshold():
    R, L, d, a = 0.5, 2.0, 1.1, 0.5
    S1, S2 = regular_polygon(512), regular_polygon(512, radius=1.001)
    c1, c2 = verify_class(S1, R, L, d, a), verify_class(S2, R, L, d, a)
    with pytest.raises(RegularityError, match="2\\^-6 A\\^-2 R\\^2"):
        check_tangent_proximity(S1, S2, 0, 0, 4.0, c1, c2)

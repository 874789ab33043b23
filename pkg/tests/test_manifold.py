import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvem import manifold as mf
from curvem.geometry import angle, Plane
from curvem.manifold import DiscreteManifold, ManifoldError, from_components, hausdorff_distance, sample
from curvem.shapes import cube_surface, ellipse, icosphere, regular_polygon, tetrahedron, trefoil


def test_load_curve_json_roundtrip(tmp_path):
    M = regular_polygon(64, n=3)
    p = tmp_path / "c.json"
    mf.save(M, p)
    L = mf.load(p)
    assert (L.m, L.n, len(L.cells)) == (1, 3, 64)
    assert np.array_equal(L.vertices, M.vertices)


def test_load_obj_roundtrip(tmp_path):
    M = icosphere(2)
    p = tmp_path / "s.obj"
    mf.save(M, p)
    L = mf.load(p)
    assert (L.m, L.n) == (2, 3)
    assert np.allclose(L.vertices, M.vertices, atol=0)


def test_load_boundary_error(tmp_path):
    p = tmp_path / "soup.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 3\nf 1 3 4\n")
    with pytest.raises(ManifoldError, match="manifold has boundary"):
        mf.load(p)


def test_load_diagnostics(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"m": 1,\n "n": 2,\n "components": [[0, 0], }')
    with pytest.raises(ManifoldError, match="line 3"):
        mf.load(p)
    q = tmp_path / "bad.obj"
    q.write_text("v 0 0 0\nv 1 0 x\n")
    with pytest.raises(ManifoldError, match="line 2"):
        mf.load(q)
    r = tmp_path / "quad.obj"
    r.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(ManifoldError, match="only triangles"):
        mf.load(r)


def test_degenerate_cell_rejected():
    with pytest.raises(ManifoldError, match="degenerate"):
        from_components([[[0, 0], [1, 0], [1, 0], [0, 1]]])


def test_self_intersection_rejected():
    # figure-eight polygon crosses itself
    with pytest.raises(ManifoldError):
        from_components([[[0, 0], [1, 1], [1, 0], [0, 1]]])


def test_sample_circle_weight():
    S = sample(regular_polygon(256), 1)
    assert len(S) == 256
    assert S.total_weight == pytest.approx(256 * 2 * math.sin(math.pi / 256), rel=1e-12)
    assert S.total_weight == pytest.approx(6.28312, abs=1e-4)


def test_sample_icosphere_area():
    S = sample(icosphere(3), 1)
    assert abs(S.total_weight / (4 * math.pi) - 1) < 0.01


@pytest.mark.parametrize("M", [regular_polygon(30), trefoil(50), icosphere(1), cube_surface(2)],
                         ids=["circle", "trefoil", "icosphere", "cube"])
def test_sample_density_conserves_weight(M):
    base = sample(M, 1).total_weight
    assert sample(M, 4).total_weight == pytest.approx(base, rel=1e-12)
    S = sample(M, 4)
    assert all(T.dim == M.m for T in S.tangents[:20])


def test_sample_density_square_for_triangles():
    with pytest.raises(ManifoldError):
        sample(icosphere(1), 3)


def _tangent_error(N):
    # cell tangent vs. analytic tangent at the cell's first vertex (first-order estimator)
    t = 2 * np.pi * np.arange(N) / N
    M = ellipse(N, 1.0, 0.5)
    d = np.stack([-np.sin(t), 0.5 * np.cos(t)], 1)
    return max(angle(Plane.from_vectors([M.cell_bases[i, 0]]), Plane.from_vectors([d[i]])) for i in range(N))


def test_tangent_convergence_first_order():
    errs = [_tangent_error(N) for N in (128, 256, 512)]
    for a, b in zip(errs, errs[1:]):
        assert 1.5 <= a / b <= 2.5


def test_vertex_tangents_converge():
    def err(N):
        t = 2 * np.pi * np.arange(N) / N
        M = ellipse(N, 1.0, 0.5)
        d = np.stack([-np.sin(t), 0.5 * np.cos(t)], 1)
        return max(angle(M.vertex_tangent(i), Plane.from_vectors([d[i]])) for i in range(N))
    e1, e2 = err(128), err(256)
    assert e1 / e2 >= 1.5


@pytest.mark.parametrize("N", [64, 65, 101, 128])
def test_polygon_diameter(N):
    M = regular_polygon(N)
    expected = 2.0 if N % 2 == 0 else 2 * math.cos(math.pi / (2 * N))
    assert M.diameter == pytest.approx(expected, abs=1e-12)
    assert M.translated([5.0, -3.0]).diameter == pytest.approx(M.diameter, abs=1e-12)


def test_tetrahedron_diameter():
    assert tetrahedron(1.0).diameter == pytest.approx(1.0, abs=1e-12)


def test_hausdorff_examples():
    A = regular_polygon(128)
    assert hausdorff_distance(A, A) < 1e-12
    B = regular_polygon(128, radius=2.0)
    assert hausdorff_distance(A, B) == pytest.approx(2.0, abs=2 * A.resolution)
    C = regular_polygon(128, n=3)
    D = C.translated([0.1, 0, 0])
    assert hausdorff_distance(C, D) == pytest.approx(0.2, abs=C.resolution)
    assert hausdorff_distance(C, D, convention="max") == pytest.approx(0.1, abs=C.resolution)


def test_hausdorff_sum_identity():
    A, B = regular_polygon(60), mf.from_components([ellipse(80, 1.2, 0.7).vertices])
    total = hausdorff_distance(A, B)
    assert total == pytest.approx(mf.one_sided_distance(A, B) + mf.one_sided_distance(B, A), rel=1e-12)


def test_hausdorff_against_dense_oracle():
    A = regular_polygon(40)
    B = ellipse(50, 1.3, 0.8)
    # brute force: dense points on A against dense points on B
    def dense(M, k=200):
        s = np.linspace(0, 1, k, endpoint=False)[:, None, None]
        a, b = M.vertices[M.cells[:, 0]], M.vertices[M.cells[:, 1]]
        return ((1 - s) * a + s * b).reshape(-1, 2)
    PA, PB = dense(A), dense(B)
    D = np.linalg.norm(PA[:, None] - PB[None], axis=2)
    oracle = D.min(1).max() + D.min(0).max()
    assert hausdorff_distance(A, B) == pytest.approx(oracle, abs=2e-3)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_hausdorff_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    Ms = [regular_polygon(40, radius=1 + 0.3 * rng.random()).translated(0.2 * rng.standard_normal(2))
          for _ in range(3)]
    tol = 2 * max(M.resolution for M in Ms) / 8
    a, b, c = Ms
    assert hausdorff_distance(a, c) <= hausdorff_distance(a, b) + hausdorff_distance(b, c) + tol
    assert hausdorff_distance(a, b) == pytest.approx(hausdorff_distance(b, a), abs=tol)


def test_components_and_links():
    a = regular_polygon(30, n=3).vertices
    b = a[:, [0, 2, 1]] + np.array([1.0, 0, 0])
    M = from_components([a, b])
    assert M.components.max() == 1
    assert M.min_nonadjacent_distance > 0


def test_rigid_motion_helpers():
    M = trefoil(60)
    Q, _ = np.linalg.qr(np.random.default_rng(2).standard_normal((3, 3)))
    T = M.transformed(Q, np.ones(3))
    assert T.total_measure == pytest.approx(M.total_measure, rel=1e-12)
    assert M.scaled(2.0).total_measure == pytest.approx(2 * M.total_measure, rel=1e-12)

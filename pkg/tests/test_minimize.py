import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvem.energy import EnergyError, EnergySpec, QuadratureConfig, evaluate
from curvem.manifold import from_components
from curvem.minimize import (FlowError, FlowOptions, constraint_value, descend, energy_and_gradient,
                             energy_gradient, fd_gradient, initial_state, projected_crossings, run_flow,
                             safety_radius)
from curvem.shapes import regular_polygon, tetrahedron, trefoil, wavy_circle


def random_curve(seed, N=16):
    rng = np.random.default_rng(seed)
    t = 2 * np.pi * np.arange(N) / N
    X = np.stack([np.cos(t), np.sin(t), 0.3 * np.sin(2 * t)], 1)
    return from_components([X + 0.04 * rng.standard_normal(X.shape)])


SPECS = [EnergySpec("tp", 2.0), EnergySpec("tp", 3.5), EnergySpec("tpg", 3.0),
         EnergySpec("menger", 4.0, l=3), EnergySpec("menger", 4.0, l=2), EnergySpec("menger", 4.0, l=1)]


def rel_err(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: "{}{}-p{}".format(s.kind, s.l or "", s.p))
def test_gradient_matches_fd(spec):
    M = random_curve(0)
    assert rel_err(energy_gradient(M, spec), fd_gradient(M, spec)) <= 1e-4


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(SPECS[:4]))
def test_gradient_matches_fd_random(seed, spec):
    M = random_curve(seed)
    assert rel_err(energy_gradient(M, spec), fd_gradient(M, spec)) <= 1e-4


def test_gradient_density_two():
    M = random_curve(3, 10)
    q = QuadratureConfig(density=2)
    spec = EnergySpec("tp", 3.0)
    assert rel_err(energy_gradient(M, spec, q), fd_gradient(M, spec, q)) <= 1e-4


@pytest.mark.parametrize("spec", [EnergySpec("tp", 5.0, m=2), EnergySpec("tpg", 5.0, m=2),
                                  EnergySpec("menger", 9.0, m=2, l=4), EnergySpec("menger", 9.0, m=2, l=2)],
                         ids=["tp", "tpg", "menger4", "menger2"])
def test_surface_gradient_matches_fd(spec):
    T = tetrahedron()
    T = T.with_vertices(T.vertices + 0.05 * np.random.default_rng(1).standard_normal(T.vertices.shape))
    assert rel_err(energy_gradient(T, spec), fd_gradient(T, spec)) <= 1e-4


def test_energy_matches_evaluator():
    M = random_curve(5)
    for spec in SPECS:
        E, _ = energy_and_gradient(M, spec)
        assert E == pytest.approx(evaluate(M, spec).value, rel=1e-12)


def test_round_circle_gradient_radial():
    M = regular_polygon(64)
    g = energy_gradient(M, EnergySpec("tp", 3.0))
    radial = np.einsum("ij,ij->i", g, M.vertices)
    tangential = g[:, 1] * M.vertices[:, 0] - g[:, 0] * M.vertices[:, 1]
    assert np.ptp(radial) <= 1e-6 * np.abs(radial).max()
    assert np.abs(tangential).max() <= 1e-6 * np.abs(radial).max()


def test_gradient_translation_invariant():
    M = random_curve(7)
    spec = EnergySpec("tp", 3.0)
    g = energy_gradient(M, spec)
    h = energy_gradient(M.translated([3.0, -2.0, 1.0]), spec)
    assert np.abs(g - h).max() <= 1e-10 * np.abs(g).max()


def test_gradient_errors():
    M = random_curve(1)
    with pytest.raises(EnergyError):
        energy_gradient(M, EnergySpec("tp", 3.0), QuadratureConfig(mode="monte_carlo", samples=10))
    # reversing edge (0, 1) onto cells 5-6 makes two quadrature nodes coincide
    Xs = M.vertices.copy()
    Xs[5], Xs[6] = M.vertices[1], M.vertices[0]
    Md = M
    with pytest.raises(EnergyError, match="infinite"):
        energy_gradient(Md.with_vertices(Xs), EnergySpec("tp", 3.0))


@pytest.mark.parametrize("sigma", [0.0, 1.0, -0.5, 1.5])
def test_sigma_range(sigma):
    with pytest.raises(FlowError, match="sigma must be in \\(0,1\\)"):
        FlowOptions(sigma=sigma)


def test_bad_constraint():
    with pytest.raises(FlowError):
        FlowOptions(constraint="volume")


def test_round_circle_stationary():
    spec = EnergySpec("tp", 2.0)
    opts = FlowOptions()
    s0 = initial_state(regular_polygon(64), spec, opts)
    s1 = descend(s0, spec, opts)
    assert s1.converged or abs(s1.energy - s0.energy) <= 1e-8


@pytest.fixture(scope="module")
def wavy_flow():
    spec = EnergySpec("tp", 2.0)
    opts = FlowOptions(sigma=0.5)
    M = wavy_circle(64, 0.1, 3)
    return M, spec, opts, run_flow(M, spec, opts, 60)


def test_flow_monotone_and_gated(wavy_flow):
    M, spec, opts, s = wavy_flow
    E = [initial_state(M, spec, opts).energy] + [h.energy for h in s.history]
    assert all(b < a for a, b in zip(E, E[1:]))
    assert s.iteration == len(s.history) > 0


def test_flow_steps_within_safety_radius():
    spec = EnergySpec("tp", 2.0)
    opts = FlowOptions(sigma=0.5)
    state = initial_state(wavy_circle(48, 0.1, 3), spec, opts)
    for _ in range(15):
        safe = safety_radius(state.manifold)
        new = descend(state, spec, opts)
        if new.converged:
            break
        step = np.linalg.norm(new.manifold.vertices - state.manifold.vertices, axis=1).max()
        assert step < opts.sigma * safe
        assert new.history[-1].d_h_from_previous < safe
        assert new.manifold.min_nonadjacent_distance > 0
        state = new


def test_constraint_drift(wavy_flow):
    M, spec, opts, s = wavy_flow
    assert constraint_value(s.manifold, "fixed_total_measure") == pytest.approx(M.total_measure, rel=1e-9)


def test_fixed_diameter():
    spec = EnergySpec("tp", 3.0)
    M = wavy_circle(40, 0.15, 3)
    opts = FlowOptions(constraint="fixed_diameter")
    s = run_flow(M, spec, opts, 10)
    assert s.manifold.diameter == pytest.approx(M.diameter, rel=1e-9)
    assert s.energy < initial_state(M, spec, opts).energy


def test_flow_deterministic_and_restartable():
    spec = EnergySpec("tp", 2.0)
    opts = FlowOptions()
    M = wavy_circle(40, 0.1, 3)
    a = run_flow(M, spec, opts, 8)
    b = run_flow(M, spec, opts, 8)
    assert np.array_equal(a.manifold.vertices, b.manifold.vertices)
    state = initial_state(M, spec, opts)
    for _ in range(4):
        state = descend(state, spec, opts)
    for _ in range(4):
        state = descend(state, spec, opts)
    assert np.array_equal(state.manifold.vertices, a.manifold.vertices)
    assert [h.energy for h in state.history] == [h.energy for h in a.history]


def test_projected_crossings():
    assert projected_crossings(trefoil(120)) == 3
    assert projected_crossings(regular_polygon(50, n=3)) == 0
    with pytest.raises(FlowError):
        projected_crossings(regular_polygon(20))


def test_trefoil_short_flow_keeps_crossings():
    spec = EnergySpec("tp", 2.0)
    crossings = []
    run_flow(trefoil(48, 0.5), spec, FlowOptions(sigma=0.1), 100,
             callback=lambda st: crossings.append(projected_crossings(st.manifold)))
    assert min(crossings) >= 3

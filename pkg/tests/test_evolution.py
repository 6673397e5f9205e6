import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh, expm

from fraclap import FracProblem, HeatSystem, TimeGrid, make_region


def system(s=0.8, N=20, T=0.3, M=16, omega=(-0.3, 0.8), L=1.0):
    p = FracProblem(s, L, N)
    return HeatSystem(p, TimeGrid(T, M), make_region(p, *omega))


# -- oracles -------------------------------------------------------------------

def test_free_evolution_matches_eigen_expansion(rng):
    sys_ = system(s=0.6, N=15, M=9)
    A, Mh = sys_.stiffness.toarray(), sys_.mass.toarray()
    lam, V = eigh(A, Mh)  # V^T Mh V = I
    z0 = rng.standard_normal(15)
    c = V.T @ Mh @ z0
    ref = V @ (c * (1.0 + sys_.grid.dt * lam) ** (-9))
    np.testing.assert_allclose(sys_.terminal_state(z0), ref, rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(sys_.solve_forward(z0).final, ref, rtol=1e-11, atol=1e-13)


def test_first_order_in_time_towards_exponential():
    p = FracProblem(0.7, 1.0, 12)
    z0 = np.sin(np.pi * p.nodes)
    errs = []
    for M in (20, 40, 80):
        sys_ = HeatSystem(p, TimeGrid(0.3, M), make_region(p, -0.3, 0.8))
        A, Mh = sys_.stiffness.toarray(), sys_.mass.toarray()
        exact = expm(-0.3 * np.linalg.solve(Mh, A)) @ z0
        errs.append(np.linalg.norm(sys_.terminal_state(z0) - exact))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    np.testing.assert_allclose(rates, 1.0, atol=0.1)


def test_step_by_step_matches_propagators(rng):
    sys_ = system(M=6)
    z0 = rng.standard_normal(20)
    v = rng.standard_normal((6, 20))
    z = z0
    for n in range(6):
        z = sys_.step_forward(z, v[n])
    np.testing.assert_allclose(sys_.solve_forward(z0, v).final, z, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(sys_.terminal_state(z0, v), z, rtol=1e-12, atol=1e-14)
    phi = v[0]
    for _ in range(6):
        phi = sys_.step_backward(phi)
    np.testing.assert_allclose(sys_.solve_adjoint(v[0]).states[0], phi, rtol=1e-12, atol=1e-14)


# -- duality -------------------------------------------------------------------

def duality_gap(sys_, z0, v, phiT):
    traj = sys_.solve_forward(z0, v)
    adj = sys_.solve_adjoint(phiT)
    lhs = sum(sys_.grid.dt * sys_.h_inner(v[n], sys_.region.mask * adj.states[n]) for n in range(sys_.M))
    rhs = sys_.mass_inner(traj.final, phiT) - sys_.mass_inner(z0, adj.states[0])
    return lhs, rhs


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s=st.floats(0.05, 0.95))
def test_discrete_duality(seed, s):
    rng = np.random.default_rng(seed)
    sys_ = system(s=s, N=20, M=16)
    lhs, rhs = duality_gap(sys_, rng.standard_normal(20), rng.standard_normal((16, 20)), rng.standard_normal(20))
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


# -- properties ----------------------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_forward_map_is_affine(seed, a, b):
    rng = np.random.default_rng(seed)
    sys_ = system(M=5)
    z1, z2 = rng.standard_normal((2, 20))
    v1, v2 = rng.standard_normal((2, 5, 20))
    lhs = sys_.terminal_state(a * z1 + b * z2, a * v1 + b * v2)
    rhs = a * sys_.terminal_state(z1, v1) + b * sys_.terminal_state(z2, v2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(rhs).max()))


def test_control_outside_region_has_no_effect(rng):
    sys_ = system(M=5)
    v = rng.standard_normal((5, 20)) * (1 - sys_.region.mask)
    np.testing.assert_array_equal(sys_.terminal_state(np.zeros(20), v), 0.0)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_free_energy_decays(s, rng):
    sys_ = system(s=s, M=30)
    traj = sys_.solve_forward(rng.standard_normal(20))
    l2 = [sys_.mass_inner(z, z) for z in traj.states]
    en = [sys_.energy(z) for z in traj.states]
    assert np.all(np.diff(l2) < 0)
    assert np.all(np.diff(en) < 0)


def test_uncontrolled_state_does_not_vanish():
    sys_ = system(s=0.8, N=63, M=200)
    zT = sys_.terminal_state(np.sin(np.pi * sys_.problem.nodes))
    assert np.sqrt(sys_.h_inner(zT, zT)) > 1e-3


def test_trajectory_times_and_shapes():
    sys_ = system(M=4)
    fwd = sys_.solve_forward(np.ones(20))
    adj = sys_.solve_adjoint(np.ones(20))
    assert fwd.states.shape == (5, 20) and adj.states.shape == (5, 20)
    np.testing.assert_allclose(fwd.times, np.linspace(0, 0.3, 5))
    np.testing.assert_allclose(adj.times, [0.075, 0.15, 0.225, 0.3, 0.3])
    np.testing.assert_array_equal(fwd.initial, np.ones(20))


def test_region_mask_is_strictly_inside():
    p = FracProblem(0.5, 1.0, 9)  # nodes -0.8, -0.6, ..., 0.8
    reg = make_region(p, -0.6, 0.2)
    np.testing.assert_array_equal(reg.active, [2, 3, 4])
    for N in (9, 19, 29, 49, 99):
        q = FracProblem(0.5, 1.0, N)
        x = q.nodes[make_region(q, -0.6, 0.2).active]
        assert x.min() > -0.6 + 1e-6 and x.max() < 0.2 - 1e-6


@pytest.mark.parametrize(
    "bad", [lambda s: s.solve_forward(np.ones(3)), lambda s: s.solve_forward(np.ones(20), np.ones((3, 20)))]
)
def test_shape_errors(bad):
    with pytest.raises(ValueError):
        bad(system(M=4))


@pytest.mark.parametrize("args", [(0.0, 4), (-1.0, 4), (0.3, 0)])
def test_invalid_time_grid(args):
    with pytest.raises(ValueError):
        TimeGrid(*args)


def test_empty_region_rejected():
    with pytest.raises(ValueError):
        make_region(FracProblem(0.5, 1.0, 3), 0.1, 0.2)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from constrained_gaussians import (
    ConsistencyError, ConstraintSet, EquivalenceNotPreservedError, GaussianState,
    InvalidInputError, QuadraticHamiltonian, check_evolution_unitarity, classical_flow,
    evolve_gaussian, evolve_projected, norm_constrained, project_eta, reduce_hamiltonian,
    riccati_frame,
)
from constrained_gaussians.dynamics import (
    evolve_gaussian_full, riccati_rhs, symplectic_residual, tracked_sqrt_det,
)
from conftest import (
    random_A, random_compatible_hamiltonian, random_constraints, random_gaussian,
)

seeds = st.integers(0, 2 ** 32 - 1)
OSC = QuadraticHamiltonian.oscillator([1.0])
DILATION = QuadraticHamiltonian([[0.0]], [[1.0]], [[0.0]], epsilon=-0.5j)
L_Q = ConstraintSet.from_vectors([[0.0, 1.0]])


def random_hamiltonian(rng, n):
    hess = rng.normal(size=(2 * n, 2 * n))
    return QuadraticHamiltonian.from_hessian(hess + hess.T)


def test_hamiltonian_validation():
    with pytest.raises(InvalidInputError, match="H_PP"):
        QuadraticHamiltonian([[1, 2], [0, 1]], np.zeros((2, 2)), np.eye(2))
    H = QuadraticHamiltonian.oscillator([1.0, 2.0], masses=[1.0, 0.5])
    assert H.n == 2
    assert np.allclose(QuadraticHamiltonian.from_hessian(H.hessian).hessian, H.hessian)


def test_oscillator_flow_is_rotation():
    u = classical_flow(OSC, np.pi / 2).u
    assert np.allclose(u, [[0, -1], [1, 0]], atol=1e-12)


@settings(max_examples=25)
@given(seeds)
def test_flow_is_symplectic(seed):
    rng = np.random.default_rng(seed)
    H = random_hamiltonian(rng, int(rng.integers(1, 4)))
    for t in (0.5, 3.0):
        assert symplectic_residual(classical_flow(H, t).u) < 1e-9


def test_rk4_flow_matches_exponential(rng):
    H = random_hamiltonian(rng, 2)
    a = classical_flow(H, 0.7).u
    b = classical_flow(H, 0.7, method="rk4").u
    assert np.max(np.abs(a - b)) < 1e-9 * max(1, np.max(np.abs(a)))


def test_oscillator_ground_state_evolution():
    g0 = GaussianState(1.0, [[1j]])
    for t in np.linspace(0, 10, 11):
        g = evolve_gaussian(g0, OSC, t)
        assert abs(g.A[0, 0] - 1j) < 1e-8
        assert abs(g.c - np.exp(-0.5j * t)) < 1e-8


def test_branch_tracking_past_a_full_turn():
    g0 = GaussianState(1.0, [[2j]])
    g = evolve_gaussian(g0, OSC, 2 * np.pi)
    # after one period the sqrt det C winds to -1: c picks up the Maslov sign
    assert abs(g.c + 1) < 1e-8
    assert abs(g.A[0, 0] - 2j) < 1e-8


def test_tracked_sqrt_det_continuity():
    val = tracked_sqrt_det(lambda s: np.array([[np.exp(1j * s)]]), 3 * np.pi)
    assert val == pytest.approx(np.exp(1.5j * np.pi))


@settings(max_examples=20)
@given(seeds)
def test_transport_matches_riccati(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    H, g0 = random_hamiltonian(rng, n), random_gaussian(rng, n)
    t = 0.5
    point = evolve_gaussian_full(g0, H, t)
    B, C = riccati_frame(H, g0.A, t)
    A_ric = np.linalg.solve(C.T, B.T).T
    assert np.max(np.abs(A_ric - point.state.A)) < 1e-8 * max(1, np.max(np.abs(A_ric)))


def test_riccati_rhs_is_derivative(rng):
    H, g0 = random_hamiltonian(rng, 2), random_gaussian(rng, 2)
    h = 1e-5
    fd = (evolve_gaussian(g0, H, h).A - evolve_gaussian(g0, H, -h).A) / (2 * h)
    assert np.allclose(fd, riccati_rhs(H, g0.A), atol=1e-6)


def test_evolution_keeps_plain_norm(rng):
    from constrained_gaussians.gaussian import plain_norm
    H, g0 = random_hamiltonian(rng, 2), random_gaussian(rng, 2)
    assert plain_norm(evolve_gaussian(g0, H, 1.3)) == pytest.approx(plain_norm(g0), rel=1e-9)


def test_reduction_fixtures():
    xi = QuadraticHamiltonian(np.zeros((2, 2)), np.zeros((2, 2)), [[0, 1], [1, 0]])
    red = reduce_hamiltonian(xi, ConstraintSet.from_vectors([[1, 0, 0, 0]]))
    assert red.compatible and np.max(np.abs(red.reduced.hessian)) < 1e-12
    bad = QuadraticHamiltonian(np.zeros((2, 2)), np.zeros((2, 2)), [[1, 0], [0, 0]])
    assert not reduce_hamiltonian(bad, ConstraintSet.from_vectors([[0, 0, 1, 0]])).compatible


@settings(max_examples=25)
@given(seeds)
def test_compatible_hamiltonians_keep_constraint_plane(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    k = int(rng.integers(1, n + 1))
    L = random_constraints(rng, n, k)
    H = random_compatible_hamiltonian(rng, L)
    assert reduce_hamiltonian(H, L).compatible
    rep = check_evolution_unitarity(H, L, [0.5, 1.0])
    assert rep["preserves_constraints"]


def test_unitarity_detector():
    good = check_evolution_unitarity(DILATION, L_Q, [0.5, 1.0, 2.0])
    assert good["unitary"] and good["norm_conserved"] and good["norm_drift"] < 1e-8
    bad = check_evolution_unitarity(DILATION.with_epsilon(0.0), L_Q, [0.5, 1.0])
    assert bad["preserves_constraints"] and not bad["balanced"] and not bad["unitary"]
    moving = check_evolution_unitarity(OSC, L_Q, [0.5])
    assert not moving["preserves_constraints"]


def test_projected_evolution_dilation():
    g0 = GaussianState(1.0, [[1j]])
    pe = evolve_projected(g0, DILATION, L_Q, 1.0)
    assert pe.c_check_formula == pytest.approx(pe.c_check_direct, rel=1e-8)
    assert pe.jacobian == pytest.approx(np.e)
    assert pe.c_check_direct == pytest.approx(project_eta(g0, L_Q).c_check, rel=1e-8)


@settings(max_examples=15)
@given(seeds)
def test_projected_evolution_random(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    k = int(rng.integers(1, n + 1))
    L = random_constraints(rng, n, k)
    H = random_compatible_hamiltonian(rng, L, stable=bool(rng.integers(0, 2)))
    g0 = random_gaussian(rng, n)
    pe = evolve_projected(g0, H, L, 0.7)
    assert pe.c_check_formula == pytest.approx(pe.c_check_direct, rel=1e-8)


def test_projected_evolution_rejects_moving_plane():
    with pytest.raises(EquivalenceNotPreservedError):
        evolve_projected(GaussianState(1.0, [[1j]]), OSC, L_Q, 0.5)


def test_constrained_norm_grows_without_balancing_epsilon():
    g0 = GaussianState(1.0, [[1j]])
    H = DILATION.with_epsilon(0.0)
    n0 = norm_constrained(g0, L_Q)
    n1 = norm_constrained(evolve_gaussian(g0, H, 1.0), L_Q)
    assert abs(n1 / n0 - 1) > 0.1
    n1_bal = norm_constrained(evolve_gaussian(g0, DILATION, 1.0), L_Q)
    assert n1_bal == pytest.approx(n0, rel=1e-10)


def test_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        evolve_gaussian(GaussianState(1.0, 1j * np.eye(2)), OSC, 1.0)
    with pytest.raises(InvalidInputError):
        reduce_hamiltonian(OSC, ConstraintSet.from_vectors([[1, 0, 0, 0]]))


def test_riccati_consistency_guard():
    H = QuadraticHamiltonian.oscillator([50.0])
    with pytest.raises(ConsistencyError):
        riccati_frame(H, [[1j]], 10.0, dt=0.5)

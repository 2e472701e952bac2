import numpy as np
import pytest

from constrained_gaussians import (
    ConstraintSet, GaussianState, InvalidInputError, OracleError, QuadraticHamiltonian,
    evolve_gaussian, inner_constrained, norm_constrained, quadrature_constrained_norm,
    split_step_evolve,
)
from constrained_gaussians.gaussian import decay_form, exp_quadratic_inner, weyl_apply
from constrained_gaussians.oracle import (
    GridWavefunction, fidelity, grid_inner, make_grid, sample, shifted_overlaps,
    wigner_covariance,
)
from conftest import random_constraints, random_gaussian, random_n1_hamiltonian


def test_quadrature_matches_closed_form_fixtures():
    L = ConstraintSet.from_vectors([[0.0, 1.0]])
    assert quadrature_constrained_norm(GaussianState(1, [[1j]]), L) == pytest.approx(
        2 * np.pi, rel=1e-10)
    L3 = ConstraintSet.from_vectors([[0, 0, 1, 0]])
    assert quadrature_constrained_norm(GaussianState(1, 1j * np.eye(2)), L3) == pytest.approx(
        2 * np.pi ** 1.5, rel=1e-10)


@pytest.mark.parametrize("n,k", [(1, 1), (2, 1), (2, 2)])
def test_quadrature_matches_random(rng, n, k):
    for _ in range(3):
        g, L = random_gaussian(rng, n), random_constraints(rng, n, k)
        assert quadrature_constrained_norm(g, L) == pytest.approx(norm_constrained(g, L),
                                                                  rel=1e-7)


def test_shifted_overlaps_agree_with_weyl_shift(rng):
    g, L = random_gaussian(rng, 2), random_constraints(rng, 2, 2)
    alphas = rng.normal(size=(4, 2))
    vals = shifted_overlaps(g, L, alphas)
    for a, v in zip(alphas, vals):
        assert v == pytest.approx(exp_quadratic_inner(g, weyl_apply(a @ L.basis, g)), rel=1e-10)


def test_quadrature_rejects_small_box():
    g = GaussianState(1, [[1j]])
    with pytest.raises(OracleError):
        quadrature_constrained_norm(g, ConstraintSet.from_vectors([[0.0, 1.0]]), alpha_box=1.0)


def test_quadrature_rejects_large_k():
    with pytest.raises(OracleError):
        quadrature_constrained_norm(GaussianState(1, 1j * np.eye(3)),
                                    ConstraintSet.from_vectors(np.eye(6)[3:]))


def test_grid_inner_matches_closed_form(rng):
    g1, g2 = random_gaussian(rng, 1), random_gaussian(rng, 1)
    assert grid_inner(g1, g2) == pytest.approx(exp_quadratic_inner(g1, g2), rel=1e-9)


def test_grid_requires_resolution():
    with pytest.raises(InvalidInputError):
        GridWavefunction([np.linspace(-1, 1, 10)], np.zeros(10))


def test_fidelity_of_identical_states(rng):
    g = random_gaussian(rng, 2)
    axes = make_grid(2, 8.0, points=128)
    w = sample(g, axes)
    assert fidelity(w, w) == pytest.approx(1.0)


def test_wigner_covariance_of_ground_state():
    cov = wigner_covariance(np.array([[1j]]))
    assert np.allclose(cov, 0.5 * np.eye(2))


def test_split_step_oscillator():
    g0 = GaussianState(1.0, [[2j]])
    H = QuadraticHamiltonian.oscillator([1.0])
    grid = split_step_evolve(g0, H, 1.0)
    exact = sample(evolve_gaussian(g0, H, 1.0), grid.axes)
    assert 1 - fidelity(grid, exact) < 1e-8
    # amplitudes, not only the ray, agree
    assert np.max(np.abs(grid.values - exact.values)) < 1e-6


def test_split_step_random_n1(rng):
    for _ in range(5):
        g0, H = random_gaussian(rng, 1), random_n1_hamiltonian(rng)
        grid = split_step_evolve(g0, H, 1.0)
        exact = sample(evolve_gaussian(g0, H, 1.0), grid.axes)
        assert 1 - fidelity(grid, exact) < 1e-6


def test_split_step_n2(rng):
    H = QuadraticHamiltonian([[1.0, 0.2], [0.2, 0.8]], np.zeros((2, 2)), [[1.0, 0.3], [0.3, 0.5]])
    g0 = random_gaussian(rng, 2)
    grid = split_step_evolve(g0, H, 0.5)
    exact = sample(evolve_gaussian(g0, H, 0.5), grid.axes)
    assert 1 - fidelity(grid, exact) < 1e-6


def test_split_step_epsilon_phase():
    g0 = GaussianState(1.0, [[1j]])
    H = QuadraticHamiltonian.oscillator([1.0], epsilon=0.7)
    grid = split_step_evolve(g0, H, 1.0)
    exact = sample(evolve_gaussian(g0, H, 1.0), grid.axes)
    assert np.max(np.abs(grid.values - exact.values)) < 1e-6


def test_split_step_unsupported():
    H = QuadraticHamiltonian([[0.0]], [[1.0]], [[0.0]])
    with pytest.raises(OracleError):
        split_step_evolve(GaussianState(1.0, [[1j]]), H, 1.0)
    with pytest.raises(OracleError):
        split_step_evolve(GaussianState(1.0, 1j * np.eye(3)),
                          QuadraticHamiltonian.oscillator([1, 1, 1]), 1.0)


def test_grid_checks_constrained_inner_by_brute_force(rng):
    # ((f, f)) = J integral d alpha (f, shift f) with both integrals on explicit grids
    g = random_gaussian(rng, 1)
    L = random_constraints(rng, 1, 1)
    amax = 9.0 / np.sqrt(decay_form(g, L)[0, 0])
    width = amax * abs(L.Q[0, 0]) + 12.0 / np.sqrt(g.A.imag[0, 0])
    alphas = np.linspace(-amax, amax, 801)
    vals = np.array([grid_inner(g, weyl_apply(a * L.basis[0], g), half_width=width, points=4001)
                     for a in alphas])
    brute = L.measure_scale * np.trapezoid(vals, alphas).real
    assert brute == pytest.approx(inner_constrained(g, g, L).real, rel=1e-6)

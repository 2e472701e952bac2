"""Shared random generators for constrained-Gaussian tests."""

import numpy as np
import pytest
import scipy.linalg

from constrained_gaussians import (
    ConstraintSet, GaussianState, MeasuredSubspace, QuadraticHamiltonian,
)
from constrained_gaussians.dynamics import adapted_basis, hessian_from_gamma
from constrained_gaussians.symplectic import skew_matrix


def random_symplectic(rng, n, scale=0.5):
    """``exp(S K)`` with ``K`` symmetric is symplectic."""
    K = rng.normal(size=(2 * n, 2 * n)) * scale
    return scipy.linalg.expm(skew_matrix(n) @ (K + K.T) / 2)


def random_constraints(rng, n, k, measure_range=(0.5, 2.0)):
    """Image of ``span{(0, e_a)}`` under a random symplectic map: a real isotropic plane."""
    u = random_symplectic(rng, n)
    rows = (u @ np.eye(2 * n)[:, n:n + k]).T
    mix = rng.normal(size=(k, k)) + 2 * np.eye(k)
    return ConstraintSet(MeasuredSubspace(n, mix @ rows, rng.uniform(*measure_range)))


def random_A(rng, n):
    X = rng.normal(size=(n, n))
    Y = rng.normal(size=(n, n))
    return (X + X.T) / 2 + 1j * (Y @ Y.T + 0.5 * np.eye(n))


def random_gaussian(rng, n):
    c = rng.normal() + 1j * rng.normal()
    return GaussianState(c, random_A(rng, n))


def random_compatible_hamiltonian(rng, L, stable=True, epsilon=0.0):
    """Hamiltonian built in the adapted basis with vanishing ``YY`` and ``YZ`` blocks.

    ``stable`` makes the ``ZZ`` block positive definite.
    """
    n, k = L.n, L.k
    basis, _ = adapted_basis(L)
    m = 2 * (n - k)
    gamma = np.zeros((2 * n, 2 * n))
    x, z = slice(0, k), slice(2 * k, 2 * n)
    if k:
        XX = rng.normal(size=(k, k))
        gamma[x, x] = XX + XX.T
        gamma[x, k:2 * k] = rng.normal(size=(k, k))
        gamma[x, z] = rng.normal(size=(k, m))
    if m:
        R = rng.normal(size=(m, m))
        gamma[z, z] = R @ R.T + 0.5 * np.eye(m) if stable else R + R.T
    gamma = np.triu(gamma) + np.triu(gamma, 1).T
    return QuadraticHamiltonian.from_hessian(hessian_from_gamma(gamma, basis), epsilon)


def random_n1_hamiltonian(rng):
    return QuadraticHamiltonian([[rng.uniform(0.3, 1.5)]], [[rng.uniform(-1, 1)]],
                                [[rng.uniform(-1, 2)]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    """Log one acceptance line; printed in the terminal summary."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from constrained_gaussians import (
    ConstraintSet, InvalidInputError, MeasuredSubspace, PhaseVector, build_gauge_plane,
    nu_product, skew_product,
)
from constrained_gaussians.symplectic import (
    decompose_against, gauge_pairing_constant, is_isotropic, linear_jacobian,
    principal_sqrt_det, skew_complement, skew_gram, skew_matrix, span_contains,
)
from conftest import random_constraints, random_symplectic

seeds = st.integers(0, 2 ** 32 - 1)


def test_skew_product_matches_matrix_form(rng):
    n = 3
    y1, y2 = rng.normal(size=2 * n), rng.normal(size=2 * n)
    assert skew_product(y1, y2) == pytest.approx(y1 @ skew_matrix(n) @ y2)
    assert skew_product(y1, y2) == pytest.approx(y1[:n] @ y2[n:] - y2[:n] @ y1[n:])


@given(seeds)
def test_skew_product_antisymmetric_and_nu_hermitian(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    y1 = rng.normal(size=2 * n) + 1j * rng.normal(size=2 * n)
    y2 = rng.normal(size=2 * n) + 1j * rng.normal(size=2 * n)
    assert abs(skew_product(y1, y2) + skew_product(y2, y1)) < 1e-12
    assert abs(nu_product(y1, y2) - np.conj(nu_product(y2, y1))) < 1e-12
    assert abs(nu_product(y1, y1).imag) < 1e-12


def test_nu_of_oscillator_mode_is_one():
    y = np.array([1j, 1.0]) / np.sqrt(2)
    assert nu_product(y, y) == pytest.approx(1.0)
    assert nu_product(y.conj(), y.conj()) == pytest.approx(-1.0)


def test_phase_vector_round_trip():
    v = PhaseVector([1, 2], [3, 4])
    assert np.array_equal(PhaseVector.from_array(v.to_array()).to_array(), v.to_array())
    assert v.n == 2
    with pytest.raises(InvalidInputError):
        PhaseVector([1, 2], [3])


def test_measured_subspace_rejects_dependent_basis():
    with pytest.raises(InvalidInputError, match="dependent"):
        MeasuredSubspace(2, [[1, 0, 0, 0], [2, 0, 0, 0]])
    with pytest.raises(InvalidInputError):
        MeasuredSubspace(1, [[1, 0]], measure_scale=0.0)


def test_constraint_set_rejects_non_isotropic_and_complex():
    with pytest.raises(InvalidInputError, match="at most n"):
        ConstraintSet.from_vectors([[1, 0], [0, 1]])
    with pytest.raises(InvalidInputError, match="skew-orthogonal"):
        ConstraintSet.from_vectors([[1, 0, 0, 0], [0, 0, 1, 0]])
    with pytest.raises(InvalidInputError, match="real"):
        ConstraintSet.from_vectors([[1j, 0]])


def test_constraint_set_blocks():
    L = ConstraintSet.from_vectors([[1, 2, 3, 4]], measure_scale=2.0)
    assert L.n == 2 and L.k == 1 and L.measure_scale == 2.0
    assert np.array_equal(L.P[:, 0], [1, 2]) and np.array_equal(L.Q[:, 0], [3, 4])
    assert ConstraintSet.empty(3).k == 0


def test_random_symplectic_preserves_form(rng):
    u = random_symplectic(rng, 3)
    S = skew_matrix(3)
    assert np.max(np.abs(u.T @ S @ u - S)) < 1e-10


@settings(max_examples=50)
@given(seeds)
def test_gauge_plane_is_isotropic_dual(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    k = int(rng.integers(1, n + 1))
    L = random_constraints(rng, n, k)
    G = build_gauge_plane(L)
    assert np.max(np.abs(skew_gram(L.basis, G.basis) - np.eye(k))) < 1e-9
    assert np.max(np.abs(skew_gram(G.basis, G.basis))) < 1e-9


def test_gauge_plane_fixtures():
    G = build_gauge_plane(ConstraintSet.from_vectors([[0.0, 1.0]]))
    assert np.allclose(G.basis, [[-1.0, 0.0]])
    G = build_gauge_plane(ConstraintSet.from_vectors([[1.0, 0.0]]))
    assert np.allclose(G.basis, [[0.0, 1.0]])


@settings(max_examples=30)
@given(seeds)
def test_decompose_against_reassembles(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    k = int(rng.integers(0, n + 1))
    L = random_constraints(rng, n, k)
    G = build_gauge_plane(L)
    y = rng.normal(size=2 * n)
    x, g, z = decompose_against(L, G, y)
    assert np.allclose(x + g + z, y)
    if k:
        assert span_contains(L.basis, x) and span_contains(G.basis, g)
        both = np.vstack([L.basis, G.basis])
        assert np.max(np.abs(skew_gram(both, z[None, :]))) < 1e-9


def test_skew_complement_of_isotropic_contains_plane(rng):
    L = random_constraints(rng, 3, 2)
    comp = skew_complement(L.subspace)
    assert comp.dim == 4
    assert all(span_contains(comp.basis, x) for x in L.basis)
    assert is_isotropic(L.subspace)


def test_linear_jacobian_and_pairing_constant():
    src = MeasuredSubspace(2, [[1, 0, 0, 0], [0, 1, 0, 0]], 2.0)
    dst = MeasuredSubspace(2, [[1, 0, 0, 0], [0, 1, 0, 0]], 3.0)
    assert linear_jacobian([[2, 0], [0, 3]], src, dst) == pytest.approx(6 * 1.5)
    assert gauge_pairing_constant(2.0, 0.5, 2) == pytest.approx(4 * np.pi ** 2)


def test_principal_sqrt_det_branch():
    M = np.diag([-1 + 1e-3j, 4.0])
    assert principal_sqrt_det(np.diag([4.0, 9.0])) == pytest.approx(6.0)
    assert principal_sqrt_det(M) == pytest.approx(np.sqrt(-1 + 1e-3j) * 2)
    assert principal_sqrt_det(np.zeros((0, 0))) == 1.0

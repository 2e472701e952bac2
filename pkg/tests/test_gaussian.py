import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from constrained_gaussians import (
    ConsistencyError, ConstraintSet, DegenerateProjectionError, ExpQuadratic,
    GaussianState, IntegrabilityError, InvalidInputError, inner_constrained,
    inner_constrained_omega, norm_constrained, norm_report, project_eta, weyl_apply,
)
from constrained_gaussians.gaussian import (
    decay_form_norm, dual_norm_identity_check, exp_quadratic_inner, omega_coefficients,
    plain_norm,
)
from constrained_gaussians.germ import h_germ
from constrained_gaussians.symplectic import build_gauge_plane, skew_product
from conftest import random_A, random_constraints, random_gaussian

seeds = st.integers(0, 2 ** 32 - 1)
L_Q = ConstraintSet.from_vectors([[0.0, 1.0]])
L_P = ConstraintSet.from_vectors([[1.0, 0.0]])


def test_gaussian_state_validation():
    with pytest.raises(InvalidInputError):
        GaussianState(0.0, [[1j]])
    with pytest.raises(InvalidInputError):
        GaussianState(1.0, [[-1j]])


def test_exp_quadratic_evaluation():
    s = ExpQuadratic(2.0, [[1j]], [0.5])
    assert s(np.array([1.0])) == pytest.approx(2 * np.exp(1j * (0.5j + 0.5)))


def test_plain_norm_closed_form(rng):
    g = random_gaussian(rng, 3)
    expected = (2 * np.pi) ** 1.5 * abs(g.c) ** 2 / np.sqrt(np.linalg.det(2 * g.A.imag))
    assert plain_norm(g) == pytest.approx(expected, rel=1e-12)


def test_weyl_shifts_compose_with_cocycle(rng):
    g = random_gaussian(rng, 2)
    x, y = rng.normal(size=4), rng.normal(size=4)
    lhs = weyl_apply(x, weyl_apply(y, g))
    rhs = weyl_apply(x + y, g)
    phase = np.exp(0.5j * skew_product(x, y))
    assert np.allclose(lhs.A, rhs.A) and np.allclose(lhs.b, rhs.b)
    assert lhs.c == pytest.approx(rhs.c * phase)


def test_weyl_shift_acts_as_translation(rng):
    g = random_gaussian(rng, 1)
    p, q = 0.3, -0.7
    shifted = weyl_apply([p, q], g)
    xi = np.linspace(-2, 2, 7)[:, None]
    expected = np.exp(1j * (p * xi[:, 0] - p * q / 2)) * g(xi - q)
    assert np.allclose(shifted(xi), expected)


def test_omega_coefficients_are_derivative(rng):
    g = random_gaussian(rng, 2)
    x = rng.normal(size=4)
    d, e = omega_coefficients(x, g)
    xi = rng.normal(size=(5, 2))
    h = 1e-6
    fd = (weyl_apply(h * x, g)(xi) - weyl_apply(-h * x, g)(xi)) / (2j * h)
    assert np.allclose(fd, (xi @ d + e) * g(xi), atol=1e-7)


def test_inner_product_requires_decay():
    with pytest.raises(IntegrabilityError):
        exp_quadratic_inner(ExpQuadratic(1, [[0.0]]), ExpQuadratic(1, [[0.0]]))


def test_norm_fixtures():
    assert norm_constrained(GaussianState(1, [[1j]]), L_Q) == pytest.approx(2 * np.pi)
    assert norm_constrained(GaussianState(1, [[2j]]), L_Q) == pytest.approx(np.pi)
    rep = norm_report(GaussianState(1, [[1j]]), L_P)
    assert rep.value == pytest.approx(2 * np.pi) and rep.coordinate_method == "decay-form"
    L3 = ConstraintSet.from_vectors([[0, 0, 1, 0]])
    assert norm_constrained(GaussianState(2.0, 1j * np.eye(2)), L3) == pytest.approx(
        4 * 2 * np.pi ** 1.5)


def test_norm_scales_with_c_and_measure(rng):
    g = random_gaussian(rng, 2)
    L = random_constraints(rng, 2, 1)
    base = norm_constrained(g, L)
    assert norm_constrained(GaussianState(3 * g.c, g.A), L) == pytest.approx(9 * base)
    L2 = ConstraintSet.from_vectors(L.basis, measure_scale=2 * L.measure_scale)
    assert norm_constrained(g, L2) == pytest.approx(2 * base)


def test_norm_tolerance_mismatch_raises(rng):
    g = random_gaussian(rng, 2)
    L = random_constraints(rng, 2, 1)
    with pytest.raises(ConsistencyError):
        norm_report(g, L, tol=-1.0)


@settings(max_examples=60)
@given(seeds)
def test_norm_routes_agree(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    k = int(rng.integers(0, n + 1))
    g, L = random_gaussian(rng, n), random_constraints(rng, n, k)
    rep = norm_report(g, L)
    assert abs(rep.germ_route - rep.coordinate_route) <= 1e-9 * rep.value
    assert rep.value == pytest.approx(decay_form_norm(g, L), rel=1e-9)


def test_projection_one_dimensional_closed_forms():
    proj = project_eta(GaussianState(1, [[1j]]), L_Q)
    assert abs(proj.A_check[0, 0]) < 1e-15
    assert proj.c_check == pytest.approx(np.sqrt(2 * np.pi))
    proj = project_eta(GaussianState(1, [[1j]]), ConstraintSet.from_vectors([[1.0, 1.0]]))
    assert proj.A_check[0, 0] == pytest.approx(1.0)
    with pytest.raises(DegenerateProjectionError, match="degenerate"):
        project_eta(GaussianState(1, [[1j]]), L_P)


@settings(max_examples=40)
@given(seeds)
def test_projection_slope_and_invariance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    k = int(rng.integers(1, n + 1))
    g, L = random_gaussian(rng, n), random_constraints(rng, n, k)
    proj = project_eta(g, L)
    hg = h_germ(g.A, L)
    assert np.max(np.abs(proj.A_check @ hg.C - hg.B)) < 1e-8 * max(1, np.max(np.abs(hg.B)))
    # the projection is invariant under constraint shifts
    x = rng.normal(size=k) @ L.basis
    moved = weyl_apply(x, proj)
    assert np.allclose(moved.A, proj.A_check)
    assert np.max(np.abs(moved.b)) < 1e-8 * max(1, np.max(np.abs(x)))
    assert moved.c == pytest.approx(proj.c_check, rel=1e-8)


@settings(max_examples=30)
@given(seeds)
def test_inner_product_routes(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    k = int(rng.integers(0, n + 1))
    L = random_constraints(rng, n, k)
    g1, g2 = random_gaussian(rng, n), random_gaussian(rng, n)
    val = inner_constrained(g1, g2, L)
    assert val == pytest.approx(np.conj(inner_constrained(g2, g1, L)), rel=1e-8)
    assert inner_constrained(g1, g1, L).real == pytest.approx(norm_constrained(g1, L), rel=1e-8)


def test_inner_constrained_shift_route_for_degenerate_plane():
    g = GaussianState(1, [[1j]])
    assert inner_constrained(g, g, L_P).real == pytest.approx(2 * np.pi)
    with pytest.raises(DegenerateProjectionError):
        inner_constrained(g, g, L_P, route="eta")


def test_constraint_generators_annihilate_in_inner_product(rng):
    n, k = 3, 2
    L = random_constraints(rng, n, k)
    g1, g2 = random_gaussian(rng, n), random_gaussian(rng, n)
    for x in L.basis:
        assert abs(inner_constrained_omega(g1, x, g2, L)) < 1e-9 * abs(
            inner_constrained(g1, g2, L)) + 1e-12


def test_inner_omega_matches_finite_difference(rng):
    L = random_constraints(rng, 2, 1)
    g1, g2 = random_gaussian(rng, 2), random_gaussian(rng, 2)
    x = rng.normal(size=4)
    h = 1e-5
    fd = (inner_constrained(g1, weyl_apply(h * x, g2), L, "shift")
          - inner_constrained(g1, weyl_apply(-h * x, g2), L, "shift")) / (2j * h)
    assert inner_constrained_omega(g1, x, g2, L) == pytest.approx(fd, rel=1e-6)


def test_dual_norm_pairing_constant(rng):
    L = random_constraints(rng, 2, 2)
    G = build_gauge_plane(L)
    rep = dual_norm_identity_check(random_gaussian(rng, 2), L, G, gauge_scale=0.7)
    assert rep["relative_error"] < 1e-10
    assert rep["dual_norm_route"] == "definition"

"""Gaussian states under linear first-class constraints.

Constrained norms and projections, germ bookkeeping, quadratic dynamics,
stability on the reduced phase space, and independent numerical oracles.
"""

from .dynamics import (
    QuadraticHamiltonian, check_evolution_unitarity, classical_flow, evolve_gaussian,
    evolve_projected, reduce_hamiltonian, riccati_frame,
)
from .errors import (
    ConsistencyError, ConstrainedGaussianError, DegenerateProjectionError,
    EquivalenceNotPreservedError, IntegrabilityError, InvalidGermError, InvalidInputError,
    NumericalDegeneracyError, OracleError,
)
from .gaussian import (
    ExpQuadratic, GaussianState, ProjectedGaussian, inner_constrained,
    inner_constrained_omega, norm_constrained, norm_report, project_eta, weyl_apply,
)
from .germ import GermBasis, h_germ, p_minus, s_germ_from_matrix
from .oracle import quadrature_constrained_norm, split_step_evolve
from .problem import Problem, ProblemError, load_problem, parse_problem
from .stability import (
    analyse, excited_overlap, germ_from_modes, mode_decomposition, reduced_generator,
    spectrum, spectrum_report, stability_check,
)
from .symplectic import (
    ConstraintSet, MeasuredSubspace, PhaseVector, build_gauge_plane, nu_product,
    skew_product,
)

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError", "ConstrainedGaussianError", "ConstraintSet", "DegenerateProjectionError",
    "EquivalenceNotPreservedError", "ExpQuadratic", "GaussianState", "GermBasis",
    "IntegrabilityError", "InvalidGermError", "InvalidInputError", "MeasuredSubspace",
    "NumericalDegeneracyError", "OracleError", "PhaseVector", "Problem", "ProblemError",
    "ProjectedGaussian", "QuadraticHamiltonian", "analyse", "build_gauge_plane",
    "check_evolution_unitarity", "classical_flow", "evolve_gaussian", "evolve_projected",
    "excited_overlap", "germ_from_modes", "h_germ", "inner_constrained",
    "inner_constrained_omega", "load_problem", "mode_decomposition", "norm_constrained",
    "norm_report", "nu_product", "p_minus", "parse_problem", "project_eta",
    "quadrature_constrained_norm", "reduce_hamiltonian", "reduced_generator",
    "riccati_frame", "s_germ_from_matrix", "skew_product", "spectrum", "spectrum_report",
    "split_step_evolve", "stability_check", "weyl_apply",
]

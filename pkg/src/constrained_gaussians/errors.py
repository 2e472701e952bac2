"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`ConstrainedGaussianError`, so callers (the CLI in particular) can map
them onto exit codes without catching unrelated exceptions.
"""


class ConstrainedGaussianError(Exception):
    """Base class for all package errors."""


class InvalidInputError(ConstrainedGaussianError, ValueError):
    """Input violates a documented precondition (shape, symmetry, isotropy...)."""


class InvalidGermError(ConstrainedGaussianError, ValueError):
    """A subspace fails the complex-germ axioms."""


class IntegrabilityError(ConstrainedGaussianError, ValueError):
    """A Gaussian integral does not converge."""


class DegenerateProjectionError(ConstrainedGaussianError):
    """The constraint plane does not project injectively onto coordinates.

    The eta-projection is then a delta-supported distribution, which is not
    representable as an exponential-quadratic function.
    """


class ConsistencyError(ConstrainedGaussianError):
    """Two independent computational routes disagree beyond tolerance."""


class EquivalenceNotPreservedError(ConstrainedGaussianError):
    """The classical flow does not map the constraint plane onto itself."""


class NumericalDegeneracyError(ConstrainedGaussianError):
    """A form that must be nondegenerate is numerically singular."""


class OracleError(ConstrainedGaussianError):
    """Brute-force oracle could not reach its accuracy target (box/grid)."""

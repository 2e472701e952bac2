"""Complex germs of Gaussian states.

For a symmetric ``A`` with ``Im A > 0`` the S-germ ``r(A) = {(A Q, Q)}`` is the
n-dimensional space of phase vectors whose operators annihilate the Gaussian
``exp(i xi.A.xi / 2)``. Relative to a constraint plane ``L`` the H-germ is
``r_perp(A) + L^C`` where ``r_perp(A)`` is the part of ``r(A)`` skew-orthogonal
to ``L``.

Germ vectors are rows of ``(m, 2n)`` complex arrays, as in :mod:`.symplectic`.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConsistencyError, InvalidGermError, InvalidInputError
from .symplectic import MeasuredSubspace, linear_jacobian, nu_gram, skew_gram, span_residual

MEMBERSHIP_TOL = 1e-8


def check_germ_matrix(A, tol=1e-9):
    """Validate and return ``A`` as a complex symmetric matrix with ``Im A > 0``."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InvalidInputError(f"A must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("A contains non-finite entries")
    scale = max(1.0, np.max(np.abs(A)))
    if np.max(np.abs(A - A.T)) > tol * scale:
        raise InvalidInputError("A is not symmetric")
    A = 0.5 * (A + A.T)
    lam = np.linalg.eigvalsh(A.imag)
    if lam[0] <= tol * scale:
        raise InvalidInputError(
            f"Im A must be positive definite (smallest eigenvalue {lam[0]:.3e})")
    return A


@dataclass(frozen=True)
class GermBasis:
    """Basis of an S-germ (``kind='S'``) or H-germ (``kind='H'``).

    For an H-germ the first ``split_sizes[0]`` rows span ``r_perp(A)`` and the
    remaining ``split_sizes[1]`` rows are the complexified constraint vectors.
    """

    kind: str
    ambient_n: int
    vectors: np.ndarray
    split_sizes: tuple = None

    def __post_init__(self):
        if self.kind not in ("S", "H"):
            raise InvalidInputError(f"unknown germ kind {self.kind!r}")
        vectors = np.asarray(self.vectors, dtype=complex)
        if vectors.shape != (self.ambient_n, 2 * self.ambient_n):
            raise InvalidInputError(
                f"a germ needs {self.ambient_n} vectors of length {2 * self.ambient_n}")
        object.__setattr__(self, "vectors", vectors)
        if self.kind == "H":
            sizes = tuple(int(s) for s in self.split_sizes)
            if sum(sizes) != self.ambient_n:
                raise InvalidInputError("split sizes must add up to n")
            object.__setattr__(self, "split_sizes", sizes)

    @property
    def B(self):
        """Momentum parts as columns."""
        return self.vectors[:, :self.ambient_n].T

    @property
    def C(self):
        """Coordinate parts as columns."""
        return self.vectors[:, self.ambient_n:].T

    @property
    def perp_block(self):
        if self.kind == "S":
            return self.vectors
        return self.vectors[:self.split_sizes[0]]

    @property
    def constraint_block(self):
        if self.kind == "S":
            return self.vectors[:0]
        return self.vectors[self.split_sizes[0]:]


def germ_residuals(r):
    """Residuals of the germ axioms.

    Returns a dict with ``isotropy`` (max pairwise skew product),
    ``min_positive`` (smallest eigenvalue of the nu-Gram of the positive block)
    and ``null_block`` (max nu-Gram entry on the constraint block, H-germs only).
    """
    v = r.vectors
    out = {"isotropy": float(np.max(np.abs(skew_gram(v, v)))) if len(v) else 0.0}
    pos = r.perp_block
    out["min_positive"] = float(np.linalg.eigvalsh(nu_gram(pos))[0]) if len(pos) else np.inf
    null = r.constraint_block
    out["null_block"] = float(np.max(np.abs(nu_gram(null)))) if len(null) else 0.0
    return out


def validate_germ(r, tol=1e-9):
    """Raise :class:`InvalidGermError` unless ``r`` satisfies the germ axioms."""
    res = germ_residuals(r)
    scale = max(1.0, np.max(np.abs(r.vectors)) ** 2)
    if res["isotropy"] > tol * scale:
        raise InvalidGermError(f"germ vectors not skew-orthogonal (residual {res['isotropy']:.3e})")
    if res["min_positive"] <= tol * scale:
        raise InvalidGermError(f"nu form not positive on the germ (min eigenvalue {res['min_positive']:.3e})")
    if res["null_block"] > tol * scale:
        raise InvalidGermError(f"constraint block not nu-null (residual {res['null_block']:.3e})")
    return res


def s_germ_from_matrix(A, tol=1e-9):
    """S-germ basis ``{(A e_j, e_j)}`` of a valid matrix ``A``."""
    A = check_germ_matrix(A, tol)
    n = A.shape[0]
    return GermBasis("S", n, np.hstack([A.T, np.eye(n)]))


def matrix_from_germ(r, tol=1e-9):
    """``A = B C^{-1}`` from the momentum and coordinate parts of an S-germ."""
    B, C = r.B, r.C
    sv = np.linalg.svd(C, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1.0):
        raise InvalidGermError("coordinate projection of the germ is singular")
    A = np.linalg.solve(C.T, B.T).T
    A = 0.5 * (A + A.T)
    check_germ_matrix(A, tol)
    return A


def nu_orthonormalize_rows(rows):
    """Rows ``T^T rows`` with ``nu``-Gram equal to the identity.

    Uses the Cholesky factor of the (positive-definite) Gram matrix, which is
    Gram-Schmidt in matrix form and keeps index order.
    """
    if rows.shape[0] == 0:
        return rows.astype(complex)
    gram = nu_gram(rows)
    herm = 0.5 * (gram + gram.conj().T).T
    try:
        low = np.linalg.cholesky(herm)
    except np.linalg.LinAlgError:
        raise InvalidGermError("nu Gram matrix is not positive definite") from None
    T = scipy.linalg.solve_triangular(low, np.eye(len(low)), lower=True).conj().T
    return T.T @ rows


def nu_orthonormalize(r):
    """Gram-Schmidt under ``nu`` of an S-germ, or of the ``r_perp`` block of an H-germ."""
    if r.kind == "S":
        return GermBasis("S", r.ambient_n, nu_orthonormalize_rows(r.vectors))
    perp = nu_orthonormalize_rows(r.perp_block)
    return GermBasis("H", r.ambient_n, np.vstack([perp, r.constraint_block]), r.split_sizes)


def _defect(A, L):
    """``D = P - A Q`` (n x k): ``<X^(a), (A q, q)> = q . D[:, a]``."""
    return L.P - A @ L.Q


def r_perp_rows(A, L):
    """nu-orthonormal basis of ``{Y in r(A) : <X, Y> = 0 for X in L}``."""
    n = A.shape[0]
    if L.k == 0:
        q = np.eye(n)
    else:
        q = scipy.linalg.null_space(_defect(A, L).T)
    if q.shape[1] != n - L.k:
        raise ConsistencyError(f"r_perp has dimension {q.shape[1]}, expected {n - L.k}")
    rows = np.hstack([(A @ q).T, q.T])
    return nu_orthonormalize_rows(rows)


def h_germ(A, L, tol=1e-9):
    """H-germ basis ``[r_perp(A); L^C]`` with split sizes ``(n-k, k)``."""
    A = check_germ_matrix(A, tol)
    if L.n != A.shape[0]:
        raise InvalidInputError("dimension mismatch between A and L")
    perp = r_perp_rows(A, L)
    r = GermBasis("H", L.n, np.vstack([perp, L.basis.astype(complex)]), (L.n - L.k, L.k))
    validate_germ(r, tol)
    return r


def r_minus_rows(A, L):
    """nu-orthonormal basis of the nu-complement of ``r_perp(A)`` inside ``r(A)``."""
    full = nu_orthonormalize_rows(s_germ_from_matrix(A).vectors)
    perp = r_perp_rows(A, L)
    if perp.shape[0] == 0:
        return full
    overlap = nu_gram(full, perp)            # nu(full_i, perp_j)
    coef = scipy.linalg.null_space(overlap.T)
    return coef.T @ full


def h_germ_contains(r, y, tol=MEMBERSHIP_TOL):
    """Membership of ``y`` in the span of a germ via least-squares residual."""
    return span_residual(r.vectors, y) <= tol


def minus_components(A, L):
    """Rows ``X_-^(a) = (A Q_-, Q_-)`` with ``X^(a) = X_- + conj(X_-)``.

    Closed form ``Q_- = (A - A*)^{-1} (P - A* Q)`` of the splitting along
    ``r(A) + r(A)*``.
    """
    W = A - A.conj()
    Qm = np.linalg.solve(W, L.P - A.conj() @ L.Q)
    return np.hstack([(A @ Qm).T, Qm.T])


@dataclass(frozen=True)
class PMinusMap:
    """Matrix of ``X -> X_-`` from L-coordinates to nu-orthonormal ``r_-`` coordinates."""

    matrix: np.ndarray
    jacobian: float
    minus_rows: np.ndarray
    r_minus: np.ndarray


def p_minus(A, L, tol=1e-9):
    """The map ``P_-`` and its Jacobian ``Delta(P_-)``.

    ``matrix[c, a] = nu(X_-^(a), W_c)`` for the nu-orthonormal basis ``W`` of
    ``r_-(A)``; the Jacobian is ``|det matrix| / J``.
    """
    A = check_germ_matrix(A, tol)
    if L.k == 0:
        return PMinusMap(np.zeros((0, 0), complex), 1.0, np.zeros((0, 2 * L.n), complex),
                         np.zeros((0, 2 * L.n), complex))
    xm = minus_components(A, L)
    back = xm + xm.conj()
    if np.max(np.abs(back - L.basis)) > 1e-8 * max(1.0, np.max(np.abs(L.basis))):
        raise ConsistencyError("splitting X = X_- + X_-* failed")
    wm = r_minus_rows(A, L)
    mat = nu_gram(xm, wm).T
    recon = mat.T @ wm
    if np.max(np.abs(recon - xm)) > 1e-8 * max(1.0, np.max(np.abs(xm))):
        raise ConsistencyError("X_- does not lie in r_-(A)")
    unit = MeasuredSubspace(L.n, wm, 1.0)
    jac = linear_jacobian(mat, L.subspace, unit)
    if not jac > 0:
        raise ConsistencyError("P_- map is singular")
    return PMinusMap(mat, jac, xm, wm)


def coordinate_jacobian(A):
    """``Delta(C) = |det C|`` for a nu-orthonormal S-germ basis (= det(2 Im A)^{-1/2})."""
    r = nu_orthonormalize(s_germ_from_matrix(A))
    return float(abs(np.linalg.det(r.C)))


__all__ = [
    "GermBasis", "PMinusMap", "check_germ_matrix", "germ_residuals", "validate_germ",
    "s_germ_from_matrix", "matrix_from_germ", "nu_orthonormalize", "nu_orthonormalize_rows",
    "h_germ", "r_perp_rows", "r_minus_rows", "h_germ_contains", "minus_components",
    "p_minus", "coordinate_jacobian",
]

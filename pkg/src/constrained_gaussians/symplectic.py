"""Complexified phase space, skew products and constraint/gauge planes.

Phase-space points are stored as flat arrays ``y = (p_1..p_n, q_1..q_n)``;
a family of ``m`` points is an ``(m, 2n)`` array with one vector per row.
The skew-scalar product is

    <y1, y2> = sum_i (p1_i q2_i - p2_i q1_i) = y1^T S y2,

with ``S = [[0, I], [-I, 0]]``; it is bilinear (never conjugated).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InvalidInputError

RANK_TOL = 1e-10

__all__ = [
    "PhaseVector", "MeasuredSubspace", "ConstraintSet",
    "skew_matrix", "skew_product", "skew_gram", "nu_product", "nu_gram",
    "is_isotropic", "skew_complement", "build_gauge_plane",
    "decompose_against", "linear_jacobian", "gauge_pairing_constant",
    "span_residual", "span_contains", "principal_sqrt_det",
]


@dataclass(frozen=True)
class PhaseVector:
    """A point ``(p, q)`` of the complexified phase space."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p, dtype=complex))
        q = np.atleast_1d(np.asarray(self.q, dtype=complex))
        if p.ndim != 1 or p.shape != q.shape or p.size < 1:
            raise InvalidInputError(
                f"p and q must be 1-D of equal length >= 1, got {p.shape} and {q.shape}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def n(self):
        return self.p.size

    @classmethod
    def from_array(cls, y):
        y = np.asarray(y)
        if y.ndim != 1 or y.size % 2:
            raise InvalidInputError(f"expected a flat vector of even length, got {y.shape}")
        n = y.size // 2
        return cls(y[:n], y[n:])

    def to_array(self):
        return np.concatenate([self.p, self.q])

    def conj(self):
        return PhaseVector(self.p.conj(), self.q.conj())


def as_vector(y):
    """Flat complex array for a :class:`PhaseVector` or array-like."""
    if isinstance(y, PhaseVector):
        return y.to_array()
    y = np.asarray(y)
    if y.ndim != 1 or y.size % 2:
        raise InvalidInputError(f"expected a flat phase vector of even length, got {y.shape}")
    return y


def as_rows(vectors, n=None):
    """Stack phase vectors into an ``(m, 2n)`` array."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        rows = vectors
    else:
        vectors = list(vectors)
        if not vectors:
            if n is None:
                raise InvalidInputError("ambient dimension needed for an empty basis")
            return np.zeros((0, 2 * n))
        rows = np.array([as_vector(v) for v in vectors])
    if n is not None and rows.shape[1] != 2 * n:
        raise InvalidInputError(f"expected vectors of length {2 * n}, got {rows.shape[1]}")
    return rows


@dataclass(frozen=True)
class MeasuredSubspace:
    """Linear subspace with a translation-invariant measure.

    ``measure_scale`` is the constant density relating the invariant measure to
    the coordinates defined by ``basis`` (``d mu = J d alpha_1 ... d alpha_m``).
    """

    ambient_n: int
    basis: np.ndarray
    measure_scale: float = 1.0

    def __post_init__(self):
        n = int(self.ambient_n)
        if n < 1:
            raise InvalidInputError("ambient dimension must be >= 1")
        basis = as_rows(self.basis, n)
        if not np.all(np.isfinite(basis)):
            raise InvalidInputError("basis contains non-finite entries")
        if not self.measure_scale > 0:
            raise InvalidInputError("measure_scale must be positive")
        if basis.shape[0]:
            sv = np.linalg.svd(basis, compute_uv=False)
            if sv[-1] <= RANK_TOL * sv[0] or basis.shape[0] > 2 * n:
                raise InvalidInputError("basis vectors are linearly dependent")
        object.__setattr__(self, "ambient_n", n)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "measure_scale", float(self.measure_scale))

    @property
    def dim(self):
        return self.basis.shape[0]

    def vectors(self):
        return [PhaseVector.from_array(b) for b in self.basis]


@dataclass(frozen=True)
class ConstraintSet:
    """Isotropic plane of linear constraints with its measure.

    Row ``a`` of :attr:`basis` is the constraint vector ``(P^(a), Q^(a))``;
    the corresponding operator is ``sum_i (P_i q_i - Q_i p_i)``.
    """

    subspace: MeasuredSubspace
    tol: float = field(default=1e-9, compare=False)

    def __post_init__(self):
        b = self.subspace.basis
        if b.shape[0] > self.subspace.ambient_n:
            raise InvalidInputError("an isotropic plane has dimension at most n")
        if np.any(np.abs(np.imag(b)) > 0):
            raise InvalidInputError("constraint vectors must be real")
        object.__setattr__(self, "subspace", MeasuredSubspace(
            self.subspace.ambient_n, np.real(b).astype(float), self.subspace.measure_scale))
        if b.shape[0]:
            scale = max(1.0, np.max(np.abs(b)) ** 2)
            if np.max(np.abs(skew_gram(self.basis, self.basis))) > self.tol * scale:
                raise InvalidInputError("constraint vectors are not mutually skew-orthogonal")

    @classmethod
    def from_vectors(cls, vectors, n=None, measure_scale=1.0, tol=1e-9):
        rows = as_rows(vectors, n)
        return cls(MeasuredSubspace(rows.shape[1] // 2 if n is None else n, rows, measure_scale), tol)

    @classmethod
    def empty(cls, n):
        return cls(MeasuredSubspace(n, np.zeros((0, 2 * n))))

    @property
    def basis(self):
        return self.subspace.basis

    @property
    def n(self):
        return self.subspace.ambient_n

    @property
    def k(self):
        return self.subspace.dim

    @property
    def measure_scale(self):
        return self.subspace.measure_scale

    @property
    def P(self):
        """``n x k`` matrix whose columns are the momentum parts."""
        return self.basis[:, :self.n].T

    @property
    def Q(self):
        """``n x k`` matrix whose columns are the coordinate parts."""
        return self.basis[:, self.n:].T


def skew_matrix(n):
    """The ``2n x 2n`` matrix ``S`` with ``<y1, y2> = y1^T S y2``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def _split(y):
    n = y.shape[-1] // 2
    return y[..., :n], y[..., n:]


def skew_product(y1, y2):
    """Skew-scalar product ``sum_i (p1_i q2_i - p2_i q1_i)`` (no conjugation)."""
    y1, y2 = as_vector(y1), as_vector(y2)
    if y1.shape != y2.shape:
        raise InvalidInputError(f"dimension mismatch: {y1.shape} vs {y2.shape}")
    p1, q1 = _split(y1)
    p2, q2 = _split(y2)
    return complex(p1 @ q2 - p2 @ q1)


def skew_gram(rows1, rows2):
    """Matrix of skew products ``G[a, b] = <rows1[a], rows2[b]>``."""
    rows1, rows2 = np.atleast_2d(rows1), np.atleast_2d(rows2)
    p1, q1 = _split(rows1)
    p2, q2 = _split(rows2)
    return p1 @ q2.T - q1 @ p2.T


def nu_product(y1, y2):
    """Hermitian form ``nu(y1, y2) = (1/i) <y1, conj(y2)>``."""
    return skew_product(as_vector(y1), np.conj(as_vector(y2))) / 1j


def nu_gram(rows1, rows2=None):
    """``G[a, b] = nu(rows1[a], rows2[b])``; Hermitian when ``rows2 is rows1``."""
    rows2 = rows1 if rows2 is None else rows2
    return skew_gram(rows1, np.conj(rows2)) / 1j


def is_isotropic(s, tol=1e-9):
    """True iff all pairwise skew products of the basis vanish within ``tol``."""
    b = s.basis
    if b.shape[0] < 2:
        return True
    return bool(np.max(np.abs(skew_gram(b, b))) <= tol)


def _null_space_rows(matrix, tol=RANK_TOL):
    """Orthonormal rows spanning the right null space of ``matrix``."""
    ncols = matrix.shape[1]
    if matrix.shape[0] == 0:
        return np.eye(ncols, dtype=matrix.dtype)
    u, sv, vh = np.linalg.svd(matrix)
    if sv.size == 0 or sv[0] == 0:
        return np.eye(ncols, dtype=matrix.dtype)
    rank = int(np.sum(sv > tol * sv[0]))
    return vh[rank:].conj()


def skew_complement(s):
    """Basis of ``{Y : <X, Y> = 0 for all X in s}`` (measure scale 1)."""
    n = s.ambient_n
    S = skew_matrix(n)
    rows = _null_space_rows(s.basis @ S)
    if np.all(np.isreal(s.basis)):
        rows = np.real(rows)
    return MeasuredSubspace(n, rows)


def build_gauge_plane(L):
    """Isotropic plane ``G`` dual to ``L``: ``<X^(a), Y^(b)> = delta_ab``.

    The dual vectors are the minimum-norm solutions of the pairing equations
    (``Y~ = S^T X (X^T X)^{-1}``, solved through a QR factorisation of ``X^T``
    to avoid squaring its condition number), followed by the isotropy correction
    ``Y^(a) = Y~^(a) - 1/2 sum_c <Y~^(a), Y~^(c)> X^(c)``.
    """
    n = L.n
    if L.k == 0:
        return MeasuredSubspace(n, np.zeros((0, 2 * n)))
    X = L.basis
    if not is_isotropic(L.subspace, 1e-9 * max(1.0, np.max(np.abs(X)) ** 2)):
        raise InvalidInputError("constraint plane is not isotropic")
    S = skew_matrix(n)
    Qx, R = np.linalg.qr(X.T)
    Yt = scipy.linalg.solve_triangular(R, Qx.T @ S)
    Y = Yt - 0.5 * skew_gram(Yt, Yt) @ X
    # one refinement pass; <X, Yt> = I so the pairing residual is removed along Yt
    Y = Y - (skew_gram(X, Y) - np.eye(L.k)).T @ Yt
    Y = Y - 0.5 * skew_gram(Y, Y) @ X
    return MeasuredSubspace(n, Y)


def decompose_against(L, G, y, tol=1e-10):
    """Split ``y = x_part + g_part + z_part`` along ``L``, ``G`` and ``(L+G)^perp``.

    Returns three flat arrays. For a dual pair (pairing matrix = identity)
    ``x_part = -sum_a <Y^(a), y> X^(a)`` and ``g_part = sum_b <X^(b), y> Y^(b)``.
    """
    y = as_vector(y)
    X, Y = L.basis, G.basis
    if X.shape[0] != Y.shape[0]:
        raise InvalidInputError("L and G must have equal dimension")
    if X.shape[0] == 0:
        zero = np.zeros_like(y)
        return zero, zero.copy(), y.copy()
    pairing = skew_gram(X, Y)
    sv = np.linalg.svd(pairing, compute_uv=False)
    if sv[-1] <= RANK_TOL * max(sv[0], 1.0):
        raise InvalidInputError("invalid gauge pair: singular pairing matrix")
    omega = skew_gram(X, y[None, :])[:, 0]
    theta = skew_gram(Y, y[None, :])[:, 0]
    gamma = np.linalg.solve(pairing, omega)
    # <Y^c, g_part> = 0 since G is isotropic
    chi = -np.linalg.solve(pairing.T, theta)
    x_part = chi @ X
    g_part = gamma @ Y
    z_part = y - x_part - g_part
    return x_part, g_part, z_part


def linear_jacobian(map_matrix, src, dst):
    """``|det P| * J' / J`` for a map between measured subspaces.

    ``map_matrix`` acts on coordinates in ``src.basis`` and returns coordinates
    in ``dst.basis``; ``J`` and ``J'`` are the two measure scales. A singular
    map gives 0.
    """
    m = np.atleast_2d(np.asarray(map_matrix))
    if m.size == 0:
        return dst.measure_scale / src.measure_scale
    if m.shape[0] != m.shape[1]:
        raise InvalidInputError("jacobian needs a square map")
    return float(abs(np.linalg.det(m)) * dst.measure_scale / src.measure_scale)


def gauge_pairing_constant(J, K, k):
    """The constant ``J K (2 pi)^k`` of the L/G Fourier pairing identity."""
    return J * K * (2 * np.pi) ** k


def span_residual(rows, y):
    """Relative least-squares residual of ``y`` against ``span(rows)``."""
    y = as_vector(y)
    norm = np.linalg.norm(y)
    if norm == 0:
        return 0.0
    if rows.shape[0] == 0:
        return 1.0
    coef, *_ = np.linalg.lstsq(rows.T, y, rcond=None)
    return float(np.linalg.norm(rows.T @ coef - y) / norm)


def span_contains(rows, y, tol=1e-8):
    return span_residual(rows, y) <= tol


def principal_sqrt_det(M):
    """``sqrt(det M)`` on the branch continuous from the identity.

    Valid whenever all eigenvalues of ``M`` have positive real part (true for
    complex symmetric matrices with positive-definite real part): the
    principal roots of the eigenvalues are multiplied.
    """
    M = np.atleast_2d(M)
    if M.size == 0:
        return 1.0 + 0j
    ev = np.linalg.eigvals(M)
    return complex(np.prod(np.sqrt(ev.astype(complex))))


def subspace_angles(rows1, rows2):
    """Principal angles between ``span(rows1)`` and ``span(rows2)``."""
    if rows1.shape[0] == 0 and rows2.shape[0] == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(rows1.T, rows2.T)

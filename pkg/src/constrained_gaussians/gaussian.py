"""Gaussian states, Weyl shifts and constrained inner products.

An :class:`ExpQuadratic` is ``c * exp(i (xi.A.xi / 2 + b.xi))``; a
:class:`GaussianState` is the centred special case with ``Im A > 0``.

The constrained inner product of two states is the average of the ordinary
one over the shifts generated by a constraint plane ``L``:

    ((f1, f2)) = J * integral d alpha (f1, exp(i Omega(sum_a alpha_a X^(a))) f2).

Every integral here is Gaussian and is evaluated in closed form; the
brute-force versions live in :mod:`.oracle`.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConsistencyError, DegenerateProjectionError, IntegrabilityError, InvalidInputError,
)
from .germ import check_germ_matrix, coordinate_jacobian, h_germ, p_minus
from .symplectic import as_vector, gauge_pairing_constant, principal_sqrt_det, skew_gram

ROUTE_TOL = 1e-9
ETA_ROUTE_TOL = 1e-8


@dataclass(frozen=True)
class ExpQuadratic:
    """``c * exp(i (xi.A.xi / 2 + b.xi))`` with symmetric ``A``, ``Im A >= 0``."""

    c: complex
    A: np.ndarray
    b: np.ndarray = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=complex))
        if A.shape[0] != A.shape[1]:
            raise InvalidInputError("A must be square")
        if np.max(np.abs(A - A.T), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(A))):
            raise InvalidInputError("A is not symmetric")
        b = np.zeros(A.shape[0], complex) if self.b is None else np.asarray(self.b, complex)
        if b.shape != (A.shape[0],):
            raise InvalidInputError("b must be a vector of length n")
        object.__setattr__(self, "A", 0.5 * (A + A.T))
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", complex(self.c))

    @property
    def n(self):
        return self.A.shape[0]

    def __call__(self, xi):
        """Evaluate at points ``xi`` of shape ``(..., n)``."""
        xi = np.asarray(xi, dtype=float)
        quad = 0.5 * np.einsum("...i,ij,...j->...", xi, self.A, xi)
        return self.c * np.exp(1j * (quad + xi @ self.b))

    def scaled(self, factor):
        return ExpQuadratic(self.c * factor, self.A, self.b)


@dataclass(frozen=True)
class GaussianState:
    """``c * exp(i xi.A.xi / 2)`` with ``Im A`` positive definite and ``c != 0``."""

    c: complex
    A: np.ndarray
    tol: float = field(default=1e-9, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "A", check_germ_matrix(self.A, self.tol))
        c = complex(self.c)
        if c == 0 or not np.isfinite(c):
            raise InvalidInputError("c must be a nonzero finite complex number")
        object.__setattr__(self, "c", c)

    @property
    def n(self):
        return self.A.shape[0]

    def as_exp_quadratic(self):
        return ExpQuadratic(self.c, self.A)

    def __call__(self, xi):
        return self.as_exp_quadratic()(xi)


@dataclass(frozen=True)
class ProjectedGaussian:
    """Result of the eta-projection: ``c_check * exp(i xi.A_check.xi / 2)``."""

    n: int
    c_check: complex
    A_check: np.ndarray
    diagnostics: dict = field(default_factory=dict, compare=False)

    def as_exp_quadratic(self):
        return ExpQuadratic(self.c_check, self.A_check)


def _as_exp_quadratic(s):
    if isinstance(s, ExpQuadratic):
        return s
    if isinstance(s, (GaussianState, ProjectedGaussian)):
        return s.as_exp_quadratic()
    raise InvalidInputError(f"cannot interpret {type(s).__name__} as a Gaussian")


def weyl_apply(x, s):
    """``exp(i Omega(x)) s`` for a (possibly complex) phase vector ``x = (p, q)``.

    ``(exp(i Omega(p, q)) f)(xi) = exp(i (p.xi - p.q / 2)) f(xi - q)``.
    """
    s = _as_exp_quadratic(s)
    x = as_vector(x)
    if x.size != 2 * s.n:
        raise InvalidInputError("phase vector and Gaussian dimensions differ")
    p, q = x[:s.n], x[s.n:]
    Aq = s.A @ q
    phase = 0.5 * q @ Aq - 0.5 * p @ q - s.b @ q
    return ExpQuadratic(s.c * np.exp(1j * phase), s.A, s.b + p - Aq)


def omega_coefficients(x, s):
    """``Omega(x) s = (d . xi + e) s``; returns ``(d, e)``.

    Exact derivative ``-i d/dtau exp(i tau Omega(x)) s`` at ``tau = 0``.
    """
    s = _as_exp_quadratic(s)
    x = as_vector(x)
    p, q = x[:s.n], x[s.n:]
    return p - s.A @ q, -(q @ s.b)


def exp_quadratic_inner(s1, s2):
    """Closed-form ``integral conj(s1) s2 d xi``."""
    s1, s2 = _as_exp_quadratic(s1), _as_exp_quadratic(s2)
    if s1.n != s2.n:
        raise InvalidInputError("dimension mismatch")
    Q = -1j * (s2.A - s1.A.conj())
    if np.linalg.eigvalsh(0.5 * (Q.real + Q.real.T))[0] <= 1e-12 * max(1.0, np.max(np.abs(Q))):
        raise IntegrabilityError("Im(A2 - conj(A1)) is not positive definite")
    beta = s2.b - s1.b.conj()
    expo = -0.5 * beta @ np.linalg.solve(Q, beta)
    return complex(np.conj(s1.c) * s2.c * (2 * np.pi) ** (s1.n / 2)
                   / principal_sqrt_det(Q) * np.exp(expo))


def plain_norm(g):
    """``(f, f) = (2 pi)^{n/2} |c|^2 / sqrt(det 2 Im A)``."""
    g = _as_exp_quadratic(g)
    return float(exp_quadratic_inner(g, g).real)


def _shift_matrices(A, L):
    """``D = P - A Q`` and ``M = i (P^T Q - Q^T A Q)``."""
    D = L.P - A @ L.Q
    M = 1j * (L.P.T @ L.Q - L.Q.T @ A @ L.Q)
    return D, 0.5 * (M + M.T)


def constraint_matrices(g, L):
    """The matrices ``M`` and ``K`` of the coordinate route (``K`` only if ``M`` is invertible)."""
    A = g.A
    D, M = _shift_matrices(A, L)
    W = (A - A.conj()) / 1j
    out = {"M": M, "D": D, "W": W.real, "K": None}
    if L.k and _m_invertible(M):
        out["K"] = W + D @ np.linalg.solve(M, D.T)
    elif not L.k:
        out["K"] = W
    return out


def _m_invertible(M):
    if M.size == 0:
        return True
    sv = np.linalg.svd(M, compute_uv=False)
    return sv[-1] > 1e-10 * max(sv[0], 1.0)


def _norm_germ_route(g, L):
    n, k = L.n, L.k
    dc = coordinate_jacobian(g.A)
    dp = p_minus(g.A, L).jacobian
    return (2 * np.pi) ** ((k + n) / 2) * abs(g.c) ** 2 * dc / dp, dc, dp


def _norm_coordinate_route(g, L):
    """M/K formula; falls back to the decay form when ``M`` is singular."""
    n, k = L.n, L.k
    mats = constraint_matrices(g, L)
    if k == 0:
        return plain_norm(g), "plain", mats
    if mats["K"] is not None:
        val = ((2 * np.pi) ** ((k + n) / 2) * abs(g.c) ** 2 * L.measure_scale
               / (principal_sqrt_det(mats["K"]) * principal_sqrt_det(mats["M"])))
        return float(val.real), "M/K", mats
    return decay_form_norm(g, L), "decay-form", mats


def decay_form(g, L):
    """Real positive form ``N = M + D^T (2 Im A)^{-1} D`` of the shift average.

    ``(f, exp(i Omega(alpha . X)) f) = (f, f) exp(-alpha.N.alpha / 2)``.
    """
    D, M = _shift_matrices(g.A, L)
    W = 2 * g.A.imag
    N = M + D.T @ np.linalg.solve(W, D)
    return 0.5 * (N.real + N.real.T)


def decay_form_norm(g, L):
    """``J (2 pi)^{k/2} (f, f) / sqrt(det N)``; valid for every constraint plane."""
    if L.k == 0:
        return plain_norm(g)
    N = decay_form(g, L)
    return float(L.measure_scale * (2 * np.pi) ** (L.k / 2) * plain_norm(g)
                 / np.sqrt(np.linalg.det(N)))


@dataclass(frozen=True)
class NormReport:
    value: float
    germ_route: float
    coordinate_route: float
    coordinate_method: str
    delta_C: float
    delta_P_minus: float
    M: np.ndarray
    K: np.ndarray


def norm_report(g, L, tol=ROUTE_TOL):
    """Constrained norm by the germ route and the coordinate route, cross-checked."""
    if g.n != L.n:
        raise InvalidInputError("dimension mismatch between state and constraints")
    germ_val, dc, dp = _norm_germ_route(g, L)
    coord_val, method, mats = _norm_coordinate_route(g, L)
    if not abs(germ_val - coord_val) <= tol * abs(coord_val):
        raise ConsistencyError(
            f"norm routes disagree: germ {germ_val!r} vs {method} {coord_val!r}")
    if not coord_val > 0:
        raise ConsistencyError(f"constrained norm not positive: {coord_val!r}")
    return NormReport(coord_val, germ_val, coord_val, method, dc, dp, mats["M"], mats["K"])


def norm_constrained(g, L, tol=ROUTE_TOL):
    """``((f, f))``: germ-route and coordinate-route values agreeing within ``tol``."""
    return norm_report(g, L, tol).value


def project_exp_quadratic(s, L):
    """eta-projection of a general exponential-quadratic function.

    ``F = J integral d alpha exp(i Omega(alpha . X)) s``, computed by Gaussian
    integration over ``alpha``; requires ``Re M > 0``.
    """
    s = _as_exp_quadratic(s)
    if L.k == 0:
        return s
    D, M = _shift_matrices(s.A, L)
    if not _m_invertible(M) or np.linalg.eigvalsh(M.real)[0] <= 1e-10 * max(1.0, np.max(np.abs(M))):
        raise DegenerateProjectionError(
            "constraint space degenerate in coordinate projection")
    Q = L.Q
    Minv_D = np.linalg.solve(M, D.T)
    Minv_Qb = np.linalg.solve(M, Q.T @ s.b)
    A_check = s.A + 1j * D @ Minv_D
    b_check = s.b - 1j * D @ Minv_Qb
    c_check = (L.measure_scale * s.c * (2 * np.pi) ** (L.k / 2) / principal_sqrt_det(M)
               * np.exp(-0.5 * (Q.T @ s.b) @ Minv_Qb))
    return ExpQuadratic(c_check, A_check, b_check)


def _c_check_germ_route(g, L, hg):
    """``c_check`` from the H-germ: ``(2 pi)^{k/2} c / Delta(P_-) * sqrt(det Pi C_check^{-1} C P_-)``."""
    n, k = L.n, L.k
    pm = p_minus(g.A, L)
    C_check = hg.C
    q_minus = pm.minus_rows[:, n:].T
    coords = np.linalg.solve(C_check, q_minus)
    ratio = coords[n - k:, :]
    val = (2 * np.pi) ** (k / 2) * g.c / pm.jacobian * principal_sqrt_det(ratio)
    return complex(val), ratio


def project_eta(g, L, tol=ETA_ROUTE_TOL):
    """eta-projection ``F = eta f`` of a Gaussian state.

    ``A_check = A + i D M^{-1} D^T`` and ``c_check = J c (2 pi)^{k/2} / sqrt(det M)``;
    ``c_check`` is recomputed from the H-germ and the two must agree.
    """
    if g.n != L.n:
        raise InvalidInputError("dimension mismatch between state and constraints")
    if L.k == 0:
        return ProjectedGaussian(g.n, g.c, g.A.copy(), {"route": "identity"})
    proj = project_exp_quadratic(g, L)
    A_check = 0.5 * (proj.A + proj.A.T)
    hg = h_germ(g.A, L)
    c_germ, ratio = _c_check_germ_route(g, L, hg)
    if abs(c_germ - proj.c) > tol * abs(proj.c):
        raise ConsistencyError(f"c_check routes disagree: {proj.c!r} vs {c_germ!r}")
    slope = A_check @ hg.C - hg.B
    residual = float(np.max(np.abs(slope)) / max(1.0, np.max(np.abs(hg.vectors))))
    if residual > 1e-8:
        raise ConsistencyError(f"A_check Q = P fails on the H-germ (residual {residual:.3e})")
    _, M = _shift_matrices(g.A, L)
    diag = {"route": "M", "M": M, "c_check_germ": c_germ, "germ_ratio": ratio,
            "slope_residual": residual}
    return ProjectedGaussian(g.n, complex(proj.c), A_check, diag)


def _alpha_average_inner(s1, s2, L):
    """``((s1, s2))`` by closed-form integration of the shifted overlap over ``alpha``."""
    s1, s2 = _as_exp_quadratic(s1), _as_exp_quadratic(s2)
    base = exp_quadratic_inner(s1, s2)
    if L.k == 0:
        return base
    D, M = _shift_matrices(s2.A, L)
    Q = -1j * (s2.A - s1.A.conj())
    beta0 = s2.b - s1.b.conj()
    Qinv_D = np.linalg.solve(Q, D)
    N = M + D.T @ Qinv_D
    v = -(1j * L.Q.T @ s2.b + Qinv_D.T @ beta0)
    if np.linalg.eigvalsh(0.5 * (N.real + N.real.T))[0] <= 1e-12 * max(1.0, np.max(np.abs(N))):
        raise IntegrabilityError("shift average does not converge")
    return complex(L.measure_scale * base * (2 * np.pi) ** (L.k / 2) / principal_sqrt_det(N)
                   * np.exp(0.5 * v @ np.linalg.solve(N, v)))


def inner_constrained(s1, s2, L, route="auto"):
    """``((s1, s2))`` for exponential-quadratic states.

    ``route='eta'`` integrates ``conj(s1)`` against ``eta s2``; ``route='shift'``
    averages the plain overlap over the constraint shifts. ``'auto'`` uses the
    eta route when the projection exists and cross-checks it against the
    shift route; degenerate planes use the shift route alone.
    """
    if route == "shift":
        return _alpha_average_inner(s1, s2, L)
    try:
        val = exp_quadratic_inner(s1, project_exp_quadratic(s2, L))
    except DegenerateProjectionError:
        if route == "eta":
            raise
        return _alpha_average_inner(s1, s2, L)
    if route == "auto":
        other = _alpha_average_inner(s1, s2, L)
        if abs(other - val) > 1e-8 * max(abs(val), abs(other), 1e-300) and abs(other - val) > 1e-14:
            raise ConsistencyError(f"constrained inner product routes disagree: {val!r} vs {other!r}")
    return val


def inner_constrained_omega(s1, x, s2, L):
    """``((s1, Omega(x) s2))`` from the analytic derivative of the shift average."""
    s1, s2 = _as_exp_quadratic(s1), _as_exp_quadratic(s2)
    d, e = omega_coefficients(x, s2)
    # xi_j s2 = -i d/db_j s2; differentiate the closed form in b.
    value = _alpha_average_inner(s1, s2, L)
    grad = _log_inner_gradient_b(s1, s2, L)
    return complex(value * (-1j * d @ grad + e))


def _log_inner_gradient_b(s1, s2, L):
    """Gradient of ``log ((s1, s2))`` with respect to the linear term of ``s2``."""
    Q = -1j * (s2.A - s1.A.conj())
    beta0 = s2.b - s1.b.conj()
    grad = -np.linalg.solve(Q, beta0)
    if L.k == 0:
        return grad
    D, M = _shift_matrices(s2.A, L)
    Qinv_D = np.linalg.solve(Q, D)
    N = M + D.T @ Qinv_D
    v = -(1j * L.Q.T @ s2.b + Qinv_D.T @ beta0)
    dv_db = -(1j * L.Q.T + Qinv_D.T)
    return grad + dv_db.T @ np.linalg.solve(N, v)


def dual_norm_identity_check(g, L, G, gauge_scale=1.0, width=1.0, nq=200):
    """Numerical check of the L/G Fourier pairing constant.

    Integrates ``rho(beta) exp(i <X(alpha), Y(beta)>)`` with a Gaussian profile
    ``rho(beta) = exp(-|beta|^2 / (2 width^2))``: the beta integral is done in
    closed form and the alpha integral by Gauss-Legendre quadrature. The
    result must equal ``rho(0) * J K (2 pi)^k / |det pairing|``. The dual
    norm of ``eta f`` equals ``((f, f))`` by definition, reported as such.
    """
    k = L.k
    J, K = L.measure_scale, gauge_scale
    formula = gauge_pairing_constant(J, K, k)
    report = {"k": k, "J": J, "K": K, "delta_formula": formula}
    if k == 0:
        report.update(delta_numeric=1.0, relative_error=0.0)
    else:
        pairing = skew_gram(L.basis, G.basis)
        # beta integral: (2 pi width^2)^{k/2} exp(-width^2 |Pi^T alpha|^2 / 2)
        cov = width ** 2 * pairing @ pairing.T
        half = 12.0 / np.sqrt(np.linalg.eigvalsh(cov)[0])
        nodes, weights = np.polynomial.legendre.leggauss(nq)
        nodes, weights = nodes * half, weights * half
        grids = np.meshgrid(*([nodes] * k), indexing="ij")
        pts = np.stack([gr.ravel() for gr in grids], axis=-1)
        wts = np.prod(np.meshgrid(*([weights] * k), indexing="ij"), axis=0).ravel()
        vals = np.exp(-0.5 * np.einsum("pi,ij,pj->p", pts, cov, pts))
        integral = J * K * (2 * np.pi * width ** 2) ** (k / 2) * float(wts @ vals)
        numeric = integral * abs(np.linalg.det(pairing))
        report.update(delta_numeric=numeric, relative_error=abs(numeric - formula) / formula)
    if g is not None:
        report["dual_norm"] = norm_constrained(g, L)
        report["dual_norm_route"] = "definition"
    return report


__all__ = [
    "ExpQuadratic", "GaussianState", "ProjectedGaussian", "NormReport",
    "weyl_apply", "omega_coefficients", "exp_quadratic_inner", "plain_norm",
    "constraint_matrices", "decay_form", "decay_form_norm", "norm_report",
    "norm_constrained", "project_exp_quadratic", "project_eta", "inner_constrained",
    "inner_constrained_omega", "dual_norm_identity_check",
]

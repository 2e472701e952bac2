"""Quadratic Hamiltonians: classical flow, Gaussian transport and reduction.

The Hamiltonian function is

    H(P, Q) = P.H_PP.P / 2 + Q.H_QP.P + Q.H_QQ.Q / 2 + epsilon,

quantized with symmetric ordering. Hamilton's equations read
``dP/dt = -H_QP P - H_QQ Q`` and ``dQ/dt = H_PP P + H_QP^T Q``, i.e.
``dy/dt = generator @ y`` for ``y = (P, Q)``.

A Gaussian ``c exp(i xi.A.xi / 2)`` evolves by transporting the frame
``(B, C) = (A, I)`` with the flow: ``A(t) = B(t) C(t)^{-1}`` and
``c(t) = c(0) exp(-i epsilon t) / sqrt(det C(t))`` with the square root
continued along the trajectory.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConsistencyError, EquivalenceNotPreservedError, InvalidInputError
from .gaussian import GaussianState, ProjectedGaussian, norm_constrained, project_eta
from .germ import h_germ
from .symplectic import (
    MeasuredSubspace, build_gauge_plane, skew_complement, skew_matrix, span_residual,
    subspace_angles,
)

FLOW_TOL = 1e-9


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """Block coefficients of a quadratic Hamiltonian plus the scalar ``epsilon``."""

    H_PP: np.ndarray
    H_QP: np.ndarray
    H_QQ: np.ndarray
    epsilon: complex = 0.0
    tol: float = field(default=1e-9, compare=False)

    def __post_init__(self):
        blocks = {}
        for name in ("H_PP", "H_QP", "H_QQ"):
            m = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise InvalidInputError(f"{name} must be a square matrix")
            if not np.all(np.isfinite(m)):
                raise InvalidInputError(f"{name} contains non-finite entries")
            blocks[name] = m
        shapes = {m.shape for m in blocks.values()}
        if len(shapes) != 1:
            raise InvalidInputError("Hamiltonian blocks have different sizes")
        for name in ("H_PP", "H_QQ"):
            m = blocks[name]
            if np.max(np.abs(m - m.T)) > self.tol * max(1.0, np.max(np.abs(m))):
                raise InvalidInputError(f"{name} is not symmetric")
            blocks[name] = 0.5 * (m + m.T)
        for name, m in blocks.items():
            object.__setattr__(self, name, m)
        eps = complex(self.epsilon)
        if not np.isfinite(eps):
            raise InvalidInputError("epsilon must be finite")
        object.__setattr__(self, "epsilon", eps)

    @property
    def n(self):
        return self.H_PP.shape[0]

    @property
    def hessian(self):
        """Symmetric ``2n x 2n`` matrix ``S_H`` with ``H(y) = y.S_H.y / 2 + epsilon``."""
        return np.block([[self.H_PP, self.H_QP.T], [self.H_QP, self.H_QQ]])

    @property
    def generator(self):
        """Matrix of Hamilton's equations on ``(P, Q)``."""
        return np.block([[-self.H_QP, -self.H_QQ], [self.H_PP, self.H_QP.T]])

    @classmethod
    def from_hessian(cls, hess, epsilon=0.0):
        hess = np.asarray(hess, dtype=float)
        n = hess.shape[0] // 2
        hess = 0.5 * (hess + hess.T)
        return cls(hess[:n, :n], hess[n:, :n], hess[n:, n:], epsilon)

    @classmethod
    def oscillator(cls, omegas, masses=None, epsilon=0.0):
        """``sum_i (p_i^2 / m_i + m_i omega_i^2 q_i^2) / 2``."""
        omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
        masses = np.ones_like(omegas) if masses is None else np.asarray(masses, float)
        n = omegas.size
        return cls(np.diag(1 / masses), np.zeros((n, n)), np.diag(masses * omegas ** 2), epsilon)

    def with_epsilon(self, epsilon):
        return QuadraticHamiltonian(self.H_PP, self.H_QP, self.H_QQ, epsilon)


@dataclass(frozen=True)
class ClassicalFlow:
    """Flow map ``u_t`` of the classical equations."""

    n: int
    u: np.ndarray
    t: float
    method: str = "expm"

    def apply(self, rows):
        """Apply ``u_t`` to phase vectors stored as rows."""
        return (self.u @ np.atleast_2d(rows).T).T


def symplectic_residual(u):
    """``max |u^T S u - S| / max(1, ||u||^2)``: round-off in ``u^T S u`` scales with ``||u||^2``."""
    n = u.shape[0] // 2
    S = skew_matrix(n)
    scale = max(1.0, np.linalg.norm(u, 2) ** 2)
    return float(np.max(np.abs(u.T @ S @ u - S)) / scale)


def _rk4(rhs, y0, t, steps):
    y = np.array(y0, dtype=complex)
    h = t / steps
    for _ in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def _rk4_steps(t, dt=None):
    if t == 0:
        return 0
    dt = min(1e-3, abs(t) / 1000) if dt is None else dt
    return max(1, int(np.ceil(abs(t) / dt)))


def classical_flow(H, t, dt=None, method="expm"):
    """Flow map of Hamilton's equations at time ``t``.

    ``method='expm'`` uses the matrix exponential; ``method='rk4'`` integrates
    with fixed-step RK4 and verifies it against a half-step run (Richardson,
    relative change <= 1e-8).
    """
    t = float(t)
    gen = H.generator
    if method == "expm":
        return ClassicalFlow(H.n, scipy.linalg.expm(gen * t), t, "expm")
    if method != "rk4":
        raise InvalidInputError(f"unknown flow method {method!r}")
    steps = _rk4_steps(t, dt)
    eye = np.eye(2 * H.n)
    if steps == 0:
        return ClassicalFlow(H.n, eye, t, "rk4")
    coarse = _rk4(lambda y: gen @ y, eye, t, steps).real
    fine = _rk4(lambda y: gen @ y, eye, t, 2 * steps).real
    if np.max(np.abs(fine - coarse)) > 1e-8 * max(1.0, np.max(np.abs(fine))):
        raise ConsistencyError("RK4 flow failed the half-step consistency check")
    return ClassicalFlow(H.n, fine, t, "rk4")


def tracked_sqrt_det(matrix_at, t, samples=16, max_samples=1 << 16):
    """``sqrt(det M(t))`` continued from ``M(0) = I`` along ``s in [0, t]``.

    ``matrix_at(s)`` returns ``M(s)``. The argument of ``det M`` is accumulated
    over a grid whose per-step increments stay below ``pi/2``; the grid is
    refined until two successive resolutions agree.
    """
    def attempt(count):
        dets = [np.linalg.det(matrix_at(s)) for s in np.linspace(0.0, t, count + 1)]
        dets = np.asarray(dets, dtype=complex)
        if np.any(dets == 0):
            raise ConsistencyError("frame determinant vanished along the trajectory")
        steps = np.angle(dets[1:] / dets[:-1])
        if np.any(np.abs(steps) >= np.pi / 2):
            return None, dets[-1]
        arg = np.angle(dets[0]) + np.sum(steps)
        return np.sqrt(abs(dets[-1])) * np.exp(0.5j * arg), dets[-1]

    if t == 0:
        det0 = np.linalg.det(matrix_at(0.0))
        return complex(np.sqrt(det0))
    count, prev = samples, None
    while count <= max_samples:
        val, _ = attempt(count)
        if val is not None:
            if prev is not None and abs(val - prev) <= 1e-10 * abs(val):
                return complex(val)
            prev = val
        count *= 2
    raise ConsistencyError("could not track the square-root branch of det C(t)")


@dataclass(frozen=True)
class GaussianTrajectoryPoint:
    state: GaussianState
    flow: ClassicalFlow
    B: np.ndarray
    C: np.ndarray
    sqrt_det_C: complex


def _frame_matrix(H, A0):
    return np.vstack([A0, np.eye(H.n)])


def transport_frame(H, A0, t):
    """Frame ``(B(t), C(t))`` obtained by applying ``u_t`` to ``(A0, I)``."""
    flow = classical_flow(H, t)
    frame = flow.u @ _frame_matrix(H, A0)
    return frame[:H.n], frame[H.n:], flow


def riccati_frame(H, A0, t, dt=None):
    """Frame ``(B(t), C(t))`` from RK4 on ``B' = -H_QP B - H_QQ C``, ``C' = H_PP B + H_QP^T C``."""
    n = H.n
    gen = H.generator
    steps = _rk4_steps(t, dt)
    y0 = _frame_matrix(H, np.asarray(A0, complex))
    if steps == 0:
        return y0[:n], y0[n:]
    coarse = _rk4(lambda y: gen @ y, y0, t, steps)
    fine = _rk4(lambda y: gen @ y, y0, t, 2 * steps)
    if np.max(np.abs(fine - coarse)) > 1e-8 * max(1.0, np.max(np.abs(fine))):
        raise ConsistencyError("Riccati frame failed the half-step consistency check")
    return fine[:n], fine[n:]


def riccati_rhs(H, A):
    """``dA/dt = -(A H_PP A + H_QP A + A H_QP^T + H_QQ)``."""
    return -(A @ H.H_PP @ A + H.H_QP @ A + A @ H.H_QP.T + H.H_QQ)


def evolve_gaussian_full(g0, H, t):
    """Transported state together with the flow and frame."""
    if g0.n != H.n:
        raise InvalidInputError("dimension mismatch between state and Hamiltonian")
    B, C, flow = transport_frame(H, g0.A, t)
    gen = H.generator
    frame0 = _frame_matrix(H, g0.A)
    sq = tracked_sqrt_det(lambda s: (scipy.linalg.expm(gen * s) @ frame0)[H.n:], float(t))
    A = np.linalg.solve(C.T, B.T).T
    A = 0.5 * (A + A.T)
    c = g0.c * np.exp(-1j * H.epsilon * t) / sq
    state = GaussianState(c, A, tol=0.0)
    return GaussianTrajectoryPoint(state, flow, B, C, sq)


def evolve_gaussian(g0, H, t):
    """Gaussian state at time ``t`` under the quadratic Hamiltonian ``H``."""
    return evolve_gaussian_full(g0, H, t).state


@dataclass(frozen=True)
class ReductionResult:
    """Adapted-basis blocks of a Hamiltonian relative to a gauge pair.

    ``blocks`` holds ``XX, YY, ZZ, XY, XZ, YZ`` sub-blocks of the coefficient
    matrix in the basis ``[X, Y, Z]`` (constraints, gauge, complement).
    """

    compatible: bool
    reduced: QuadraticHamiltonian
    blocks: dict
    basis: np.ndarray
    residual: float


def adapted_basis(L, G=None):
    """Columns ``[X, Y, Z]``: constraint vectors, gauge vectors, orthonormal complement."""
    G = build_gauge_plane(L) if G is None else G
    stacked = np.vstack([L.basis, G.basis]) if L.k else np.zeros((0, 2 * L.n))
    Z = skew_complement(MeasuredSubspace(L.n, stacked)).basis if L.k else np.eye(2 * L.n)
    return np.vstack([L.basis, G.basis, np.real(Z)]).T, G


def gamma_in_basis(H, basis):
    """Coefficients ``Gamma`` with ``H = sum Gamma_ij Omega(Z_i) Omega(Z_j) / 2 + eps``."""
    S = skew_matrix(H.n)
    inner = S @ H.hessian @ S.T
    return np.linalg.solve(basis, np.linalg.solve(basis, inner.T).T)


def hessian_from_gamma(gamma, basis):
    S = skew_matrix(basis.shape[0] // 2)
    return S.T @ basis @ gamma @ basis.T @ S


def reduce_hamiltonian(H, L, G=None, tol=1e-9):
    """Split ``H`` along ``[L, G, (L+G)^perp]`` and drop the constraint-equivalent part.

    Compatible iff the ``YY`` and ``YZ`` blocks vanish. The reduced Hamiltonian
    keeps the ``ZZ`` block; the ``XY`` commutator contributes
    ``(i/2) trace(XY)`` to ``epsilon``.
    """
    if H.n != L.n:
        raise InvalidInputError("dimension mismatch between Hamiltonian and constraints")
    k = L.k
    basis, G = adapted_basis(L, G)
    gamma = gamma_in_basis(H, basis)
    x, y, z = slice(0, k), slice(k, 2 * k), slice(2 * k, 2 * L.n)
    blocks = {"XX": gamma[x, x], "YY": gamma[y, y], "ZZ": gamma[z, z],
              "XY": gamma[x, y], "XZ": gamma[x, z], "YZ": gamma[y, z]}
    scale = max(1.0, float(np.max(np.abs(gamma))))
    residual = max(float(np.max(np.abs(blocks["YY"]), initial=0.0)),
                   float(np.max(np.abs(blocks["YZ"]), initial=0.0)))
    compatible = residual <= tol * scale
    reduced = None
    if compatible:
        kept = np.zeros_like(gamma)
        kept[z, z] = gamma[z, z]
        eps = H.epsilon + 0.5j * np.trace(blocks["XY"])
        reduced = QuadraticHamiltonian.from_hessian(hessian_from_gamma(kept, basis), eps)
    return ReductionResult(compatible, reduced, blocks, basis, residual)


def restricted_matrix(flow_u, L):
    """Matrix ``U`` with ``u X^(a) = sum_b X^(b) U[b, a]`` and its fit residual."""
    image = flow_u @ L.basis.T
    U, *_ = np.linalg.lstsq(L.basis.T, image, rcond=None)
    resid = np.linalg.norm(L.basis.T @ U - image) / max(np.linalg.norm(image), 1e-300)
    return U, float(resid)


def restricted_jacobian(flow_u, L):
    """``Delta(u_t^0) = |det U|`` for the restriction of ``u_t`` to ``L``."""
    if L.k == 0:
        return 1.0
    U, _ = restricted_matrix(flow_u, L)
    return float(abs(np.linalg.det(U)))


def max_principal_angle(rows1, rows2):
    if rows1.shape[0] == 0:
        return 0.0
    return float(np.max(subspace_angles(np.real(rows1), np.real(rows2))))


def check_evolution_unitarity(H, L, t_grid, g0=None, L_of_t=None, angle_tol=1e-8,
                              rate_tol=1e-6, norm_tol=1e-8, fd_step=1e-4):
    """Check that the flow keeps ``L`` and that ``Im epsilon`` balances its dilation.

    Conditions: ``u_t L(0) = L(t)`` (principal angles) and
    ``Im epsilon = -(1/2) d/dt ln Delta(u_t^0)``. When both hold, the
    constrained norm of the evolved ``g0`` (default ``A = i I``) is compared
    with its initial value.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    L_of_t = (lambda _t: L) if L_of_t is None else L_of_t
    g0 = GaussianState(1.0, 1j * np.eye(H.n)) if g0 is None else g0
    angles, rates, jacobians = [], [], []
    for t in t_grid:
        u = classical_flow(H, t).u
        target = L_of_t(t)
        angles.append(max_principal_angle((u @ L.basis.T).T, target.basis) if L.k else 0.0)
        if L.k:
            jac = lambda s: np.log(restricted_jacobian(classical_flow(H, s).u, L))
            rates.append((jac(t + fd_step) - jac(t - fd_step)) / (2 * fd_step))
            jacobians.append(restricted_jacobian(u, L))
        else:
            rates.append(0.0)
            jacobians.append(1.0)
    angles, rates = np.array(angles), np.array(rates)
    rate_residual = np.abs(H.epsilon.imag + 0.5 * rates)
    preserves = bool(np.all(angles <= angle_tol))
    balanced = bool(np.all(rate_residual <= rate_tol))
    report = {
        "t": t_grid.tolist(),
        "max_angle": float(np.max(angles)),
        "preserves_constraints": preserves,
        "log_jacobian_rate": rates.tolist(),
        "jacobian": [float(j) for j in jacobians],
        "im_epsilon": float(H.epsilon.imag),
        "rate_residual": float(np.max(rate_residual)),
        "balanced": balanced,
        "unitary": preserves and balanced,
    }
    if preserves and balanced:
        n0 = norm_constrained(g0, L)
        drift = max(abs(norm_constrained(evolve_gaussian(g0, H, t), L) - n0) / n0
                    for t in t_grid)
        report["norm_drift"] = float(drift)
        report["norm_conserved"] = bool(drift <= norm_tol)
    return report


@dataclass(frozen=True)
class ProjectedEvolution:
    projected: ProjectedGaussian
    c_check_formula: complex
    c_check_direct: complex
    jacobian: float
    germ_residual: float
    state: GaussianState


def evolve_projected(g0, H, L, t, angle_tol=1e-8, tol=1e-8):
    """Projected state at time ``t`` from transport of the H-germ.

    ``c_check(t) = c_check(0) exp(-i epsilon t) Delta(u_t^0) / sqrt(det[C_check(t) u_t C_check(0)^{-1}])``,
    cross-checked against projecting the evolved Gaussian.
    """
    u = classical_flow(H, t).u
    if L.k:
        angle = max_principal_angle((u @ L.basis.T).T, L.basis)
        if angle > angle_tol:
            raise EquivalenceNotPreservedError(
                f"flow moves the constraint plane (principal angle {angle:.3e})")
    p0 = project_eta(g0, L)
    hg0 = h_germ(g0.A, L)
    rows0 = hg0.vectors
    C0 = hg0.C
    gen = H.generator
    n = H.n

    def coordinate_ratio(s):
        moved = scipy.linalg.expm(gen * s) @ rows0.T
        return np.linalg.solve(C0.T, moved[n:].T).T

    sq = tracked_sqrt_det(coordinate_ratio, float(t))
    jac = restricted_jacobian(u, L)
    c_formula = p0.c_check * np.exp(-1j * H.epsilon * t) * jac / sq
    point = evolve_gaussian_full(g0, H, t)
    direct = project_eta(point.state, L)
    moved = (u @ rows0.T).T
    hg_t = h_germ(point.state.A, L)
    germ_res = max(span_residual(hg_t.vectors, v) for v in moved)
    if germ_res > tol:
        raise ConsistencyError(f"transported H-germ differs from H-germ of A(t) ({germ_res:.3e})")
    if abs(c_formula - direct.c_check) > tol * abs(direct.c_check):
        raise ConsistencyError(
            f"projected phase routes disagree: {c_formula!r} vs {direct.c_check!r}")
    return ProjectedEvolution(direct, complex(c_formula), direct.c_check, jac, germ_res, point.state)


__all__ = [
    "QuadraticHamiltonian", "ClassicalFlow", "GaussianTrajectoryPoint", "ReductionResult",
    "ProjectedEvolution", "symplectic_residual", "classical_flow", "tracked_sqrt_det",
    "transport_frame", "riccati_frame", "riccati_rhs", "evolve_gaussian",
    "evolve_gaussian_full", "adapted_basis", "gamma_in_basis", "hessian_from_gamma",
    "reduce_hamiltonian", "restricted_matrix", "restricted_jacobian",
    "max_principal_angle", "check_evolution_unitarity", "evolve_projected",
]

"""Brute-force reference computations.

* :func:`quadrature_constrained_norm` integrates the shifted overlap
  ``(f, exp(i Omega(alpha . X)) f)`` over ``alpha`` with tensor Gauss-Legendre
  quadrature, refining until the result stops changing.
* :func:`split_step_evolve` solves the Schrodinger equation on a grid with
  Strang splitting and FFTs.
* :func:`grid_inner` and :func:`fidelity` are plain grid quadratures.

Only ``n <= 2`` (and ``k <= 2`` for the constrained norm) is supported.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.linalg

from .errors import InvalidInputError, OracleError
from .gaussian import plain_norm

DEFAULT_POINTS = {1: 512, 2: 128}
DEFAULT_SIGMAS = 8.0


def shifted_overlaps(g, L, alphas):
    """``(f, exp(i Omega(alpha . X)) f)`` for a batch of coefficient vectors ``alphas``."""
    A, c, n = g.A, g.c, g.n
    x = np.atleast_2d(alphas) @ L.basis           # (m, 2n)
    p, q = x[:, :n], x[:, n:]
    Aq = q @ A.T
    b = p - Aq
    phase = 1j * (0.5 * np.sum(q * Aq, axis=1) - 0.5 * np.sum(p * q, axis=1))
    W = 2 * A.imag
    quad = np.einsum("mi,mi->m", b, np.linalg.solve(W, b.T).T)
    pref = abs(c) ** 2 * (2 * np.pi) ** (n / 2) / np.sqrt(np.linalg.det(W))
    # one exponential: the phase and decay factors overflow separately
    return pref * np.exp(phase - 0.5 * quad)


def _tensor_rule(nq, half_widths):
    nodes, weights = np.polynomial.legendre.leggauss(nq)
    axes = [nodes * h for h in half_widths]
    wts = [weights * h for h in half_widths]
    pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=-1)
    w = np.prod(np.stack([m.ravel() for m in np.meshgrid(*wts, indexing="ij")]), axis=0)
    return pts, w


def quadrature_constrained_norm(g, L, alpha_box=None, nq=64, rtol=1e-7, max_nq=2048,
                                decay_tol=1e-12):
    """``J * integral d alpha (f, exp(i Omega(alpha . X)) f)`` by Gauss-Legendre quadrature.

    Integration runs over a box aligned with the principal axes of the real
    decay form of the integrand, half-widths ``10 / sqrt(lambda_i)`` unless
    ``alpha_box`` fixes them. The integrand must fall below ``decay_tol * (f, f)``
    on the box boundary; ``nq`` is doubled until the relative change is below
    ``rtol``.
    """
    k = L.k
    base = float(shifted_overlaps(g, L, np.zeros((1, k)))[0].real) if k else None
    if k == 0:
        return plain_norm(g)
    if k > 2:
        raise OracleError("quadrature oracle supports at most two constraints")
    probe = np.eye(k)
    # |overlap| = (f, f) exp(-alpha.N.alpha / 2) exactly: log-decay along the
    # basis directions gives the diagonal of N, polarization the rest.
    form = np.zeros((k, k))
    for a in range(k):
        form[a, a] = -2 * np.log(abs(shifted_overlaps(g, L, probe[a:a + 1])[0]) / base)
    for a in range(k):
        for b in range(a + 1, k):
            v = (probe[a] + probe[b])[None, :]
            both = -2 * np.log(abs(shifted_overlaps(g, L, v)[0]) / base)
            form[a, b] = form[b, a] = 0.5 * (both - form[a, a] - form[b, b])
    lam, rot = np.linalg.eigh(form)
    if lam[0] <= 0:
        raise OracleError("shifted overlap does not decay")
    # integrate in the principal axes of the decay form: alpha = rot @ s
    half = 10.0 / np.sqrt(lam) if alpha_box is None else np.full(k, float(alpha_box))
    edge_axis = np.linspace(-1.0, 1.0, 41)
    faces = []
    for a in range(k):
        for sign in (-1.0, 1.0):
            grids = [edge_axis * half[b] if b != a else np.array([sign * half[a]]) for b in range(k)]
            faces.append(np.stack([m.ravel() for m in np.meshgrid(*grids, indexing="ij")], axis=-1))
    edge = np.max(np.abs(shifted_overlaps(g, L, np.vstack(faces) @ rot.T)))
    if edge > decay_tol * base:
        raise OracleError(f"alpha box too small: boundary integrand {edge / base:.3e} of (f, f)")
    prev = None
    while nq <= max_nq:
        pts, w = _tensor_rule(nq, half)
        val = L.measure_scale * float(np.real(w @ shifted_overlaps(g, L, pts @ rot.T)))
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val
        prev = val
        nq *= 2
    raise OracleError("Gauss-Legendre quadrature did not converge")


@dataclass(frozen=True)
class GridWavefunction:
    """Values of a wavefunction on a tensor grid (``n`` = 1 or 2)."""

    axes: tuple
    values: np.ndarray
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        if len(axes) not in (1, 2):
            raise InvalidInputError("grids support n = 1 or 2")
        if any(a.size < 64 for a in axes):
            raise InvalidInputError("a grid needs at least 64 points per axis")
        values = np.asarray(self.values, dtype=complex)
        if values.shape != tuple(a.size for a in axes):
            raise InvalidInputError("values do not match the grid shape")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return len(self.axes)

    def mesh(self):
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)


def make_grid(n, half_width, points=512, center=None):
    """Periodic-style grids ``[-h, h)`` per axis."""
    center = np.zeros(n) if center is None else np.asarray(center, float)
    half_width = np.broadcast_to(np.asarray(half_width, float), (n,))
    return tuple(c + np.linspace(-h, h, points, endpoint=False) for c, h in zip(center, half_width))


def sample(state, axes):
    """Evaluate an exponential-quadratic state on a tensor grid."""
    s = state.as_exp_quadratic() if hasattr(state, "as_exp_quadratic") else state
    grid = GridWavefunction(axes, np.zeros(tuple(len(a) for a in axes), complex))
    return GridWavefunction(axes, s(grid.mesh()))


def _integrate(values, axes):
    out = values
    for a in axes:
        out = scipy.integrate.trapezoid(out, a, axis=0)
    return out


def fidelity(w1, w2):
    """``|<w1, w2>| / (||w1|| ||w2||)`` by trapezoid quadrature on a shared grid."""
    if len(w1.axes) != len(w2.axes) or any(
            a.shape != b.shape or not np.allclose(a, b, rtol=0, atol=1e-12)
            for a, b in zip(w1.axes, w2.axes)):
        raise InvalidInputError("fidelity needs identical grids")
    overlap = _integrate(np.conj(w1.values) * w2.values, w1.axes)
    n1 = _integrate(np.abs(w1.values) ** 2, w1.axes).real
    n2 = _integrate(np.abs(w2.values) ** 2, w2.axes).real
    return float(min(1.0, abs(overlap) / np.sqrt(n1 * n2)))


def grid_inner(s1, s2, half_width=12.0, points=801):
    """Trapezoid quadrature of ``conj(s1) s2`` over ``[-h, h]^n`` (``n <= 2``)."""
    s1 = s1.as_exp_quadratic() if hasattr(s1, "as_exp_quadratic") else s1
    s2 = s2.as_exp_quadratic() if hasattr(s2, "as_exp_quadratic") else s2
    if s1.n > 2:
        raise InvalidInputError("grid quadrature supports n <= 2")
    axes = tuple(np.linspace(-half_width, half_width, points) for _ in range(s1.n))
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return complex(_integrate(np.conj(s1(mesh)) * s2(mesh), axes))


def _completed_square(H):
    """``K`` with ``p.H_PP.p/2 + sym(q.H_QP.p) = (p + K q).H_PP.(p + K q)/2 - q.K^T H_PP K.q/2``."""
    n = H.n
    if np.max(np.abs(H.H_QP)) == 0:
        return np.zeros((n, n))
    try:
        K = np.linalg.solve(H.H_PP, H.H_QP.T)
    except np.linalg.LinAlgError:
        raise OracleError("split-step oracle needs invertible H_PP when H_QP != 0") from None
    if np.linalg.cond(H.H_PP) > 1e10 or np.max(np.abs(K - K.T)) > 1e-10 * max(1.0, np.max(np.abs(K))):
        raise OracleError("mixed term cannot be absorbed into a gauge phase")
    return 0.5 * (K + K.T)


def wigner_covariance(A):
    """Phase-space covariance ``(p, q)`` of the Wigner function of ``exp(i xi.A.xi / 2)``."""
    X, Y = A.real, A.imag
    cq = 0.5 * np.linalg.inv(Y)
    return np.block([[X @ cq @ X + 0.5 * Y, X @ cq], [cq @ X, cq]])


def _tail_fraction(values, axes):
    """Largest share of ``|psi|^2`` on the outer 5% of the box or outer 10% of frequencies."""
    total = np.sum(np.abs(values) ** 2)
    worst = 0.0
    power = np.abs(np.fft.fftn(values)) ** 2
    for ax, a in enumerate(axes):
        m = a.size
        edge = max(1, m // 20)
        moved = np.moveaxis(np.abs(values) ** 2, ax, 0)
        worst = max(worst, (moved[:edge].sum() + moved[-edge:].sum()) / total)
        freq = np.abs(np.fft.fftfreq(m))
        mask = freq >= 0.45
        moved_power = np.moveaxis(power, ax, 0)
        worst = max(worst, moved_power[mask].sum() / power.sum())
    return float(worst)


def _strang(psi, mesh, kin_phase, pot_phase_half, gauge_phase, steps):
    gauge = np.exp(1j * gauge_phase)
    gauge_inv = np.conj(gauge)
    for _ in range(steps):
        psi = psi * pot_phase_half
        psi = gauge_inv * np.fft.ifftn(kin_phase * np.fft.fftn(gauge * psi))
        psi = psi * pot_phase_half
    return psi


def split_step_evolve(g0, H, t, points=None, sigmas=DEFAULT_SIGMAS, rtol=1e-7,
                      max_steps=1 << 16, tail_tol=1e-10):
    """Grid solution of ``i df/dt = H f`` by Strang splitting.

    The mixed ``q.H_QP.p`` term is absorbed by completing the square,
    ``H = exp(-i phi) [p.H_PP.p / 2] exp(i phi) + q.V.q / 2`` with
    ``phi = q.K.q / 2``; each half is exact in its own representation. The
    step count doubles until the state changes by less than ``rtol``.
    """
    n = g0.n
    if n > 2:
        raise OracleError("split-step oracle supports n <= 2")
    points = DEFAULT_POINTS[n] if points is None else int(points)
    K = _completed_square(H)
    V = H.H_QQ - K.T @ H.H_PP @ K
    # Phase-space covariance of |f|^2 moved by the classical flow sizes the grid.
    cov0 = wigner_covariance(g0.A)
    gen = H.generator
    gauge_map = np.hstack([np.eye(n), K])
    sig_q, sig_k = 0.0, 0.0
    for s in np.linspace(0.0, t, 41):
        u = scipy.linalg.expm(gen * s)
        cov = u @ cov0 @ u.T
        sig_q = max(sig_q, np.sqrt(np.max(np.diag(cov[n:, n:]))))
        sig_k = max(sig_k, np.sqrt(np.max(np.diag(gauge_map @ cov @ gauge_map.T))),
                    np.sqrt(np.max(np.diag(cov[:n, :n]))))
    half = sigmas * sig_q
    dx_max = np.pi / (sigmas * sig_k)
    need = int(2 ** np.ceil(np.log2(max(points, 2 * half / dx_max))))
    points = max(points, need)
    if (n == 2 and points > 1024) or points > 1 << 15:
        raise OracleError("grid resolution requirement too large")
    axes = make_grid(n, half, points)
    psi0 = sample(g0, axes)
    if t == 0:
        return GridWavefunction(axes, psi0.values, {"steps": 0, "points": points})
    mesh = psi0.mesh()
    dx = [a[1] - a[0] for a in axes]
    freqs = np.stack(np.meshgrid(*[2 * np.pi * np.fft.fftfreq(points, d) for d in dx],
                                 indexing="ij"), axis=-1)
    kin = 0.5 * np.einsum("...i,ij,...j->...", freqs, H.H_PP, freqs)
    pot = 0.5 * np.einsum("...i,ij,...j->...", mesh, V, mesh)
    gauge_phase = 0.5 * np.einsum("...i,ij,...j->...", mesh, K, mesh)
    scale = max(1.0, np.linalg.norm(H.hessian, 2))
    steps = 64 * int(np.ceil(max(1.0, abs(t) * scale)))
    prev = None
    while steps <= max_steps:
        dt = t / steps
        psi = _strang(psi0.values, mesh, np.exp(-1j * dt * kin), np.exp(-0.5j * dt * pot),
                      gauge_phase, steps)
        if prev is not None:
            change = np.linalg.norm(psi - prev) / np.linalg.norm(psi)
            if change < rtol:
                gauge = np.exp(1j * gauge_phase)
                tail = max(_tail_fraction(psi, axes), _tail_fraction(psi0.values, axes),
                           _tail_fraction(gauge * psi, axes))
                if tail > tail_tol:
                    raise OracleError(f"grid under-resolved (tail fraction {tail:.3e})")
                psi = psi * np.exp(-1j * H.epsilon * t)
                return GridWavefunction(axes, psi, {"steps": steps, "points": points,
                                                    "change": float(change), "tail": tail})
        prev = psi
        steps *= 2
    raise OracleError("split-step time stepping did not converge")


__all__ = [
    "GridWavefunction", "shifted_overlaps", "quadrature_constrained_norm", "make_grid",
    "sample", "fidelity", "grid_inner", "split_step_evolve",
]

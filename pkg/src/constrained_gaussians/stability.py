"""Stability, normal modes and spectra of constrained quadratic Hamiltonians.

The reduced phase space is the quotient ``R = L^perp / L``, represented by an
orthonormal real basis of ``(L + G)^perp``. A stable reduced flow splits into
normal modes ``y_I`` with ``Gr y_I = i beta_I y_I`` normalised by
``nu(y_I, y_J) = delta_IJ``; the quantum spectrum is then
``sum_I beta_I (N_I + 1/2)`` up to the constant ``Re epsilon``.
"""

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
import scipy.linalg

from .dynamics import adapted_basis, evolve_gaussian, reduce_hamiltonian
from .errors import InvalidGermError, InvalidInputError, NumericalDegeneracyError
from .gaussian import GaussianState
from .germ import GermBasis, h_germ, matrix_from_germ, validate_germ
from .symplectic import build_gauge_plane, nu_gram, skew_gram, span_residual

EIGVEC_COND_MAX = 1e8


@dataclass(frozen=True)
class QuotientSpace:
    """Constraint plane with representatives of ``L^perp / L`` stored as rows."""

    L: object
    representatives: np.ndarray
    gauge: object

    @property
    def dim(self):
        return self.representatives.shape[0]


@dataclass(frozen=True)
class StabilityResult:
    stable: bool
    eigenvalues: np.ndarray
    max_real_part: float
    eigvec_condition: float


@dataclass(frozen=True)
class ModeSet:
    """Normal modes (rows of ``vectors``) with their frequencies ``betas``."""

    vectors: np.ndarray
    betas: np.ndarray
    quotient: QuotientSpace = None

    @property
    def count(self):
        return len(self.betas)


@dataclass(frozen=True)
class SpectrumReport:
    stable: bool
    betas: tuple
    ground_A: np.ndarray
    levels: tuple   # ((N, value), ...)


def quotient_space(L, G=None):
    """Orthonormal real representatives of ``L^perp / L`` (the complement of ``L + G``)."""
    basis, G = adapted_basis(L, G)
    reps = basis[:, 2 * L.k:].T
    return QuotientSpace(L, reps, G)


def reduced_generator(H, L, tol=1e-9):
    """Matrix of the classical flow on ``L^perp / L`` in representative coordinates."""
    if H.n != L.n:
        raise InvalidInputError("dimension mismatch between Hamiltonian and constraints")
    red = reduce_hamiltonian(H, L, tol=tol)
    gen = H.generator
    scale = max(1.0, float(np.max(np.abs(gen))))
    if L.k:
        image = gen @ L.basis.T
        coef, *_ = np.linalg.lstsq(L.basis.T, image, rcond=None)
        leak = float(np.max(np.abs(L.basis.T @ coef - image)))
        if not red.compatible or leak > tol * scale:
            raise InvalidInputError(
                "Hamiltonian is not compatible with the constraints "
                f"(block residual {red.residual:.3e}, flow leaves L by {leak:.3e})")
    Q = quotient_space(L)
    if Q.dim == 0:
        return Q, np.zeros((0, 0))
    image = gen @ Q.representatives.T
    span = np.vstack([Q.representatives, L.basis]).T
    coef = np.linalg.solve(span, image) if span.shape[0] == span.shape[1] else \
        np.linalg.lstsq(span, image, rcond=None)[0]
    if L.k:
        outside = skew_gram(L.basis, image.T)
        if np.max(np.abs(outside)) > tol * scale:
            raise InvalidInputError("flow leaves L^perp")
    return Q, coef[:Q.dim].real


def stability_check(Gr, tol=1e-9):
    """Stable iff eigenvalues are imaginary (``|Re| <= tol ||Gr||``) and ``Gr`` is diagonalizable."""
    Gr = np.atleast_2d(np.asarray(Gr, dtype=float)) if np.size(Gr) else np.zeros((0, 0))
    if Gr.size == 0:
        return StabilityResult(True, np.zeros(0, complex), 0.0, 1.0)
    ev, vecs = np.linalg.eig(Gr)
    norm = np.linalg.norm(Gr, 2)
    max_re = float(np.max(np.abs(ev.real)))
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    cond = float(np.linalg.cond(vecs))
    stable = max_re <= tol * norm and cond <= EIGVEC_COND_MAX
    order = np.lexsort((ev.real, ev.imag))
    return StabilityResult(bool(stable), ev[order], max_re, cond)


def _cluster(values, tol):
    """Group sorted reals into clusters of nearby values."""
    groups = []
    for v in sorted(values):
        if groups and abs(v - groups[-1][-1]) <= tol:
            groups[-1].append(v)
        else:
            groups.append([v])
    return groups


def _eigenspace(Gr, lam, dim):
    """Orthonormal basis (columns) of the ``dim``-dimensional eigenspace at ``lam``."""
    shifted = Gr - lam * np.eye(Gr.shape[0])
    _, _, vh = np.linalg.svd(shifted)
    return vh[-dim:].conj().T


def _fix_phase(y):
    """Rotate ``y`` so its largest coordinate-part entry is real positive."""
    n = y.size // 2
    part = y[n:] if np.max(np.abs(y[n:])) > 1e-8 * np.max(np.abs(y)) else y[:n]
    lead = part[np.argmax(np.abs(part) - 1e-9 * np.arange(n))]
    return y * (abs(lead) / lead)


def mode_decomposition(Gr, Q, tol=1e-9):
    """nu-orthonormal normal modes of a stable reduced generator."""
    m = Q.dim
    if m == 0:
        return ModeSet(np.zeros((0, Q.representatives.shape[1]), complex), np.zeros(0), Q)
    res = stability_check(Gr, tol)
    if not res.stable:
        raise InvalidInputError("mode decomposition requires a stable reduced generator")
    scale = max(1.0, float(np.linalg.norm(Gr, 2)))
    betas_im = res.eigenvalues.imag
    clusters = _cluster(betas_im, 1e-6 * scale)
    reps = Q.representatives
    vectors, betas = [], []
    for group in clusters:
        beta = float(np.mean(group))
        if beta < -1e-6 * scale:
            continue
        dim = len(group)
        zero = abs(beta) <= 1e-6 * scale
        if zero:
            beta = 0.0
            basis = scipy.linalg.null_space(Gr, rcond=1e-8) if dim else None
            if basis.shape[1] != dim:
                raise NumericalDegeneracyError("kernel dimension mismatch for beta = 0")
        else:
            basis = _eigenspace(Gr, 1j * beta, dim)
        rows = basis.T @ reps
        gram = nu_gram(rows)
        herm = 0.5 * (gram + gram.conj().T).T
        lam, vec = np.linalg.eigh(herm)
        small = np.abs(lam) <= 1e-8 * max(1.0, np.max(np.abs(lam)))
        if np.any(small):
            raise NumericalDegeneracyError(
                f"nu form degenerate on eigenspace beta={beta:.6g}: eigenvalues {lam}")
        for val, v in sorted(zip(lam, vec.T), key=lambda p: -p[0]):
            w = (v / np.sqrt(abs(val))) @ rows
            if val > 0:
                vectors.append(w)
                betas.append(beta)
            elif not zero:
                vectors.append(w.conj())
                betas.append(-beta)
    vectors = np.array([_fix_phase(v) for v in vectors])
    betas = np.array(betas)
    if len(betas) * 2 != m:
        raise NumericalDegeneracyError(
            f"found {len(betas)} modes, expected {m // 2}")
    order = np.argsort(betas, kind="stable")
    return ModeSet(vectors[order], betas[order], Q)


def mode_residuals(modes, Gr):
    """Max deviations of the mode invariants: nu-orthonormality, isotropy, eigen-relation."""
    if modes.count == 0:
        return {"nu": 0.0, "isotropy": 0.0, "eigen": 0.0}
    v = modes.vectors
    reps = modes.quotient.representatives
    coords = np.linalg.lstsq(reps.T, v.T, rcond=None)[0]
    eig = Gr @ coords - coords * (1j * modes.betas)[None, :]
    return {
        "nu": float(np.max(np.abs(nu_gram(v) - np.eye(modes.count)))),
        "isotropy": float(np.max(np.abs(skew_gram(v, v)))),
        "eigen": float(np.max(np.abs(eig))),
    }


def germ_from_modes(L, modes, G=None, tol=1e-8):
    """Ground-state matrix ``A`` from the modes and the gauge-paired vectors.

    The germ is spanned by the modes and ``W^(a) = (X^(a) - i Y^(a)) / sqrt(2)``
    with ``Y`` the gauge plane dual to ``L``.
    """
    G = build_gauge_plane(L) if G is None else G
    n = L.n
    W = (L.basis - 1j * G.basis) / np.sqrt(2) if L.k else np.zeros((0, 2 * n))
    rows = np.vstack([modes.vectors.reshape(-1, 2 * n), W])
    if rows.shape[0] != n:
        raise InvalidGermError(f"need {n} germ vectors, have {rows.shape[0]}")
    r = GermBasis("S", n, rows)
    try:
        validate_germ(r, tol)
    except InvalidGermError as exc:
        raise InvalidGermError(f"modes do not form a germ: {exc}") from None
    A = matrix_from_germ(r)
    hg = h_germ(A, L)
    worst = max([span_residual(hg.vectors, y) for y in rows[:modes.count]]
                + [span_residual(hg.vectors, x) for x in L.basis] + [0.0])
    if worst > tol:
        raise InvalidGermError(f"H-germ of the constructed A misses mode vectors ({worst:.3e})")
    return A


def spectrum(modes, max_total_occupation, epsilon=0.0):
    """Levels ``sum_I beta_I (N_I + 1/2)`` for ``|N| <= max_total_occupation``.

    ``epsilon`` (its real part) is added to every level. Sorted by value, ties
    by multi-index.
    """
    betas = np.asarray(modes.betas, dtype=float)
    m = len(betas)
    levels = []
    for N in itertools.product(range(max_total_occupation + 1), repeat=m):
        if sum(N) <= max_total_occupation:
            value = float(np.dot(betas, np.array(N) + 0.5)) + float(np.real(epsilon))
            levels.append((tuple(int(x) for x in N), value))
    levels.sort(key=lambda p: (p[1], p[0]))
    return levels


def reconstruct_generator(modes):
    """``V -> sum beta (<V, y*> y + <V, y> y*)`` in representative coordinates."""
    reps = modes.quotient.representatives
    m = reps.shape[0]
    if m == 0:
        return np.zeros((0, 0))
    v = modes.vectors
    with_conj = skew_gram(reps, v.conj()) * modes.betas[None, :]   # <V, y*>
    plain = skew_gram(reps, v) * modes.betas[None, :]             # <V, y>
    images = with_conj @ v + plain @ v.conj()                    # rows: image of each V
    coords = np.linalg.lstsq(reps.T, images.T, rcond=None)[0]
    return coords.real


def gamma_reconstruct_residual(modes, H, L):
    """``||Gr - Gr_rec|| / ||Gr||`` (0 when both vanish)."""
    _, Gr = reduced_generator(H, L)
    if Gr.size == 0:
        return 0.0
    rec = reconstruct_generator(modes)
    den = np.linalg.norm(Gr)
    diff = np.linalg.norm(Gr - rec)
    if den == 0:
        return float(diff)
    return float(diff / den)


def mode_commutators(modes):
    """``K_IJ = [a_I, a_J^+] = -i <y_I, y_J*>``."""
    v = modes.vectors
    return skew_gram(v, v.conj()) / 1j


def excited_overlap(modes, N, M, base_norm=1.0, commutators=None):
    """``<a^+^N g, a^+^M g>`` from the commutation relations alone.

    Annihilators are moved to the right using ``[a_I, a_J^+] = K_IJ`` and
    ``a_I g = 0``.
    """
    K = mode_commutators(modes) if commutators is None else np.asarray(commutators)
    left = tuple(i for i, c in enumerate(N) for _ in range(int(c)))
    right = tuple(i for i, c in enumerate(M) for _ in range(int(c)))
    if len(left) != len(right):
        return 0j
    Kt = tuple(tuple(complex(x) for x in row) for row in K)
    return complex(base_norm * _word_overlap(left, right, Kt))


@lru_cache(maxsize=None)
def _word_overlap(left, right, K):
    if not left:
        return 1.0 + 0j
    i = left[-1]
    rest = left[:-1]
    total = 0j
    seen = set()
    for r, j in enumerate(right):
        if K[i][j] == 0:
            continue
        reduced = right[:r] + right[r + 1:]
        key = tuple(sorted(reduced))
        count = sum(1 for jj in right if jj == j)
        if (j, key) in seen:
            continue
        seen.add((j, key))
        total += count * K[i][j] * _word_overlap(rest, key, K)
    return total


def _fock_apply(state, mode, create):
    out = {}
    for N, c in state.items():
        N2 = list(N)
        if create:
            N2[mode] += 1
            coef = c
        else:
            if N2[mode] == 0:
                continue
            coef = c * N2[mode]
            N2[mode] -= 1
        key = tuple(N2)
        out[key] = out.get(key, 0) + coef
    return out


def _fock_norm2(state, base):
    return sum(abs(c) ** 2 * np.prod([factorial(x) for x in N]) for N, c in state.items()) * base


def ladder_bound_check(modes, rank, samples=100, rng=None, base_norm=1.0):
    """Check ``||Omega(Z) g|| <= sqrt(s) nu(Z)^{1/2} ||g||`` and the ``s+1`` bound for ``Omega(Z*)``.

    ``g`` ranges over random combinations of creation monomials of degree at
    most ``rank`` and ``Z`` over random combinations of the modes.
    """
    rng = np.random.default_rng(rng)
    m = modes.count
    worst = [0.0, 0.0]
    if m == 0:
        return {"holds": True, "worst_ratio": worst, "samples": 0}
    indices = [N for N in itertools.product(range(rank + 1), repeat=m) if sum(N) <= rank]
    for _ in range(samples):
        g = {N: complex(*rng.normal(size=2)) for N in indices}
        z = rng.normal(size=m) + 1j * rng.normal(size=m)
        Z = z @ modes.vectors
        nu_z = float((nu_gram(Z[None, :])[0, 0]).real)
        annihilated, created = {}, {}
        for i in range(m):
            for N, c in _fock_apply(g, i, False).items():
                annihilated[N] = annihilated.get(N, 0) + z[i] * c
            for N, c in _fock_apply(g, i, True).items():
                created[N] = created.get(N, 0) + np.conj(z[i]) * c
        gn = np.sqrt(_fock_norm2(g, base_norm))
        lhs1 = np.sqrt(_fock_norm2(annihilated, base_norm))
        lhs2 = np.sqrt(_fock_norm2(created, base_norm))
        b1 = np.sqrt(rank) * np.sqrt(nu_z) * gn
        b2 = np.sqrt(rank + 1) * np.sqrt(nu_z) * gn
        worst[0] = max(worst[0], lhs1 / b1 if b1 > 0 else (0.0 if lhs1 == 0 else np.inf))
        worst[1] = max(worst[1], lhs2 / b2)
    holds = worst[0] <= 1 + 1e-12 and worst[1] <= 1 + 1e-12
    return {"holds": bool(holds), "worst_ratio": [float(w) for w in worst], "samples": samples}


def analyse(H, L, tol=1e-9):
    """Stability verdict, modes and ground-state matrix (``None`` when unstable)."""
    Q, Gr = reduced_generator(H, L, tol)
    res = stability_check(Gr, tol)
    if not res.stable:
        return res, Q, Gr, None, None
    modes = mode_decomposition(Gr, Q, tol)
    A = germ_from_modes(L, modes, Q.gauge)
    return res, Q, Gr, modes, A


def spectrum_report(H, L, max_total_occupation, tol=1e-9):
    res, Q, Gr, modes, A = analyse(H, L, tol)
    if not res.stable:
        return SpectrumReport(False, (), None, ())
    levels = spectrum(modes, max_total_occupation)
    return SpectrumReport(True, tuple(float(b) for b in modes.betas), A, tuple(levels))


def eigenstate_stationarity_check(H, L, modes, ground_A=None, t_grid=None, A0=None):
    """Evolve the ground Gaussian under the reduced Hamiltonian and check stationarity.

    Reports the drift of ``A(t)`` and the deviation of ``arg c(t)`` from
    ``-t (sum beta / 2 + Re epsilon)``. ``A0`` overrides the initial matrix
    (negative controls).
    """
    t_grid = np.linspace(0.0, 5.0, 11) if t_grid is None else np.asarray(t_grid, float)
    ground_A = germ_from_modes(L, modes) if ground_A is None else ground_A
    A0 = ground_A if A0 is None else np.asarray(A0, complex)
    reduced = reduce_hamiltonian(H, L).reduced
    if reduced is None:
        raise InvalidInputError("Hamiltonian is not compatible with the constraints")
    g0 = GaussianState(1.0, A0)
    energy = 0.5 * float(np.sum(modes.betas)) + float(np.real(H.epsilon))
    drift, phase_err = 0.0, 0.0
    for t in t_grid:
        state = evolve_gaussian(g0, reduced, t)
        drift = max(drift, float(np.max(np.abs(state.A - A0))))
        expected = np.exp(-1j * energy * t)
        got = state.c / abs(state.c)
        phase_err = max(phase_err, float(abs(np.angle(got / expected))))
    return {"A_drift": drift, "phase_error": phase_err, "energy": energy,
            "stationary": bool(drift <= 1e-8 and phase_err <= 1e-7)}


__all__ = [
    "QuotientSpace", "StabilityResult", "ModeSet", "SpectrumReport", "quotient_space",
    "reduced_generator", "stability_check", "mode_decomposition", "mode_residuals",
    "germ_from_modes", "spectrum", "reconstruct_generator", "gamma_reconstruct_residual",
    "mode_commutators", "excited_overlap", "ladder_bound_check", "analyse",
    "spectrum_report", "eigenstate_stationarity_check",
]

"""Gaussian transport under quadratic Hamiltonians and the unitarity balance on constraints.

Run: python3 demos/dynamics_unitarity.py
"""

import numpy as np

from constrained_gaussians import (
    ConstraintSet, GaussianState, QuadraticHamiltonian, check_evolution_unitarity,
    evolve_gaussian, evolve_projected, norm_constrained, split_step_evolve,
)
from constrained_gaussians.oracle import fidelity, sample

osc = QuadraticHamiltonian.oscillator([1.0])
g0 = GaussianState(1.0, [[1j]])
for t in (1.0, np.pi, 2 * np.pi):
    g = evolve_gaussian(g0, osc, t)
    print(f"oscillator t={t:.4f}: A = {g.A[0, 0]:.6f}, c = {g.c:.6f}, e^(-it/2) = {np.exp(-0.5j * t):.6f}")

squeezed = GaussianState(1.0, [[0.5 + 2j]])
grid = split_step_evolve(squeezed, osc, 1.0)
exact = sample(evolve_gaussian(squeezed, osc, 1.0), grid.axes)
print(f"split-step vs closed form: 1 - fidelity = {1 - fidelity(grid, exact):.2e}")

# Dilation stretches the constraint direction; Im epsilon must compensate.
L = ConstraintSet.from_vectors([[0.0, 1.0]])
for eps in (0.0, -0.5j):
    H = QuadraticHamiltonian([[0.0]], [[1.0]], [[0.0]], epsilon=eps)
    rep = check_evolution_unitarity(H, L, [0.5, 1.0, 2.0])
    norms = [norm_constrained(evolve_gaussian(g0, H, t), L) for t in (0.0, 1.0, 2.0)]
    print(f"dilation, epsilon={eps}: balanced={rep['balanced']}, unitary={rep['unitary']}, "
          f"norms {np.round(norms, 6)}")
    if rep["unitary"]:
        pe = evolve_projected(g0, H, L, 1.0)
        print(f"  projected phase by transport {pe.c_check_formula:.10f}, direct {pe.c_check_direct:.10f}")

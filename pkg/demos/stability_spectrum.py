"""Stability on the reduced phase space, normal modes and spectra.

Run: python3 demos/stability_spectrum.py
"""

import numpy as np

from constrained_gaussians import (
    ConstraintSet, QuadraticHamiltonian, analyse, classical_flow, spectrum_report,
)

cases = {
    "oscillator": (QuadraticHamiltonian.oscillator([1.0]), ConstraintSet.empty(1)),
    "two oscillators": (QuadraticHamiltonian.oscillator([1.0, 2.0]), ConstraintSet.empty(2)),
    "inverted oscillator": (QuadraticHamiltonian([[1.0]], [[0.0]], [[-1.0]]), ConstraintSet.empty(1)),
    "q1 q2 with p1 constraint": (
        QuadraticHamiltonian(np.zeros((2, 2)), np.zeros((2, 2)), [[0.0, 1.0], [1.0, 0.0]]),
        ConstraintSet.from_vectors([[1.0, 0.0, 0.0, 0.0]])),
}
for name, (H, L) in cases.items():
    rep = spectrum_report(H, L, 2)
    print(f"{name}: stable={rep.stable}")
    if rep.stable:
        print(f"  frequencies {np.round(rep.betas, 12)}")
        print(f"  ground A diag {np.round(np.diag(rep.ground_A), 12)}")
        print(f"  levels {[(N, round(v, 12)) for N, v in rep.levels]}")

H, L = cases["q1 q2 with p1 constraint"]
res, Q, Gr, modes, _ = analyse(H, L)
print(f"reduced generator on the quotient:\n{Gr}")
for t in (10.0, 20.0, 40.0):
    print(f"  unreduced flow norm at t={t:>4}: {np.linalg.norm(classical_flow(H, t).u, 2):.3f}")

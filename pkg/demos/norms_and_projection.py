"""Constrained norms by three routes and the projection onto constraint-invariant states.

Run: python3 demos/norms_and_projection.py
"""

import numpy as np

from constrained_gaussians import (
    ConstraintSet, DegenerateProjectionError, GaussianState, norm_report, project_eta,
    quadrature_constrained_norm,
)


def show_norm(label, g, L):
    rep = norm_report(g, L)
    quad = quadrature_constrained_norm(g, L)
    print(f"{label}: norm {rep.value:.12f}  germ {rep.germ_route:.12f}  "
          f"{rep.coordinate_method} {rep.coordinate_route:.12f}  quadrature {quad:.12f}")


g = GaussianState(1.0, [[1j]])
along_q = ConstraintSet.from_vectors([[0.0, 1.0]])
along_p = ConstraintSet.from_vectors([[1.0, 0.0]])
show_norm("translations in q", g, along_q)
show_norm("momentum shifts  ", g, along_p)
print(f"  expected 2*pi = {2 * np.pi:.12f}")

g2 = GaussianState(1.0, 1j * np.eye(2))
show_norm("2-D, shift in q1 ", g2, ConstraintSet.from_vectors([[0, 0, 1, 0]]))
print(f"  expected 2*pi^1.5 = {2 * np.pi ** 1.5:.12f}")

proj = project_eta(g, along_q)
print(f"projection under q-translations: A = {proj.A_check[0, 0]:.3g}, c = {proj.c_check:.6f} "
      f"(sqrt(2 pi) = {np.sqrt(2 * np.pi):.6f})")
for P, Q in [(1.0, 1.0), (3.0, 2.0)]:
    proj = project_eta(g, ConstraintSet.from_vectors([[P, Q]]))
    print(f"projection along (P, Q) = ({P}, {Q}): A = {proj.A_check[0, 0].real:.12f} (P/Q = {P / Q})")
try:
    project_eta(g, along_p)
except DegenerateProjectionError as exc:
    print(f"projection under momentum shifts: {exc}")

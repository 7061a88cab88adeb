"""
Fixed point and error budget
============================

A zero mode satisfies f = T f with the Riesz-kernel operator
T g(x) = -(i / 4 pi) int alpha.(x - y) / |x - y|^3 Q(y) g(y) dy.
The deviation r^2 f(r omega) - L(omega) splits into integrals over three regions:
|y| <= R0, the ball of radius r/2 around r omega, and the rest.
"""

import numpy as np

from zeromodes.asymptotics import error_budget
from zeromodes.integral_operator import fixed_point_residual, perturbed, sample_points
from zeromodes.quadrature import QuadratureRule
from zeromodes.zero_modes import loss_yau_pair

_, pair = loss_yau_pair()
rule = QuadratureRule(tol=1e-5)

pts = sample_points(seed=0, n=4, far=(10.0,))
print("|f - T f| at sample points:", fixed_point_residual(pair, pts, rule).residuals)
print("same, after adding a small bump:", fixed_point_residual(pair, pts[:2], rule, f=perturbed(pair.f, 1e-2)).residuals)

rule = QuadratureRule(tol=1e-6)
omega = np.array([0.0, 0.0, 1.0])
for r, R0 in ((40.0, 10.0), (80.0, 10.0), (160.0, 20.0)):
    b = error_budget(pair, omega, r, R0, rule)
    print(f"r = {r:4.0f}, R0 = {R0:3.0f}: |I| {np.linalg.norm(b.I):.1e}  |II| {np.linalg.norm(b.II):.3e}  "
          f"|III| {np.linalg.norm(b.III):.3e}  sum defect {b.sum_residual:.1e} <= {b.combined_err:.1e}")

# |I| vanishes for this family: the E1 integrand pairs a radial weight with the gradient
# of the harmonic function 1/|r omega - y|, and its average over spheres about 0 is zero.
print("bound on |I| that does scale like 1/r:", b.I_majorant)

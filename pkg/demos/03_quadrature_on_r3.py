"""
Integrals over R^3
==================

A Lebedev sphere times adaptive Gauss-Legendre panels in r, with a rational
map to r_max and a rigorous tail bound beyond it. Singular integrands are done
in coordinates centred at the pole.
"""

import numpy as np

from zeromodes.quadrature import QuadratureRule, integrate_r3, integrate_singular, tail_bound

rule = QuadratureRule(tol=1e-7)

res = integrate_r3(lambda y: (1 + np.sum(y * y, axis=-1)) ** -2, rule, decay=(1.0, 4.0))
print(f"int <y>^-4   = {res.value:.12f}  (pi^2 = {np.pi ** 2:.12f}), err_est {res.err_est:.1e}")
print(f"  panels {res.n_panels}, evaluations {res.n_evals}, tail {res.tail:.1e}")

val, err = integrate_r3(lambda y: np.exp(-np.sum(y * y, axis=-1)), rule)
print(f"int exp(-y^2) = {val:.12f}  (pi^1.5 = {np.pi ** 1.5:.12f}), err_est {err:.1e}")

x = np.array([1.0, -2.0, 0.5])
val, err = integrate_singular(x, lambda y: 1 / np.sum((y - x) ** 2, axis=-1), rule, radius=1.0)
print(f"int_|y-x|<1 |x-y|^-2 = {val:.12f}  (4 pi = {4 * np.pi:.12f})")

# the certified tail of C <y>^-(rho+2) beyond R
print("tail_bound(3, 2, 100) =", tail_bound(3.0, 2.0, 100.0))

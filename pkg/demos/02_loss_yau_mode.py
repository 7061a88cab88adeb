"""
The Loss-Yau zero mode
======================

psi(x) = <x>^-3 (I + i sigma.x) phi0 solves sigma.(D - A) psi = 0 with
A(x) = 3 <x>^-4 {(1 - |x|^2) w0 + 2 (w0.x) x + 2 w0 x x}.
We check the closed forms and the equation itself by finite differences.
"""

import numpy as np

from zeromodes.zero_modes import LossYauMode, bracket, loss_yau_pair, weyl_residual

mode = LossYauMode(np.array([1.0, 0.0]))
print("w0 =", mode.w0)

x = np.random.default_rng(0).uniform(-10, 10, size=(5, 3))
print("|psi| <x>^2 :", np.linalg.norm(mode.psi(x), axis=-1) * bracket(x) ** 2)
print("|A| <x>^2 / 3:", np.linalg.norm(mode.A(x), axis=-1) * bracket(x) ** 2 / 3)

res = weyl_residual(mode.psi, mode.A, x, h=1e-3)
print("max |sigma.(D - A) psi| by 4th-order differences:", np.abs(res).max())

# r^2 psi(r omega) approaches i (sigma.omega) phi0
omega = np.array([0.0, 0.6, 0.8])
for r in (10.0, 100.0, 1000.0):
    print(f"r = {r:6.0f}: |r^2 psi - limit| = {np.linalg.norm(r * r * mode.psi(r * omega) - mode.limit(omega)):.2e}")

# the Dirac lift (psi, 0) with Q = -alpha.A, and its declared decay |q_jk| <= 3 <x>^-2
_, pair = loss_yau_pair()
print("audit:", pair.audit(x))

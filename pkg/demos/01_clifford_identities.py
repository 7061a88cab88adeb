"""
Pauli and Dirac matrices
========================

The limit vector is built from alpha.omega, and the Weyl form of it from the
contraction identity (sigma.a)(sigma.b) = (a.b) I + i sigma.(a x b).
"""

import numpy as np

from zeromodes.clifford import ALPHA, I4, SIGMA, alpha_dot, pauli_contract, sigma_dot

# sigma_j sigma_k + sigma_k sigma_j = 2 delta_jk, and the same for alpha
for name, mats in (("sigma", SIGMA), ("alpha", ALPHA)):
    worst = max(np.abs(mats[j] @ mats[k] + mats[k] @ mats[j] - 2 * (j == k) * np.eye(len(mats[0]))).max()
                for j in range(3) for k in range(3))
    print(f"{name}: worst anticommutator defect {worst:.1e}")

# alpha.omega squares to the identity on the unit sphere, so it is unitary
omega = np.array([1.0, 2.0, 2.0]) / 3.0
a = alpha_dot(omega)
print("alpha.omega unitary:", np.allclose(a @ a.conj().T, I4))

# the contraction identity on a random pair
rng = np.random.default_rng(1)
u, v = rng.normal(size=(2, 3))
print("contraction identity defect:", np.abs(sigma_dot(u) @ sigma_dot(v) - pauli_contract(u, v)).max())

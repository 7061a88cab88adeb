"""
The limit vector and the radial scan
====================================

L(omega) = -(i / 4 pi) (alpha.omega) int Q f. The integral is computed once;
alpha.omega is unitary, so |L| does not depend on omega. The deviation
|r^2 f(r omega) - L(omega)| decays like 1/r for this family.
"""

import numpy as np

from zeromodes.asymptotics import AsymptoticProbe, default_omegas, limit_map, limit_vector, radial_scan
from zeromodes.quadrature import QuadratureRule
from zeromodes.zero_modes import loss_yau_pair

rule = QuadratureRule(tol=1e-6)
mode, pair = loss_yau_pair()

L, err = limit_vector(pair, np.array([0.0, 0.0, 1.0]), rule, full_output=True)
print("L(e3) =", np.round(L, 10), f"err_est {err:.1e}")

mods = np.linalg.norm(limit_map(pair, default_omegas(64), rule), axis=-1)
print(f"|L| over 64 directions: min {mods.min():.15f} max {mods.max():.15f}")

probe = AsymptoticProbe(rule=rule)
L64 = limit_map(pair, probe.omega_set, rule)
report = radial_scan(pair.f, L64, probe)
for r, row in zip(report.radii, report.deviations):
    print(f"r = {r:5.0f}: median deviation {np.median(row):.4e}")
print(f"fitted order {report.fit.slope:.4f} +- {report.fit.stderr:.4f}")

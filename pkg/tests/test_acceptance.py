"""Acceptance criteria, one check per criterion at the stated tolerances.

Run under pytest (a summary line per criterion is printed at the end of the
session) or directly with ``python tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from zeromodes.asymptotics import (
    AsymptoticProbe, default_omegas, error_budget, fit_order, limit_map, omega_uniformity,
    radial_scan, unit, weyl_limit_vector,
)
from zeromodes.clifford import ALPHA, I2, I4, SIGMA, alpha_dot, pauli_contract, sigma_dot
from zeromodes.integral_operator import apply_T, decay_envelope, fixed_point_residual, perturbed, sample_points
from zeromodes.quadrature import QuadratureRule, integrate_r3, integrate_singular
from zeromodes.zero_modes import LossYauMode, eval_A_L, eval_psi_L, loss_yau_pair, weyl_residual

SEED = 20261016
RESULTS = {}


def _rng():
    return np.random.default_rng(SEED)


def _ball(rng, n, radius):
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    return d * radius * rng.random(n)[:, None] ** (1 / 3)


def _slope(x, y):
    return fit_order(x, y).slope


def criterion_1():
    t0 = time.perf_counter()
    rng = _rng()
    err = 0.0
    for mats, eye in ((SIGMA, I2), (ALPHA, I4)):
        for j in range(3):
            for k in range(3):
                ac = mats[j] @ mats[k] + mats[k] @ mats[j]
                err = max(err, np.max(np.abs(ac - 2 * (j == k) * eye)))
    om = unit(rng.normal(size=(500, 3)))
    s, a = sigma_dot(om), alpha_dot(om)
    err = max(err, np.max(np.abs(s @ s - I2)))
    err = max(err, np.max(np.abs(a @ np.conj(np.swapaxes(a, -1, -2)) - I4)))
    u, v = rng.normal(size=(2, 500, 3))
    err = max(err, np.max(np.abs(sigma_dot(u) @ sigma_dot(v) - pauli_contract(u, v))))
    dt = time.perf_counter() - t0
    return err <= 1e-13 and dt < 1.0, f"max elementwise error {err:.2e} (<= 1e-13), {dt:.3f} s (< 1 s)"


def criterion_2():
    t0 = time.perf_counter()
    mode = LossYauMode()
    x = _ball(_rng(), 1000, 20.0)
    b = np.sqrt(1 + np.sum(x * x, axis=-1))
    e1 = np.max(np.abs(np.linalg.norm(eval_psi_L(mode, x), axis=-1) * b ** 2 - 1))
    e2 = np.max(np.abs(np.linalg.norm(eval_A_L(mode, x), axis=-1) - 3 / b ** 2))
    dt = time.perf_counter() - t0
    ok = max(e1, e2) <= 1e-12 and dt < 1.0
    return ok, f"|psi|<x>^2 err {e1:.2e}, |A| err {e2:.2e} (<= 1e-12), {dt:.3f} s (< 1 s)"


def criterion_3():
    t0 = time.perf_counter()
    mode = LossYauMode()
    x = _ball(_rng(), 100, 10.0)
    res = np.max(np.linalg.norm(weyl_residual(mode.psi, mode.A, x, h=1e-3), axis=-1))
    dt = time.perf_counter() - t0
    return res <= 1e-5 and dt < 5.0, f"max |residual| {res:.2e} (<= 1e-5), {dt:.2f} s (< 5 s)"


def criterion_4():
    t0 = time.perf_counter()
    rule = QuadratureRule(tol=1e-7)
    x = np.array([0.4, -0.3, 1.1])
    cases = {
        "<y>^-4": (integrate_r3(lambda y: (1 + np.sum(y * y, axis=-1)) ** -2, rule, decay=(1.0, 4.0)).value,
                   np.pi ** 2),
        "gaussian": (integrate_r3(lambda y: np.exp(-np.sum(y * y, axis=-1)), rule).value, np.pi ** 1.5),
        "singular ball": (integrate_singular(x, lambda y: 1 / np.sum((y - x) ** 2, axis=-1), rule,
                                             radius=1.0).value, 4 * np.pi),
    }
    rel = {k: abs(v - e) / e for k, (v, e) in cases.items()}
    dt = time.perf_counter() - t0
    ok = max(rel.values()) <= 1e-6 and dt < 30
    return ok, ", ".join(f"{k} rel {v:.1e}" for k, v in rel.items()) + f" (<= 1e-6), {dt:.1f} s (< 30 s)"


def criterion_5():
    t0 = time.perf_counter()
    mode = LossYauMode()
    rule = QuadratureRule(tol=1e-6)
    worst = 0.0
    for om in default_omegas(16):
        L = weyl_limit_vector(mode.psi, mode.A, om, rule, decay=(3.0, 4.0))
        ref = 1j * sigma_dot(om) @ mode.phi0
        worst = max(worst, np.linalg.norm(L - ref) / np.linalg.norm(ref))
    dt = time.perf_counter() - t0
    return worst <= 1e-4 and dt < 300, f"max relative error {worst:.2e} over 16 omegas (<= 1e-4), {dt:.1f} s"


def criterion_6():
    _, pair = loss_yau_pair()
    mods = np.linalg.norm(limit_map(pair, default_omegas(64), QuadratureRule(tol=1e-6)), axis=-1)
    spread = (mods.max() - mods.min()) / mods.mean()
    dev = np.max(np.abs(mods - 1))
    ok = spread <= 1e-12 and dev <= 1e-4
    return ok, f"relative spread {spread:.1e} (<= 1e-12), max ||L| - 1| {dev:.1e} (<= 1e-4)"


def criterion_7():
    mode = LossYauMode()
    probe = AsymptoticProbe()
    rep = radial_scan(mode.psi, mode.limit, probe)
    ratio = max(u.ratio for u in rep.uniformity)
    ok = abs(rep.fit.slope + 1) <= 0.1 and ratio <= 1 + 1e-10
    return ok, (f"slope {rep.fit.slope:.4f} +- {rep.fit.stderr:.4f} (-1 +- 0.1), "
                f"max/median {ratio:.12f} (<= 1 + 1e-10)")


def criterion_8():
    _, pair = loss_yau_pair()
    rule = QuadratureRule(tol=1e-5)
    pts = sample_points(SEED, n=20, far=())
    base = fixed_point_residual(pair, pts, rule)
    bumped = fixed_point_residual(pair, pts, rule, f=perturbed(pair.f, 1e-2))
    ok = base.max_residual <= 1e-3 and bumped.max_residual >= 10 * base.max_residual
    return ok, (f"max |f - Tf| {base.max_residual:.2e} (<= 1e-3); perturbed {bumped.max_residual:.2e} "
                f"(>= 10x)")


def criterion_9():
    _, pair = loss_yau_pair()
    rule = QuadratureRule(tol=1e-6)
    om = np.array([0.0, 0.0, 1.0])
    b = error_budget(pair, om, 40.0, 10.0, rule)
    sum_ok = b.sum_residual <= b.combined_err
    I_ladder = [error_budget(pair, om, r, 5.0, rule) for r in (20.0, 40.0, 80.0, 160.0)]
    III_ladder = [error_budget(pair, om, 8 * R0, R0, rule) for R0 in (5.0, 10.0, 20.0, 40.0)]
    sI = _slope([x.r for x in I_ladder], [np.linalg.norm(x.I) for x in I_ladder])
    sM = _slope([x.r for x in I_ladder], [x.I_majorant for x in I_ladder])
    sIII = _slope([x.R0 for x in III_ladder], [np.linalg.norm(x.III) for x in III_ladder])
    maxI = max(np.linalg.norm(x.I) for x in I_ladder)
    ok = sum_ok and abs(sI + 1) <= 0.2 and abs(sIII + 1) <= 0.2
    return ok, (f"sum residual {b.sum_residual:.1e} <= combined err {b.combined_err:.1e}: {sum_ok}; "
                f"slope |I| {sI:.3f} (-1 +- 0.2, max |I| {maxI:.1e}); slope |III| {sIII:.3f} (-1 +- 0.2); "
                f"diagnostic slope of I majorant {sM:.3f}")


def criterion_10():
    _, pair = loss_yau_pair()
    radii = np.geomspace(0.1, 1000, 60)
    C_f, r_at = decay_envelope(pair.f, radii, default_omegas(64))
    rule = QuadratureRule(tol=1e-6)
    ray = np.array([1.0, 2.0, 2.0]) / 3.0
    far = []
    for R in (10.0, 20.0, 40.0):
        t = apply_T(pair.Q, pair.f, R * ray, rule, qg=pair.qf)
        far.append(np.linalg.norm(t.value) * (1 + R * R))
    ok = abs(C_f - 1) <= 1e-6 and max(far) <= 1.1 * C_f
    return ok, f"C_f {C_f:.9f} (1 +- 1e-6); max |Tf|<x>^2 {max(far):.6f} (<= 1.1 C_f)"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def _line(i, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] criterion {i:2d}: {detail}"


@pytest.mark.parametrize("i", range(1, len(CRITERIA) + 1))
def test_criterion(i):
    ok, detail = CRITERIA[i - 1]()
    RESULTS[i] = (ok, detail)
    print(_line(i, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    for i, fn in enumerate(CRITERIA, 1):
        print(_line(i, *fn()), flush=True)

import warnings

import numpy as np
import pytest

from conftest import random_points
from zeromodes.clifford import SIGMA, I2, alpha_dot, sigma_dot
from zeromodes.zero_modes import (
    AMNMode, AssumptionAError, LossYauMode, StepTooSmallWarning, bracket, dirac_residual,
    embed_weyl_to_dirac, eval_A_L, eval_psi_L, free_pair, lipschitz_estimate, loss_yau_pair,
    weyl_residual,
)


def brute_norm(v):
    # explicit sum of |component|^2, independent of numpy's norm routines
    return np.sqrt(sum(abs(c) ** 2 for c in v))


def test_psi_at_origin_is_phi0():
    mode = LossYauMode()
    assert np.array_equal(eval_psi_L(mode, np.zeros(3)), [1, 0])


def test_default_w0():
    assert np.allclose(LossYauMode().w0, [0, 0, 1], atol=0)
    assert np.allclose(eval_A_L(LossYauMode(), np.zeros(3)), [0, 0, 3], atol=0)


def test_unit_phi0_required():
    with pytest.raises(ValueError):
        LossYauMode(np.array([1.0, 1.0]))


@pytest.mark.parametrize("phi0", [(1, 0), (0, 1), (0.6, 0.8j), (np.exp(0.3j) / np.sqrt(2), 1 / np.sqrt(2))])
def test_closed_form_norms(phi0, rng):
    mode = LossYauMode(np.array(phi0, dtype=complex))
    w0 = mode.w0
    assert abs(np.linalg.norm(w0) - 1) <= 1e-14
    x = random_points(rng, 1000, 20.0)
    b = np.sqrt(1 + np.sum(x * x, axis=-1))
    psi = eval_psi_L(mode, x)
    A = eval_A_L(mode, x)
    assert max(abs(brute_norm(p) * bb ** 2 - 1) for p, bb in zip(psi, b)) <= 1e-12
    assert max(abs(brute_norm(a) - 3 / bb ** 2) for a, bb in zip(A, b)) <= 1e-12


def test_limit_of_r2_psi():
    mode = LossYauMode()
    om = np.array([1.0, -2.0, 0.5]) / np.linalg.norm([1.0, -2.0, 0.5])
    target = 1j * sigma_dot(om) @ mode.phi0
    gaps = [np.linalg.norm(r * r * eval_psi_L(mode, r * om) - target) for r in (1e2, 1e3, 1e4)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 2e-4


def test_weyl_residual_loss_yau_single_point():
    mode = LossYauMode()
    res = weyl_residual(mode.psi, mode.A, np.array([0.3, -1.2, 0.7]), h=1e-3)
    assert np.linalg.norm(res) <= 1e-8


def test_weyl_residual_constant_spinor_vanishes():
    psi = lambda x: np.broadcast_to(np.array([1.0 + 2j, -0.5]), np.shape(x)[:-1] + (2,))
    A0 = lambda x: np.zeros(np.shape(x))
    assert np.array_equal(weyl_residual(psi, A0, np.array([0.2, 0.4, -1.0])), [0, 0])


def test_weyl_residual_linear_field():
    psi = lambda x: np.stack([np.asarray(x)[..., 0], np.zeros(np.shape(x)[:-1])], axis=-1).astype(complex)
    A0 = lambda x: np.zeros(np.shape(x))
    res = weyl_residual(psi, A0, np.array([0.7, 0.1, 0.2]))
    assert np.allclose(res, [0, -1j], atol=1e-12)


def test_small_step_warns():
    mode = LossYauMode()
    with pytest.warns(StepTooSmallWarning):
        weyl_residual(mode.psi, mode.A, np.zeros(3), h=1e-7)
    with pytest.raises(ValueError):
        weyl_residual(mode.psi, mode.A, np.zeros(3), h=0)


def test_embedding_structure(loss_yau, rng):
    mode, pair = loss_yau
    x = random_points(rng, 50, 5.0)
    f = pair.f(x)
    assert np.array_equal(f[:, 2:], np.zeros((50, 2)))
    assert np.allclose(f[:, :2], mode.psi(x), atol=0)
    assert np.allclose(pair.Q(x), -alpha_dot(mode.A(x)), atol=0)
    assert np.allclose(pair.qf(x), np.einsum("nab,nb->na", pair.Q(x), f), atol=1e-15)


def test_lower_embedding_is_also_a_zero_mode(rng):
    mode, pair = loss_yau_pair(block="lower")
    x = random_points(rng, 20, 3.0)
    assert np.array_equal(pair.f(x)[:, :2], np.zeros((20, 2)))
    assert np.max(np.linalg.norm(dirac_residual(pair, x), axis=-1)) <= 1e-8


def test_dirac_residual_matches_weyl_residual(loss_yau, rng):
    mode, pair = loss_yau
    x = random_points(rng, 30, 4.0)
    w = np.linalg.norm(weyl_residual(mode.psi, mode.A, x), axis=-1)
    d = dirac_residual(pair, x)
    # (psi, 0) is sent to (0, sigma.(D - A) psi)
    assert np.allclose(d[:, 2:], weyl_residual(mode.psi, mode.A, x), atol=1e-14)
    assert np.allclose(np.linalg.norm(d, axis=-1), w, atol=1e-14)


def test_loss_yau_declared_decay_and_hermiticity(loss_yau, rng):
    _, pair = loss_yau
    assert pair.decay == (3.0, 2.0)
    audit = pair.audit(random_points(rng, 1000, 50.0))
    assert audit["hermitian"] and audit["decay_ok"]
    assert audit["max_decay_ratio"] <= 1.0


def test_scalar_potential_keeps_hermiticity(rng):
    mode = LossYauMode()
    q = lambda x: np.cos(np.asarray(x)[..., 0]) * bracket(x) ** -3
    pair = embed_weyl_to_dirac(mode.psi, mode.A, q=q, decay=(4.0, 2.0))
    audit = pair.audit(random_points(rng, 1000, 10.0), atol=0.0)
    assert audit["hermitian"]


@pytest.mark.parametrize("rho", [1.0, 0.5, -2.0])
def test_rho_must_exceed_one(rho):
    mode = LossYauMode()
    with pytest.raises(AssumptionAError, match="rho > 1"):
        embed_weyl_to_dirac(mode.psi, mode.A, decay=(3.0, rho))


def test_decay_declaration_required():
    mode = LossYauMode()
    with pytest.raises(AssumptionAError):
        embed_weyl_to_dirac(mode.psi, mode.A)


def test_continuity_surrogate(loss_yau, rng):
    _, pair = loss_yau
    L = lipschitz_estimate(pair.f, random_points(rng, 500, 10.0))
    assert np.isfinite(L) and L < 10


def test_free_pair_is_zero():
    pair = free_pair()
    x = np.ones((4, 3))
    assert np.array_equal(pair.f(x), np.zeros((4, 4)))
    assert np.array_equal(pair.qf(x), np.zeros((4, 4)))


def loss_yau_as_amn():
    """Loss-Yau written in profile form: U(x) = <x>^-1 (I + i sigma.x), U_inf = i sigma.omega."""
    mode = LossYauMode()

    def U(x):
        x = np.asarray(x, dtype=float)
        return (bracket(x) ** -1)[..., None, None] * (I2 + 1j * sigma_dot(x))

    def U_inf(om):
        return 1j * sigma_dot(om)

    return AMNMode(U=U, U_inf=U_inf, A=mode.A, decay=(3.0, 2.0))


def test_amn_profile_reproduces_loss_yau(rng):
    amn = loss_yau_as_amn()
    x = random_points(rng, 100, 10.0)
    assert np.allclose(amn.psi(x), LossYauMode().psi(x), atol=1e-15)


def test_amn_declared_limit_audit():
    amn = loss_yau_as_amn()
    om = np.eye(3)
    gaps = amn.audit_limit(om)
    assert np.all(np.diff(gaps) < 0)
    assert gaps[-1] < 5e-3
    # a wrong declared limit does not shrink
    bad = AMNMode(U=amn.U, U_inf=lambda w: -1j * sigma_dot(w), A=amn.A)
    assert np.all(bad.audit_limit(om) > 1.0)

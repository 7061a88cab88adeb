"""Explicit zero modes, their potentials, and pointwise residual checks.

Fields are vectorised callables: a spinor field maps points of shape ``(..., 3)``
to values of shape ``(..., 2)`` or ``(..., 4)``; a vector potential maps to
``(..., 3)``; a matrix potential maps to ``(..., 4, 4)``.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .clifford import I2, I4, SIGMA, alpha_apply, alpha_dot, is_hermitian, sigma_apply, sigma_dot


class AssumptionAError(ValueError):
    """Declared decay or hermiticity is incompatible with |q_jk(x)| <= C <x>^-rho, rho > 1."""


class StepTooSmallWarning(RuntimeWarning):
    pass


def bracket(x):
    """Japanese bracket <x> = sqrt(1 + |x|^2) over the last axis."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(1.0 + np.sum(x * x, axis=-1))


def _as_points(x):
    return np.asarray(x, dtype=float)


def _unit_spinor(phi0):
    phi0 = np.asarray(phi0, dtype=complex).reshape(2)
    n = np.linalg.norm(phi0)
    if not np.isclose(n, 1.0, rtol=0, atol=1e-12):
        raise ValueError(f"phi0 must have unit norm, got |phi0| = {n:.6g}")
    return phi0


# --------------------------------------------------------------------------
# Loss-Yau


@dataclass(frozen=True, eq=False)
class LossYauMode:
    """The Loss-Yau Weyl zero mode psi_L with its vector potential A_L."""

    phi0: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0], dtype=complex))

    def __post_init__(self):
        object.__setattr__(self, "phi0", _unit_spinor(self.phi0))

    @property
    def w0(self):
        # phi0 . (sigma_j phi0) with the Hermitian inner product; real for Hermitian sigma_j
        return np.real(np.einsum("a,jab,b->j", np.conj(self.phi0), SIGMA, self.phi0))

    def psi(self, x):
        return eval_psi_L(self, x)

    def A(self, x):
        return eval_A_L(self, x)

    def limit(self, omega):
        """lim r^2 psi_L(r omega) = i (sigma.omega) phi0."""
        return 1j * sigma_dot(np.asarray(omega, dtype=float)) @ self.phi0


def eval_psi_L(mode, x):
    x = _as_points(x)
    b = bracket(x)
    phi0 = np.broadcast_to(mode.phi0, x.shape[:-1] + (2,))
    return (b ** -3)[..., None] * (phi0 + 1j * sigma_apply(x, phi0))


def eval_A_L(mode, x):
    x = _as_points(x)
    w0 = mode.w0
    r2 = np.sum(x * x, axis=-1)
    wx = x @ w0
    inner = (1.0 - r2)[..., None] * w0 + 2.0 * wx[..., None] * x + 2.0 * np.cross(w0, x)
    return (3.0 / (1.0 + r2) ** 2)[..., None] * inner


# --------------------------------------------------------------------------
# Generic profile family psi_A = <x>^-2 U(x) phi0


@dataclass(frozen=True, eq=False)
class AMNMode:
    """Weyl zero mode of the form <x>^-2 U(x) phi0, with U supplied by the user.

    ``U`` maps points ``(..., 3)`` to ``(..., 2, 2)``; ``U_inf`` maps unit vectors to
    the declared limit of ``U(r omega)``; ``A`` is the vector potential.
    """

    U: Callable
    U_inf: Callable
    A: Callable
    phi0: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0], dtype=complex))
    decay: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "phi0", _unit_spinor(self.phi0))

    def psi(self, x):
        x = _as_points(x)
        return (bracket(x) ** -2)[..., None] * (np.asarray(self.U(x)) @ self.phi0)

    def limit(self, omega):
        return np.asarray(self.U_inf(np.asarray(omega, dtype=float))) @ self.phi0

    def audit_limit(self, omegas, r_ladder=(10.0, 20.0, 40.0, 80.0, 160.0, 320.0)):
        """Return max_omega ||U(r omega) - U_inf(omega)|| for each r of the ladder.

        The sequence should decrease towards zero if the declared limit is right.
        """
        omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
        uinf = np.asarray(self.U_inf(omegas))
        gaps = []
        for r in r_ladder:
            diff = np.asarray(self.U(r * omegas)) - uinf
            gaps.append(float(np.max(np.linalg.norm(diff, ord=2, axis=(-2, -1)))))
        return np.array(gaps)


# --------------------------------------------------------------------------
# Dirac pairs


def _check_decay(C_q, rho):
    if not np.isfinite(rho) or rho <= 1:
        raise AssumptionAError(f"Assumption (A) requires rho > 1, got rho = {rho}")
    if not C_q > 0:
        raise AssumptionAError(f"Assumption (A) requires C_q > 0, got C_q = {C_q}")


@dataclass(frozen=True, eq=False)
class DiracZeroModePair:
    """A 4-spinor field f with the Hermitian matrix potential Q it is a zero mode of.

    ``C_q`` and ``rho`` are declared, not inferred: |q_jk(x)| <= C_q <x>^-rho.
    ``C_f``, when known, bounds |f(x)| <= C_f <x>^-2 and is used for tail bounds.
    """

    f: Callable
    Q: Callable
    C_q: float
    rho: float
    C_f: Optional[float] = None
    name: str = "custom"
    qf_fn: Optional[Callable] = None  # fast y -> Q(y) f(y), if the structure allows one

    def __post_init__(self):
        _check_decay(self.C_q, self.rho)

    @property
    def decay(self):
        return (self.C_q, self.rho)

    def qf(self, y):
        if self.qf_fn is not None:
            return self.qf_fn(y)
        return np.einsum("...ab,...b->...a", self.Q(y), self.f(y))

    def qf_decay(self):
        """(C, p) with |Q(y) f(y)| <= C <y>^-p, or None if C_f is unknown."""
        if self.C_f is None:
            return None
        # ||Q||_2 <= ||Q||_F <= 4 max|q_jk|
        return (4.0 * self.C_q * self.C_f, self.rho + 2.0)

    def audit(self, points, atol=1e-12):
        """Sample Assumption (A): hermiticity and the entrywise decay bound."""
        points = _as_points(points)
        q = np.asarray(self.Q(points))
        herm = float(np.max(np.abs(q - np.conj(np.swapaxes(q, -1, -2)))))
        env = self.C_q * bracket(points) ** (-self.rho)
        ratio = np.max(np.abs(q), axis=(-2, -1)) / env
        return {
            "hermitian": herm <= atol,
            "max_hermitian_defect": herm,
            "decay_ok": bool(np.all(ratio <= 1.0 + 1e-12)),
            "max_decay_ratio": float(np.max(ratio)),
            "n_points": int(points.reshape(-1, 3).shape[0]),
        }


def embed_weyl_to_dirac(psi, A, q=None, decay=None, block="upper", C_f=None, name="embedded"):
    """Lift a Weyl pair (psi, A) to the Dirac pair f = (psi, 0), Q = -alpha.A + q I4.

    ``decay = (C_q, rho)`` must be declared. ``block="lower"`` places psi in the
    lower two components instead; alpha.(D - A) annihilates either embedding.
    """
    if decay is None:
        raise AssumptionAError("a decay declaration (C_q, rho) is required")
    C_q, rho = decay
    _check_decay(C_q, rho)
    if block not in ("upper", "lower"):
        raise ValueError(f"block must be 'upper' or 'lower', got {block!r}")
    sl = slice(0, 2) if block == "upper" else slice(2, 4)

    def f(x):
        p = np.asarray(psi(x))
        out = np.zeros(p.shape[:-1] + (4,), dtype=complex)
        out[..., sl] = p
        return out

    def Q(x):
        m = -alpha_dot(np.asarray(A(x)))
        if q is not None:
            m = m + np.asarray(q(x), dtype=float)[..., None, None] * I4
        return m

    def qf(x):
        fx = f(x)
        out = -alpha_apply(np.asarray(A(x)), fx)
        if q is not None:
            out = out + np.asarray(q(x), dtype=float)[..., None] * fx
        return out

    return DiracZeroModePair(f=f, Q=Q, C_q=C_q, rho=rho, C_f=C_f, name=name, qf_fn=qf)


def loss_yau_pair(phi0=(1.0, 0.0), block="upper"):
    """Dirac pair built from the Loss-Yau mode.

    |A_L| = 3<x>^-2 bounds every entry of alpha.A_L, so (C_q, rho) = (3, 2);
    |psi_L| = <x>^-2 gives C_f = 1.
    """
    mode = LossYauMode(np.asarray(phi0, dtype=complex))
    pair = embed_weyl_to_dirac(mode.psi, mode.A, decay=(3.0, 2.0), block=block, C_f=1.0, name="loss-yau")
    return mode, pair


def free_pair():
    """Q = 0 with f = 0: the trivial pair, whose limit vector vanishes."""

    def f(x):
        return np.zeros(np.shape(x)[:-1] + (4,), dtype=complex)

    def Q(x):
        return np.zeros(np.shape(x)[:-1] + (4, 4), dtype=complex)

    # any rho > 1 is admissible for Q = 0
    return DiracZeroModePair(f=f, Q=Q, C_q=1.0, rho=2.0, C_f=0.0, name="free", qf_fn=f)


# --------------------------------------------------------------------------
# Finite-difference residuals

def _gradient(field_fn, x, h):
    """4th-order central differences; returns array (3, ..., k) of d_j field."""
    x = _as_points(x)
    grads = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        # paired differences vanish exactly on constant fields
        d1 = np.asarray(field_fn(x + e)) - np.asarray(field_fn(x - e))
        d2 = np.asarray(field_fn(x + 2 * e)) - np.asarray(field_fn(x - 2 * e))
        grads.append((8.0 * d1 - d2) / (12.0 * h))
    return np.stack(grads)


def _check_step(h):
    if h <= 0:
        raise ValueError("step h must be positive")
    if h < 1e-6:
        warnings.warn(f"h = {h:g} < 1e-6: cancellation dominates the difference quotient", StepTooSmallWarning, stacklevel=3)


def weyl_residual(psi, A, x, h=1e-3):
    """sigma.(D - A) psi at x with D = -i grad, derivatives by 4th-order differences."""
    _check_step(h)
    x = _as_points(x)
    dpsi = _gradient(psi, x, h)  # (3, ..., 2)
    p = np.asarray(psi(x))
    a = np.asarray(A(x))
    out = np.zeros(p.shape, dtype=complex)
    for j in range(3):
        term = -1j * dpsi[j] - a[..., j, None] * p
        out = out + np.einsum("ab,...b->...a", SIGMA[j], term)
    return out


def dirac_residual(pair, x, h=1e-3):
    """(alpha.D + Q) f at x, by the same difference stencil."""
    _check_step(h)
    x = _as_points(x)
    df = _gradient(pair.f, x, h)
    out = np.einsum("...ab,...b->...a", pair.Q(x), pair.f(x)).astype(complex)
    for j in range(3):
        out = out + np.einsum("ab,...b->...a", alpha_dot(np.eye(3)[j]), -1j * df[j])
    return out


def lipschitz_estimate(f, points, dx=1e-3, seed=0):
    """Largest |f(x) - f(x')| / |x - x'| over random partners with |x - x'| = dx."""
    points = _as_points(points).reshape(-1, 3)
    rng = np.random.default_rng(seed)
    d = rng.normal(size=points.shape)
    d *= dx / np.linalg.norm(d, axis=-1, keepdims=True)
    diff = np.linalg.norm(np.asarray(f(points + d)) - np.asarray(f(points)), axis=-1)
    return float(np.max(diff) / dx)


def hermitian_everywhere(Q, points, atol=1e-14):
    return is_hermitian(np.asarray(Q(_as_points(points))), atol=atol)

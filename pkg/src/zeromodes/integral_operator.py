"""The integral operator whose fixed points are the zero modes.

    T[g](x) = -(i / 4 pi) * integral of alpha.(x - y) / |x - y|^3 Q(y) g(y) dy

T is evaluated pointwise by pole-centred quadrature; it is never assembled.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .clifford import alpha_apply
from .quadrature import integrate_singular
from .zero_modes import bracket

FOUR_PI = 4.0 * np.pi


@dataclass
class KernelApplication:
    pole: np.ndarray
    value: np.ndarray
    err_est: float
    converged: bool


def riesz_integrand(Q, g, x, qg=None):
    """y -> -(i / 4 pi) alpha.(x - y) / |x - y|^3 Q(y) g(y); ``qg`` may supply Q g directly."""
    x = np.asarray(x, dtype=float)

    def h(y):
        d = x - y
        n = np.linalg.norm(d, axis=-1, keepdims=True)
        if qg is None:
            v = np.einsum("...ab,...b->...a", Q(y), g(y))
        else:
            v = qg(y)
        return (-1j / FOUR_PI) * alpha_apply(d / n ** 3, v)

    return h


def apply_T(Q, g, x, rule, qg=None):
    x = np.asarray(x, dtype=float)
    res = integrate_singular(x, riesz_integrand(Q, g, x, qg), rule)
    return KernelApplication(pole=x, value=np.asarray(res.value), err_est=float(res.err_est),
                             converged=res.converged)


@dataclass
class ResidualReport:
    points: np.ndarray
    residuals: np.ndarray
    err_ests: np.ndarray
    converged: bool

    @property
    def max_residual(self):
        return float(np.max(self.residuals)) if len(self.residuals) else 0.0


def fixed_point_residual(pair, sample_set, rule, f=None):
    """|f(x) - T[f](x)| at each sample point, with the quadrature error at each.

    ``f`` overrides ``pair.f`` (e.g. a perturbed field) while keeping ``pair.Q``.
    """
    qg = pair.qf if f is None else None
    f = pair.f if f is None else f
    pts = np.atleast_2d(np.asarray(sample_set, dtype=float))
    res, errs, ok = [], [], True
    for x in pts:
        t = apply_T(pair.Q, f, x, rule, qg=qg)
        res.append(float(np.linalg.norm(np.asarray(f(x)) - t.value)))
        errs.append(t.err_est)
        ok = ok and t.converged
    return ResidualReport(points=pts, residuals=np.array(res), err_ests=np.array(errs), converged=ok)


def decay_envelope(f, radii, omega_set):
    """Sup over samples of |f(r omega)| <r>^2, and the radius where it is attained."""
    radii = np.asarray(radii, dtype=float)
    omega_set = np.atleast_2d(np.asarray(omega_set, dtype=float))
    pts = radii[:, None, None] * omega_set[None, :, :]
    env = np.linalg.norm(np.asarray(f(pts)), axis=-1) * bracket(pts) ** 2
    i = np.unravel_index(np.argmax(env), env.shape)
    return float(env[i]), float(radii[i[0]])


def sample_points(seed=0, n=20, radius=5.0, far=(10.0, 20.0, 40.0)):
    """Scrambled-Halton points filling the ball |x| <= radius, plus far-field points.

    The Halton sequence is deterministic for a given seed. Far-field points lie on
    a fixed oblique ray.
    """
    u = qmc.Halton(d=3, scramble=True, seed=seed).random(n)
    r = radius * u[:, 0] ** (1.0 / 3.0)
    mu = 2.0 * u[:, 1] - 1.0
    phi = 2.0 * np.pi * u[:, 2]
    s = np.sqrt(1.0 - mu * mu)
    near = r[:, None] * np.stack([s * np.cos(phi), s * np.sin(phi), mu], axis=-1)
    ray = np.array([1.0, 2.0, 2.0]) / 3.0
    farpts = np.array([R * ray for R in far]).reshape(-1, 3)
    return np.vstack([near, farpts])


def bump(center=(0.0, 0.0, 0.0), radius=1.5, spinor=(1.0, 1j, 0.5, -0.5)):
    """Smooth compactly supported 4-spinor exp(1 - 1/(1 - s^2)) * spinor, s = |x - c| / radius."""
    center = np.asarray(center, dtype=float)
    spinor = np.asarray(spinor, dtype=complex)
    spinor = spinor / np.linalg.norm(spinor)

    def b(x):
        s2 = np.sum((np.asarray(x, dtype=float) - center) ** 2, axis=-1) / radius ** 2
        with np.errstate(divide="ignore", over="ignore"):
            amp = np.where(s2 < 1.0, np.exp(1.0 - 1.0 / np.where(s2 < 1.0, 1.0 - s2, 1.0)), 0.0)
        return amp[..., None] * spinor

    return b


def perturbed(f, delta, profile=None):
    """f + delta * profile (default: the fixed bump)."""
    profile = bump() if profile is None else profile

    def g(x):
        return np.asarray(f(x)) + delta * np.asarray(profile(x))

    return g

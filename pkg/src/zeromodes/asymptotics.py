"""Limits of r^2 f(r omega), radial scans, and the three-region error budget."""

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from .clifford import alpha_apply, alpha_dot, sigma_apply
from .quadrature import (
    QuadratureRule,
    fibonacci_sphere,
    integrate_ball,
    integrate_r3,
    integrate_shell,
    scale_result,
)

FOUR_PI = 4.0 * np.pi


class NonFiniteFieldWarning(RuntimeWarning):
    pass


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def default_omegas(n=64):
    return fibonacci_sphere(n)[0]


@dataclass(frozen=True)
class AsymptoticProbe:
    omega_set: np.ndarray = field(default_factory=default_omegas)
    r_ladder: tuple = tuple(10.0 * 2.0 ** k for k in range(6))
    rule: QuadratureRule = field(default_factory=QuadratureRule)

    def __post_init__(self):
        om = np.atleast_2d(np.asarray(self.omega_set, dtype=float))
        if np.max(np.abs(np.linalg.norm(om, axis=-1) - 1.0)) > 1e-14:
            raise ValueError("omega_set must contain unit vectors")
        r = np.asarray(self.r_ladder, dtype=float)
        if r.ndim != 1 or len(r) < 2 or np.any(np.diff(r) <= 0) or r[0] <= 0:
            raise ValueError("r_ladder must be positive and strictly increasing")
        object.__setattr__(self, "omega_set", om)
        object.__setattr__(self, "r_ladder", tuple(float(x) for x in r))


# --------------------------------------------------------------------------
# Limit vectors


@lru_cache(maxsize=64)
def limit_integral(pair, rule):
    """Integral of Q f over R^3, computed once per (pair, rule)."""
    return integrate_r3(pair.qf, rule, decay=pair.qf_decay())


def limit_vector(pair, omega, rule, full_output=False):
    """-(i / 4 pi) (alpha.omega) times the integral of Q f.

    The integral is omega independent and cached; alpha.omega is applied afterwards,
    so |L(omega)| is the same for every omega up to rounding.
    """
    omega = np.asarray(omega, dtype=float)
    if abs(np.linalg.norm(omega) - 1.0) > 1e-12:
        raise ValueError("omega must be a unit vector")
    res = scale_result(limit_integral(pair, rule), -1j / FOUR_PI * alpha_dot(omega))
    return (res.value, res.err_est) if full_output else res.value


def limit_map(pair, omegas, rule):
    """Limit vectors for an array of directions, shape (n, 4)."""
    res = limit_integral(pair, rule)
    return -1j / FOUR_PI * alpha_dot(np.asarray(omegas, dtype=float)) @ res.value


def weyl_limit_vector(psi, A, omega, rule, full_output=False, decay=None):
    """(i / 4 pi) times the integral of {(omega.A) I2 + i sigma.(omega x A)} psi."""
    omega = np.asarray(omega, dtype=float)
    if abs(np.linalg.norm(omega) - 1.0) > 1e-12:
        raise ValueError("omega must be a unit vector")

    def g(y):
        a = np.asarray(A(y))
        p = np.asarray(psi(y))
        # (omega.A) psi + i sigma.(omega x A) psi
        return np.sum(omega * a, axis=-1)[..., None] * p + 1j * sigma_apply(np.cross(omega, a), p)

    res = scale_result(integrate_r3(g, rule, decay=decay), 1j / FOUR_PI)
    return (res.value, res.err_est) if full_output else res.value


@dataclass
class EquivalenceReport:
    integral_norm: float
    limit_norm: float
    err_est: float
    integral_zero: bool
    limit_zero: bool

    @property
    def consistent(self):
        return self.integral_zero == self.limit_zero


def zero_limit_equivalence(pair, rule, omega=(0.0, 0.0, 1.0)):
    """Both sides of: limit vanishes for some omega  <=>  integral of Q f vanishes."""
    res = limit_integral(pair, rule)
    lim, lim_err = limit_vector(pair, unit(omega), rule, full_output=True)
    integral_norm = float(np.linalg.norm(res.value))
    limit_norm = float(np.linalg.norm(lim))
    return EquivalenceReport(
        integral_norm=integral_norm,
        limit_norm=limit_norm,
        err_est=float(res.err_est),
        integral_zero=integral_norm <= res.err_est,
        limit_zero=limit_norm <= lim_err,
    )


# --------------------------------------------------------------------------
# Radial scans


@dataclass
class ConvergenceFit:
    slope: float
    stderr: float
    intercept: float
    residual: float


def fit_order(r, d):
    """Least-squares slope of log d against log r."""
    lr, ld = np.log(np.asarray(r, float)), np.log(np.asarray(d, float))
    fit = stats.linregress(lr, ld)
    resid = ld - (fit.intercept + fit.slope * lr)
    return ConvergenceFit(float(fit.slope), float(fit.stderr), float(fit.intercept),
                          float(np.sqrt(np.mean(resid ** 2))))


@dataclass
class LimitReport:
    omegas: np.ndarray
    radii: np.ndarray
    limits: np.ndarray           # (n_omega, k)
    deviations: np.ndarray       # (n_r, n_omega), NaN where f was not finite
    fit: ConvergenceFit
    uniformity: list = field(default_factory=list)
    budget: list = field(default_factory=list)
    limit_err: float = 0.0

    def scan_rows(self):
        for i, r in enumerate(self.radii):
            for j, om in enumerate(self.omegas):
                yield r, om, self.deviations[i, j]


def _limits_for(limits, omegas):
    if callable(limits):
        return np.array([np.asarray(limits(om)) for om in omegas])
    return np.asarray(limits)


def deviations(f, limits, radii, omegas):
    """|r^2 f(r omega) - L(omega)| on the (r, omega) grid, shape (n_r, n_omega)."""
    omegas = np.atleast_2d(omegas)
    L = _limits_for(limits, omegas)
    radii = np.asarray(radii, dtype=float)
    pts = radii[:, None, None] * omegas[None, :, :]
    vals = (radii ** 2)[:, None, None] * np.asarray(f(pts))
    return np.linalg.norm(vals - L[None, :, :], axis=-1)


def radial_scan(f, limits, probe):
    """Tabulate |r^2 f(r omega) - L(omega)| and fit its log-log decay rate.

    ``limits`` is either a callable omega -> L(omega) or an array aligned with
    ``probe.omega_set``. The fit uses the omega-median deviation at each radius;
    non-finite entries are dropped with a warning.
    """
    omegas = probe.omega_set
    radii = np.asarray(probe.r_ladder)
    L = _limits_for(limits, omegas)
    d = deviations(f, L, radii, omegas)
    bad = ~np.isfinite(d)
    if np.any(bad):
        warnings.warn(f"{int(bad.sum())} non-finite field values excluded from the fit", NonFiniteFieldWarning,
                      stacklevel=2)
        d = np.where(bad, np.nan, d)
    med = np.nanmedian(d, axis=1)
    keep = np.isfinite(med) & (med > 0)
    if keep.sum() >= 2:
        fit = fit_order(radii[keep], med[keep])
    else:
        fit = ConvergenceFit(float("nan"), float("nan"), float("nan"), float("nan"))
    report = LimitReport(omegas=omegas, radii=radii, limits=L, deviations=d, fit=fit)
    report.uniformity = [omega_uniformity(f, L, r, omegas) for r in radii]
    return report


@dataclass
class Uniformity:
    r: float
    max_dev: float
    median_dev: float
    ratio: float
    uniform: bool
    modulus_spread: float


def omega_uniformity(f, limits, r, omega_set, factor=10.0):
    """Max over omega of |r^2 f(r omega) - L(omega)|, with the max/median check."""
    omega_set = np.atleast_2d(omega_set)
    L = _limits_for(limits, omega_set)
    d = deviations(f, L, [r], omega_set)[0]
    mx, md = float(np.max(d)), float(np.median(d))
    ratio = mx / md if md > 0 else (1.0 if mx == 0 else np.inf)
    mod = np.linalg.norm(r * r * np.asarray(f(r * omega_set)), axis=-1)
    return Uniformity(r=float(r), max_dev=mx, median_dev=md, ratio=float(ratio), uniform=bool(ratio <= factor),
                      modulus_spread=float(np.max(mod) - np.min(mod)))


# --------------------------------------------------------------------------
# Error budget


@dataclass
class ErrorBudget:
    r: float
    R0: float
    omega: np.ndarray
    I: np.ndarray
    II: np.ndarray
    III: np.ndarray
    err_I: float
    err_II: float
    err_III: float
    lhs: np.ndarray        # r^2 f(r omega) - L(omega)
    lhs_err: float
    converged: bool
    eps: float  # R0^(1 - rho): the proof's smallness parameter for this R0
    I_majorant: float = float("nan")  # (1/4 pi) * integral over E1 of |bracket| |Q f|

    @property
    def total(self):
        return self.I + self.II + self.III

    @property
    def sum_residual(self):
        return float(np.linalg.norm(self.total - self.lhs))

    @property
    def combined_err(self):
        return self.err_I + self.err_II + self.err_III + self.lhs_err

    def in_E1(self, y):
        return np.linalg.norm(y, axis=-1) <= self.R0

    def in_E2(self, y):
        y = np.asarray(y, dtype=float)
        return (np.linalg.norm(y, axis=-1) > self.R0) & (np.linalg.norm(self.r * self.omega - y, axis=-1) <= self.r / 2)

    def in_E3(self, y):
        y = np.asarray(y, dtype=float)
        return (np.linalg.norm(y, axis=-1) > self.R0) & (np.linalg.norm(self.r * self.omega - y, axis=-1) > self.r / 2)


def budget_integrand(pair, omega, r):
    """y -> (i / 4 pi) alpha.{omega - (omega - y/r) / |omega - y/r|^3} Q(y) f(y)."""
    omega = np.asarray(omega, dtype=float)

    def g(y):
        z = omega - y / r
        nz = np.linalg.norm(z, axis=-1, keepdims=True)
        v = omega - z / nz ** 3
        return 1j / FOUR_PI * alpha_apply(v, pair.qf(y))

    return g


def budget_majorant(pair, omega, r):
    """y -> (1 / 4 pi) |omega - (omega - y/r) / |omega - y/r|^3| |Q(y) f(y)|; dominates |integrand|."""
    omega = np.asarray(omega, dtype=float)

    def g(y):
        z = omega - y / r
        nz = np.linalg.norm(z, axis=-1, keepdims=True)
        v = omega - z / nz ** 3
        return np.linalg.norm(v, axis=-1) * np.linalg.norm(pair.qf(y), axis=-1) / FOUR_PI

    return g


def error_budget(pair, omega, r, R0, rule):
    """Split r^2 f(r omega) - L(omega) into the integrals over E1, E2, E3.

    E1 = {|y| <= R0} is integrated origin-centred, E2 = ball of radius r/2 around
    r omega pole-centred (the kernel blows up there), and E3 origin-centred with
    E1 and E2 removed. The left-hand side is evaluated independently: f directly,
    L(omega) from the cached limit integral.
    """
    omega = unit(omega)
    r, R0 = float(r), float(R0)
    if not (R0 > 0 and r >= 2 * R0):
        raise ValueError(f"error budget needs r >= 2 R0 > 0, got r = {r}, R0 = {R0}")
    g = budget_integrand(pair, omega, r)
    tol = rule.tol / 3
    res_I = integrate_shell(g, rule, 0.0, R0, tol=tol)
    res_II = integrate_ball(r * omega, r / 2, g, rule, tol=tol)
    res_III = integrate_shell(g, rule, R0, np.inf, exclude=(r * omega, r / 2), decay=_budget_decay(pair), tol=tol)
    L, L_err = limit_vector(pair, omega, rule, full_output=True)
    major = integrate_shell(budget_majorant(pair, omega, r), rule, 0.0, R0, tol=tol, warn=False)
    lhs = r * r * np.asarray(pair.f(r * omega)) - L
    budget = ErrorBudget(
        r=r, R0=R0, omega=omega, I=res_I.value, II=res_II.value, III=res_III.value,
        err_I=res_I.err_est, err_II=res_II.err_est, err_III=res_III.err_est,
        lhs=lhs, lhs_err=float(L_err),
        converged=res_I.converged and res_II.converged and res_III.converged,
        eps=R0 ** (1.0 - pair.rho),
        I_majorant=float(np.real(major.value)),
    )
    return budget


def _budget_decay(pair):
    d = pair.qf_decay()
    if d is None:
        return None
    # on E3 the bracket is at most |omega| + |omega - y/r|^-2 |...| <= 1 + 4
    return (5.0 / FOUR_PI * d[0], d[1])


def budget_scan(pair, omega, pairs_r_R0, rule):
    """Error budgets for a list of (r, R0) pairs."""
    return [error_budget(pair, omega, r, R0, rule) for r, R0 in pairs_r_R0]

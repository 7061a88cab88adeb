"""Adaptive radial x spherical quadrature over R^3.

Integrands are vectorised: ``g(points)`` takes an array of shape ``(..., 3)`` and
returns ``(...)`` or ``(..., k)`` (complex allowed). Every integral is a product of
a spherical grid with an adaptive Gauss-Legendre rule in the radial variable.

Three geometries are supported:

* origin-centred shells, optionally with a ball cut out (the cut is handled by
  restricting the polar angle on each shell, so the integrand stays smooth);
* pole-centred balls, where the r^2 Jacobian absorbs an |x - y|^-2 singularity;
* whole space around a pole, split into a pole-centred ball plus the
  origin-centred remainder.
"""

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import lebedev_rule

SPHERE_KINDS = ("fibonacci", "lebedev", "gauss")

_LEBEDEV_ORDERS = (3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25, 27, 29, 31, 35, 41, 47,
                   53, 59, 65, 71, 77, 83, 89, 95, 101, 107, 113, 119, 125, 131)
_LEBEDEV_SIZES = (6, 14, 26, 38, 50, 74, 86, 110, 146, 170, 194, 230, 266, 302, 350, 434,
                  590, 770, 974, 1202, 1454, 1730, 2030, 2354, 2702, 3074, 3470, 3890,
                  4334, 4802, 5294, 5810)

# whole-space integrals around a pole farther than this from the origin are split
SPLIT_RADIUS = 2.0
# panels whose error estimate is below this fraction of their magnitude are not split
_ROUNDOFF = 64 * np.finfo(float).eps
# radial nodes per vectorised integrand call
_CHUNK = 64


class QuadratureBudgetWarning(RuntimeWarning):
    """Refinement budget exhausted before the tolerance was met."""


@dataclass(frozen=True)
class QuadratureRule:
    radial_order: int = 16
    radial_panels: int = 4
    sphere: str = "lebedev"
    sphere_points: int = 2048
    r_max: float = 1e10
    tol: float = 1e-6
    adapt_depth: int = 30
    max_panels: int = 600

    def __post_init__(self):
        if self.sphere not in SPHERE_KINDS:
            raise ValueError(f"sphere must be one of {SPHERE_KINDS}, got {self.sphere!r}")
        if self.radial_order < 2 or self.radial_panels < 1:
            raise ValueError("radial_order >= 2 and radial_panels >= 1 required")
        if self.sphere_points < 8:
            raise ValueError("sphere_points must be at least 8")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.adapt_depth < 1:
            raise ValueError("adapt_depth must be at least 1")

    def with_tol(self, tol):
        return replace(self, tol=tol)


@dataclass
class QuadResult:
    value: object
    err_est: float
    converged: bool
    radial_err: float = 0.0
    angular_err: float = 0.0
    tail: float = 0.0
    n_panels: int = 0
    n_evals: int = 0
    parts: list = field(default_factory=list)

    def __iter__(self):
        # allows ``value, err = integrate_r3(...)``
        yield self.value
        yield self.err_est


def combine(results):
    """Sum independent quadrature results, adding their error estimates."""
    value = sum(r.value for r in results)
    return QuadResult(
        value=value,
        err_est=float(sum(r.err_est for r in results)),
        converged=all(r.converged for r in results),
        radial_err=float(sum(r.radial_err for r in results)),
        angular_err=float(sum(r.angular_err for r in results)),
        tail=float(sum(r.tail for r in results)),
        n_panels=sum(r.n_panels for r in results),
        n_evals=sum(r.n_evals for r in results),
        parts=list(results),
    )


def scale_result(res, factor):
    """Apply a fixed linear map (scalar or matrix) to the value; err scales by its 2-norm."""
    factor = np.asarray(factor)
    if factor.ndim == 2:
        value = factor @ res.value
        norm = float(np.linalg.norm(factor, 2))
    else:
        value = factor * res.value
        norm = float(np.abs(factor))
    return QuadResult(
        value=value, err_est=norm * res.err_est, converged=res.converged,
        radial_err=norm * res.radial_err, angular_err=norm * res.angular_err,
        tail=norm * res.tail, n_panels=res.n_panels, n_evals=res.n_evals, parts=[res],
    )


# --------------------------------------------------------------------------
# Spherical grids


def fibonacci_sphere(n):
    """Equal-area Fibonacci lattice: ``n`` unit vectors with equal weights 4 pi / n."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + math.sqrt(5.0)) * i
    rho = np.sqrt(1.0 - z * z)
    pts = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
    return pts, np.full(n, 4.0 * np.pi / n)


def lebedev_sphere(n):
    """Smallest available Lebedev grid with at least ``n`` points (largest if none)."""
    k = next((i for i, m in enumerate(_LEBEDEV_SIZES) if m >= n), len(_LEBEDEV_SIZES) - 1)
    x, w = lebedev_rule(_LEBEDEV_ORDERS[k])
    return x.T.copy(), w


def _gauss_dims(n):
    n_mu = max(2, int(math.ceil(math.sqrt(n / 2.0))))
    return n_mu, 2 * n_mu


def gauss_sphere(n, mu_hi=1.0):
    """Gauss-Legendre in cos(theta) times the trapezoid rule in phi.

    ``mu_hi < 1`` restricts to the polar region cos(theta) <= mu_hi (a cap removed
    around +z). Exact for polynomials of degree < 2 * n_mu on the full sphere.
    """
    n_mu, n_phi = _gauss_dims(n)
    x, w = leggauss(n_mu)
    half = 0.5 * (mu_hi + 1.0)
    mu = -1.0 + half * (x + 1.0)
    wmu = half * w
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    s = np.sqrt(np.clip(1.0 - mu * mu, 0.0, None))
    pts = np.stack(
        [np.outer(s, np.cos(phi)), np.outer(s, np.sin(phi)), np.repeat(mu[:, None], n_phi, axis=1)],
        axis=-1,
    ).reshape(-1, 3)
    wts = np.repeat(wmu, n_phi) * (2.0 * np.pi / n_phi)
    return pts, wts


@lru_cache(maxsize=32)
def _sphere_cached(kind, n):
    if kind == "fibonacci":
        pts, w = fibonacci_sphere(n)
    elif kind == "lebedev":
        pts, w = lebedev_sphere(n)
    else:
        pts, w = gauss_sphere(n)
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w


def sphere_grid(rule, coarse=False):
    """Points and weights of the rule's spherical grid; ``coarse`` gives the error-check grid."""
    n = rule.sphere_points
    if coarse:
        if rule.sphere == "lebedev":
            pts, _ = lebedev_sphere(n)
            k = _LEBEDEV_SIZES.index(len(pts))
            n = _LEBEDEV_SIZES[max(k - 2, 0)]
        else:
            n = max(n // 2, 8)
    return _sphere_cached(rule.sphere, n)


def _frame(axis):
    """Orthonormal matrix whose third row is ``axis`` (unit)."""
    e3 = np.asarray(axis, dtype=float)
    e3 = e3 / np.linalg.norm(e3)
    trial = np.array([1.0, 0.0, 0.0]) if abs(e3[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = trial - (trial @ e3) * e3
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    return np.stack([e1, e2, e3])


# --------------------------------------------------------------------------
# Shell integrators: map radii (M,) to shell integrals (M, k) including r^2


def _eval(g, pts):
    val = np.asarray(g(pts))
    if val.ndim == pts.ndim - 1:
        val = val[..., None]
    return val


def _fixed_shells(g, center, pts, wts):
    center = np.asarray(center, dtype=float)

    def shell(r):
        y = center + r[:, None, None] * pts[None, :, :]
        val = _eval(g, y)
        return (r * r)[:, None] * np.einsum("mnk,n->mk", val, wts)

    return shell


def _cap_shells(g, exclude_center, exclude_radius, n, coarse=False):
    """Origin-centred shells with the ball |y - c| <= a removed (|c| > a)."""
    c = np.asarray(exclude_center, dtype=float)
    P = float(np.linalg.norm(c))
    a = float(exclude_radius)
    R = _frame(c)
    n_mu, n_phi = _gauss_dims(max(n // 2, 8) if coarse else n)
    xg, wg = leggauss(n_mu)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    cphi, sphi = np.cos(phi), np.sin(phi)

    def shell(r):
        mu_hi = np.minimum(1.0, (r * r + P * P - a * a) / (2.0 * r * P))
        half = 0.5 * (mu_hi + 1.0)
        mu = -1.0 + half[:, None] * (xg + 1.0)[None, :]  # (M, n_mu)
        wmu = half[:, None] * wg[None, :]
        s = np.sqrt(np.clip(1.0 - mu * mu, 0.0, None))
        local = np.stack(
            [s[..., None] * cphi, s[..., None] * sphi, np.broadcast_to(mu[..., None], s.shape + (n_phi,))],
            axis=-1,
        ).reshape(len(r), -1, 3)
        pts = local @ R
        w = np.repeat(wmu, n_phi, axis=1) * (2.0 * np.pi / n_phi)
        val = _eval(g, r[:, None, None] * pts)
        return (r * r)[:, None] * np.einsum("mnk,mn->mk", val, w)

    return shell


# --------------------------------------------------------------------------
# Adaptive radial engine


class _Segment:
    """Radial interval [a, b] in a variable t with r = map(t); b may be infinite."""

    def __init__(self, a, b, r_max):
        self.a = float(a)
        self.infinite = not np.isfinite(b)
        if self.infinite:
            self.L = max(self.a, 1.0)
            q = max((r_max - self.a) / self.L, 0.0)
            self.t0, self.t1 = 0.0, q / (1.0 + q)
            self.r_end = r_max
        else:
            self.t0, self.t1 = self.a, float(b)
            self.r_end = float(b)

    def map(self, t):
        if not self.infinite:
            return t, np.ones_like(t)
        s = 1.0 - t
        return self.a + self.L * t / s, self.L / (s * s)


class _Panel:
    __slots__ = ("seg", "t0", "t1", "depth", "coarse", "left", "right", "est", "r0")

    def __init__(self, seg, t0, t1, depth, coarse):
        self.seg, self.t0, self.t1, self.depth, self.coarse = seg, t0, t1, depth, coarse
        self.r0 = seg.map(np.array([t0]))[0][0]


def _gl_nodes(seg, t0, t1, x, w):
    h = 0.5 * (t1 - t0)
    t = t0 + h * (x + 1.0)
    r, drdt = seg.map(t)
    return r, h * w * drdt


def _evaluate_panels(shell, panels, x, w):
    """Fill left/right half-panel values for each panel with one batched call."""
    radii, weights, owners = [], [], []
    for i, p in enumerate(panels):
        tm = 0.5 * (p.t0 + p.t1)
        for j, (ta, tb) in enumerate(((p.t0, tm), (tm, p.t1))):
            r, wr = _gl_nodes(p.seg, ta, tb, x, w)
            radii.append(r)
            weights.append(wr)
            owners.extend([2 * i + j] * len(r))
    radii = np.concatenate(radii)
    weights = np.concatenate(weights)
    owners = np.asarray(owners)
    vals = []
    for s in range(0, len(radii), _CHUNK):
        vals.append(shell(radii[s:s + _CHUNK]) * weights[s:s + _CHUNK, None])
    vals = np.concatenate(vals)
    k = vals.shape[1]
    halves = np.zeros((2 * len(panels), k), dtype=vals.dtype)
    np.add.at(halves, owners, vals)
    for i, p in enumerate(panels):
        p.left, p.right = halves[2 * i], halves[2 * i + 1]
        if p.coarse is None:
            r, wr = _gl_nodes(p.seg, p.t0, p.t1, x, w)
            p.coarse = np.einsum("mk,m->k", shell(r), wr)
        p.est = float(np.linalg.norm(p.left + p.right - p.coarse))
    return len(radii)


def _final_nodes(panels, x, w):
    radii, weights = [], []
    for p in panels:
        tm = 0.5 * (p.t0 + p.t1)
        for ta, tb in ((p.t0, tm), (tm, p.t1)):
            r, wr = _gl_nodes(p.seg, ta, tb, x, w)
            radii.append(r)
            weights.append(wr)
    return np.concatenate(radii), np.concatenate(weights)


def _apply(shell, radii, weights):
    out = [np.einsum("mk,m->k", shell(radii[s:s + _CHUNK]), weights[s:s + _CHUNK])
           for s in range(0, len(radii), _CHUNK)]
    return np.sum(out, axis=0)


def _adaptive_radial(shell, breakpoints, rule, tol, coarse_shell=None, tail_fn=None):
    """Adaptive Gauss-Legendre over consecutive radial segments.

    ``breakpoints`` is an increasing list ending in a finite radius or ``inf``.
    Returns a QuadResult whose value has shape (k,).
    """
    x, w = leggauss(rule.radial_order)
    segs = [_Segment(a, b, rule.r_max) for a, b in zip(breakpoints[:-1], breakpoints[1:]) if b > a]
    panels = []
    for seg in segs:
        if seg.infinite:
            # edges fixed in t (r = L k / (n - k)), independent of r_max; last panel clipped
            edges = np.linspace(0.0, 1.0, rule.radial_panels + 1)
            edges = np.append(edges[edges < seg.t1], seg.t1)
        else:
            edges = np.linspace(seg.t0, seg.t1, rule.radial_panels + 1)
        panels.extend(_Panel(seg, t0, t1, 0, None) for t0, t1 in zip(edges[:-1], edges[1:]))
    n_evals = _evaluate_panels(shell, panels, x, w)

    converged = False
    while True:
        total_est = sum(p.est for p in panels)
        if total_est <= tol:
            converged = True
            break
        refinable = [p for p in panels
                     if p.depth < rule.adapt_depth
                     and p.est > _ROUNDOFF * float(np.linalg.norm(p.left) + np.linalg.norm(p.right))]
        if not refinable or len(panels) >= rule.max_panels:
            break
        # largest estimate first; ties go to the smaller radius
        refinable.sort(key=lambda p: (-p.est, p.r0))
        room = rule.max_panels - len(panels)
        batch, removed = [], 0.0
        for p in refinable:
            if removed >= total_est - tol or len(batch) >= min(64, room):
                break
            batch.append(p)
            removed += p.est
        children = []
        for p in batch:
            tm = 0.5 * (p.t0 + p.t1)
            children.append(_Panel(p.seg, p.t0, tm, p.depth + 1, p.left))
            children.append(_Panel(p.seg, tm, p.t1, p.depth + 1, p.right))
        n_evals += _evaluate_panels(shell, children, x, w)
        drop = set(map(id, batch))
        panels = [p for p in panels if id(p) not in drop] + children

    panels.sort(key=lambda p: (segs.index(p.seg), p.t0))
    value = np.sum([p.left + p.right for p in panels], axis=0)
    radial_err = sum(p.est for p in panels)
    radial_err += _ROUNDOFF * float(sum(np.linalg.norm(p.left) + np.linalg.norm(p.right) for p in panels))

    angular_err = 0.0
    if coarse_shell is not None:
        radii, weights = _final_nodes(panels, x, w)
        angular_err = float(np.linalg.norm(_apply(coarse_shell, radii, weights) - value))
        n_evals += len(radii)

    tail = 0.0
    if segs and segs[-1].infinite and tail_fn is not None:
        tail = float(tail_fn(segs[-1].r_end, shell))
    err = radial_err + angular_err + tail
    # the tolerance applies to the whole estimate, not only the radial part
    converged = converged and err <= tol
    return QuadResult(value=value, err_est=float(err), converged=converged, radial_err=float(radial_err),
                      angular_err=angular_err, tail=tail, n_panels=len(panels), n_evals=n_evals)


# --------------------------------------------------------------------------
# Tails


def tail_bound(C, rho, R):
    """Upper bound on the integral of C <y>^(-rho-2) over |y| > R.

    Uses <y> >= |y|: the bound 4 pi C R^(1-rho) / (rho - 1) is rigorous and
    asymptotically sharp.
    """
    if not rho > 1:
        raise ValueError(f"rho must exceed 1 for an integrable tail, got {rho}")
    if not R > 0:
        raise ValueError("R must be positive")
    if C < 0:
        raise ValueError("C must be nonnegative")
    return 4.0 * np.pi * C * R ** (1.0 - rho) / (rho - 1.0)


def _tail_fn(decay, offset=0.0):
    """Tail contribution beyond r_max: from a declared bound (C, p), |g| <= C <y>^-p,
    otherwise extrapolated from the outermost shell assuming |y|^-4 decay."""
    def tail(r_end, shell):
        R = r_end - offset
        if decay is not None:
            C, p = decay
            return tail_bound(C, p - 2.0, R) if R > 0 else np.inf
        F = shell(np.array([r_end]))[0]
        return float(np.linalg.norm(F)) * r_end
    return tail


def _finish(res, scalar, label=None):
    if scalar:
        res.value = res.value[0]
    if not res.converged:
        where = f" ({label})" if label else ""
        warnings.warn(
            f"quadrature budget exceeded{where}: err_est {res.err_est:.3g} > tol",
            QuadratureBudgetWarning, stacklevel=3,
        )
    return res


_PROBE = np.array([[0.3141, -0.2718, 0.1618]])


def _is_scalar(g):
    with np.errstate(all="ignore"):
        return np.asarray(g(_PROBE)).ndim == 1


# --------------------------------------------------------------------------
# Public integrators


def integrate_shell(g, rule, r_inner=0.0, r_outer=np.inf, exclude=None, decay=None, tol=None,
                    warn=True):
    """Integral of g over r_inner < |y| < r_outer, origin-centred.

    ``exclude=(center, radius)`` removes a ball that does not contain the origin;
    shells crossing it use a cap-restricted Gauss product grid. ``decay=(C, p)``
    declares |g(y)| <= C <y>^-p (p > 3) for the truncation bound beyond ``rule.r_max``.
    """
    tol = rule.tol if tol is None else tol
    scalar = _is_scalar(g)
    bps = [float(r_inner)]
    if exclude is None:
        pts, wts = sphere_grid(rule)
        cpts, cwts = sphere_grid(rule, coarse=True)
        shell = _fixed_shells(g, np.zeros(3), pts, wts)
        coarse = _fixed_shells(g, np.zeros(3), cpts, cwts)
    else:
        center, a = exclude
        P = float(np.linalg.norm(center))
        if not a < P:
            raise ValueError("excluded ball must not contain the origin")
        shell = _cap_shells(g, center, a, rule.sphere_points)
        coarse = _cap_shells(g, center, a, rule.sphere_points, coarse=True)
        bps += [b for b in (P - a, P + a) if r_inner < b < r_outer]
    bps.append(r_outer if np.isfinite(r_outer) else np.inf)
    res = _adaptive_radial(shell, bps, rule, tol, coarse_shell=coarse, tail_fn=_tail_fn(decay))
    return _finish(res, scalar, "shell") if warn else _finish_quiet(res, scalar)


def _finish_quiet(res, scalar):
    if scalar:
        res.value = res.value[0]
    return res


def integrate_r3(g, rule, decay=None):
    """Integral of g over R^3; returns a QuadResult (unpacks as ``value, err_est``)."""
    return integrate_shell(g, rule, decay=decay)


def integrate_ball(center, radius, g, rule, tol=None, warn=True):
    """Integral over |y - center| < radius in coordinates centred at ``center``."""
    tol = rule.tol if tol is None else tol
    scalar = _is_scalar(g)
    pts, wts = sphere_grid(rule)
    cpts, cwts = sphere_grid(rule, coarse=True)
    shell = _fixed_shells(g, center, pts, wts)
    coarse = _fixed_shells(g, center, cpts, cwts)
    res = _adaptive_radial(shell, [0.0, float(radius)], rule, tol, coarse_shell=coarse)
    return _finish(res, scalar, "ball") if warn else _finish_quiet(res, scalar)


def integrate_singular(pole, g, rule, radius=None, decay=None):
    """Integral of g, singular like |y - pole|^-2, over R^3 or the ball of given radius.

    Radial nodes never sit at the pole, and the r^2 Jacobian of pole-centred
    coordinates cancels the singularity. For whole-space integrals around a pole
    far from the origin, a ball of radius |pole|/2 is done pole-centred and the
    rest origin-centred, so the origin-centred decay of g stays resolved.
    """
    pole = np.asarray(pole, dtype=float)
    scalar = _is_scalar(g)
    if radius is not None:
        return integrate_ball(pole, radius, g, rule)
    P = float(np.linalg.norm(pole))
    if P <= SPLIT_RADIUS:
        pts, wts = sphere_grid(rule)
        cpts, cwts = sphere_grid(rule, coarse=True)
        shell = _fixed_shells(g, pole, pts, wts)
        coarse = _fixed_shells(g, pole, cpts, cwts)
        res = _adaptive_radial(shell, [0.0, np.inf], rule, rule.tol, coarse_shell=coarse,
                               tail_fn=_tail_fn(decay, offset=P))
        return _finish(res, scalar, "singular")
    a = 0.5 * P
    near = integrate_ball(pole, a, g, rule, tol=0.5 * rule.tol, warn=False)
    far = integrate_shell(g, rule, exclude=(pole, a), decay=decay, tol=0.5 * rule.tol, warn=False)
    res = combine([near, far])
    return _finish(res, False, "singular")

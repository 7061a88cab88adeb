"""Batch runner: ``zeromodes {verify,limit,budget,residual}``.

Configuration is an INI file (sections below); command-line flags override it.
Exit status: 0 pass, 1 numerical tolerance failure, 2 usage or configuration error.

    [family]    name = loss-yau | free | plugin ; phi0 ; block ; plugin ; c_q ; rho ; c_f
    [rule]      rmax ; tol ; sphere ; sphere_points ; radial_order ; radial_panels ; adapt_depth ; max_panels
    [probe]     omegas ; radii ; weyl_omegas
    [verify]    fd_step ; fd_tol ; n_points ; radius
    [budget]    pairs ; omega
    [residual]  n_points ; radius ; far ; max_residual
    [output]    dir ; format
    [run]       seed ; threads
"""

import argparse
import configparser
import csv
import importlib
import json
import logging
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from .integral_operator import apply_T, decay_envelope, sample_points
from .quadrature import QuadratureBudgetWarning, QuadratureRule
from .zero_modes import (
    AMNMode,
    AssumptionAError,
    DiracZeroModePair,
    dirac_residual,
    embed_weyl_to_dirac,
    free_pair,
    loss_yau_pair,
    weyl_residual,
)

SCHEMA = 1
log = logging.getLogger("zeromodes")

ALLOWED = {
    "family": {"name", "phi0", "block", "plugin", "c_q", "rho", "c_f"},
    "rule": {"rmax", "tol", "sphere", "sphere_points", "radial_order", "radial_panels", "adapt_depth",
             "max_panels"},
    "probe": {"omegas", "radii", "weyl_omegas"},
    "verify": {"fd_step", "fd_tol", "n_points", "radius"},
    "budget": {"pairs", "omega"},
    "residual": {"n_points", "radius", "far", "max_residual"},
    "output": {"dir", "format"},
    "run": {"seed", "threads"},
}

DEFAULT_BUDGET_PAIRS = ((20.0, 5.0), (40.0, 5.0), (80.0, 5.0), (160.0, 5.0),
                        (80.0, 10.0), (160.0, 20.0), (320.0, 40.0))


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------
# Configuration


def _floats(text):
    return tuple(float(t) for t in str(text).replace(";", ",").split(",") if t.strip())


def _complexes(text):
    return tuple(complex(t.strip().replace(" ", "")) for t in str(text).split(",") if t.strip())


def _pairs(text):
    out = []
    for item in str(text).replace(";", ",").split(","):
        if item.strip():
            r, R0 = item.split(":")
            out.append((float(r), float(R0)))
    return tuple(out)


@dataclass
class ExperimentConfig:
    family: str = "loss-yau"
    phi0: tuple = (1.0, 0.0)
    block: str = "upper"
    plugin: str = ""
    c_q: float = None
    rho: float = None
    c_f: float = None
    rule: dict = field(default_factory=dict)
    omegas: int = 64
    radii: tuple = tuple(10.0 * 2.0 ** k for k in range(6))
    weyl_omegas: int = 4
    fd_step: float = 1e-3
    fd_tol: float = 1e-5
    verify_points: int = 100
    verify_radius: float = 10.0
    budget_pairs: tuple = DEFAULT_BUDGET_PAIRS
    budget_omega: tuple = (0.0, 0.0, 1.0)
    residual_points: int = 20
    residual_radius: float = 5.0
    residual_far: tuple = (10.0, 20.0, 40.0)
    max_residual: float = 1e-3
    out: str = "zeromodes-out"
    format: str = "both"
    seed: int = 0
    threads: int = 1

    def quadrature_rule(self):
        return QuadratureRule(**self.rule)

    def echo(self):
        d = asdict(self)
        d["phi0"] = [str(complex(c)) for c in self.phi0]
        return d


_RULE_KEYS = {"rmax": ("r_max", float), "tol": ("tol", float), "sphere": ("sphere", str),
              "sphere_points": ("sphere_points", int), "radial_order": ("radial_order", int),
              "radial_panels": ("radial_panels", int), "adapt_depth": ("adapt_depth", int),
              "max_panels": ("max_panels", int)}


def load_config(path=None):
    cfg = ExperimentConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for section in parser.sections():
        if section not in ALLOWED:
            raise ConfigError(f"unknown config section [{section}]")
        extra = set(parser[section]) - ALLOWED[section]
        if extra:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(extra))}")
    try:
        _apply_sections(cfg, parser)
    except ValueError as exc:
        raise ConfigError(f"bad value in {path}: {exc}") from exc
    return cfg


def _apply_sections(cfg, p):
    if p.has_section("family"):
        s = p["family"]
        cfg.family = s.get("name", cfg.family)
        if "phi0" in s:
            cfg.phi0 = _complexes(s["phi0"])
        cfg.block = s.get("block", cfg.block)
        cfg.plugin = s.get("plugin", cfg.plugin)
        for key in ("c_q", "rho", "c_f"):
            if key in s:
                setattr(cfg, key, float(s[key]))
    if p.has_section("rule"):
        for key, text in p["rule"].items():
            name, conv = _RULE_KEYS[key]
            cfg.rule[name] = conv(text)
    if p.has_section("probe"):
        s = p["probe"]
        cfg.omegas = s.getint("omegas", cfg.omegas)
        if "radii" in s:
            cfg.radii = _floats(s["radii"])
        cfg.weyl_omegas = s.getint("weyl_omegas", cfg.weyl_omegas)
    if p.has_section("verify"):
        s = p["verify"]
        cfg.fd_step = s.getfloat("fd_step", cfg.fd_step)
        cfg.fd_tol = s.getfloat("fd_tol", cfg.fd_tol)
        cfg.verify_points = s.getint("n_points", cfg.verify_points)
        cfg.verify_radius = s.getfloat("radius", cfg.verify_radius)
    if p.has_section("budget"):
        s = p["budget"]
        if "pairs" in s:
            cfg.budget_pairs = _pairs(s["pairs"])
        if "omega" in s:
            cfg.budget_omega = _floats(s["omega"])
    if p.has_section("residual"):
        s = p["residual"]
        cfg.residual_points = s.getint("n_points", cfg.residual_points)
        cfg.residual_radius = s.getfloat("radius", cfg.residual_radius)
        if "far" in s:
            cfg.residual_far = _floats(s["far"])
        cfg.max_residual = s.getfloat("max_residual", cfg.max_residual)
    if p.has_section("output"):
        cfg.out = p["output"].get("dir", cfg.out)
        cfg.format = p["output"].get("format", cfg.format)
    if p.has_section("run"):
        cfg.seed = p["run"].getint("seed", cfg.seed)
        cfg.threads = p["run"].getint("threads", cfg.threads)


def apply_flags(cfg, args):
    flag_rule = {"rmax": ("r_max", args.rmax), "tol": ("tol", args.tol),
                 "sphere_points": ("sphere_points", args.sphere_points),
                 "radial_order": ("radial_order", args.radial_order),
                 "adapt_depth": ("adapt_depth", args.adapt_depth)}
    for name, value in flag_rule.values():
        if value is not None:
            cfg.rule[name] = value
    for attr in ("out", "seed", "threads", "format"):
        value = getattr(args, attr)
        if value is not None:
            setattr(cfg, attr, value)
    return cfg


def validate(cfg):
    """Check every parameter against the preconditions of the module it feeds."""
    if cfg.family not in ("loss-yau", "free", "plugin"):
        raise ConfigError(f"unknown family {cfg.family!r} (loss-yau, free, plugin)")
    if cfg.rho is not None and not cfg.rho > 1:
        raise ConfigError(f"Assumption (A) requires rho > 1; config declares rho = {cfg.rho}")
    if cfg.c_q is not None and not cfg.c_q > 0:
        raise ConfigError(f"Assumption (A) requires C_q > 0; config declares c_q = {cfg.c_q}")
    if cfg.block not in ("upper", "lower"):
        raise ConfigError("block must be 'upper' or 'lower'")
    if cfg.format not in ("json", "csv", "both"):
        raise ConfigError("format must be json, csv or both")
    try:
        cfg.quadrature_rule()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid quadrature rule: {exc}") from exc
    radii = np.asarray(cfg.radii)
    if len(radii) < 2 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ConfigError("probe radii must be positive and strictly increasing")
    if cfg.omegas < 1 or cfg.threads < 1:
        raise ConfigError("omegas and threads must be positive")
    if not cfg.fd_step > 0:
        raise ConfigError("fd_step must be positive")
    if len(cfg.budget_omega) != 3 or not np.linalg.norm(cfg.budget_omega) > 0:
        raise ConfigError("budget omega must be a nonzero 3-vector")
    bad = [(r, R0) for r, R0 in cfg.budget_pairs if not (R0 > 0 and r >= 2 * R0)]
    if bad:
        listed = ", ".join(f"(r={r:g}, R0={R0:g})" for r, R0 in bad)
        raise ConfigError(f"error budget needs r >= 2 R0 > 0; offending pairs: {listed}")
    if cfg.family == "plugin" and ":" not in cfg.plugin:
        raise ConfigError("plugin family needs plugin = module:callable")


# --------------------------------------------------------------------------
# Families


@dataclass
class Family:
    pair: DiracZeroModePair
    psi: object = None      # Weyl 2-spinor, when the pair is an embedded Weyl mode
    A: object = None
    weyl_decay: tuple = None


def build_family(cfg):
    if cfg.family == "loss-yau":
        try:
            mode, pair = loss_yau_pair(cfg.phi0, block=cfg.block)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if cfg.rho is not None or cfg.c_q is not None:
            pair = embed_weyl_to_dirac(mode.psi, mode.A, decay=(cfg.c_q or 3.0, cfg.rho or 2.0),
                                       block=cfg.block, C_f=1.0, name="loss-yau")
        return Family(pair, mode.psi, mode.A, weyl_decay=(3.0, 4.0))
    if cfg.family == "free":
        return Family(free_pair())
    module, _, attr = cfg.plugin.partition(":")
    try:
        obj = getattr(importlib.import_module(module), attr)()
    except (ImportError, AttributeError) as exc:
        raise ConfigError(f"cannot load plugin {cfg.plugin}: {exc}") from exc
    if isinstance(obj, DiracZeroModePair):
        return Family(obj)
    if isinstance(obj, AMNMode):
        decay = (cfg.c_q, cfg.rho) if cfg.rho is not None else obj.decay
        if decay is None:
            raise ConfigError("plugin mode declares no decay; set c_q and rho in [family]")
        pair = embed_weyl_to_dirac(obj.psi, obj.A, decay=decay, block=cfg.block, C_f=cfg.c_f, name=cfg.plugin)
        return Family(pair, obj.psi, obj.A)
    raise ConfigError(f"plugin {cfg.plugin} returned {type(obj).__name__}, expected AMNMode or DiracZeroModePair")


# --------------------------------------------------------------------------
# Output


def _num(x):
    return float(x)


def _cvec(v):
    v = np.asarray(v)
    return [[float(np.real(c)), float(np.imag(c))] for c in v.ravel()]


def _write_json(cfg, name, payload):
    path = Path(cfg.out) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps({"schema": SCHEMA, **payload}, indent=2, sort_keys=True, allow_nan=True)
    path.write_text(text + "\n")
    return path


def _write_csv(cfg, name, header, rows):
    path = Path(cfg.out) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def _want(cfg, kind):
    return cfg.format in (kind, "both")


def _map(cfg, fn, items):
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# --------------------------------------------------------------------------
# Commands


def cmd_verify(cfg):
    fam = build_family(cfg)
    rule = cfg.quadrature_rule()
    pts = sample_points(cfg.seed, n=cfg.verify_points, radius=cfg.verify_radius, far=())
    audit = fam.pair.audit(pts)
    checks = {"assumption_a": {**audit, "passed": bool(audit["hermitian"] and audit["decay_ok"])}}

    dres = float(np.max(np.linalg.norm(dirac_residual(fam.pair, pts, h=cfg.fd_step), axis=-1)))
    checks["dirac_residual"] = {"max": dres, "tol": cfg.fd_tol, "h": cfg.fd_step, "passed": dres <= cfg.fd_tol}
    if fam.psi is not None:
        wres = float(np.max(np.linalg.norm(weyl_residual(fam.psi, fam.A, pts, h=cfg.fd_step), axis=-1)))
        checks["weyl_residual"] = {"max": wres, "tol": cfg.fd_tol, "h": cfg.fd_step, "passed": wres <= cfg.fd_tol}

    C_f, r_at = decay_envelope(fam.pair.f, np.geomspace(0.1, 1000.0, 41), asy.default_omegas(cfg.omegas))
    checks["decay_envelope"] = {"C_f": C_f, "r_at_sup": r_at, "passed": bool(np.isfinite(C_f))}

    res = asy.limit_integral(fam.pair, rule)
    checks["limit_integral"] = {
        "norm": float(np.linalg.norm(res.value)), "err_est": res.err_est, "tol": rule.tol,
        "radial_err": res.radial_err, "angular_err": res.angular_err, "tail": res.tail,
        "budget_exceeded": not res.converged, "passed": bool(res.converged),
    }
    passed = all(c["passed"] for c in checks.values())
    if _want(cfg, "json"):
        _write_json(cfg, "verify.json", {"command": "verify", "config": cfg.echo(), "checks": checks,
                                         "passed": passed})
    if _want(cfg, "csv"):
        _write_csv(cfg, "verify.csv", ["check", "passed"], [(k, v["passed"]) for k, v in checks.items()])
    for name, c in checks.items():
        log.info("%-16s %s", name, "ok" if c["passed"] else "FAIL")
    if not res.converged:
        log.error("quadrature budget exceeded: err_est %.3g > tol %.3g", res.err_est, rule.tol)
    return 0 if passed else 1


def cmd_limit(cfg):
    fam = build_family(cfg)
    rule = cfg.quadrature_rule()
    probe = asy.AsymptoticProbe(omega_set=asy.default_omegas(cfg.omegas), r_ladder=cfg.radii, rule=rule)
    integral = asy.limit_integral(fam.pair, rule)
    L = asy.limit_map(fam.pair, probe.omega_set, rule)
    L_err = integral.err_est / (4 * np.pi)
    report = asy.radial_scan(fam.pair.f, L, probe)
    eq = asy.zero_limit_equivalence(fam.pair, rule)
    moduli = np.linalg.norm(L, axis=-1)

    weyl = []
    if fam.psi is not None:
        sl = slice(0, 2) if cfg.block == "upper" else slice(2, 4)
        for om in probe.omega_set[: cfg.weyl_omegas]:
            v, err = asy.weyl_limit_vector(fam.psi, fam.A, om, rule, full_output=True, decay=fam.weyl_decay)
            Lw = asy.limit_vector(fam.pair, om, rule)[sl]
            weyl.append({"omega": om.tolist(), "value": _cvec(v), "err_est": err,
                         "diff_from_dirac_block": float(np.linalg.norm(v - Lw)),
                         "diff_err": err + L_err})
    converged = bool(integral.converged)
    payload = {
        "command": "limit",
        "config": cfg.echo(),
        "limits": [{"omega": om.tolist(), "value": _cvec(v), "modulus": float(m), "err_est": L_err}
                   for om, v, m in zip(probe.omega_set, L, moduli)],
        "modulus_spread": {"value": float(np.max(moduli) - np.min(moduli)), "err_est": 2 * L_err},
        "scan": [{"r": float(r), "omega": om.tolist(), "deviation": float(d), "err_est": L_err}
                 for r, om, d in report.scan_rows()],
        "fit": {"slope": report.fit.slope, "stderr": report.fit.stderr, "intercept": report.fit.intercept,
                "residual": report.fit.residual},
        "uniformity": [asdict(u) for u in report.uniformity],
        "equivalence": {**asdict(eq), "consistent": eq.consistent},
        "weyl": weyl,
        "budget": [],
        "converged": converged,
    }
    if _want(cfg, "json"):
        _write_json(cfg, "limit.json", payload)
    if _want(cfg, "csv"):
        _write_csv(cfg, "scan.csv", ["r", "omega_x", "omega_y", "omega_z", "deviation", "err_est"],
                   [(r, *om, d, L_err) for r, om, d in report.scan_rows()])
    log.info("limit |L| in [%.8g, %.8g], fitted order %.4f +- %.4f", moduli.min(), moduli.max(),
             report.fit.slope, report.fit.stderr)
    return 0 if converged else 1


def _slope_groups(rows):
    """(slope of |I|, |II| vs r at the most common R0) and (slope of |III| vs R0 at the most common r/R0)."""
    from collections import Counter

    out = {}
    if not rows:
        return out
    R0_mode = Counter(b.R0 for b in rows).most_common(1)[0][0]
    same_R0 = sorted((b for b in rows if b.R0 == R0_mode), key=lambda b: b.r)
    ratio_mode = Counter(round(b.r / b.R0, 9) for b in rows).most_common(1)[0][0]
    same_ratio = sorted((b for b in rows if round(b.r / b.R0, 9) == ratio_mode), key=lambda b: b.R0)

    def fit(xs, ys):
        ys = np.asarray(ys, float)
        if len(xs) < 2 or np.any(ys <= 0):
            return {"slope": float("nan"), "stderr": float("nan"), "n": len(xs)}
        f = asy.fit_order(xs, ys)
        return {"slope": f.slope, "stderr": f.stderr, "n": len(xs)}

    out["I_vs_r"] = {"R0": R0_mode, **fit([b.r for b in same_R0], [np.linalg.norm(b.I) for b in same_R0])}
    out["I_majorant_vs_r"] = {"R0": R0_mode, **fit([b.r for b in same_R0], [b.I_majorant for b in same_R0])}
    out["II_vs_r"] = {"R0": R0_mode, **fit([b.r for b in same_R0], [np.linalg.norm(b.II) for b in same_R0])}
    out["III_vs_R0"] = {"r_over_R0": ratio_mode,
                        **fit([b.R0 for b in same_ratio], [np.linalg.norm(b.III) for b in same_ratio])}
    return out


def cmd_budget(cfg):
    fam = build_family(cfg)
    rule = cfg.quadrature_rule()
    omega = asy.unit(cfg.budget_omega)
    rows = _map(cfg, lambda p: asy.error_budget(fam.pair, omega, p[0], p[1], rule), cfg.budget_pairs)
    table = []
    for b in rows:
        table.append({
            "r": b.r, "R0": b.R0, "eps": b.eps,
            "I": np.linalg.norm(b.I), "err_I": b.err_I, "I_majorant": b.I_majorant,
            "II": np.linalg.norm(b.II), "err_II": b.err_II,
            "III": np.linalg.norm(b.III), "err_III": b.err_III,
            "sum_residual": b.sum_residual, "combined_err": b.combined_err,
            "sum_ok": b.sum_residual <= b.combined_err, "converged": b.converged,
        })
    slopes = _slope_groups(rows)
    passed = all(t["sum_ok"] and t["converged"] for t in table)
    if _want(cfg, "json"):
        _write_json(cfg, "budget.json", {"command": "budget", "config": cfg.echo(), "omega": omega.tolist(),
                                         "budget": [{k: (float(v) if not isinstance(v, bool) else v)
                                                     for k, v in t.items()} for t in table],
                                         "slopes": slopes, "passed": passed})
    if _want(cfg, "csv"):
        header = list(table[0]) if table else []
        _write_csv(cfg, "budget.csv", header, [list(t.values()) for t in table])
    for name, s in slopes.items():
        log.info("slope %-16s %.4f +- %.4f", name, s["slope"], s["stderr"])
    return 0 if passed else 1


def cmd_residual(cfg):
    fam = build_family(cfg)
    rule = cfg.quadrature_rule()
    pts = sample_points(cfg.seed, n=cfg.residual_points, radius=cfg.residual_radius, far=cfg.residual_far)

    def one(x):
        t = apply_T(fam.pair.Q, fam.pair.f, x, rule, qg=fam.pair.qf)
        return float(np.linalg.norm(np.asarray(fam.pair.f(x)) - t.value)), t.err_est, t.converged

    out = _map(cfg, one, list(pts))
    residuals = np.array([o[0] for o in out])
    errs = np.array([o[1] for o in out])
    max_res = float(residuals.max())
    passed = max_res <= cfg.max_residual and all(o[2] for o in out)
    if _want(cfg, "json"):
        _write_json(cfg, "residual.json", {
            "command": "residual", "config": cfg.echo(),
            "max_residual": max_res, "max_err_est": float(errs.max()),
            "quadrature_tol": rule.tol, "sample_count": int(len(pts)),
            "tolerance": cfg.max_residual, "passed": passed,
        })
    if _want(cfg, "csv"):
        _write_csv(cfg, "residual.csv", ["x", "y", "z", "residual", "err_est"],
                   [(*x, r, e) for x, r, e in zip(pts, residuals, errs)])
    log.info("max |f - T f| = %.3e over %d points", max_res, len(pts))
    return 0 if passed else 1


COMMANDS = {"verify": cmd_verify, "limit": cmd_limit, "budget": cmd_budget, "residual": cmd_residual}


def build_parser():
    parser = argparse.ArgumentParser(prog="zeromodes", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--tol", type=float, help="absolute quadrature tolerance")
    common.add_argument("--rmax", type=float, help="radial truncation radius")
    common.add_argument("--sphere-points", type=int, dest="sphere_points")
    common.add_argument("--radial-order", type=int, dest="radial_order")
    common.add_argument("--adapt-depth", type=int, dest="adapt_depth")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--format", choices=("json", "csv", "both"))
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or name))
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = apply_flags(load_config(args.config), args)
        validate(cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", QuadratureBudgetWarning)
            return COMMANDS[args.command](cfg)
    except (ConfigError, AssumptionAError) as exc:
        print(f"zeromodes: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Declarative experiment runner.

Usage::

    oscbnf <subcommand> --config run.json [--out DIR] [--threads K] [--verbose]

Each subcommand reads a single JSON document, validates it against a fixed
set of keys, writes CSV tables with JSON sidecars and a ``manifest.json``,
and exits with 0 when all declared assertions pass, 1 when one fails and 2
on usage, configuration or precondition errors.
"""

from __future__ import annotations

import argparse
import ast
import json
import logging
import math
import operator
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

log = logging.getLogger("oscbnf")

HBAR_RULE = "lambda-over-n-plus-1"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


# ---------------------------------------------------------------- expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "log": np.log}


def compile_expression(text: str, variables: tuple[str, ...], where: str) -> Callable:
    """Vectorized function from an arithmetic expression in ``variables``.

    Only numbers, the listed variables, ``+ - * / ** ^`` and ``sin cos exp
    sqrt log`` are accepted.
    """
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"{where}: cannot parse {text!r} (column {exc.offset})") from None

    def check(node):
        if isinstance(node, ast.Expression):
            return check(node.body)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return check(node.left) and check(node.right)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            return check(node.operand)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return True
        if isinstance(node, ast.Name) and node.id in variables:
            return True
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return check(node.args[0])
        bad = getattr(node, "id", None) or type(node).__name__
        raise ConfigError(f"{where}: unsupported element {bad!r} in {text!r}")

    check(tree)

    def ev(node, env):
        if isinstance(node, ast.Expression):
            return ev(node.body, env)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = ev(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            return env[node.id]
        return _FUNCS[node.func.id](ev(node.args[0], env))

    def func(*args):
        env = dict(zip(variables, (np.asarray(a, dtype=float) for a in args)))
        out = ev(tree, env)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(*env.values()).shape).copy()

    func.__doc__ = text
    return func


# ---------------------------------------------------------------- config schema

_NUM = (int, float)
COMMON = {"subcommand": str, "out": str, "seed": int, "tolerances": dict, "threads": int}
SCHEMAS: dict[str, dict[str, Any]] = {
    "bnf": {"h2": str, "lambdas": list, "samples": int, "method": str, "grid": list},
    "spectrum": {"h2": str, "h3": str, "lambda": _NUM, "hbar": (str, *_NUM), "n": list},
    "invert": {"h2": str, "lambda": _NUM, "n": int, "hbar": (str, *_NUM), "cluster_halfwidth": _NUM},
    "recover-g": {"G2": str, "G3": str, "hbar": _NUM, "u0": _NUM, "width": _NUM,
                  "window": list, "offset": _NUM, "samples": int},
    "szego": {"h2": str, "lambda": _NUM, "n": list, "hbar": (str, *_NUM), "bins": int},
    "sphere-r": {"M": int, "f": str, "L": int},
    "sphere-mean": {"f": str, "r": list, "L": int, "points": int},
    "landau": {"k": list, "J": int},
    "verify-torus": {"h2": str, "lambda_window": list, "samples": int, "levels": int, "tol": _NUM},
    "verify-magnetic": {"phi0": list, "tol": _NUM},
}
REQUIRED = {
    "bnf": ["h2", "lambdas"], "spectrum": ["h2", "n"], "invert": ["h2", "n"],
    "recover-g": ["G2", "hbar", "u0"], "szego": ["h2", "n"], "sphere-r": ["M"],
    "sphere-mean": ["f", "r"], "landau": ["k", "J"], "verify-torus": ["h2"],
    "verify-magnetic": ["phi0"],
}
TOLERANCES = {
    "bnf": {"quantile_identity": 1e-6},
    "invert": {"sup_error": 0.02},
    "recover-g": {"sup_error": 0.02},
    "szego": {"ks": 0.05, "trend_slack": 0.10},
    "sphere-r": {"asymptote_gap": 0.05},
    "sphere-mean": {"spread": 1e-8, "oracle": 1e-8},
    "verify-torus": {"residual": 1e-5, "alpha_spread": 1e-5},
    "verify-magnetic": {"period_rel": 1e-6, "energy": 1e-8},
}


def validate(sub: str, cfg: dict) -> dict:
    """Check keys and types, apply defaults and return a normalized copy."""
    if sub not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {sub!r}; choose from {', '.join(SCHEMAS)}")
    if not isinstance(cfg, dict):
        raise ConfigError("configuration must be a JSON object")
    schema = {**COMMON, **SCHEMAS[sub]}
    for k, v in cfg.items():
        if k not in schema:
            raise ConfigError(f"field {k!r}: unknown key for {sub!r}")
        want = schema[k]
        if isinstance(v, bool) or not isinstance(v, want):
            raise ConfigError(f"field {k!r}: expected {_type_name(want)}, got {type(v).__name__}")
    for k in REQUIRED[sub]:
        if k not in cfg:
            raise ConfigError(f"field {k!r}: required for {sub!r}")
    if cfg.get("subcommand", sub) != sub:
        raise ConfigError(f"field 'subcommand': config is for {cfg['subcommand']!r}, not {sub!r}")
    tol = dict(TOLERANCES.get(sub, {}))
    for k, v in cfg.get("tolerances", {}).items():
        if k not in tol:
            raise ConfigError(f"field 'tolerances.{k}': unknown tolerance for {sub!r}")
        if not isinstance(v, _NUM) or v <= 0:
            raise ConfigError(f"field 'tolerances.{k}': must be a positive number")
        tol[k] = float(v)
    out = {**cfg, "tolerances": tol, "seed": cfg.get("seed", 0)}
    return out


def _type_name(t) -> str:
    if isinstance(t, tuple):
        return " or ".join(sorted({x.__name__ for x in t}))
    return t.__name__


def _numbers(cfg: dict, key: str, kind=float) -> list:
    vals = cfg[key]
    if not vals:
        raise ConfigError(f"field {key!r}: must not be empty")
    for i, v in enumerate(vals):
        if isinstance(v, bool) or not isinstance(v, _NUM) or (kind is int and not isinstance(v, int)):
            raise ConfigError(f"field {key}[{i}]: expected {kind.__name__}")
    return [kind(v) for v in vals]


def _polynomial(cfg: dict, key: str):
    from .parsing import ParseError, parse_polynomial
    try:
        return parse_polynomial(cfg[key])
    except ParseError as exc:
        raise ConfigError(f"field {key!r}: {exc}") from None


def _invariant(cfg: dict, key: str):
    p = _polynomial(cfg, key)
    if not p.is_invariant():
        from .polynomial import non_invariant_terms
        raise ConfigError(f"field {key!r}: not invariant (monomial {non_invariant_terms(p)[0]})")
    if not p.is_real():
        raise ConfigError(f"field {key!r}: not real-valued")
    return p


def _hbar(cfg: dict, n: int, lam: float) -> float:
    rule = cfg.get("hbar", HBAR_RULE)
    if isinstance(rule, str):
        if rule != HBAR_RULE:
            raise ConfigError(f"field 'hbar': unknown rule {rule!r}; use {HBAR_RULE!r} or a number")
        return lam / (n + 1)
    if rule <= 0:
        raise ConfigError("field 'hbar': must be positive")
    return float(rule)


# ---------------------------------------------------------------- runs


@dataclass
class Run:
    sub: str
    cfg: dict
    out: Path
    outputs: list = field(default_factory=list)
    assertions: list = field(default_factory=list)
    results: dict = field(default_factory=dict)

    def table(self, name: str, header, rows, columns: dict, meta: dict | None = None):
        from .io import write_table
        missing = [c for c in header if c not in columns]
        if missing:
            raise RuntimeError(f"undocumented columns {missing}")
        digest = write_table(self.out / name, header, rows, {"units": columns, **(meta or {})})
        self.outputs.append({"file": name, "sha256": digest, "columns": columns})

    def check(self, name: str, value, threshold, passed: bool):
        self.assertions.append({"name": name, "value": value, "threshold": threshold,
                                "pass": bool(passed)})
        log.info("%s %s: %s (threshold %s)", "PASS" if passed else "FAIL", name, value, threshold)


def run_bnf(r: Run):
    from .bnf import f2_slice
    from .measure import SphereGrid
    h2 = _invariant(r.cfg, "h2")
    lams = _numbers(r.cfg, "lambdas")
    if any(l <= 0 for l in lams):
        raise ConfigError("field 'lambdas': levels must be positive")
    n = r.cfg.get("samples", 101)
    method = r.cfg.get("method", "orbit")
    if method not in ("orbit", "grid"):
        raise ConfigError("field 'method': use 'orbit' or 'grid'")
    rows, worst = [], 0.0
    for lam in lams:
        grid = SphereGrid(lam, *r.cfg.get("grid", [256, 256])) if method == "grid" else None
        sl = f2_slice(h2, lam, method=method, grid=grid)
        s = np.linspace(0.0, lam, n)
        F = sl(s)
        if sl.law is not None:
            worst = max(worst, float(np.max(np.abs(sl.law.area(F) - 2 * np.pi * s))))
        r.check(f"monotone[lambda={lam:g}]", bool(np.all(np.diff(F) > 0)), "strict", np.all(np.diff(F) > 0))
        rows += [(lam, si, Fi, lam - si) for si, Fi in zip(s, F)]
    r.table("bnf.csv", ["lambda", "s", "F2", "t"], rows,
            {"lambda": "level H0 = s + t", "s": "partial energy H01", "t": "partial energy H02 = lambda - s",
             "F2": "canonical form F2(s, t) = A_lambda^{-1}(2 pi s), same units as the reduced symbol"},
            {"method": method, "normalization": "Phi(a_lambda) = 0"})
    if method == "orbit":
        tol = r.cfg["tolerances"]["quantile_identity"]
        r.check("quantile_identity", worst, tol, worst < tol)


def run_spectrum(r: Run):
    from .quantum import assemble_spectrum
    series = [_invariant(r.cfg, "h2")]
    if "h3" in r.cfg:
        series.append(_invariant(r.cfg, "h3"))
    ns = _numbers(r.cfg, "n", int)
    lam = float(r.cfg.get("lambda", 1.0))
    rows = []
    for n in ns:
        hbar = _hbar(r.cfg, n, lam)
        spec = assemble_spectrum(series, hbar, [n])
        rows += [(n, int(l), E, mu, hbar) for l, E, mu in zip(spec.ell, spec.eigenvalues, spec.shifts)]
    r.table("spectrum.csv", ["n", "l", "eigenvalue", "shift", "hbar"], rows,
            {"n": "block index (k1 + k2)", "l": "rank within block", "hbar": "Planck parameter",
             "eigenvalue": "hbar (n+1) + hbar^2 shift", "shift": "(eigenvalue - hbar (n+1)) / hbar^2"},
            {"orders": len(series), "lambda": lam})


def run_invert(r: Run):
    from .bnf import f2_slice
    from .inverse import recover_f2, shifts_from_spectrum
    from .quantum import assemble_spectrum
    h2 = _invariant(r.cfg, "h2")
    lam = float(r.cfg.get("lambda", 1.0))
    n = int(r.cfg["n"])
    hbar = _hbar(r.cfg, n, lam)
    spec = assemble_spectrum([h2], hbar, [n])
    sample = shifts_from_spectrum(spec, hbar, n, r.cfg.get("cluster_halfwidth"))
    rec = recover_f2(sample)
    classical = f2_slice(h2, sample.lam)
    q = np.linspace(0.0, 1.0, 101)
    s = q * sample.lam
    v, F = rec(s), classical(s)
    inner = (q >= 0.1 - 1e-12) & (q <= 0.9 + 1e-12)
    err = float(np.max(np.abs(v - F)[inner]))
    r.table("recovered.csv", ["s", "recovered", "classical"], zip(s, v, F),
            {"s": "partial energy H01 on s + t = hbar (n+1)", "recovered": "empirical shift quantile at s/lambda",
             "classical": "F2(s, lambda - s) from the area law"},
            {"n": n, "hbar": hbar, "lambda": sample.lam})
    tol = r.cfg["tolerances"]["sup_error"]
    r.check("sup_error[0.1,0.9]", err, tol, err < tol)


def run_recover_g(r: Run):
    from .inverse import recover_g
    from .quantum import synth_lattice
    G2 = compile_expression(r.cfg["G2"], ("s", "t"), "G2")
    G3 = compile_expression(r.cfg["G3"], ("s", "t"), "G3") if "G3" in r.cfg else None
    hbar, u0 = float(r.cfg["hbar"]), float(r.cfg["u0"])
    width = float(r.cfg.get("width", 0.0))
    offset = float(r.cfg.get("offset", 0.0))
    if hbar <= 0 or u0 <= 0:
        raise ConfigError("fields 'hbar' and 'u0' must be positive")
    centre = int(round(u0 / hbar - 2 * offset))
    span = int(math.ceil(width / hbar)) + 1
    window = r.cfg.get("window", [max(centre - span, 0), centre + span])
    spec = synth_lattice(G2, G3, hbar, tuple(window), offset=offset)
    rec = recover_g(spec, u0, width)
    q = np.linspace(0.0, 1.0, r.cfg.get("samples", 101))
    s = q * rec.lam
    sa = s if rec.orientation == "increasing" else rec.lam - s
    truth = G2(sa, rec.lam - sa) + hbar * (G3(sa, rec.lam - sa) if G3 else 0.0)
    v = rec(s)
    inner = (q >= 0.1 - 1e-12) & (q <= 0.9 + 1e-12)
    err = float(np.max(np.abs(v - truth)[inner]))
    r.table("recovered_g.csv", ["s", "recovered", "truth", "reflected"], zip(s, v, truth, rec.reflection(s)),
            {"s": "lattice coordinate hbar (k1 + offset)", "recovered": "shift quantile at s/u",
             "truth": "G2 + hbar G3 on the segment, reflected when the data decrease in s", "reflected": "recovered slice under s <-> t"},
            {"u": rec.lam, **rec.provenance, "orientation": rec.orientation})
    r.results["orientation"] = rec.orientation
    r.results["reflection_ambiguous"] = True
    tol = r.cfg["tolerances"]["sup_error"]
    r.check("sup_error[0.1,0.9]", err, tol, err < tol)


def run_szego(r: Run):
    from .bnf import morse_certify
    from .inverse import ks_distance, shifts_from_spectrum
    from .measure import AreaLaw
    from .quantum import assemble_spectrum
    from .reduced import reduce
    h2 = _invariant(r.cfg, "h2")
    lam = float(r.cfg.get("lambda", 1.0))
    ns = sorted(_numbers(r.cfg, "n", int))
    w = reduce(h2)
    cert = morse_certify(w, lam)
    if not cert.perfect:
        raise ConfigError(f"field 'h2': {cert.summary()}")
    law = AreaLaw.build(w, lam, critical_points=list(cert.critical_points))
    rows, ks = [], []
    for n in ns:
        hbar = _hbar(r.cfg, n, lam)
        sample = shifts_from_spectrum(assemble_spectrum([h2], hbar, [n]), hbar, n)
        ks.append(ks_distance(sample, law))
        rows.append((n, hbar, ks[-1]))
    r.table("szego.csv", ["n", "hbar", "ks"], rows,
            {"n": "block index", "hbar": "Planck parameter",
             "ks": "Kolmogorov-Smirnov distance to the normalized pushforward (dimensionless)"},
            {"lambda": lam})
    tol = r.cfg["tolerances"]
    ref = 200 if 200 in ns else ns[-1]
    k_ref = ks[ns.index(ref)]
    r.check(f"ks[n={ref}]", k_ref, tol["ks"], k_ref < tol["ks"])
    inversions = [i for i in range(1, len(ks)) if ks[i] > ks[i - 1]]
    ok = len(inversions) == 0 or (len(inversions) == 1 and
                                  ks[inversions[0]] <= (1 + tol["trend_slack"]) * ks[inversions[0] - 1])
    r.check("ks_decreasing", inversions, f"<=1 inversion within {tol['trend_slack']:g}", ok)


def run_sphere_r(r: Run):
    from .sphere import analyze, r_asymptotics_check, r_transform
    M = int(r.cfg["M"])
    if M < 10:
        raise ConfigError("field 'M': must be at least 10")
    rows = r_asymptotics_check(M)
    r.table("r_multiplier.csv", ["m", "degree", "exact", "asymptote", "relative_gap"],
            ([x["m"], x["degree"], x["exact"], x["asymptote"], x["relative_gap"]] for x in rows),
            {"m": "index with degree 2m+1", "degree": "harmonic degree", "exact": "closed-form multiplier",
             "asymptote": "(-1)^m sqrt(m) / pi^{3/2}", "relative_gap": "|exact - asymptote| / |exact|"})
    signs = all(x["sign_ok"] for x in rows)
    r.check("sign_alternation", signs, True, signs)
    gap = rows[-1]["relative_gap"]
    tol = r.cfg["tolerances"]["asymptote_gap"]
    r.check(f"asymptote_gap[m={M}]", gap, tol, gap < tol or M < 50)
    if "f" in r.cfg:
        f = compile_expression(r.cfg["f"], ("x", "y", "z"), "f")
        L = int(r.cfg.get("L", 8))
        e = analyze(lambda P: f(P[..., 0], P[..., 1], P[..., 2]), L)
        t = r_transform(e)
        crow = [(l, m, e.coefficient(l, m), t.coefficient(l, m))
                for l in range(L + 1) for m in range(-l, l + 1)]
        r.table("r_transform.csv", ["l", "m", "input", "output"], crow,
                {"l": "degree", "m": "order", "input": "real orthonormal coefficient of f",
                 "output": "coefficient after the multiplier"})


def run_sphere_mean(r: Run):
    from .sphere import analyze, mean_multiplier, spherical_mean
    f = compile_expression(r.cfg["f"], ("x", "y", "z"), "f")
    radii = _numbers(r.cfg, "r")
    if any(not 0 < x < math.pi for x in radii):
        raise ConfigError("field 'r': radii must lie in (0, pi)")
    L = int(r.cfg.get("L", 10))
    rng = np.random.default_rng(r.cfg["seed"])
    P = rng.standard_normal((r.cfg.get("points", 64), 3))
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    func = lambda X: f(X[..., 0], X[..., 1], X[..., 2])  # noqa: E731
    e = analyze(func, L)
    rows, spread, oracle = [], 0.0, 0.0
    for rad in radii:
        M = spherical_mean(func, rad, P, L)
        for n in range(L + 1):
            block = e.degree_block(n)
            if np.max(np.abs(block)) < 1e-12:
                continue
            from .sphere import HarmonicExpansion
            c = np.zeros((L + 1, 2 * L + 1))
            c[n, L - n:L + n + 1] = block
            hn = HarmonicExpansion(L, c)
            vals = hn.evaluate(P)
            ok = np.abs(vals) > 1e-3 * np.max(np.abs(vals))
            ratio = spherical_mean(hn, rad, P[ok], L) / vals[ok]
            spread = max(spread, float(np.ptp(ratio)))
            oracle = max(oracle, float(abs(np.mean(ratio) - mean_multiplier(n, rad))))
            rows.append((rad, n, float(np.mean(ratio)), mean_multiplier(n, rad)))
        r.results[f"mean_at_points[r={rad:g}]"] = M.tolist()[:4]
    r.table("sphere_mean.csv", ["r", "degree", "measured", "legendre"], rows,
            {"r": "geodesic radius (radians)", "degree": "harmonic degree",
             "measured": "M_r(f_n)/f_n averaged over sample points",
             "legendre": "P_n(cos r)"})
    tol = r.cfg["tolerances"]
    r.check("degree_spread", spread, tol["spread"], spread < tol["spread"])
    r.check("oracle_gap", oracle, tol["oracle"], oracle < tol["oracle"])


def run_landau(r: Run):
    from .sphere import landau_levels
    ks = _numbers(r.cfg, "k", int)
    J = int(r.cfg["J"])
    if any(k < 1 for k in ks) or J < 0:
        raise ConfigError("fields 'k' and 'J': need k >= 1 and J >= 0")
    rows = [(k, j, ev, float(ev), mult) for k in ks for j, (ev, mult) in enumerate(landau_levels(k, J))]
    r.table("landau.csv", ["k", "j", "eigenvalue", "eigenvalue_float", "multiplicity"], rows,
            {"k": "bundle degree", "j": "level index", "eigenvalue": "exact rational",
             "eigenvalue_float": "decimal value", "multiplicity": "k + 2j + 1"})


def run_verify_torus(r: Run):
    from .flow import torus_action_check
    h2 = _invariant(r.cfg, "h2")
    lo, hi = (_numbers(r.cfg, "lambda_window") if "lambda_window" in r.cfg else [1.0, 1.0])
    rep = torus_action_check(h2, (lo, hi), r.cfg.get("samples", 16), r.cfg.get("levels", 1),
                             float(r.cfg.get("tol", 1e-8)), seed=r.cfg["seed"])
    r.table("torus.csv", ["lambda", "alpha", "residual"], zip(rep.levels, rep.alpha, rep.residual),
            {"lambda": "level H0 of the sample", "alpha": "fitted Hopf angle mod 2 pi (radians)",
             "residual": "phase-space distance after rotating back"},
            {"steps": rep.result.steps, "nodes": rep.meta["nodes"]})
    tol = r.cfg["tolerances"]
    r.check("residual", rep.max_residual, tol["residual"], rep.max_residual < tol["residual"])
    sp = rep.alpha_spread()
    r.check("alpha_spread", sp, tol["alpha_spread"], sp < tol["alpha_spread"])
    r.results["alpha_table"] = rep.alpha_table()


def run_verify_magnetic(r: Run):
    from .flow import magnetic_orbit_check
    phis = _numbers(r.cfg, "phi0")
    if any(not 0.1 < p < 1.4 for p in phis):
        raise ConfigError("field 'phi0': values must lie in (0.1, 1.4)")
    reps = [magnetic_orbit_check(p, float(r.cfg.get("tol", 1e-10))) for p in phis]
    r.table("magnetic.csv", ["phi0", "lambda", "period", "predicted", "relative_error", "energy_drift"],
            ((m.phi0, m.lam, m.period, m.predicted, m.relative_error, m.energy_drift) for m in reps),
            {"phi0": "initial polar angle (radians)", "lambda": "energy tan^2(phi0)/2",
             "period": "measured first-return time", "predicted": "2 pi / sqrt(1 + 2 lambda)",
             "relative_error": "|period - predicted| / predicted", "energy_drift": "max |H - H(0)|"})
    tol = r.cfg["tolerances"]
    worst = max(m.relative_error for m in reps)
    r.check("period_rel", worst, tol["period_rel"], worst < tol["period_rel"])
    drift = max(m.energy_drift for m in reps)
    r.check("energy", drift, tol["energy"], drift < tol["energy"])


RUNNERS = {
    "bnf": run_bnf, "spectrum": run_spectrum, "invert": run_invert, "recover-g": run_recover_g,
    "szego": run_szego, "sphere-r": run_sphere_r, "sphere-mean": run_sphere_mean,
    "landau": run_landau, "verify-torus": run_verify_torus, "verify-magnetic": run_verify_magnetic,
}


def _versions() -> dict:
    import scipy
    import sympy
    from importlib.metadata import PackageNotFoundError, version
    try:
        pkg = version("artifact")
    except PackageNotFoundError:  # pragma: no cover - source checkout
        pkg = "unknown"
    from . import kernels
    return {"artifact": pkg, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "sympy": sympy.__version__, "kernels": kernels.BACKEND}


def run(sub: str, cfg: dict, out: Path | None = None, threads: int = 1) -> dict:
    """Validate, execute and write the manifest; returns the manifest dict."""
    from .io import canonical_hash, write_json
    from .measure import NotPerfectMorseError
    cfg = validate(sub, cfg)
    out = Path(out or cfg.get("out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    r = Run(sub, cfg, out)
    t0 = time.perf_counter()
    try:
        RUNNERS[sub](r)
    except NotPerfectMorseError as exc:
        raise ConfigError(f"{sub}: certification failed: {exc}") from None
    manifest = {
        "subcommand": sub, "config": cfg, "inputs_sha256": canonical_hash(cfg),
        "versions": _versions(), "tolerances": cfg["tolerances"], "threads": threads,
        "assertions": r.assertions, "outputs": r.outputs, "results": r.results,
        "pass": all(a["pass"] for a in r.assertions),
        "elapsed_seconds": time.perf_counter() - t0,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    write_json(out / "manifest.json", manifest)
    return manifest


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="oscbnf", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=sorted(RUNNERS))
    parser.add_argument("--config", required=True, help="JSON experiment description")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--threads", type=int, default=1, help="worker count recorded in the manifest")
    parser.add_argument("--verbose", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("oscbnf: --threads must be positive", file=sys.stderr)
        return 2
    try:
        cfg = _load_config(args.config)
        manifest = run(args.subcommand, cfg, Path(args.out) if args.out else None, args.threads)
    except ConfigError as exc:
        print(f"oscbnf: config error: {exc}", file=sys.stderr)
        return 2
    for a in manifest["assertions"]:
        print(f"{'PASS' if a['pass'] else 'FAIL'} {a['name']}: {a['value']} (threshold {a['threshold']})")
    return 0 if manifest["pass"] else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""``weakperf`` command line.

Every subcommand writes CSV rows (stdout or ``--csv``) headed by a
``# precision <mode>`` line, and optionally a JSON summary (``--summary``).
Exit codes: 0 all checks pass, 2 a check failed, 3 configuration error,
4 numeric-domain or construction error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
import time
from dataclasses import asdict
from typing import Optional

from mpmath import mp

from . import __version__, cantor, config, content, harmonic, kernels, perfectness, precision, verification
from .errors import ConfigError, ConstructionError, DomainError, ValidationError
from .gauges import h1, h2, parse_gauge
from .geometry import PlanarSetSample, write_point_cloud

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DOMAIN = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, int)) or (v is not None and type(v).__name__ == "mpf"):
        return precision.fmt(v)
    return "" if v is None else str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        return v if math.isfinite(v) else precision.fmt(v)
    if type(v).__name__ in ("mpf", "mpc"):
        return precision.fmt(v)
    return str(v)


class Report:
    """CSV rows plus a JSON summary for one command invocation."""

    def __init__(self, command: str, header: list, echo: dict):
        self.command = command
        self.header = list(header)
        self.rows: list = []
        self.echo = echo
        self.summary: dict = {}
        self.passed = True
        self.timings: dict = {}
        self.started = time.perf_counter()

    def add(self, *row):
        self.rows.append(row)

    def csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# precision {precision.mode()}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def summary_dict(self) -> dict:
        return {
            "command": self.command,
            "config": _jsonable(self.echo),
            "precision": precision.mode(),
            "passed": self.passed,
            "n_rows": len(self.rows),
            "summary": _jsonable(self.summary),
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            # timing lives only here and in timestamp so the rest compares byte for byte
            "wall_time": {"total": round(time.perf_counter() - self.started, 3), **self.timings},
        }


def _pick(args, section: dict, key: str, default=None):
    """Command-line value, else config value, else default."""
    v = getattr(args, key, None)
    if v is not None:
        return v
    return section.get(key, default)


def _floats_arg(s: str) -> list:
    try:
        return [float(x) for x in s.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {s!r}") from None


# -- generate ---------------------------------------------------------------------------

def _default_tree_gauge(S):
    fam = getattr(S, "family", None)
    if fam == "u1":
        return h1(S.params["alpha"], 0.5)
    if fam == "u2":
        return h2(S.params["beta"], 0.5)
    return h1(1.0, 0.5, cap=math.inf)


def _tree_for(S, sec: dict, args, depth: int):
    gtext = _pick(args, sec, "tree_gauge")
    h = parse_gauge(gtext) if gtext else _default_tree_gauge(S)
    radius = _pick(args, sec, "radius")
    if radius is None:
        radius = float(S.diameter) / 2
    return cantor.build_disc_tree(S, _pick(args, sec, "root", 0), radius, h,
                                  _pick(args, sec, "c_tilde", 0.25), depth)


def cmd_generate(args, cfg: dict) -> Report:
    sec = cfg.get("generate", {})
    set_text = _pick(args, sec, "set")
    prefix = _pick(args, sec, "out")
    if not set_text or not prefix:
        raise ConfigError("generate needs --set and --out")
    S = config.parse_set(set_text)
    files = []
    pts = f"{prefix}.points"
    if isinstance(S, cantor.CantorIntervalSet):
        write_point_cloud(_FloatlessSample(S), pts, S.sample_strings())
        with open(f"{prefix}.lengths", "w") as fh:
            fh.write("# level length log_inverse_length\n" + S.dump_lengths())
        files.append((f"{prefix}.lengths", S.depth + 1))
    else:
        write_point_cloud(S, pts)
    files.insert(0, (pts, S.n_points))
    tree_depth = _pick(args, sec, "tree_depth")
    summary = {"set": set_text, "n_points": S.n_points}
    if tree_depth:
        tree = _tree_for(S, sec, args, tree_depth)
        with open(f"{prefix}.tree", "w") as fh:
            fh.write("# depth index center_x center_y radius mass\n" + tree.dump())
        files.append((f"{prefix}.tree", 2 ** (tree.depth + 1) - 1))
        summary["tree"] = {"depth": tree.depth, "dps": tree.dps, "gauge": tree.h.literal(),
                           "deepest_radius": tree.radii[-1], **tree.check_invariants()}
    rep = Report("generate", ["file", "rows"], {"set": set_text, "out": prefix, "tree_depth": tree_depth})
    for f, n in files:
        rep.add(f, n)
    rep.summary = summary
    return rep


class _FloatlessSample:
    """Header data of a Cantor set for :func:`write_point_cloud` without a float sample."""

    def __init__(self, S):
        self.resolution = S.resolution
        self.diameter = S.diameter
        self.xy = ()


# -- test-perfectness -------------------------------------------------------------------

def cmd_test_perfectness(args, cfg: dict) -> Report:
    sec = cfg.get("test-perfectness", {})
    set_text = _pick(args, sec, "set")
    if not set_text:
        raise ConfigError("test-perfectness needs --set")
    gtext, fit = _pick(args, sec, "gauge"), _pick(args, sec, "fit")
    if bool(gtext) == bool(fit):
        raise ConfigError("give exactly one of --gauge and --fit")
    S = config.parse_set(set_text)
    r0 = _pick(args, sec, "r0")
    summary: dict = {}
    if fit:
        fr = perfectness.fit_condition_parameters(S, fit, r0)
        summary["fit"] = {"family": fr.family, "C": fr.C, "exponent": fr.exponent, "r0": fr.r0,
                          "n_gaps": fr.n_gaps, "vacuous": fr.vacuous, "note": fr.note}
        h, r0 = fr.gauge(), fr.r0
    else:
        h = parse_gauge(gtext)
        if r0 is None:
            r0 = float(S.diameter) / 2
    cert = perfectness.test_h_perfectness(S, h, r0)
    summary["certificate"] = cert.to_dict(with_probes=False)
    rep = Report("test-perfectness", ["center", "log_r", "log_inner", "margin", "hit", "robust"],
                 {"set": set_text, "gauge": gtext, "fit": fit, "r0": r0})
    for p in cert.probes:
        rep.add(p.center, p.log_r, p.log_inner, p.margin, p.hit, p.robust)
    rep.summary = summary
    rep.passed = cert.verdict
    return rep


# -- kernel-profile ---------------------------------------------------------------------

def cmd_kernel_profile(args, cfg: dict) -> Report:
    sec = cfg.get("kernel-profile", {})
    rs = _pick(args, sec, "r", list(verification.R_GRID))
    ts = _pick(args, sec, "t", list(verification.T_GRID))
    tol = _pick(args, sec, "tol", 1e-12)
    rep = Report("kernel-profile", ["r", "t", "abs_z", "series_value", "tail_bound", "upper_bound_21", "margin"],
                 {"r": rs, "t": ts, "tol": tol})
    worst = math.inf
    for r in rs:
        for t in ts:
            q = kernels.AnnulusKernelQuery.from_t(r, t)
            k = kernels.bergman_annulus(q, tol)
            b = kernels.bergman_upper_bound_21(r, t)
            worst = min(worst, b - k.value)
            rep.add(r, t, q.abs_z, k.value, k.tail_bound, b, b - k.value)
    rep.summary = {"worst_margin": worst}
    rep.passed = worst >= -1e-10
    return rep


# -- poincare-profile -------------------------------------------------------------------

def _radial_grid(domain, n: int) -> list:
    if isinstance(domain, kernels.PuncturedDisk):
        return [math.exp(-k) for k in range(2, n + 2)]
    lo, hi = kernels.radial_bounds(domain)
    return [lo * (hi / lo) ** ((i + 1) / (n + 1)) for i in range(n)]


def cmd_poincare_profile(args, cfg: dict) -> Report:
    sec = cfg.get("poincare-profile", {})
    dtext = _pick(args, sec, "domain", "punctured")
    n = _pick(args, sec, "n", 19)
    c_probe = _pick(args, sec, "c_probe", 1.0)
    domain = config.parse_domain(dtext)
    c = domain.center if isinstance(domain, kernels.RoundAnnulus) else None
    zs = [(s + (c.x if c else 0.0), c.y if c else 0.0) for s in _radial_grid(domain, n)]
    band = _pick(args, sec, "band")
    bp = kernels.check_bp_estimate(zs, domain, c_probe, tuple(band) if band else kernels.BP_BAND)
    rep = Report("poincare-profile", ["abs_z", "rho", "delta", "beta", "product", "ratio"],
                 {"domain": dtext, "n": n, "c_probe": c_probe})
    for row in bp.rows:
        rep.add(*row)
    rep.summary = {"ratio_min": bp.ratio_min, "ratio_max": bp.ratio_max, "product_min": bp.product_min,
                   "product_max": bp.product_max, "band": list(bp.band), "within_band": bp.within_band}
    # the band is a check only when requested
    rep.passed = bp.within_band if band else True
    return rep


# -- harmonic-bound ---------------------------------------------------------------------

def cmd_harmonic_bound(args, cfg: dict) -> Report:
    sec = cfg.get("harmonic-bound", {})
    method = _pick(args, sec, "method", "chen")
    r = _pick(args, sec, "r", 0.01)
    kappa = _pick(args, sec, "kappa", 0.05)
    c_kappa = _pick(args, sec, "c_kappa", 1.0)
    a = tuple(args.a) if args.a else (0.0, 0.0)
    zd = _pick(args, sec, "z_dist")
    if zd is None:
        top = kappa * r / 2 if method == "chen" else r
        zd = [top * 10.0 ** -k for k in range(1, 9)]
    params: dict = {}
    if method == "chen":
        prof = _pick(args, sec, "profile", "power:C=1,alpha=1.5")
        params = {"cap": config.parse_profile(prof), "kappa": kappa, "C_kappa": c_kappa}
        if _pick(args, sec, "upper") is not None:
            params["upper"] = _pick(args, sec, "upper")
    elif method in ("lhmd1", "lhmd2"):
        key = "gamma" if method == "lhmd1" else "eta"
        expo, c3 = _pick(args, sec, key), _pick(args, sec, "c3")
        if expo is None or c3 is None:
            default = "power:C=1,alpha=1.5" if method == "lhmd1" else "log:C=1,beta=1"
            cap = config.parse_profile(_pick(args, sec, "profile", default))
            r1 = _pick(args, sec, "r1", r)
            make = harmonic.lhmd1_constants if method == "lhmd1" else harmonic.lhmd2_constants
            const = make(cap, kappa, r1, c_kappa)
            expo = const.exponent if expo is None else expo
            c3 = const.C3 if c3 is None else c3
        params = {key: expo, "C3": c3}
    elif method == "annulus":
        inner = _pick(args, sec, "inner")
        if inner is None:
            raise ConfigError("annulus method needs --inner")
        params = {"inner": inner}
    else:
        raise ConfigError(f"unknown method {method!r}")
    reports = [harmonic.bound_report(method, z, r, a, **params) for z in zd]
    keys = sorted(reports[0].parameters) if reports else []
    rep = Report("harmonic-bound", ["method", "a_x", "a_y", "r", "z_dist", "bound", *keys, "clamped"],
                 {"method": method, "r": r, "kappa": kappa, "a": list(a), "z_dist": zd})
    for br in reports:
        rep.add(br.method, br.a[0], br.a[1], br.r, br.z_dist, br.bound_value,
                *[br.parameters[k] for k in keys], br.clamped)
    rep.summary = {"parameters": reports[0].parameters if reports else {},
                   "clamped": sum(br.clamped for br in reports),
                   "max_bound": max((br.bound_value for br in reports), default=None)}
    return rep


# -- content ----------------------------------------------------------------------------

def cmd_content(args, cfg: dict) -> Report:
    sec = cfg.get("content", {})
    set_text = _pick(args, sec, "set", "u1:l0=0.1,alpha=2,depth=11")
    depth = _pick(args, sec, "depth", 10)
    trials = _pick(args, sec, "trials", 1000)
    seed = _pick(args, sec, "seed", content.DEFAULT_SEED)
    factor = _pick(args, sec, "factor", content.DEFAULT_FACTOR)
    gtext = _pick(args, sec, "gauge")
    S = config.parse_set(set_text)
    tree = _tree_for(S, sec, args, depth)
    family = "U2" if tree.h.kind.value == "h2" else "U1"
    m = cantor.MassDistribution(tree)
    if gtext:
        g = parse_gauge(gtext)
        source = {"gauge": "given"}
    elif family == "U1":
        g = content.u1_gauge_for_tree(tree)
        source = {"alpha": tree.h.exponent, "gamma": g.exponent}
    else:
        g, C1 = content.u2_gauge_for_tree(tree)
        source = {"beta": tree.h.exponent, "C1": C1, "eta": g.exponent}
    val = content.validate_disc_mass_inequality(m, g, factor, trials, seed)
    up = content.content_upper(tree, g, _pick(args, sec, "budget", 10_000))
    rep = Report("content", ["quantity", "value", "witness"],
                 {"set": set_text, "gauge": g.literal(), "depth": depth, "trials": trials, "seed": seed,
                  "factor": factor})
    rep.add("upper", up.value, up.cover.label)
    rep.add("minimal_factor", val.worst_ratio, f"{trials} trials")
    rep.add("violations", len(val.violations), f"seed {seed}")
    rep.summary = {"gauge": g.literal(), "convention": g.convention, "exponent_source": source,
                   "validation_passed": val.passed, "upper_caveat": up.caveat}
    if val.passed:
        lower = content.mass_lower_bound(m, g, tree.radii[0], factor, val)
        rep.add("lower", lower, f"g(2r)/{precision.fmt(factor)}")
        rep.summary["consistent"] = bool(lower <= up.value * (1 + 1e-12))
        rep.passed = rep.summary["consistent"]
    else:
        rep.passed = False
        rep.summary["first_violation"] = val.violations[0] if val.violations else None
    return rep


# -- verify-theorems --------------------------------------------------------------------

def cmd_verify_theorems(args, cfg: dict) -> Report:
    sec = cfg.get("verify-theorems", {})
    text = _pick(args, sec, "checks", "all")
    if text.strip().lower() == "all":
        ids = list(verification.CHECKS)
    else:
        ids = [s.strip().upper() for s in text.split(",") if s.strip()]
        unknown = [i for i in ids if i not in verification.CHECKS]
        if unknown:
            raise ConfigError(f"unknown check id(s) {unknown}; known: {sorted(verification.CHECKS)}")
    vc = verification.VerifyConfig()
    for k in asdict(vc):
        v = _pick(args, sec, k)
        if v is not None:
            setattr(vc, k, type(getattr(vc, k))(v))
    results = verification.run_checks(sorted(ids), vc)
    rep = Report("verify-theorems", ["check", "title", "status", "metric", "value"],
                 {"checks": sorted(ids), **asdict(vc)})
    for res in results:
        status = "pass" if res.passed else "FAIL"
        rep.add(res.check_id, res.title, status, "passed", res.passed)
        for k, v in res.metrics.items():
            if isinstance(v, (list, tuple)):
                v = " ".join(_cell(x) for x in v)
            rep.add(res.check_id, res.title, status, k, v)
    rep.timings = {res.check_id: round(res.seconds, 3) for res in results}
    rep.summary = {"checks": {res.check_id: {"passed": res.passed, "metrics": res.metrics} for res in results},
                   "n_failed": sum(not res.passed for res in results)}
    rep.passed = all(res.passed for res in results)
    return rep


# -- parser -----------------------------------------------------------------------------

COMMANDS = {
    "generate": cmd_generate,
    "test-perfectness": cmd_test_perfectness,
    "kernel-profile": cmd_kernel_profile,
    "poincare-profile": cmd_poincare_profile,
    "harmonic-bound": cmd_harmonic_bound,
    "content": cmd_content,
    "verify-theorems": cmd_verify_theorems,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="weakperf", description="Weakly uniformly perfect sets: constructions and numerical checks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="experiment config file (key = value under [sections])")
    common.add_argument("--csv", help="write CSV rows here instead of stdout")
    common.add_argument("--summary", help="write the JSON summary to this path")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="write a set sample, its lengths and a disc tree")
    g.add_argument("--set", help="u1:l0=..,alpha=..,depth=.. | u2:.. | segment:n=.. | circle:n=..")
    g.add_argument("--out", help="output prefix for PREFIX.points, PREFIX.lengths, PREFIX.tree")
    g.add_argument("--tree-depth", dest="tree_depth", type=int)
    g.add_argument("--tree-gauge", dest="tree_gauge", help="gauge for the disc tree, e.g. h1:alpha=2,C=0.5")
    g.add_argument("--c-tilde", dest="c_tilde", type=float)
    g.add_argument("--radius", type=float, help="root disc radius (default: half the diameter)")
    g.add_argument("--root", type=int, help="sample index of the root centre")

    t = sub.add_parser("test-perfectness", parents=[common], help="probe annuli for h-uniform perfectness")
    t.add_argument("--set")
    t.add_argument("--gauge", help="h1:alpha=..,C=.. or h2:beta=..,C=..")
    t.add_argument("--fit", choices=["U1", "U2", "u1", "u2"], help="fit the family's constants first")
    t.add_argument("--r0", type=float)

    k = sub.add_parser("kernel-profile", parents=[common], help="annulus Bergman kernel against its upper bound")
    k.add_argument("--r", type=_floats_arg, help="inner radii, comma separated")
    k.add_argument("--t", type=_floats_arg, help="|z| as a fraction t: |z| = r^t")
    k.add_argument("--tol", type=float)

    q = sub.add_parser("poincare-profile", parents=[common], help="hyperbolic density and the beta comparison")
    q.add_argument("--domain", help="punctured | symmetric:R=.. | centered:r=..,m=.. | round:a=..,b=..")
    q.add_argument("--n", type=int)
    q.add_argument("--c-probe", dest="c_probe", type=float)
    q.add_argument("--band", type=float, nargs=2, metavar=("LO", "HI"),
                   help="fail (exit 2) when a ratio leaves [LO, HI]")

    h = sub.add_parser("harmonic-bound", parents=[common], help="harmonic measure decay bounds")
    h.add_argument("--method", choices=["chen", "lhmd1", "lhmd2", "annulus"])
    h.add_argument("--r", type=float)
    h.add_argument("--kappa", type=float)
    h.add_argument("--z-dist", dest="z_dist", type=_floats_arg)
    h.add_argument("--a", type=float, nargs=2, metavar=("X", "Y"), help="centre of the disc (reported only)")
    h.add_argument("--profile", help="capacity profile: power:C=..,alpha=.. or log:C=..,beta=..")
    h.add_argument("--c-kappa", dest="c_kappa", type=float)
    h.add_argument("--gamma", type=float)
    h.add_argument("--eta", type=float)
    h.add_argument("--c3", type=float)
    h.add_argument("--r1", type=float)
    h.add_argument("--inner", type=float)
    h.add_argument("--upper", type=float, help="upper integration limit (default kappa r / 2)")

    c = sub.add_parser("content", parents=[common], help="gauge content bounds on a disc tree")
    c.add_argument("--gauge")
    c.add_argument("--set")
    c.add_argument("--depth", type=int)
    c.add_argument("--trials", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--factor", type=float)
    c.add_argument("--tree-gauge", dest="tree_gauge")
    c.add_argument("--c-tilde", dest="c_tilde", type=float)
    c.add_argument("--radius", type=float)
    c.add_argument("--budget", type=int)

    v = sub.add_parser("verify-theorems", parents=[common], help="run the self-check suite")
    v.add_argument("--checks", help="'all' or comma separated ids such as C01,C08")
    v.add_argument("--seed", type=int)
    v.add_argument("--trials", type=int)
    v.add_argument("--factor", type=float)
    v.add_argument("--gamma-scale", dest="gamma_scale", type=float)
    return p


def _validate_args(args):
    """Range-check command-line values through the config schema."""
    section = config.SCHEMA.get(args.command, {})
    for key in section:
        v = getattr(args, key, None)
        if v is None:
            continue
        raw = ",".join(map(repr, v)) if isinstance(v, list) else str(v)
        config.parse_value(args.command, key, raw)


def run(argv: Optional[list] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        precision.mode()
        args = build_parser().parse_args(argv)
        cfg = config.load(args.config) if args.config else {}
        _validate_args(args)
        with mp.workprec(precision.formula_prec()):
            rep = COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"weakperf: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print(f"weakperf: validation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ConstructionError as exc:
        extra = f" (level {exc.level})" if exc.level is not None else ""
        print(f"weakperf: construction error{extra}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except DomainError as exc:
        print(f"weakperf: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    text = rep.csv_text()
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    if args.summary:
        with open(args.summary, "w") as fh:
            json.dump(rep.summary_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK if rep.passed else EXIT_FAIL


def main(argv: Optional[list] = None) -> None:
    try:
        code = run(argv)
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head)
        sys.stdout = None
        code = EXIT_OK
    sys.exit(code)

"""Self-checks run by ``weakperf verify-theorems``.

Each check returns a :class:`CheckResult` with per-row data and a verdict.
Checks run one after another: mpmath's working precision is process-global.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from mpmath import mp

from . import cantor, content, harmonic, kernels, perfectness, precision
from .gauges import g1, g2, h1
from .geometry import PlanarSetSample


@dataclass
class VerifyConfig:
    seed: int = 20240601
    trials: int = 1000
    factor: float = 18.0
    gamma_scale: float = 1.0     # != 1 turns the mass check into a negative control
    kernel_tol: float = 1e-12
    tree_depth: int = 10
    cantor_depth: int = 11
    u2_l0: float = 1e-30
    u2_depth: int = 8


@dataclass
class CheckResult:
    check_id: str
    title: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    seconds: float = 0.0


# -- shared fixtures ------------------------------------------------------------------

@lru_cache(maxsize=4)
def u1_tree(cantor_depth: int = 11, tree_depth: int = 10):
    """u1 set (l0 = 0.1, alpha = 2) and its disc tree rooted at 0 with r = 0.05."""
    c = cantor.CantorIntervalSet.u1(0.1, 2, cantor_depth)
    t = cantor.build_disc_tree(c, 0, 0.05, h1(2, 0.5), 0.25, tree_depth)
    return c, t


# -- kernels ------------------------------------------------------------------------------

R_GRID = (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
T_GRID = (0.1, 0.25, 0.5)


def check_kernel_bound(cfg: VerifyConfig) -> CheckResult:
    rows, worst, ident = [], math.inf, 0.0
    for r in R_GRID:
        for t in T_GRID:
            q = kernels.AnnulusKernelQuery.from_t(r, t)
            k = kernels.bergman_annulus(q, cfg.kernel_tol)
            b = kernels.bergman_upper_bound_21(r, t)
            worst = min(worst, b - k.value)
            rows.append({"r": r, "t": t, "abs_z": q.abs_z, "series_value": k.value,
                         "tail_bound": k.tail_bound, "upper_bound_21": b, "margin": b - k.value})
            if t == 0.5:
                ref = 1 / (2 * math.pi * r * math.log(1 / r)) + 32 / (3 * math.pi)
                ident = max(ident, abs(b - ref))
    # transport: kernel of {0.25 r < |z - a| < r} at distance 0.05 vs the unit model
    a, rr = (0.3, -0.2), 0.1
    direct = kernels.bergman_general_annulus(0.025, rr, (a[0] + 0.05, a[1]), center=a).value
    model = kernels.bergman_transport(kernels.bergman_annulus(kernels.AnnulusKernelQuery(0.25, (0.5, 0))).value, 1 / rr)
    transport_err = abs(direct - model) / model
    ok = worst >= -1e-10 and ident <= 1e-12 and transport_err < 1e-12
    return CheckResult("C01", "Bergman bound dominance", ok,
                       {"worst_margin": worst, "t_half_identity_error": ident, "transport_rel_error": transport_err},
                       rows)


def bergman_basis_sum(r: float, abs_z: float, n_max: int = 2000) -> float:
    """``sum_n |z|^(2n) / ||z^n||^2`` over ``|n| <= n_max`` (monomial orthogonal basis)."""
    terms = []
    L2 = 2 * math.log(abs_z)
    for n in range(-n_max, n_max + 1):
        if n == -1:
            terms.append(math.exp(L2 * n) / (2 * math.pi * math.log(1 / r)))
            continue
        # ||z^n||^2 = pi (1 - r^(2n+2)) / (n + 1)
        e = 2 * n + 2
        y = e * math.log(r)
        log_gap = y + math.log(-math.expm1(-y)) if y > 0 else math.log(-math.expm1(y))
        log_norm = math.log(math.pi) + log_gap - math.log(abs(n + 1))
        lt = L2 * n - log_norm
        terms.append(math.exp(lt) if lt > -745 else 0.0)
    return math.fsum(terms)


def check_kernel_series(cfg: VerifyConfig) -> CheckResult:
    rng = np.random.default_rng(cfg.seed)
    rows, worst = [], 0.0
    ok = True
    for _ in range(50):
        r = float(rng.uniform(0.01, 0.5))
        t = float(rng.uniform(0.1, 0.9))
        q = kernels.AnnulusKernelQuery.from_t(r, t, float(rng.uniform(0, 2 * math.pi)))
        k = kernels.bergman_annulus(q, cfg.kernel_tol)
        ref = bergman_basis_sum(r, q.abs_z)
        err = abs(k.value - ref)
        allowed = max(k.tail_bound, 1e-10)
        ok &= err <= allowed
        worst = max(worst, err / allowed)
        rows.append({"r": r, "t": t, "value": k.value, "reference": ref, "error": err, "allowed": allowed})
    return CheckResult("C02", "Bergman series vs long summation", bool(ok), {"worst_error_over_allowed": worst}, rows)


def check_poincare(cfg: VerifyConfig) -> CheckResult:
    R = math.e ** 1.5
    m = math.log(R)
    rows, worst = [], 0.0
    for s in np.exp(np.linspace(-m, m, 22)[1:-1]):
        z = (float(s), 0.0)
        a = kernels.poincare_density(kernels.PoincareQuery(kernels.SymmetricAnnulus(R), z))
        b = kernels.poincare_density(kernels.PoincareQuery(kernels.RoundAnnulus(1 / R, R), z))
        # on the centre circle of the rescaled copy the closed form is pi/(2 r m)
        c = kernels.poincare_density(kernels.PoincareQuery(kernels.CenteredAnnulus(float(s), m), z))
        d = kernels.poincare_density(kernels.PoincareQuery(kernels.SymmetricAnnulus(R), (1.0, 0.0))) / s
        err = max(abs(a - b) / a, abs(c - d) / c)
        worst = max(worst, err)
        rows.append({"abs_z": float(s), "cos_form": a, "sin_form": b, "rel_error": err})
    pd_err = 0.0
    for k in range(1, 21):
        s = math.exp(-k)
        rho = kernels.poincare_density(kernels.PoincareQuery(kernels.PuncturedDisk(), (s, 0.0)))
        pd_err = max(pd_err, abs(rho * s * math.log(1 / s) - 1))
    ok = worst < 1e-12 and pd_err < 1e-14
    return CheckResult("C03", "Poincare formula consistency", ok,
                       {"annulus_rel_error": worst, "punctured_identity_error": pd_err}, rows)


BP_RATIO_MIN = 2 / 3        # k = 2
BP_RATIO_MAX = 20 / 21      # k = 20


def check_bp_band(cfg: VerifyConfig) -> CheckResult:
    zs = [(math.exp(-k), 0.0) for k in range(2, 21)]
    rep = kernels.check_bp_estimate(zs, kernels.PuncturedDisk(), 1.0)
    frozen = abs(rep.ratio_min - BP_RATIO_MIN) < 1e-12 and abs(rep.ratio_max - BP_RATIO_MAX) < 1e-12
    rows = [{"abs_z": r[0], "rho": r[1], "delta": r[2], "beta": r[3], "product": r[4], "ratio": r[5]}
            for r in rep.rows]
    return CheckResult("C04", "Beardon-Pommerenke band", rep.within_band and frozen,
                       {"ratio_min": rep.ratio_min, "ratio_max": rep.ratio_max, "product_min": rep.product_min,
                        "product_max": rep.product_max, "band": list(rep.band)}, rows)


# -- harmonic ---------------------------------------------------------------------------

def check_harmonic_phi(cfg: VerifyConfig) -> CheckResult:
    rows, worst = [], 0.0
    for inner, outer in ((0.1, 1.0), (0.5, 2.0), (1e-3, 0.1)):
        s, u = harmonic.radial_laplace_fd(inner, outer, 4001)
        phi = np.array([harmonic.annulus_comparison_phi(inner, outer, v) for v in s[1:-1]])
        err = float(np.abs(phi - u[1:-1]).max())
        worst = max(worst, err)
        rows.append({"inner": inner, "outer": outer, "max_fd_error": err})
    e1 = abs(harmonic.prop42_phi_u1("1e-12", 2, 3) - 0.5)
    e2 = abs(harmonic.prop42_phi_u2("1e-12", 1, 3) - 2 / 3)
    ok = worst < 1e-4 and e1 < 1e-6 and e2 < 1e-6
    return CheckResult("C05", "Annulus harmonic measure", ok,
                       {"fd_error": worst, "prop42_u1_error": e1, "prop42_u2_error": e2}, rows)


def check_chen(cfg: VerifyConfig) -> CheckResult:
    rng = np.random.default_rng(cfg.seed + 6)
    rows, worst, chain_ok = [], 0.0, True
    for _ in range(20):
        alpha = float(rng.uniform(1.2, 1.8))
        C = float(rng.uniform(0.1, 1.0))
        kappa = float(rng.uniform(0.01, 0.06))
        r = float(rng.uniform(0.01, 0.5))
        top = kappa * r / 2
        z = top * 10 ** (-float(rng.uniform(0.5, 8)))
        cap = harmonic.CapacityProfile.power_law(C, alpha)
        quad = harmonic.chen_integral(z, top, kappa, cap)
        exact = harmonic.chen_power_closed_form(z, top, kappa, C, alpha)
        rel = abs(quad - exact) / abs(exact)
        worst = max(worst, rel)
        consts = harmonic.lhmd1_constants(cap, kappa, r1=min(0.9, 1.5 * r))
        chen = harmonic.chen_upper_bound(z, r, kappa, cap)
        l1 = harmonic.lhmd1_bound(z, r, consts.exponent, consts.C3)
        chain_ok &= chen <= l1 * (1 + 1e-12)
        rows.append({"alpha": alpha, "C": C, "kappa": kappa, "r": r, "z_dist": z, "quadrature": quad,
                     "closed_form": exact, "rel_error": rel, "chen": chen, "lhmd1": l1})
    return CheckResult("C06", "Chen integral vs antiderivative", worst < 1e-6 and bool(chain_ok),
                       {"worst_rel_error": worst, "chen_le_lhmd1": bool(chain_ok)}, rows)


def check_log_ratio_limit(cfg: VerifyConfig) -> CheckResult:
    rows, ok = [], True
    for beta in (1, 3, 10):
        vals = [abs(harmonic.prop41_I_of_r(mp.mpf(10) ** -k, beta) + beta) for k in (8, 16, 32, 64)]
        dec = all(b < a for a, b in zip(vals, vals[1:]))
        rel = float(vals[-1] / beta)
        ok &= dec and rel < 0.25
        rows.append({"beta": beta, **{f"gap_1e-{k}": float(v) for k, v in zip((8, 16, 32, 64), vals)},
                     "relative_at_1e-64": rel, "decreasing": dec})
    return CheckResult("C07", "I(r) -> -beta", bool(ok), {}, rows)


# -- mass distribution and content ---------------------------------------------------------

def check_mass(cfg: VerifyConfig) -> CheckResult:
    c, tree = u1_tree(cfg.cantor_depth, cfg.tree_depth)
    m = cantor.MassDistribution(tree)
    additive = m.check_additivity()
    g = content.u1_gauge_for_tree(tree)
    g_used = g.with_(exponent=g.exponent * cfg.gamma_scale)
    val = content.validate_disc_mass_inequality(m, g_used, cfg.factor, cfg.trials, cfg.seed)
    metrics = {"root_mass": m.mass(0), "additive": additive, "gamma": g_used.exponent,
               "violations": len(val.violations), "minimal_factor": val.worst_ratio,
               "negative_control_config": cfg.gamma_scale != 1}
    ok = additive and val.passed
    if cfg.gamma_scale == 1:
        neg = content.validate_disc_mass_inequality(m, g.with_(exponent=2 * g.exponent), cfg.factor,
                                                    cfg.trials, cfg.seed)
        metrics["negative_control_violations"] = len(neg.violations)
        ok &= len(neg.violations) >= 1
    rows = val.violations[:20]
    return CheckResult("C08", "Disc-mass inequality", bool(ok), metrics, rows)


def check_content_forward(cfg: VerifyConfig) -> CheckResult:
    c, tree = u1_tree(cfg.cantor_depth, cfg.tree_depth)
    est = content.theorem14_forward_certificate(tree, "U1", cfg.factor, cfg.trials, cfg.seed)
    cc = cantor.CantorIntervalSet.u1(0.1, 2, 10)
    vanish = cantor.content_upper_bound_levels(cc, 0.01, 10)
    ok = est.consistent and vanish < 1e-6
    return CheckResult("C09", "Content lower vs upper", bool(ok),
                       {"lower": precision.fmt(est.lower), "upper": precision.fmt(est.upper),
                        "witness": est.witness_cover.label, "appendix_bound_j10": float(vanish),
                        **{k: v for k, v in est.exponent_source.items()}})


def check_converse(cfg: VerifyConfig) -> CheckResult:
    u1 = content.theorem14_converse_probe(g1(1.0, C=1.0), 0.9, "U1")
    u2 = content.theorem14_converse_probe(g2(1.0), 0.5, "U2")
    ok = u1.exponent == 2 and mp.isfinite(u1.r1) and u2.exponent > 0
    return CheckResult("C10", "Converse exponent scan", bool(ok),
                       {"u1_alpha": u1.exponent, "u1_r1": precision.fmt(u1.r1), "u1_limit": u1.limit,
                        "u2_beta": u2.exponent, "u2_r1": precision.fmt(u2.r1), "u2_limit": u2.limit})


def check_perfectness(cfg: VerifyConfig) -> CheckResult:
    s1 = cantor.CantorIntervalSet.u1(0.1, 2, 8)
    f1 = perfectness.fit_condition_parameters(s1, "U1")
    s2 = cantor.CantorIntervalSet.u2(cfg.u2_l0, 3, cfg.u2_depth)
    f2 = perfectness.fit_condition_parameters(s2, "U2")
    seg = PlanarSetSample.segment((0, 0), (1, 0), 200)
    cert = perfectness.test_h_perfectness(seg, h1(1, 0.5), 0.45)
    rt1 = perfectness.test_h_perfectness(s1, f1.gauge(), f1.r0).verdict
    rt2 = perfectness.test_h_perfectness(s2, f2.gauge(), f2.r0).verdict
    ok = 1.8 <= f1.exponent <= 2.2 and 2.5 <= f2.exponent <= 3.5 and cert.verdict and rt1 and rt2
    return CheckResult("C11", "Perfectness fits", bool(ok),
                       {"u1_alpha_hat": f1.exponent, "u1_C": f1.C, "u2_beta_hat": f2.exponent, "u2_C": f2.C,
                        "segment_pass": cert.verdict, "segment_worst_margin": cert.worst_margin,
                        "u1_roundtrip": rt1, "u2_roundtrip": rt2})


CHECKS: dict[str, Callable[[VerifyConfig], CheckResult]] = {
    "C01": check_kernel_bound,
    "C02": check_kernel_series,
    "C03": check_poincare,
    "C04": check_bp_band,
    "C05": check_harmonic_phi,
    "C06": check_chen,
    "C07": check_log_ratio_limit,
    "C08": check_mass,
    "C09": check_content_forward,
    "C10": check_converse,
    "C11": check_perfectness,
}


def run_checks(ids, cfg: VerifyConfig) -> list:
    out = []
    for cid in ids:
        t0 = time.perf_counter()
        res = CHECKS[cid](cfg)
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out

"""Gauge Hausdorff content: cover upper bounds, mass-distribution lower bounds.

Covers always record diameters; a disc of radius ``rho`` contributes
``g(2 rho)``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from mpmath import mp
from scipy.cluster import hierarchy

from . import precision
from .cantor import CantorIntervalSet, DiscTree, MassDistribution, mass_of_disc
from .errors import DomainError, ValidationError
from .gauges import GaugeFunction, Kind, evaluate, g1, g2
from .geometry import Disc, PlanarSetSample, Point

DEFAULT_FACTOR = 18.0
DEFAULT_SEED = 20240601


# -- covers ----------------------------------------------------------------------------

@dataclass
class Cover:
    """Disc cover summarised by ``(diameter, multiplicity)`` groups.

    ``build`` materialises the actual discs on demand (deep trees hold
    thousands of mpf discs, most callers only need the value).
    """

    groups: list
    covered: object = field(repr=False, default=None)
    label: str = ""
    build: Optional[Callable[[], list]] = field(repr=False, default=None)

    @property
    def n_discs(self) -> int:
        return sum(m for _, m in self.groups)

    def value(self, g: GaugeFunction):
        with precision.formula():
            return mp.fsum(m * evaluate(g, d) for d, m in self.groups)

    def discs(self) -> list:
        if self.build is None:
            raise DomainError("this cover was built without disc geometry")
        return self.build()


def _cantor_level_cover(c: CantorIntervalSet, j: int) -> Cover:
    def build():
        return [Disc(Point(left + length / 2, 0), length / 2) for left, length in c.intervals(j)]
    return Cover([(c.lengths[j], 1 << j)], c, f"level {j}", build)


def _tree_level_cover(t: DiscTree, k: int) -> Cover:
    def build():
        return [t.disc(k, i) for i in range(1 << k)]
    with precision.at_least(t.dps):
        d = 2 * t.radii[k]
    return Cover([(d, 1 << k)], t, f"tree level {k}", build)


def _single_disc_cover(S) -> Cover:
    if isinstance(S, DiscTree):
        return _tree_level_cover(S, 0)
    if isinstance(S, CantorIntervalSet):
        return _cantor_level_cover(S, 0)
    xy = S.xy
    center = (xy.max(axis=0) + xy.min(axis=0)) / 2
    rad = float(np.hypot(xy[:, 0] - center[0], xy[:, 1] - center[1]).max()) + S.resolution
    return Cover([(mp.mpf(2 * rad), 1)], S, "single disc",
                 lambda: [Disc(Point(float(center[0]), float(center[1])), rad)])


def _linkage_covers(S: PlanarSetSample):
    """Complete-linkage cuts from coarse to fine; each cluster gets its bounding-box disc."""
    xy = S.xy
    n = len(xy)
    if n < 2:
        return
    Z = hierarchy.linkage(xy, method="complete")
    for k in range(2, n + 1):
        labels = hierarchy.fcluster(Z, t=k, criterion="maxclust")
        discs = []
        for lab in np.unique(labels):
            pts = xy[labels == lab]
            c = (pts.max(axis=0) + pts.min(axis=0)) / 2
            rad = float(np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]).max()) + S.resolution
            discs.append(Disc(Point(float(c[0]), float(c[1])), rad))
        groups = [(mp.mpf(2 * d.radius), 1) for d in discs]
        yield Cover(groups, S, f"linkage {len(discs)} clusters", lambda discs=discs: discs)


def candidate_covers(S):
    """Deterministic candidate order: single disc, then level covers / linkage cuts."""
    yield _single_disc_cover(S)
    if isinstance(S, CantorIntervalSet):
        for j in range(1, S.depth + 1):
            yield _cantor_level_cover(S, j)
    elif isinstance(S, DiscTree):
        for k in range(1, S.depth + 1):
            yield _tree_level_cover(S, k)
    else:
        yield from _linkage_covers(S)


@dataclass
class UpperResult:
    value: object
    cover: Cover
    examined: int
    caveat: str = ""

    def __iter__(self):
        return iter((self.value, self.cover))


def content_upper(S, g: GaugeFunction, budget: int = 10_000) -> UpperResult:
    """Best ``sum g(diam)`` over the first ``budget`` candidate covers."""
    if not (isinstance(budget, int) and budget >= 1):
        raise DomainError("budget must be a positive integer")
    if isinstance(S, PlanarSetSample) and len(np.unique(S.xy, axis=0)) == 1:
        return UpperResult(mp.mpf(0), Cover([], S, "empty (single point)"), 0,
                           "single point: infimum over vanishing discs is 0, not attained")
    best = None
    examined = 0
    for cover in candidate_covers(S):
        if examined >= budget:
            break
        examined += 1
        v = cover.value(g)
        if best is None or v < best[0]:
            best = (v, cover)
    return UpperResult(best[0], best[1], examined)


def content_upper_family(targets: Sequence, family: Sequence[Disc], g: GaugeFunction,
                         resolution: float = 0.0) -> tuple:
    """Exact minimum of ``sum g(diam)`` over sub-families of ``family`` covering ``targets``.

    Shortest path over bitmasks of covered targets; suitable for a couple of
    dozen targets.  Returns ``(value, chosen indices)``; ``(inf, None)``
    if the whole family does not cover.
    """
    pts = [(float(p.x), float(p.y)) if isinstance(p, Point) else tuple(map(float, p)) for p in targets]
    n = len(pts)
    if n > 24:
        raise DomainError("exact family solver limited to 24 targets")
    masks, costs = [], []
    for d in family:
        m = 0
        cx, cy, rad = float(d.center.x), float(d.center.y), float(d.radius)
        for i, (x, y) in enumerate(pts):
            if math.hypot(x - cx, y - cy) <= rad + resolution:
                m |= 1 << i
        masks.append(m)
        costs.append(evaluate(g, 2 * d.radius))
    full = (1 << n) - 1
    # Dijkstra over covered subsets; costs are non-negative
    best = {0: mp.mpf(0)}
    heap = [(mp.mpf(0), 0, ())]
    done = set()
    while heap:
        cost, m, chosen = heapq.heappop(heap)
        if m in done:
            continue
        done.add(m)
        if m == full:
            return cost, list(chosen)
        for j, dm in enumerate(masks):
            nm = m | dm
            if nm == m or nm in done:
                continue
            nc = cost + costs[j]
            if nc < best.get(nm, mp.inf):
                best[nm] = nc
                heapq.heappush(heap, (nc, nm, chosen + (j,)))
    return mp.inf, None


# -- mass distribution inequality ---------------------------------------------------------

@dataclass
class MassValidation:
    factor: float
    trials: int
    seed: int
    violations: list
    worst_ratio: float         # smallest factor that would have passed
    gauge: str

    @property
    def passed(self) -> bool:
        return not self.violations


def validate_disc_mass_inequality(m: MassDistribution, g: GaugeFunction, factor: float = DEFAULT_FACTOR,
                                  trials: int = 1000, seed: int = DEFAULT_SEED) -> MassValidation:
    """Random discs ``A = B(x, rho)``: check ``mu_hi(A) <= factor g(2rho)/g(2r)``.

    ``rho`` is log-uniform in ``[deepest radius, 2 r]``; ``x`` is a random
    node centre at the matching depth moved by up to two node radii in a
    random direction.
    """
    t = m.tree
    if t.depth < 3:
        raise DomainError("tree depth must be at least 3")
    rng = np.random.default_rng(seed)
    with precision.at_least(t.dps):
        r = t.radii[0]
        g2r = evaluate(g, 2 * r)
        lo = float(mp.log(t.radii[-1]))
        hi = float(mp.log(2 * r))
        log_radii = [float(mp.log(v)) for v in t.radii]
        violations = []
        worst = 0.0
        for trial in range(trials):
            log_rho = rng.uniform(lo, hi)
            node_i = rng.random()
            off = rng.random()
            ang = rng.uniform(0, 2 * math.pi)
            k = next((j for j, lr in enumerate(log_radii) if lr <= log_rho), t.depth)
            i = min(int(node_i * (1 << k)), (1 << k) - 1)
            cx, cy = t.centers[k][i]
            rk = t.radii[k]
            x = cx + 2 * off * rk * mp.cos(ang)
            y = cy + 2 * off * rk * mp.sin(ang)
            rho = mp.exp(log_rho)
            A = Disc(Point(x, y), rho)
            _, mu_hi = mass_of_disc(m, A)
            allowed = g2r ** -1 * evaluate(g, 2 * rho)
            ratio = float(mu_hi / allowed)
            worst = max(worst, ratio)
            if ratio > factor:
                violations.append({"trial": trial, "x": precision.fmt(x), "y": precision.fmt(y),
                                   "rho": precision.fmt(rho), "mu_hi": mu_hi, "ratio": ratio})
    return MassValidation(factor, trials, seed, violations, worst, g.literal())


def mass_lower_bound(m: MassDistribution, g: GaugeFunction, r, factor: float = DEFAULT_FACTOR,
                     validation: Optional[MassValidation] = None):
    """``g(2r)/factor``, available only after a passing validation with the same factor."""
    if validation is None:
        raise ValidationError("run validate_disc_mass_inequality first")
    if not validation.passed or validation.factor > factor or validation.gauge != g.literal():
        raise ValidationError("no passing validation for this gauge and factor")
    with precision.at_least(m.tree.dps):
        return evaluate(g, 2 * mp.mpf(r)) / factor


# -- content certificates ---------------------------------------------------------------------

@dataclass
class ContentEstimate:
    gauge: GaugeFunction
    upper: object
    lower: object
    witness_cover: Cover
    witness_tree: DiscTree = field(repr=False)
    validation: MassValidation = field(repr=False)
    convention: str = ""
    exponent_source: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return self.lower <= self.upper + mp.mpf(1e-12)


def u1_gauge_for_tree(tree: DiscTree, cap: float = 0.25) -> GaugeFunction:
    """``g_{1,gamma}(t) = (log 2/(C2 t))^-gamma`` with ``gamma = log 2/log alpha``."""
    h = tree.h
    if h.kind is not Kind.H1 or not h.exponent > 1:
        raise DomainError("U1 certificate needs an h1 tree with alpha > 1")
    alpha = h.exponent
    C1 = tree.c_tilde * h.coefficient * 2 ** (-alpha)
    C2 = C1 ** (1 / (alpha - 1))
    cap = min(cap, 0.999 / (C2 / 2))
    return g1(math.log(2) / math.log(alpha), C2=C2, cap=cap)


def iterated_radius_closed_form(tree: DiscTree, k: int):
    """``C2^-1 (C2 r)^(alpha^k)`` for an h1 tree."""
    h = tree.h
    alpha = h.exponent
    with precision.at_least(tree.dps):
        C1 = mp.mpf(tree.c_tilde) * h.coefficient * mp.mpf(2) ** (-alpha)
        C2 = C1 ** (1 / mp.mpf(alpha - 1))
        return (C2 * tree.radii[0]) ** (mp.mpf(alpha) ** k) / C2


def fit_sandwich_C1(tree: DiscTree, kmax: Optional[int] = None) -> float:
    """Smallest ``C1`` with ``beta k / C1 <= F(s_k) - F(r) <= C1 beta k``, ``F(t) = log(1/t)/loglog(2/t)``."""
    h = tree.h
    if h.kind is not Kind.H2:
        raise DomainError("sandwich fit needs an h2 tree")
    beta = h.exponent
    K = tree.depth if kmax is None else min(kmax, tree.depth)
    with precision.at_least(tree.dps):
        def F(t):
            return mp.log(1 / t) / mp.log(mp.log(2 / t))
        base = F(tree.radii[0])
        C1 = 1.0
        for k in range(1, K + 1):
            D = float(F(tree.radii[k]) - base)
            if not D > 0:
                raise DomainError("iterated radii do not increase F")
            C1 = max(C1, D / (beta * k), beta * k / D)
    return C1


def u2_gauge_for_tree(tree: DiscTree, cap: float = 0.25) -> tuple:
    C1 = fit_sandwich_C1(tree)
    eta = math.log(2) / (C1 * tree.h.exponent)
    return g2(eta, cap=cap), C1


def theorem14_forward_certificate(tree: DiscTree, family: str, factor: float = DEFAULT_FACTOR,
                                  trials: int = 1000, seed: int = DEFAULT_SEED) -> ContentEstimate:
    """Lower bound ``g(2r)/18`` on the content of the tree's limit set, with its upper cover bound."""
    family = family.upper()
    m = MassDistribution(tree)
    info: dict = {}
    if family == "U1":
        g = u1_gauge_for_tree(tree)
        info = {"alpha": tree.h.exponent, "gamma": g.exponent, "C2": 2 * g.coefficient}
    elif family == "U2":
        g, C1 = u2_gauge_for_tree(tree)
        info = {"beta": tree.h.exponent, "C1": C1, "eta": g.exponent}
    else:
        raise DomainError("family must be U1 or U2")
    val = validate_disc_mass_inequality(m, g, factor, trials, seed)
    if not val.passed:
        raise ValidationError(f"disc-mass inequality failed in {len(val.violations)} trials")
    lower = mass_lower_bound(m, g, tree.radii[0], factor, val)
    up = content_upper(tree, g)
    return ContentEstimate(g, up.value, lower, up.cover, tree, val, g.convention or "eta", info)


# -- converse probe ---------------------------------------------------------------------------

@dataclass
class ConverseResult:
    family: str
    exponent: float
    r1: object
    limit: float
    tested: int
    margin_at_r1: float

    def __iter__(self):
        return iter((self.exponent, self.r1))


def _u1_rhs(u, alpha, gamma, C):
    c = mp.log(1 / (2 * mp.mpf(C)))
    return ((u + c) / (alpha * u + c)) ** gamma


def _u2_I(r, beta):
    L1 = mp.log(1 / r)
    ll = mp.log(L1)
    a = mp.log(2 / r)
    b = mp.log(4 / r)
    return a / mp.log(b) - (a + beta * ll) / mp.log(b + beta * ll)


def theorem14_converse_probe(g: GaugeFunction, A_const: float, family: str, r_min: str = "1e-40",
                             max_doublings: int = 20) -> ConverseResult:
    """Scan exponents (alpha = 2, 4, ...; beta = 1, 2, ...) for the converse claim.

    The claim is tested on ``r = 2^-k`` down to ``r_min``; ``r1`` is the
    largest grid radius below which every grid radius passes, and the
    exponent must also pass in the ``r -> 0`` limit.
    """
    if not 0 < A_const <= 1:
        raise DomainError("A must lie in (0, 1]")
    family = family.upper()
    with precision.formula():
        rmin = mp.mpf(r_min)
        kmax = int(mp.ceil(mp.log(1 / rmin, 2)))
        if family == "U1":
            if g.kind is not Kind.G1:
                raise DomainError("U1 converse needs a g1 gauge")
            gamma, C = g.exponent, g.coefficient
            k0 = max(1, int(math.floor(math.log2(2 * C))) + 2)
            grid = [mp.mpf(2) ** -k for k in range(k0, kmax + 1)]
            exps = [2.0 ** (j + 1) for j in range(max_doublings)]

            def margin(r, a):
                return A_const - _u1_rhs(mp.log(1 / r), a, gamma, C)

            def limit(a):
                return (1 / a) ** gamma
            lim_ok = lambda a: limit(a) < A_const  # noqa: E731
        elif family == "U2":
            if g.kind is not Kind.G2:
                raise DomainError("U2 converse needs a g2 gauge")
            eta = g.exponent
            lhs = mp.log(A_const) / eta
            grid = [mp.mpf(2) ** -k for k in range(2, kmax + 1)]
            exps = [2.0 ** j for j in range(max_doublings)]

            def margin(r, b):
                return lhs - _u2_I(r, b)

            def limit(b):
                return -b
            lim_ok = lambda b: -b < lhs  # noqa: E731
        else:
            raise DomainError("family must be U1 or U2")

        tested = 0
        for e in exps:
            if not lim_ok(e):
                continue
            ms = [margin(r, e) for r in grid]
            tested += len(ms)
            # walk up from the smallest radius while the claim holds
            j = len(ms) - 1
            while j >= 0 and ms[j] > 0:
                j -= 1
            if j == len(ms) - 1:
                continue
            idx = j + 1
            return ConverseResult(family, e, grid[idx], float(limit(e)), tested, float(ms[idx]))
    raise DomainError(f"no exponent found within {max_doublings} doublings (tested {tested} points)")

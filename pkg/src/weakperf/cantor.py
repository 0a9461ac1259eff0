"""Cantor-type sets on the real axis, disc trees and the Bernoulli mass.

Interval lengths are held in log space (``log 1/l_j`` as mpf) because
``l_j = l0 ** (alpha ** j)`` leaves double range after a handful of levels.
Distances between sample points are assembled from the level gaps
``T_i = l_{i-1} - l_i`` so that they keep full relative accuracy however
close the two points are.

The sample of a depth-``D`` set consists of the left endpoint, midpoint and
right endpoint of each of the ``2**D`` level-``D`` intervals, in increasing
order (index ``3k + f``).  Endpoints belong to the limit set; midpoints do
not, so only endpoints are used as disc-tree centres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from mpmath import mp

from . import precision
from .errors import ConstructionError, DomainError
from .gauges import GaugeFunction, evaluate, log_evaluate
from .geometry import Disc, PlanarSetSample, Point

MAX_DEPTH = 60
MAX_SAMPLE_DEPTH = 16
_FRACS = (0.0, 0.5, 1.0)


# -- length sequences ---------------------------------------------------------

def build_u1_lengths(l0, alpha, depth: int) -> list:
    """``l_j = l0 ** (alpha ** j)`` for ``j = 0..depth``, as mpf."""
    log_inv = _u1_log_inv(l0, alpha, depth)
    with precision.formula():
        return [mp.exp(-L) for L in log_inv]


def _u1_log_inv(l0, alpha, depth):
    if not 0 < l0 < 1:
        raise DomainError(f"l0 must lie in (0, 1), got {l0}")
    if not alpha > 1:
        raise DomainError(f"alpha must exceed 1, got {alpha}")
    _check_depth(depth)
    with precision.formula():
        L0 = mp.log(1 / mp.mpf(l0))
        out = [L0 * mp.mpf(alpha) ** j for j in range(depth + 1)]
    _check_halving(out)
    return out


def build_u2_lengths(l0, beta, depth: int) -> list:
    """Solve ``l_j = l_{j-1} (log 1/l_j) ** -beta`` level by level."""
    log_inv = _u2_log_inv(l0, beta, depth)
    with precision.formula():
        return [mp.exp(-L) for L in log_inv]


def _u2_log_inv(l0, beta, depth):
    if not 0 < l0 < 1:
        raise DomainError(f"l0 must lie in (0, 1), got {l0}")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    _check_depth(depth)
    with precision.formula():
        beta = mp.mpf(beta)
        out = [mp.log(1 / mp.mpf(l0))]
        for j in range(1, depth + 1):
            out.append(_solve_u2_level(out[-1], beta, j))
    _check_halving(out)
    return out


def _solve_u2_level(L, beta, level):
    """Larger root ``y`` of ``y = L + beta log y`` (``y = log 1/l_j``).

    ``f(y) = y - L - beta log y`` is convex with minimum at ``y = beta``;
    the small-length root is the one above ``beta``.
    """
    lo = beta
    if lo - L - beta * mp.log(lo) > 0:
        raise ConstructionError(f"level {level}: no solution of the length equation", level=level)
    tol = mp.mpf(10) ** (-(mp.dps - 5))
    y = max(L, beta) + beta * mp.log(max(L, beta))
    for _ in range(200):
        # damped fixed point; contraction factor beta / y < 1 above the root
        y_new = L + beta * mp.log(y)
        y_next = y + 0.9 * (y_new - y) if beta / y > 0.5 else y_new
        if abs(y_next - y) <= tol * y:
            y = y_next
            break
        y = y_next
    else:
        y = None
    f = lambda v: v - L - beta * mp.log(v)  # noqa: E731
    if y is None or abs(f(y)) > mp.mpf(10) ** (-20) * y:
        hi = max(L, beta) * 2 + beta
        while f(hi) < 0:
            hi *= 2
        y = mp.findroot(f, (lo, hi), solver="bisect", tol=tol * hi, maxsteps=10_000)
    return y


def _check_depth(depth):
    if not (isinstance(depth, (int, np.integer)) and 0 <= depth <= MAX_DEPTH):
        raise DomainError(f"depth must be an integer in [0, {MAX_DEPTH}], got {depth!r}")


def _check_halving(log_inv):
    # l_{j+1} < l_j / 2  <=>  log 1/l_{j+1} > log 1/l_j + log 2
    for j in range(1, len(log_inv)):
        if not log_inv[j] > log_inv[j - 1] + mp.log(2):
            raise ConstructionError(f"level {j}: l_{j} >= l_{j - 1}/2 violates the gap condition",
                                    level=j)


# -- interval sets ----------------------------------------------------------------

class CantorIntervalSet:
    """The nested interval construction ``C_0 = [0, l0] > C_1 > ... > C_depth``."""

    def __init__(self, log_inv: Sequence, family: str = "custom", params: Optional[dict] = None):
        with precision.formula():
            self.log_inv = tuple(mp.mpf(v) for v in log_inv)
        _check_halving(self.log_inv)
        self.depth = len(self.log_inv) - 1
        self.family = family
        self.params = dict(params or {})
        with precision.formula():
            self.lengths = tuple(mp.exp(-L) for L in self.log_inv)
            # gaps T_i = l_{i-1} - l_i, kept as logs
            self._log_gap = [None] + [
                -self.log_inv[i - 1] + mp.log(1 - mp.exp(self.log_inv[i - 1] - self.log_inv[i]))
                for i in range(1, self.depth + 1)
            ]
        self._sample_ready = False

    @classmethod
    def u1(cls, l0, alpha, depth) -> "CantorIntervalSet":
        return cls(_u1_log_inv(l0, alpha, depth), "u1", {"l0": l0, "alpha": alpha})

    @classmethod
    def u2(cls, l0, beta, depth) -> "CantorIntervalSet":
        return cls(_u2_log_inv(l0, beta, depth), "u2", {"l0": l0, "beta": beta})

    # -- structure

    def intervals(self, j: int) -> list:
        """The ``2**j`` level-``j`` intervals as ``(left, length)`` mpf pairs."""
        if not 0 <= j <= self.depth:
            raise DomainError(f"level {j} outside 0..{self.depth}")
        if j > 20:
            raise DomainError("refusing to enumerate more than 2**20 intervals")
        with precision.at_least(self.dps):
            lefts = [mp.mpf(0)]
            for i in range(1, j + 1):
                T = self.lengths[i - 1] - self.lengths[i]
                lefts = [x for left in lefts for x in (left, left + T)]
            return [(left, self.lengths[j]) for left in lefts]

    @property
    def dps(self) -> int:
        """Digits needed to separate the deepest level from the root scale."""
        return int(float(self.log_inv[-1] - self.log_inv[0]) / math.log(10)) + 30

    @property
    def diameter(self):
        return float(self.lengths[0])

    # -- sample interface (shared with PlanarSetSample) -----------------------

    def _prepare(self):
        if self._sample_ready:
            return
        D = self.depth
        if D > MAX_SAMPLE_DEPTH:
            raise DomainError(f"sample depth {D} exceeds {MAX_SAMPLE_DEPTH}")
        n = 1 << D
        k = np.arange(n)
        self._bits = np.stack([(k >> (D - i)) & 1 for i in range(1, D + 1)], axis=1).astype(np.int8) \
            if D else np.zeros((1, 0), dtype=np.int8)
        self._logT = np.array([float(v) for v in self._log_gap[1:]])
        self._logl_D = -float(self.log_inv[D])
        self._sample_ready = True

    @property
    def n_points(self) -> int:
        return 3 << self.depth

    def __len__(self):
        return self.n_points

    @property
    def log_resolution(self) -> float:
        # every point of C lies within l_D / 4 of an endpoint or midpoint
        return -float(self.log_inv[-1]) - math.log(4)

    @property
    def resolution(self):
        return self.lengths[-1] / 4

    def in_set(self) -> np.ndarray:
        """Mask of sample points that belong to the limit set (the endpoints)."""
        mask = np.ones(self.n_points, dtype=bool)
        mask[1::3] = False
        return mask

    def log_distances(self, i: int) -> np.ndarray:
        """``log |p_j - p_i|`` for every sample point ``p_j`` (float, -inf at ``j = i``)."""
        self._prepare()
        D = self.depth
        ka, fa = divmod(int(i), 3)
        fa = _FRACS[fa]
        n = 1 << D
        fr = np.array(_FRACS)
        out = np.empty((n, 3))
        xor = np.arange(n) ^ ka
        same = xor == 0
        with np.errstate(divide="ignore"):
            out[same] = np.log(np.abs(fr - fa)) + self._logl_D
        other = ~same
        if other.any():
            _, e = np.frexp(xor[other].astype(float))
            lev = D - (e - 1)                      # 1-based level of the highest differing bit
            logT_top = self._logT[lev - 1]
            bits = self._bits[other]
            sign = np.where(bits[np.arange(len(lev)), lev - 1] == 1, 1.0, -1.0)
            diff = (bits - self._bits[ka]).astype(float)
            levels = np.arange(1, D + 1)
            below = levels[None, :] > lev[:, None]
            with np.errstate(over="ignore", under="ignore"):
                w = np.where(below, np.exp(np.minimum(self._logT[None, :] - logT_top[:, None], 0.0)), 0.0)
                tail = (diff * w).sum(axis=1)
                leaf = np.exp(self._logl_D - logT_top)
            for f_idx, fp in enumerate(_FRACS):
                eps = sign * (tail + (fp - fa) * leaf)
                out[other, f_idx] = logT_top + np.log1p(eps)
        return out.reshape(-1)

    def position(self, i: int, dps: Optional[int] = None):
        """Exact-enough ``(x, y)`` of sample point ``i`` as mpf."""
        k, f = divmod(int(i), 3)
        D = self.depth
        with precision.at_least(dps or self.dps):
            x = mp.mpf(0)
            for lev in range(1, D + 1):
                if (k >> (D - lev)) & 1:
                    x += self.lengths[lev - 1] - self.lengths[lev]
            x += mp.mpf(_FRACS[f]) * self.lengths[D]
            return x, mp.mpf(0)

    def to_sample(self) -> PlanarSetSample:
        """Float sample (positions collapse once ``l_D`` drops below double spacing)."""
        if self.depth > MAX_SAMPLE_DEPTH:
            raise DomainError("set too deep for a float sample")
        ints = self.intervals(self.depth)
        pts = []
        for left, length in ints:
            for f in _FRACS:
                pts.append((float(left + f * length), 0.0))
        res = float(self.resolution)
        if res <= 0:
            raise DomainError("resolution underflows double precision; use the set directly")
        return PlanarSetSample(pts, resolution=res, diameter=float(self.lengths[0]))

    def sample_strings(self) -> list:
        """``(x, y)`` decimal strings with 17 significant digits."""
        return [(precision.fmt(self.position(i)[0]), "0") for i in range(self.n_points)]

    def dump_lengths(self) -> str:
        lines = []
        for j, (l, L) in enumerate(zip(self.lengths, self.log_inv)):
            lines.append(f"{j} {precision.fmt(l)} {precision.fmt(L)}")
        return "\n".join(lines) + "\n"


def content_upper_bound_levels(c: CantorIntervalSet, gamma, j: int):
    """``2**j * l_j**gamma``: the level-``j`` cover bound for ``Lambda^gamma``."""
    if not 0 <= j <= c.depth:
        raise DomainError(f"level {j} outside 0..{c.depth}")
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    with precision.formula():
        return mp.mpf(2) ** j * mp.exp(-mp.mpf(gamma) * c.log_inv[j])


# -- disc trees ------------------------------------------------------------------

@dataclass(frozen=True)
class DiscTree:
    """Binary tree of closed discs; node ``(k, i)`` has children ``(k+1, 2i)`` and ``(k+1, 2i+1)``.

    The first child shares its parent's centre, the second is centred at the
    witness found in the half-radius annulus.  All nodes at depth ``k`` have
    radius ``radii[k]``.
    """

    source: object
    h: GaugeFunction
    c_tilde: float
    radii: tuple                    # mpf, length depth + 1
    center_index: tuple             # per depth, tuple of sample indices
    centers: tuple                  # per depth, tuple of (mpf x, mpf y)
    dps: int
    witness_rings: tuple = field(default=(), repr=False)  # per internal node (log inner, log outer)

    @property
    def depth(self) -> int:
        return len(self.radii) - 1

    @property
    def root(self) -> Disc:
        return self.disc(0, 0)

    def disc(self, k: int, i: int) -> Disc:
        x, y = self.centers[k][i]
        return Disc(Point(x, y), self.radii[k])

    def nodes(self):
        for k in range(self.depth + 1):
            for i in range(1 << k):
                yield k, i

    def h_tilde(self, rho):
        with precision.at_least(self.dps):
            return self.c_tilde * evaluate(self.h, rho / 2)

    def next_radius(self):
        """``h~`` applied once more to the deepest radius."""
        with precision.at_least(self.dps):
            return self.h_tilde(self.radii[-1])

    def check_invariants(self) -> dict:
        """Exhaustive nesting / sibling-disjointness / radius checks."""
        with precision.at_least(self.dps):
            nest_ok = disjoint_ok = True
            worst_nest = worst_gap = mp.inf
            for k in range(1, self.depth + 1):
                rk, rp = self.radii[k], self.radii[k - 1]
                for i in range(1 << k):
                    c = self.centers[k][i]
                    p = self.centers[k - 1][i >> 1]
                    slack = rp - (_dist(c, p) + rk)
                    worst_nest = min(worst_nest, slack / rp)
                    nest_ok &= slack >= 0
                    if i % 2 == 0:
                        s = self.centers[k][i + 1]
                        gap = _dist(c, s) - 2 * rk
                        worst_gap = min(worst_gap, gap / rk)
                        disjoint_ok &= gap > 0
            radius_ok = all(
                abs(self.radii[k] - self.h_tilde(self.radii[k - 1])) <= mp.mpf(10) ** (-self.dps + 10) * self.radii[k]
                for k in range(1, self.depth + 1))
        return {"nesting": bool(nest_ok), "siblings_disjoint": bool(disjoint_ok), "radii": bool(radius_ok),
                "worst_nesting_slack": float(worst_nest), "worst_sibling_gap": float(worst_gap)}

    def dump(self) -> str:
        """Lines ``depth index center_x center_y radius mass``."""
        lines = []
        for k, i in self.nodes():
            x, y = self.centers[k][i]
            lines.append(f"{k} {i} {precision.fmt(x)} {precision.fmt(y)} "
                         f"{precision.fmt(self.radii[k])} {precision.fmt(2.0 ** -k)}")
        return "\n".join(lines) + "\n"


def _dist(p, q):
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    if dy == 0:
        return abs(dx)
    return mp.sqrt(dx * dx + dy * dy)


def _source_dps(S) -> int:
    return getattr(S, "dps", 20)


def build_disc_tree(S, a: int, r, h: GaugeFunction, c_tilde: float, depth: int) -> DiscTree:
    """Iterate the two-disc splitting down to ``depth``.

    ``S`` is a :class:`PlanarSetSample` or :class:`CantorIntervalSet`; ``a``
    is the sample index of the root centre.  At a node of radius ``rho``
    the second child is centred at the set point in
    ``{h(rho/2) <= |z - centre| <= rho/2}`` closest (relative to the
    geometric mean of the two bounds) to the middle of the ring; ties go
    to the lower sample index.
    """
    if not 0 < c_tilde < 0.5:
        raise DomainError(f"c_tilde must lie in (0, 1/2), got {c_tilde}")
    if not (isinstance(depth, int) and depth >= 0):
        raise DomainError("depth must be a non-negative integer")
    if not 0 <= a < S.n_points:
        raise DomainError(f"root index {a} outside the sample")
    in_set = S.in_set() if hasattr(S, "in_set") else np.ones(S.n_points, dtype=bool)
    if not in_set[a]:
        raise DomainError(f"root index {a} is not a point of the set")

    with precision.formula():
        radii = [mp.mpf(r)]
        for _ in range(depth):
            radii.append(c_tilde * evaluate(h, radii[-1] / 2))
    log_scale = max(float(mp.log(mp.mpf(S.diameter))), float(mp.log(radii[0])))
    dps = max(_source_dps(S), int((log_scale - float(mp.log(radii[-1]))) / math.log(10)) + 30)
    with precision.at_least(dps):
        # redo at full working precision so stored radii equal the iterates exactly
        radii = [mp.mpf(r)]
        for _ in range(depth):
            radii.append(c_tilde * evaluate(h, radii[-1] / 2))

    cache: dict = {}

    def logd(i):
        if i not in cache:
            cache[i] = S.log_distances(i)
        return cache[i]

    idx_levels = [(a,)]
    rings = []
    for k in range(depth):
        rho = radii[k]
        with precision.formula():
            log_outer = float(mp.log(rho / 2))
        log_inner = log_evaluate(h, log_outer)
        log_mid = 0.5 * (log_inner + log_outer)
        nxt = []
        for ci in idx_levels[-1]:
            d = logd(ci)
            ok = in_set & (d >= log_inner) & (d <= log_outer)
            cand = np.flatnonzero(ok)
            if cand.size == 0:
                raise ConstructionError(
                    f"no set point in the ring {{h(r/2) <= |z - a| <= r/2}} at depth {k}, centre index {ci}",
                    level=k, annulus=(ci, math.exp(log_inner) if log_inner > -700 else 0.0,
                                      math.exp(log_outer) if log_outer > -700 else 0.0))
            x = d[cand] - log_mid
            # |expm1(x)| without overflow: above x = 1 any increasing stand-in > e - 1 keeps the order
            score = np.where(x > 1, x + 10.0, np.abs(np.expm1(np.minimum(x, 1.0))))
            b = int(cand[np.argmin(score)])    # argmin returns the first, i.e. lowest index
            nxt.extend((ci, b))
        rings.append((log_inner, log_outer))
        idx_levels.append(tuple(nxt))

    pos_cache: dict = {}
    centers = []
    with precision.at_least(dps):
        for level in idx_levels:
            row = []
            for i in level:
                if i not in pos_cache:
                    pos_cache[i] = S.position(i, dps) if isinstance(S, CantorIntervalSet) else \
                        tuple(mp.mpf(v) for v in S.position(i))
                row.append(pos_cache[i])
            centers.append(tuple(row))
    return DiscTree(S, h, c_tilde, tuple(radii), tuple(idx_levels), tuple(centers), dps, tuple(rings))


# -- mass distribution -------------------------------------------------------------

@dataclass(frozen=True)
class MassDistribution:
    """Image of the Bernoulli measure: every depth-``k`` node carries ``2**-k``."""

    tree: DiscTree

    def mass(self, k: int, i: int = 0) -> float:
        if not (0 <= k <= self.tree.depth and 0 <= i < (1 << k)):
            raise DomainError(f"no node ({k}, {i})")
        return 2.0 ** -k

    def check_additivity(self) -> bool:
        for k in range(self.tree.depth):
            for i in range(1 << k):
                if self.mass(k, i) != self.mass(k + 1, 2 * i) + self.mass(k + 1, 2 * i + 1):
                    return False
        total = sum(self.mass(self.tree.depth, i) for i in range(1 << self.tree.depth))
        return self.mass(0) == 1.0 and total == 1.0


def mass_of_disc(m: MassDistribution, A: Disc) -> tuple:
    """Certified bounds ``lo <= mu(A) <= hi`` from the deepest level.

    ``lo`` sums leaves contained in ``A``; ``hi`` sums leaves meeting ``A``.
    Subtrees disjoint from ``A`` are pruned, contained subtrees are counted
    whole.
    """
    t = m.tree
    K = t.depth
    with precision.at_least(t.dps):
        ax, ay = mp.mpf(A.center.x), mp.mpf(A.center.y)
        R = mp.mpf(A.radius)
        lo = hi = 0.0
        stack = [(0, 0)]
        # squared distances avoid high-precision square roots
        while stack:
            k, i = stack.pop()
            cx, cy = t.centers[k][i]
            dx, dy = cx - ax, cy - ay
            d2 = dx * dx + dy * dy
            rk = t.radii[k]
            if d2 > (R + rk) ** 2:
                continue
            if rk <= R and d2 <= (R - rk) ** 2:
                lo += 2.0 ** -k
                hi += 2.0 ** -k
            elif k == K:
                hi += 2.0 ** -K
            else:
                stack.append((k + 1, 2 * i + 1))
                stack.append((k + 1, 2 * i))
    return lo, hi

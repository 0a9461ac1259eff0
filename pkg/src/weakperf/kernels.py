"""Annulus Bergman kernel, its explicit upper bound, Poincaré densities and beta.

The on-diagonal kernel of ``R = {r < |z| < 1}`` at ``x = |z|^2`` is::

    K = 1/(2 pi x log(1/r)) + 1/(pi x) * sum_{m>=1} m (x^m + (r^2/x)^m) / (1 - r^(2m))

(the ``n < 0`` terms of the two-sided series rewritten with ``m = -n``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import DomainError
from .geometry import PlanarSetSample, Point, as_point

MAX_TERMS = 50_000_000
R_GUARD = 0.9


# -- Bergman kernel ---------------------------------------------------------------

@dataclass(frozen=True)
class AnnulusKernelQuery:
    r: float
    z: Point

    def __post_init__(self):
        object.__setattr__(self, "z", as_point(self.z))
        if not 0 < self.r < 1:
            raise DomainError(f"inner ratio r must lie in (0, 1), got {self.r}")
        if not self.r < self.abs_z < 1:
            raise DomainError(f"need r < |z| < 1, got r={self.r}, |z|={self.abs_z}")

    @property
    def abs_z(self) -> float:
        return math.hypot(float(self.z.x), float(self.z.y))

    @property
    def t(self) -> float:
        return math.log(self.abs_z) / math.log(self.r)

    @classmethod
    def from_t(cls, r: float, t: float, theta: float = 0.0) -> "AnnulusKernelQuery":
        rho = r ** t
        return cls(r, Point(rho * math.cos(theta), rho * math.sin(theta)))


class KernelValue(NamedTuple):
    value: float
    tail_bound: float
    n_terms: int


def _tail(q: float, N: int) -> float:
    """``sum_{m > N} m q^m`` in closed form."""
    return q ** (N + 1) * ((N + 1) - N * q) / (1 - q) ** 2


def _tail_bound(x: float, r: float, N: int) -> float:
    y = r * r / x
    return (_tail(x, N) + _tail(y, N)) / (1 - r ** (2 * (N + 1))) / (math.pi * x)


def truncation_index(x: float, r: float, tol: float) -> int:
    """Smallest ``N`` whose tail bound is below ``tol`` (the bound is decreasing in ``N``)."""
    if _tail_bound(x, r, 0) < tol:
        return 0
    hi = 1
    while _tail_bound(x, r, hi) >= tol:
        hi *= 2
        if hi > MAX_TERMS:
            raise DomainError("series converges too slowly; move z away from the boundary")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _tail_bound(x, r, mid) < tol:
            hi = mid
        else:
            lo = mid
    return hi


def bergman_annulus(q: AnnulusKernelQuery, tol: float = 1e-12) -> KernelValue:
    """Truncated series value and a rigorous bound on the omitted tail."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    if q.r > R_GUARD:
        raise DomainError(f"r={q.r} exceeds the conditioning guard {R_GUARD}")
    r = q.r
    x = q.abs_z ** 2
    N = truncation_index(x, r, tol)
    m = np.arange(1, N + 1, dtype=float)
    denom = -np.expm1(2 * m * math.log(r))
    pos = m * np.exp(m * math.log(x)) / denom
    neg = m * np.exp(m * (2 * math.log(r) - math.log(x))) / denom
    # pairwise n = +m, -m, compensated
    terms = np.empty(2 * N)
    terms[0::2] = pos
    terms[1::2] = neg
    s = math.fsum(terms.tolist())
    value = 1 / (2 * math.pi * x * math.log(1 / r)) + s / (math.pi * x)
    return KernelValue(value, _tail_bound(x, r, N), N)


def bergman_upper_bound_21(r: float, t: float) -> float:
    """``1/(2 pi r^(2t) log 1/r) + (8/(3 pi)) (1 - 2^(-2t))^-2`` for ``r, t`` in (0, 1/2]."""
    if not (0 < r <= 0.5 and 0 < t <= 0.5):
        raise DomainError(f"bound needs r, t in (0, 1/2], got r={r}, t={t}")
    return 1 / (2 * math.pi * r ** (2 * t) * math.log(1 / r)) + const_t(t)


def const_t(t: float) -> float:
    return 8 / (3 * math.pi) / (1 - 2 ** (-2 * t)) ** 2


def bergman_transport(K_value: float, scale: float) -> float:
    """Pull back through an affine map with ``|T'| = scale``."""
    if not scale > 0:
        raise DomainError("scale must be positive")
    return K_value * scale * scale


def bergman_general_annulus(inner: float, outer: float, z, center=(0.0, 0.0), tol: float = 1e-12) -> KernelValue:
    """Kernel of ``{inner < |z - center| < outer}`` via ``z -> (z - center)/outer``."""
    c, w = as_point(center), as_point(z)
    u = Point((float(w.x) - float(c.x)) / outer, (float(w.y) - float(c.y)) / outer)
    k = bergman_annulus(AnnulusKernelQuery(inner / outer, u), tol)
    s = 1 / outer
    return KernelValue(bergman_transport(k.value, s), bergman_transport(k.tail_bound, s), k.n_terms)


# -- Poincaré densities ---------------------------------------------------------------

@dataclass(frozen=True)
class SymmetricAnnulus:
    """``{1/R < |z| < R}``."""
    R: float

    def __post_init__(self):
        if not self.R > 1:
            raise DomainError("symmetric annulus needs R > 1")


@dataclass(frozen=True)
class CenteredAnnulus:
    """``{r e^-m < |z| < r e^m}``."""
    r: float
    m: float

    def __post_init__(self):
        if not (self.r > 0 and self.m > 0):
            raise DomainError("centered annulus needs r > 0 and m > 0")


@dataclass(frozen=True)
class RoundAnnulus:
    """``{a < |z - center| < b}``."""
    a: float
    b: float
    center: Point = Point(0.0, 0.0)

    def __post_init__(self):
        if not 0 < self.a < self.b:
            raise DomainError("annulus needs 0 < a < b")


@dataclass(frozen=True)
class PuncturedDisk:
    """``{0 < |z| < 1}``."""


Domain = Union[SymmetricAnnulus, CenteredAnnulus, RoundAnnulus, PuncturedDisk]


@dataclass(frozen=True)
class PoincareQuery:
    domain: Domain
    z: Point

    def __post_init__(self):
        object.__setattr__(self, "z", as_point(self.z))


def _radius(domain, z: Point) -> float:
    c = domain.center if isinstance(domain, RoundAnnulus) else Point(0.0, 0.0)
    return math.hypot(float(z.x) - float(c.x), float(z.y) - float(c.y))


def radial_bounds(domain: Domain) -> tuple:
    if isinstance(domain, SymmetricAnnulus):
        return 1 / domain.R, domain.R
    if isinstance(domain, CenteredAnnulus):
        return domain.r * math.exp(-domain.m), domain.r * math.exp(domain.m)
    if isinstance(domain, RoundAnnulus):
        return domain.a, domain.b
    if isinstance(domain, PuncturedDisk):
        return 0.0, 1.0
    raise DomainError(f"unsupported domain {domain!r}")


def poincare_density(q: PoincareQuery) -> float:
    """Curvature -1 density at ``q.z``.

    Symmetric annulus: cosine form.  Centered annulus: the same after
    ``z -> z/r`` (on ``|z| = r`` this is ``pi/(2 r m)``).  Round annulus:
    sine form in ``log(|z|/a)``.  Punctured disk: ``1/(|z| log 1/|z|)``.
    """
    d = q.domain
    s = _radius(d, q.z)
    lo, hi = radial_bounds(d)
    if not lo < s < hi:
        raise DomainError(f"|z|={s} not inside the domain ({lo}, {hi})")
    if isinstance(d, SymmetricAnnulus):
        L = math.log(d.R)
        return (math.pi / (2 * L)) / (s * math.cos(math.pi * math.log(s) / (2 * L)))
    if isinstance(d, CenteredAnnulus):
        if s == d.r:
            return math.pi / (2 * d.r * d.m)
        u = s / d.r
        return (math.pi / (2 * d.m)) / (u * math.cos(math.pi * math.log(u) / (2 * d.m))) / d.r
    if isinstance(d, RoundAnnulus):
        L = math.log(d.b / d.a)
        return (math.pi / L) / (s * math.sin(math.pi * math.log(s / d.a) / L))
    return 1 / (s * math.log(1 / s))


# -- beta -----------------------------------------------------------------------------

@dataclass(frozen=True)
class BetaQuery:
    z: Point
    S: PlanarSetSample
    nearest_tolerance: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "z", as_point(self.z))


def beta_omega(q: BetaQuery) -> float:
    """Exhaustive ``min |log(|z - a| / |b - a|)|`` over nearest ``a`` and ``b != a``."""
    S = q.S
    d = S.distances(q.z)
    delta = float(d.min())
    near = np.flatnonzero(d <= delta * (1 + q.nearest_tolerance))
    best = math.inf
    xy = S.xy
    for i in near:
        ab = np.hypot(xy[:, 0] - xy[i, 0], xy[:, 1] - xy[i, 1])
        ab = ab[ab > 0]
        if ab.size == 0:
            continue
        if delta == 0:
            raise DomainError("z lies on the boundary sample")
        best = min(best, float(np.abs(np.log(delta / ab)).min()))
    if best == math.inf:
        raise DomainError("degenerate boundary sample")
    return best


# both circles count as nearest when the distances agree to this relative tolerance
_TIE = 1 + 1e-9


def _analytic_delta_beta(domain: Domain, z: Point) -> tuple:
    """Exact ``(delta, beta)`` for the boundaries of the supported domains.

    Each boundary circle contributes the interval of distances ``|b - a|``
    realised by its points; ``beta`` is the log-distance from ``delta`` to
    the union of those intervals (zero when ``delta`` lies inside one).
    """
    s = _radius(domain, z)
    lo, hi = radial_bounds(domain)
    if not lo < s < hi:
        raise DomainError(f"|z|={s} not inside the domain ({lo}, {hi})")
    if isinstance(domain, PuncturedDisk):
        delta = min(s, 1 - s)
        options = []
        if s <= (1 - s) * _TIE:        # a = 0: the rest of the boundary is the unit circle
            options.append([(1.0, 1.0)])
        if 1 - s <= s * _TIE:          # a on the unit circle: other circle points and 0
            options.append([(0.0, 2.0), (1.0, 1.0)])
    else:
        delta = min(s - lo, hi - s)
        options = []
        if s - lo <= (hi - s) * _TIE:  # a on the inner circle
            options.append([(0.0, 2 * lo), (hi - lo, hi + lo)])
        if hi - s <= (s - lo) * _TIE:  # a on the outer circle
            options.append([(0.0, 2 * hi), (hi - lo, hi + lo)])
    beta = math.inf
    for intervals in options:
        for a, b in intervals:
            if a <= delta <= b:
                beta = 0.0
            elif delta < a:
                beta = min(beta, math.log(a / delta))
            else:
                beta = min(beta, math.log(delta / b))
    return delta, beta


@dataclass
class BPReport:
    domain: str
    C_probe: float
    rows: list            # (abs_z, rho, delta, beta, product, ratio)
    ratio_min: float
    ratio_max: float
    product_min: float
    product_max: float
    band: tuple

    @property
    def within_band(self) -> bool:
        return self.band[0] <= self.ratio_min and self.ratio_max <= self.band[1]


BP_BAND = (0.4, 1.1)


def check_bp_estimate(z_seq: Sequence, domain: Domain, C_probe: float = 1.0,
                      band: tuple = BP_BAND, S: Optional[PlanarSetSample] = None) -> BPReport:
    """Two-sided comparability of ``rho`` with ``1/(delta (beta + C))``.

    ``product`` is ``rho * delta * (beta + C)``; ``ratio`` is its reciprocal,
    which is the quantity held to ``band``.  Boundary distances are exact;
    when ``S`` is given, ``beta`` is taken from the exhaustive sample search.
    """
    if not isinstance(domain, (SymmetricAnnulus, CenteredAnnulus, RoundAnnulus, PuncturedDisk)):
        raise DomainError(f"no exact density for domain {type(domain).__name__}")
    rows = []
    for z in z_seq:
        z = as_point(z)
        rho = poincare_density(PoincareQuery(domain, z))
        delta, beta = _analytic_delta_beta(domain, z)
        if S is not None:
            beta = beta_omega(BetaQuery(z, S))
        product = rho * delta * (beta + C_probe)
        rows.append((_radius(domain, z), rho, delta, beta, product, 1 / product))
    if not rows:
        raise DomainError("empty z sequence")
    ratios = [row[5] for row in rows]
    products = [row[4] for row in rows]
    return BPReport(type(domain).__name__, C_probe, rows, min(ratios), max(ratios), min(products),
                    max(products), tuple(band))

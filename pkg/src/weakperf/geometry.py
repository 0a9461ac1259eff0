"""Planar primitives and finite set samples with a resolution guarantee.

A :class:`PlanarSetSample` stands in for an uncountable closed set: every
point of the true set lies within ``resolution`` of some sample point, so
predicates are evaluated on the resolution-inflated sample and report
whether the answer survives the inflation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError

# exhaustive scan below this many points, grid index above
GRID_THRESHOLD = 10_000


@dataclass(frozen=True)
class Point:
    x: float
    y: float = 0.0

    def __post_init__(self):
        for v in (self.x, self.y):
            if not math.isfinite(float(v)):
                raise DomainError(f"non-finite coordinate {v!r}")

    def __complex__(self):
        return complex(float(self.x), float(self.y))

    def dist(self, other: "Point") -> float:
        return math.hypot(float(self.x) - float(other.x), float(self.y) - float(other.y))


def as_point(p) -> Point:
    if isinstance(p, Point):
        return p
    if isinstance(p, complex):
        return Point(p.real, p.imag)
    if isinstance(p, (tuple, list)):
        return Point(*p)
    return Point(p, 0.0)


@dataclass(frozen=True)
class Disc:
    """Closed (default) or open disc.  Coordinates may be mpf for deep trees."""

    center: Point
    radius: float
    closed: bool = True

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"disc radius must be positive, got {self.radius!r}")

    @property
    def diameter(self):
        return 2 * self.radius


@dataclass(frozen=True)
class Annulus:
    """Ring ``{inner <= |z - center| <= outer}``; ``inner == 0`` gives a disc."""

    center: Point
    inner: float
    outer: float

    def __post_init__(self):
        if not (0 <= self.inner < self.outer):
            raise DomainError(f"annulus needs 0 <= inner < outer, got {self.inner}, {self.outer}")


@dataclass(frozen=True)
class HitResult:
    """Outcome of an annulus query; truthiness is ``hit``.

    ``robust`` is False when the only hits lie in the resolution margin,
    i.e. the answer could flip for the true set.
    """

    hit: bool
    robust: bool
    witness: Optional[int] = None

    def __bool__(self):
        return self.hit


class PlanarSetSample:
    """Immutable finite sample of a bounded planar set."""

    def __init__(self, points, resolution: float, diameter: Optional[float] = None):
        arr = np.array([(float(p.x), float(p.y)) if isinstance(p, Point) else p for p in points],
                       dtype=float)
        if arr.size == 0:
            raise DomainError("empty set")
        arr = arr.reshape(-1, 2)
        if not np.all(np.isfinite(arr)):
            raise DomainError("non-finite sample coordinate")
        if diameter is None:
            diameter = _diameter(arr)
        if not resolution > 0:
            raise DomainError("resolution must be positive")
        if not resolution < diameter:
            raise DomainError(f"resolution {resolution} must be below diameter {diameter}")
        arr.setflags(write=False)
        self._xy = arr
        self.resolution = float(resolution)
        self.diameter = float(diameter)
        self._grid = _GridIndex(arr) if len(arr) > GRID_THRESHOLD else None

    @property
    def xy(self) -> np.ndarray:
        return self._xy

    @property
    def n_points(self) -> int:
        return len(self._xy)

    def __len__(self):
        return len(self._xy)

    def point(self, i: int) -> Point:
        x, y = self._xy[i]
        return Point(float(x), float(y))

    def distances(self, z) -> np.ndarray:
        z = as_point(z)
        return np.hypot(self._xy[:, 0] - float(z.x), self._xy[:, 1] - float(z.y))

    def log_distances(self, i: int) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.distances(self.point(i)))

    def position(self, i: int):
        x, y = self._xy[i]
        return float(x), float(y)

    @classmethod
    def segment(cls, a, b, n: int) -> "PlanarSetSample":
        """``n`` equispaced samples of the segment [a, b]."""
        a, b = complex(as_point(a)), complex(as_point(b))
        ts = np.linspace(0.0, 1.0, n)
        zs = a + (b - a) * ts
        length = abs(b - a)
        return cls(np.column_stack([zs.real, zs.imag]), resolution=length / (2 * (n - 1)),
                   diameter=length)

    @classmethod
    def circle(cls, center, radius: float, n: int, extra: Iterable = ()) -> "PlanarSetSample":
        c = complex(as_point(center))
        th = 2 * np.pi * np.arange(n) / n
        zs = c + radius * np.exp(1j * th)
        pts = [(z.real, z.imag) for z in zs] + [(float(as_point(p).x), float(as_point(p).y)) for p in extra]
        arr = np.array(pts)
        return cls(arr, resolution=radius * math.sin(math.pi / n), diameter=max(2 * radius, _diameter(arr)))


def _diameter(arr: np.ndarray) -> float:
    if len(arr) == 1:
        return 0.0
    if len(arr) > 2000:
        # bounding-box diagonal: an upper bound, cheap for large samples
        span = arr.max(axis=0) - arr.min(axis=0)
        return float(math.hypot(*span))
    d = np.hypot(arr[:, None, 0] - arr[None, :, 0], arr[:, None, 1] - arr[None, :, 1])
    return float(d.max())


class _GridIndex:
    """Uniform bucket grid; distance values are computed exactly as in the scan."""

    def __init__(self, xy: np.ndarray):
        self.xy = xy
        lo = xy.min(axis=0)
        span = np.maximum(xy.max(axis=0) - lo, 1e-300)
        cells = max(1, int(math.sqrt(len(xy) / 4)))
        self.lo = lo
        self.h = float(max(span) / cells) or 1.0
        keys = np.floor((xy - lo) / self.h).astype(np.int64)
        self.buckets: dict = {}
        for idx, (i, j) in enumerate(keys):
            self.buckets.setdefault((int(i), int(j)), []).append(idx)
        self.buckets = {k: np.array(v) for k, v in self.buckets.items()}
        self.imax = int(keys[:, 0].max())
        self.jmax = int(keys[:, 1].max())

    def nearest(self, x: float, y: float) -> float:
        ci = math.floor((x - self.lo[0]) / self.h)
        cj = math.floor((y - self.lo[1]) / self.h)
        best = math.inf
        ring = 0
        limit = max(self.imax, self.jmax) + abs(ci) + abs(cj) + 2
        while ring <= limit:
            if (2 * ring + 1) ** 2 > 4 * len(self.buckets) + 64:
                # query far outside the occupied grid: scanning is cheaper
                return float(np.hypot(self.xy[:, 0] - x, self.xy[:, 1] - y).min())
            for i in range(ci - ring, ci + ring + 1):
                for j in range(cj - ring, cj + ring + 1):
                    if max(abs(i - ci), abs(j - cj)) != ring:
                        continue
                    idx = self.buckets.get((i, j))
                    if idx is None:
                        continue
                    pts = self.xy[idx]
                    d = np.hypot(pts[:, 0] - x, pts[:, 1] - y).min()
                    if d < best:
                        best = float(d)
            # every unvisited cell is at least ring * h away
            if best <= ring * self.h:
                break
            ring += 1
        return best


def dist_to_set(z, S: PlanarSetSample) -> float:
    """Euclidean distance from ``z`` to the sample (exact for the sample)."""
    if S is None or len(S) == 0:
        raise DomainError("empty set")
    z = as_point(z)
    if S._grid is not None:
        return S._grid.nearest(float(z.x), float(z.y))
    return float(S.distances(z).min())


def annulus_hits_set(A: Annulus, S: PlanarSetSample) -> HitResult:
    d = S.distances(A.center)
    res = S.resolution
    inflated = (d >= A.inner - res) & (d <= A.outer + res)
    if not inflated.any():
        return HitResult(False, True, None)
    strict = (d >= A.inner + res) & (d <= A.outer - res)
    if strict.any():
        return HitResult(True, True, int(np.flatnonzero(strict)[0]))
    return HitResult(True, False, int(np.flatnonzero(inflated)[0]))


def write_point_cloud(S: PlanarSetSample, path, coords: Optional[Sequence[tuple]] = None) -> None:
    """Write ``# resolution r diameter d`` then one ``x y`` pair per line.

    ``coords`` overrides the float coordinates (deep Cantor sets pass exact
    decimal strings).
    """
    from .precision import fmt

    rows = coords if coords is not None else [(fmt(float(x)), fmt(float(y))) for x, y in S.xy]
    with open(path, "w") as fh:
        fh.write(f"# resolution {fmt(S.resolution)} diameter {fmt(S.diameter)}\n")
        for x, y in rows:
            fh.write(f"{x} {y}\n")


def read_point_cloud(path) -> PlanarSetSample:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise DomainError(f"{path}: missing '# resolution <r> diameter <d>' header")
    head = lines[0].lstrip("#").split()
    try:
        meta = dict(zip(head[0::2], head[1::2]))
        resolution = float(meta["resolution"])
        diameter = float(meta["diameter"])
    except (KeyError, ValueError) as exc:
        raise DomainError(f"{path}: bad header {lines[0]!r}") from exc
    pts = [tuple(float(v) for v in ln.split()) for ln in lines[1:] if ln.strip()]
    return PlanarSetSample(pts, resolution=resolution, diameter=diameter)

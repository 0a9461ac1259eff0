"""Weakly uniformly perfect planar sets.

Cantor-type constructions obeying gauge-relaxed perfectness conditions,
closed-form conformal invariants of annuli and the punctured disk,
harmonic-measure decay bounds and gauge Hausdorff content estimates.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, ConstructionError, DomainError,  # noqa: E402
                     ValidationError, WeakPerfError)
from .gauges import GaugeFunction, g1, g2, h1, h2, parse_gauge  # noqa: E402
from .geometry import Annulus, Disc, PlanarSetSample, Point  # noqa: E402

__all__ = [
    "__version__",
    "WeakPerfError", "DomainError", "ConstructionError", "ConfigError", "ValidationError",
    "GaugeFunction", "h1", "h2", "g1", "g2", "parse_gauge",
    "Point", "Disc", "Annulus", "PlanarSetSample",
]

"""Working-precision control for mpmath evaluations.

``WEAKPERF_PRECISION`` selects the mode used for formula evaluation:
``extended`` (default, 40 significant digits) or ``double`` (53-bit
mantissa).  mpmath numbers keep an unbounded exponent in both modes, so
quantities such as ``0.1 ** (2 ** 40)`` never underflow.

Deep Cantor geometry needs far more digits than either mode; those code
paths raise the precision locally with :func:`at_least`.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from mpmath import mp

from .errors import ConfigError

ENV_VAR = "WEAKPERF_PRECISION"
EXTENDED_DPS = 40
DOUBLE_PREC = 53


def mode() -> str:
    value = os.environ.get(ENV_VAR, "extended").strip().lower()
    if value not in ("double", "extended"):
        raise ConfigError(f"{ENV_VAR} must be 'double' or 'extended', got {value!r}")
    return value


def formula_prec() -> int:
    """Mantissa bits used for closed-form evaluation in the current mode."""
    if mode() == "double":
        return DOUBLE_PREC
    return int(EXTENDED_DPS * 3.33) + 8


@contextmanager
def formula():
    """Evaluate at the mode's precision, never lowering an enclosing context."""
    with mp.workprec(max(mp.prec, formula_prec())):
        yield


@contextmanager
def at_least(dps: int):
    with mp.workdps(max(mp.dps, int(dps))):
        yield


def fmt(x) -> str:
    """17 significant digits; mpf values outside double range keep their exponent."""
    if isinstance(x, float):
        return format(x, ".17g")
    if isinstance(x, int):
        return str(x)
    return mp.nstr(mp.mpf(x), 17, min_fixed=-4, max_fixed=17)

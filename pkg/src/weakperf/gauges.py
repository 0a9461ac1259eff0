"""Gauge functions and their algebra.

Five kinds are supported::

    h1    C * t**alpha                          (inner radius of (U)_{1,alpha})
    h2    C * t * (log 1/t)**(-beta)            (inner radius of (U)_{2,beta})
    g1    (log 1/(s t))**(-gamma)               (content gauge, log scale s)
    g2    exp(-eta * log(2/t) / log log(4/t))   (content gauge)
    power C * t**gamma

All values are mpmath numbers computed at the precision selected by
:mod:`weakperf.precision`, so tiny arguments (``t = 1e-3000``) are fine.

``g1`` is written ``(log 1/(C t))**-gamma`` in one convention and
``(log 2/(C2 t))**-gamma`` in the other; both map to the scale
``s = C`` resp. ``s = C2 / 2`` and the chosen convention is kept on the
gauge for reporting.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

from mpmath import mp

from . import precision
from .errors import ConfigError, DomainError


class Kind(enum.Enum):
    H1 = "h1"
    H2 = "h2"
    G1 = "g1"
    G2 = "g2"
    POWER = "power"


@dataclass(frozen=True)
class GaugeFunction:
    kind: Kind
    exponent: float
    coefficient: float = 1.0
    domain_cap: float = math.inf
    extended: bool = False
    convention: str = ""

    def __post_init__(self):
        if not self.coefficient > 0:
            raise DomainError("gauge coefficient must be positive")
        if not self.domain_cap > 0:
            raise DomainError("domain_cap must be positive")
        if self.kind is Kind.H1 and not self.exponent >= 1:
            raise DomainError("h1 needs alpha >= 1")
        if self.kind is not Kind.H1 and not self.exponent > 0:
            raise DomainError(f"{self.kind.value} needs a positive exponent")
        if self.kind is Kind.H2 and self.domain_cap > math.exp(-1):
            object.__setattr__(self, "domain_cap", math.exp(-1))
        if self.kind is Kind.G1 and not self.coefficient * self.domain_cap < 1:
            raise DomainError("g1 needs scale * cap < 1 so that log 1/(s t) > 0")
        if self.kind is Kind.G2 and not _g2_increasing_at(self.domain_cap):
            raise DomainError(f"g2 is not increasing up to cap={self.domain_cap}")

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t):
        return evaluate(self, t)

    def closed_form(self, t):
        """The defining formula, no range handling."""
        c = self.coefficient
        p = self.exponent
        k = self.kind
        if k is Kind.H1 or k is Kind.POWER:
            return c * t ** p
        if k is Kind.H2:
            return c * t * mp.log(1 / t) ** (-p)
        if k is Kind.G1:
            return mp.log(1 / (c * t)) ** (-p)
        u = mp.log(2 / t)
        return mp.exp(-p * u / mp.log(mp.log(4 / t)))

    def log_closed_form(self, log_t):
        """``log g(exp(log_t))`` without forming ``t``; float-friendly for deep scales."""
        c = mp.log(self.coefficient)
        p = self.exponent
        k = self.kind
        if k is Kind.H1 or k is Kind.POWER:
            return c + p * log_t
        if k is Kind.H2:
            return c + log_t - p * mp.log(-log_t)
        if k is Kind.G1:
            return -p * mp.log(-c - log_t)
        u = mp.log(2) - log_t
        return -p * u / mp.log(mp.log(4) - log_t)

    def with_(self, **changes) -> "GaugeFunction":
        return dataclasses.replace(self, **changes)

    def literal(self) -> str:
        k = self.kind
        if k is Kind.H1:
            return f"h1:alpha={self.exponent!r},C={self.coefficient!r}"
        if k is Kind.H2:
            return f"h2:beta={self.exponent!r},C={self.coefficient!r}"
        if k is Kind.G1:
            if self.convention == "proof":
                return f"g1:gamma={self.exponent!r},C2={2 * self.coefficient!r},cap={self.domain_cap!r}"
            return f"g1:gamma={self.exponent!r},C={self.coefficient!r},cap={self.domain_cap!r}"
        if k is Kind.G2:
            return f"g2:eta={self.exponent!r},cap={self.domain_cap!r}"
        return f"power:gamma={self.exponent!r},C={self.coefficient!r}"


def _g2_increasing_at(t: float) -> bool:
    # d/du [(u + log 2) / log(u + log 4)] > 0  iff  log(v) > (v - log 2)/v,  v = u + log 4;
    # the difference is increasing in v, so checking the cap covers (0, cap).
    if t >= 4 / math.e:
        return False
    v = math.log(4 / t)
    return math.log(v) > (v - math.log(2)) / v


# -- constructors -----------------------------------------------------------

def h1(alpha: float, C: float = 1.0, cap: float | None = None) -> GaugeFunction:
    if cap is None:
        cap = C ** (-1 / (alpha - 1)) if alpha > 1 else (math.inf if C <= 1 else 1.0)
    return GaugeFunction(Kind.H1, alpha, C, cap)


def h2(beta: float, C: float = 1.0, cap: float | None = None) -> GaugeFunction:
    cap = math.exp(-1) if cap is None else min(cap, math.exp(-1))
    return GaugeFunction(Kind.H2, beta, C, cap)


def g1(gamma: float, *, C: float | None = None, C2: float | None = None,
       cap: float = 0.25) -> GaugeFunction:
    """Exactly one of ``C`` (``log 1/(C t)``) or ``C2`` (``log 2/(C2 t)``)."""
    if (C is None) == (C2 is None):
        raise DomainError("g1 takes exactly one of C or C2")
    if C is not None:
        return GaugeFunction(Kind.G1, gamma, C, cap, extended=True, convention="statement")
    return GaugeFunction(Kind.G1, gamma, C2 / 2, cap, extended=True, convention="proof")


def g2(eta: float, cap: float = 0.25) -> GaugeFunction:
    return GaugeFunction(Kind.G2, eta, 1.0, cap, extended=True)


def power(gamma: float, C: float = 1.0) -> GaugeFunction:
    return GaugeFunction(Kind.POWER, gamma, C, math.inf, extended=True)


# -- operations -------------------------------------------------------------

def evaluate(g: GaugeFunction, t):
    """Value of the gauge at ``t > 0``.

    Above ``domain_cap`` an extended gauge is frozen at its cap value;
    a non-extended one raises.  ``h2`` additionally needs ``t < 1/e``.
    """
    with precision.formula():
        t = mp.mpf(t)
        if not t > 0:
            raise DomainError(f"gauge argument must be positive, got {t}")
        if t >= g.domain_cap:
            if not g.extended:
                raise DomainError(f"{g.kind.value}: t={mp.nstr(t, 8)} outside (0, {g.domain_cap})")
            if math.isinf(g.domain_cap):
                return g.closed_form(t)
            return g.closed_form(mp.mpf(g.domain_cap))
        return g.closed_form(t)


def log_evaluate(g: GaugeFunction, log_t) -> float:
    """``log g(t)`` from ``log t`` as a float; same range rules as :func:`evaluate`."""
    with precision.formula():
        log_t = mp.mpf(log_t)
        if g.domain_cap != math.inf and log_t >= math.log(g.domain_cap):
            if not g.extended:
                raise DomainError(f"{g.kind.value}: log t={float(log_t)} beyond cap")
            log_t = mp.log(g.domain_cap)
        return float(g.log_closed_form(log_t))


def monotone_extension(g: GaugeFunction) -> GaugeFunction:
    """Copy of ``g`` defined on all of (0, inf), constant above ``domain_cap``."""
    return g.with_(extended=True)


class InverseBound(NamedTuple):
    value: object
    valid_below: float


def inverse_bound_threshold(h: GaugeFunction) -> float:
    """Largest ``t`` with ``(1/C) t (log 1/t)^beta >= h^{-1}(t)``.

    ``h(g(t)) >= t`` reduces to ``(log 1/t)^beta >= C``, i.e.
    ``t <= exp(-C**(1/beta))``; also ``g(t) < 1`` must hold.  Below
    ``exp(-beta)`` the bound is increasing in ``t``, so checking
    ``g < 1`` at the threshold covers every smaller ``t``.
    """
    if h.kind is not Kind.H2:
        raise DomainError("inverse_upper_bound is defined for h2 gauges only")
    t = math.exp(-max(h.coefficient ** (1 / h.exponent), h.exponent))
    # shrink until the bound itself stays inside (0, 1), where h is increasing
    while t / h.coefficient * math.log(1 / t) ** h.exponent >= 1:
        t *= 0.5
    return t


def inverse_upper_bound(h: GaugeFunction, t) -> InverseBound:
    """Upper bound ``(1/C) t (log 1/t)^beta`` for the inverse of an h2 gauge."""
    if h.kind is not Kind.H2:
        raise DomainError("inverse_upper_bound is defined for h2 gauges only")
    with precision.formula():
        t = mp.mpf(t)
        if not 0 < t < 1:
            raise DomainError(f"inverse bound needs 0 < t < 1, got {t}")
        thr = inverse_bound_threshold(h)
        if t > thr:
            raise DomainError(f"inverse bound only valid for t <= {thr:.6g}")
        value = t * mp.log(1 / t) ** h.exponent / h.coefficient
    return InverseBound(value, thr)


# -- literal syntax ------------------------------------------------------------

_KEYS = {
    "h1": {"alpha", "C", "cap"},
    "h2": {"beta", "C", "cap"},
    "g1": {"gamma", "C", "C2", "cap"},
    "g2": {"eta", "cap"},
    "power": {"gamma", "C"},
}


def parse_gauge(text: str) -> GaugeFunction:
    """Parse ``h1:alpha=2,C=1`` style literals."""
    try:
        name, _, body = text.strip().partition(":")
        params = {}
        for item in filter(None, (s.strip() for s in body.split(","))):
            k, _, v = item.partition("=")
            params[k.strip()] = float(v)
    except ValueError as exc:
        raise ConfigError(f"bad gauge literal {text!r}") from exc
    if name not in _KEYS:
        raise ConfigError(f"unknown gauge kind {name!r} in {text!r}")
    unknown = set(params) - _KEYS[name]
    if unknown:
        raise ConfigError(f"unknown gauge parameter(s) {sorted(unknown)} in {text!r}")
    try:
        if name == "h1":
            return h1(params["alpha"], params.get("C", 1.0), params.get("cap"))
        if name == "h2":
            return h2(params["beta"], params.get("C", 1.0), params.get("cap"))
        if name == "g1":
            return g1(params["gamma"], C=params.get("C"), C2=params.get("C2"),
                      cap=params.get("cap", 0.25))
        if name == "g2":
            return g2(params["eta"], params.get("cap", 0.25))
        return power(params["gamma"], params.get("C", 1.0))
    except KeyError as exc:
        raise ConfigError(f"gauge literal {text!r} is missing {exc.args[0]}") from exc
    except DomainError as exc:
        raise ConfigError(f"gauge literal {text!r}: {exc}") from exc

"""Harmonic-measure bounds: annulus comparison, Chen's integral, LHMD gauges.

Quantities that involve ``log log`` of tiny radii are evaluated with mpmath at
the working precision of :mod:`weakperf.precision`; radii may be passed as
strings (``"1e-64"``) or mpf to avoid double underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from mpmath import mp
from scipy import integrate
from scipy.linalg import solve_banded

from . import precision
from .errors import DomainError
from .gauges import GaugeFunction, evaluate


def _clamp(x) -> tuple:
    """``(value in [0, 1], clamped?)``."""
    x = float(x)
    if x > 1:
        return 1.0, True
    if x < 0:
        return 0.0, True
    return x, False


# -- annulus comparison -------------------------------------------------------------

def annulus_comparison_phi(inner, outer, s) -> float:
    """``log(s/inner) / log(outer/inner)``: harmonic measure of the outer circle."""
    with precision.formula():
        inner, outer, s = mp.mpf(inner), mp.mpf(outer), mp.mpf(s)
        if not (0 < inner < s < outer):
            raise DomainError("need 0 < inner < s < outer")
        return float(mp.log(s / inner) / mp.log(outer / inner))


def radial_laplace_fd(inner: float, outer: float, n: int = 2001) -> tuple:
    """Second-order finite differences for ``u'' + u'/s = 0``, ``u(inner)=0``, ``u(outer)=1``.

    Returns ``(s, u)`` on a uniform grid of ``n`` nodes.
    """
    s = np.linspace(inner, outer, n)
    h = s[1] - s[0]
    si = s[1:-1]
    lower = 1 / h**2 - 1 / (2 * h * si)
    diag = -2 / h**2 * np.ones_like(si)
    upper = 1 / h**2 + 1 / (2 * h * si)
    m = len(si)
    ab = np.zeros((3, m))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    rhs = np.zeros(m)
    rhs[-1] = -upper[-1] * 1.0
    u = np.empty(n)
    u[0], u[-1] = 0.0, 1.0
    u[1:-1] = solve_banded((1, 1), ab, rhs)
    return s, u


def prop42_phi_u1(r, alpha, alpha_p, C=1.0, C_p=1.0) -> float:
    """``phi`` with ``inner = C' r^alpha'``, ``s = C r^alpha``, ``outer = r``."""
    with precision.formula():
        r = mp.mpf(r)
        return annulus_comparison_phi(C_p * r ** alpha_p, r, C * r ** alpha)


def prop42_phi_u2(r, beta, beta_p, C=1.0, C_p=1.0) -> float:
    """Same with ``r (log 1/r)^-beta`` scales; limit ``(beta' - beta)/beta'``."""
    with precision.formula():
        r = mp.mpf(r)
        L = mp.log(1 / r)
        return annulus_comparison_phi(C_p * r * L ** (-beta_p), r, C * r * L ** (-beta))


class DeltaProbe(NamedTuple):
    passed: bool
    phi: float
    threshold: float

    def __bool__(self):
        return self.passed


def delta_condition_probe(h: GaugeFunction, inner_scale, outer_r, epsilon: float) -> DeltaProbe:
    """Annulus model of the (Delta) condition: ``phi(h(outer_r)) <= 1 - epsilon``."""
    if not 0 <= epsilon <= 1:
        raise DomainError("epsilon must lie in [0, 1]")
    with precision.formula():
        s = evaluate(h, outer_r)
        if not s < mp.mpf(outer_r):
            raise DomainError("need h(outer_r) < outer_r")
        if not mp.mpf(inner_scale) < s:
            raise DomainError("need inner_scale < h(outer_r)")
        phi = annulus_comparison_phi(inner_scale, outer_r, s)
    return DeltaProbe(phi <= 1 - epsilon, phi, 1 - epsilon)


# -- capacity profiles and Chen's bound ------------------------------------------------

@dataclass(frozen=True)
class CapacityProfile:
    """Lower bound for ``Cap(K_t(a))``.

    ``power``: ``C t^p`` with ``p = 1/(2 - alpha)``;
    ``log``: ``C t (log 1/t)^-beta``.
    """

    kind: str
    C: float
    parameter: float          # alpha for "power", beta for "log"
    valid_r0: float = math.inf

    def __post_init__(self):
        if self.kind not in ("power", "log"):
            raise DomainError(f"unknown capacity profile {self.kind!r}")
        if not self.C > 0:
            raise DomainError("capacity constant must be positive")
        if self.kind == "power" and not 1 < self.parameter < 2:
            raise DomainError("power profile needs alpha in (1, 2)")
        if self.kind == "log" and not self.parameter > 0:
            raise DomainError("log profile needs beta > 0")

    @classmethod
    def power_law(cls, C, alpha, valid_r0=math.inf):
        return cls("power", C, alpha, valid_r0)

    @classmethod
    def log_corrected(cls, C, beta, valid_r0=math.exp(-1)):
        return cls("log", C, beta, valid_r0)

    @property
    def p(self) -> float:
        return 1 / (2 - self.parameter)

    def log_value(self, u):
        """``log Cap`` at ``t = e^-u``."""
        if self.kind == "power":
            return math.log(self.C) - self.p * u
        return math.log(self.C) - u - self.parameter * math.log(u)

    def value(self, t):
        with precision.formula():
            return mp.exp(self.log_value(float(mp.log(1 / mp.mpf(t)))))

    def denominator(self, u, kappa):
        """``log(t / (2 kappa Cap(t)))`` at ``t = e^-u``."""
        return -u - math.log(2 * kappa) - self.log_value(u)


def chen_integral(z_dist, upper, kappa, cap: CapacityProfile) -> float:
    """``int_{z_dist}^{upper} dt / (t log(t / (2 kappa Cap(t))))`` in ``u = log 1/t``."""
    u_hi = math.log(1 / float(z_dist)) if float(z_dist) > 0 else float(-mp.log(mp.mpf(z_dist)))
    u_lo = math.log(1 / float(upper))
    if u_hi <= u_lo:
        return 0.0
    if math.exp(-u_lo) > cap.valid_r0:
        raise DomainError("capacity profile not valid on the integration range")
    if cap.kind == "log" and u_lo <= 0:
        raise DomainError("log profile needs t < 1")

    def f(u):
        return 1 / cap.denominator(u, kappa)

    # the denominator is monotone in u for both profiles: check the ends
    grid = np.linspace(u_lo, u_hi, 65)
    if min(cap.denominator(u, kappa) for u in grid) <= 0:
        raise DomainError("bound inapplicable: integrand not positive on the range")
    val, _ = integrate.quad(f, u_lo, u_hi, epsabs=0.0, epsrel=1e-11, limit=500)
    return float(val)


def chen_upper_bound(z_dist, r, kappa, cap: CapacityProfile, C_kappa: float = 1.0,
                     upper: Optional[float] = None) -> float:
    """``exp(-C_kappa * integral)`` clamped to [0, 1].

    ``upper`` is the top of the integration range; by default ``kappa r / 2``.
    """
    if not 0 < kappa < 1 / 16:
        raise DomainError("kappa must lie in (0, 1/16)")
    if not C_kappa > 0:
        raise DomainError("C_kappa must be positive")
    top = kappa * r / 2 if upper is None else upper
    if not 0 < float(z_dist) <= top:
        raise DomainError(f"need 0 < z_dist <= {top}")
    return _clamp(math.exp(-C_kappa * chen_integral(z_dist, top, kappa, cap)))[0]


def chen_power_closed_form(z_dist, upper, kappa, C, alpha) -> float:
    """Antiderivative of the power-law integrand between ``z_dist`` and ``upper``."""
    p = 1 / (2 - alpha)
    c = math.log(1 / (2 * kappa * C))
    u1, u2 = math.log(1 / z_dist), math.log(1 / upper)
    return math.log(((p - 1) * u1 + c) / ((p - 1) * u2 + c)) / (p - 1)


# -- LHMD gauges --------------------------------------------------------------------------

def lhmd1_bound(z_dist, r, gamma, C3) -> float:
    """``C3 (log(1/|z-a|) / log(1/r))^-gamma`` clamped to [0, 1]."""
    with precision.formula():
        z, r = mp.mpf(z_dist), mp.mpf(r)
        if not r < 1:
            raise DomainError("lhmd1 needs r < 1")
        if not 0 < z <= r:
            raise DomainError("lhmd1 needs 0 < z_dist <= r")
        v = C3 * (mp.log(1 / z) / mp.log(1 / r)) ** (-gamma)
    return _clamp(v)[0]


def F_loglog(t):
    """``log(1/t) / log log(1/t)``."""
    L = mp.log(1 / mp.mpf(t))
    return L / mp.log(L)


def lhmd2_bound(z_dist, r, eta, C3) -> float:
    """``C3 exp(-eta (F(|z-a|) - F(r)))`` with ``F(t) = log(1/t)/loglog(1/t)``."""
    with precision.formula():
        z, r = mp.mpf(z_dist), mp.mpf(r)
        if not r < mp.exp(-mp.e):
            raise DomainError("lhmd2 needs r < e^-e")
        if not 0 < z <= r:
            raise DomainError("lhmd2 needs 0 < z_dist <= r")
        v = C3 * mp.exp(-eta * (F_loglog(z) - F_loglog(r)))
    return _clamp(v)[0]


@dataclass
class HarmonicBoundReport:
    method: str
    a: tuple
    r: float
    z_dist: float
    bound_value: float
    clamped: bool
    parameters: dict = field(default_factory=dict)


def bound_report(method: str, z_dist, r, a=(0.0, 0.0), **params) -> HarmonicBoundReport:
    """Evaluate one bound and record whether clamping to [0, 1] happened."""
    if method == "lhmd1":
        with precision.formula():
            raw = params["C3"] * (mp.log(1 / mp.mpf(z_dist)) / mp.log(1 / mp.mpf(r))) ** (-params["gamma"])
        value = lhmd1_bound(z_dist, r, params["gamma"], params["C3"])
    elif method == "lhmd2":
        with precision.formula():
            raw = params["C3"] * mp.exp(-params["eta"] * (F_loglog(z_dist) - F_loglog(r)))
        value = lhmd2_bound(z_dist, r, params["eta"], params["C3"])
    elif method == "chen":
        cap = params["cap"]
        top = params.get("upper") or params["kappa"] * r / 2
        raw = math.exp(-params.get("C_kappa", 1.0) * chen_integral(z_dist, top, params["kappa"], cap))
        value = _clamp(raw)[0]
        params = {k: v for k, v in params.items() if k != "cap"} | {
            "profile": cap.kind, "cap_C": cap.C, "cap_param": cap.parameter}
    elif method == "annulus":
        raw = annulus_comparison_phi(params["inner"], r, z_dist)
        value = raw
    else:
        raise DomainError(f"unknown method {method!r}")
    return HarmonicBoundReport(method, tuple(a), float(r), float(z_dist), float(value),
                               float(raw) != float(value), params)


# -- constants of the capacity-to-LHMD pipeline ----------------------------------------

@dataclass(frozen=True)
class LHMDConstants:
    exponent: float     # gamma or eta
    C1: float
    C3: float
    kappa: float
    r1: float
    C_kappa: float


def lhmd1_constants(cap: CapacityProfile, kappa: float, r1: float, C_kappa: float = 1.0) -> LHMDConstants:
    """Constructive ``gamma`` and ``C3`` for the power-law profile.

    With ``u = log 1/t >= u_min = log(2/(kappa r1))`` the integrand satisfies
    ``C_kappa/((p-1)u + c) >= gamma/u`` for ``gamma = C_kappa min(u_min/((p-1)u_min + c), 1/(p-1))``;
    ``C1 = C3 = (1 + log(2/kappa)/log(1/r1))^gamma``.
    """
    if cap.kind != "power":
        raise DomainError("lhmd1_constants needs a power-law profile")
    if not (0 < kappa < 1 / 16 and 0 < r1 < 1):
        raise DomainError("need kappa in (0, 1/16) and r1 in (0, 1)")
    p = cap.p
    c = math.log(1 / (2 * kappa * cap.C))
    u_min = math.log(2 / (kappa * r1))
    if (p - 1) * u_min + c <= 0:
        raise DomainError("bound inapplicable: capacity profile too large at r1")
    gamma = C_kappa * min(u_min / ((p - 1) * u_min + c), 1 / (p - 1))
    C1 = (1 + math.log(2 / kappa) / math.log(1 / r1)) ** gamma
    return LHMDConstants(gamma, C1, C1, kappa, r1, C_kappa)


def lhmd2_constants(cap: CapacityProfile, kappa: float, r1: float, C_kappa: float = 1.0) -> LHMDConstants:
    """Constructive ``eta`` and ``C3`` for the log-corrected profile (``r1 <= e^-e``)."""
    if cap.kind != "log":
        raise DomainError("lhmd2_constants needs a log-corrected profile")
    if not (0 < kappa < 1 / 16 and 0 < r1 <= math.exp(-math.e)):
        raise DomainError("need kappa in (0, 1/16) and r1 in (0, e^-e]")
    beta = cap.parameter
    c = math.log(1 / (2 * kappa * cap.C))
    v_min = math.log(math.log(2 / (kappa * r1)))
    if beta * v_min + c <= 0:
        raise DomainError("bound inapplicable: capacity profile too large at r1")
    eta = C_kappa * min(v_min / (beta * v_min + c), 1 / beta)
    # F(kappa r/2) - F(r) <= log(2/kappa) * max (y - 1)/y^2 over y >= loglog(1/r1)
    y1 = math.log(math.log(1 / r1))
    slope = (y1 - 1) / y1**2 if y1 >= 2 else 0.25
    C1 = math.exp(eta * math.log(2 / kappa) * slope)
    return LHMDConstants(eta, C1, C1, kappa, r1, C_kappa)


# -- I(r) -----------------------------------------------------------------------------------

def prop41_I_of_r(r, beta) -> object:
    """``(log r - b loglog(1/r))/log(log(1/r) + b loglog(1/r)) - log r/loglog(1/r)`` as mpf."""
    with precision.formula():
        r = mp.mpf(r)
        if not 0 < r < mp.exp(-mp.e):
            raise DomainError("I(r) needs 0 < r < e^-e")
        L = mp.log(1 / r)
        ll = mp.log(L)
        return (-L - beta * ll) / mp.log(L + beta * ll) + L / ll

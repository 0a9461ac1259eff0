"""Experiment configuration files: ``key = value`` lines under ``[section]`` headers.

Every command reads its own section; ``[meta]`` carries ``schema_version``.
Unknown sections or keys and out-of-range values raise :class:`ConfigError`.
"""

from __future__ import annotations

import configparser
import math
from typing import Any, Callable

from .errors import ConfigError

SCHEMA_VERSION = 1


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _prob(v):
    return 0 < v < 1


# key -> (converter, validator, description of the valid range)
Field = tuple


def _f(conv: Callable, ok: Callable = lambda v: True, rng: str = "any") -> Field:
    return conv, ok, rng


def _floats(s: str) -> list:
    return [float(x) for x in s.replace(",", " ").split()]


def _str(s: str) -> str:
    return s.strip()


SCHEMA: dict[str, dict[str, Field]] = {
    "meta": {"schema_version": _f(int, lambda v: v == SCHEMA_VERSION, f"== {SCHEMA_VERSION}")},
    "generate": {
        "set": _f(_str), "out": _f(_str),
        "tree_depth": _f(int, _nonneg, ">= 0"), "tree_gauge": _f(_str),
        "c_tilde": _f(float, lambda v: 0 < v < 0.5, "(0, 1/2)"),
        "radius": _f(float, _positive, "> 0"), "root": _f(int, _nonneg, ">= 0"),
    },
    "test-perfectness": {
        "set": _f(_str), "gauge": _f(_str), "fit": _f(_str, lambda v: v.upper() in ("U1", "U2"), "U1|U2"),
        "r0": _f(float, _positive, "> 0"),
    },
    "kernel-profile": {
        "r": _f(_floats, lambda v: all(0 < x <= 0.5 for x in v), "values in (0, 1/2]"),
        "t": _f(_floats, lambda v: all(0 < x <= 0.5 for x in v), "values in (0, 1/2]"),
        "tol": _f(float, _positive, "> 0"),
    },
    "poincare-profile": {
        "domain": _f(_str), "n": _f(int, lambda v: v >= 2, ">= 2"),
        "c_probe": _f(float, _positive, "> 0"),
        "band": _f(_floats, lambda v: len(v) == 2 and 0 < v[0] < v[1], "two numbers 0 < lo < hi"),
    },
    "harmonic-bound": {
        "method": _f(_str, lambda v: v in ("chen", "lhmd1", "lhmd2", "annulus"), "chen|lhmd1|lhmd2|annulus"),
        "r": _f(float, _positive, "> 0"), "kappa": _f(float, lambda v: 0 < v < 1 / 16, "(0, 1/16)"),
        "profile": _f(_str), "c_kappa": _f(float, _positive, "> 0"),
        "gamma": _f(float, _positive, "> 0"), "eta": _f(float, _positive, "> 0"),
        "c3": _f(float, _positive, "> 0"), "inner": _f(float, _positive, "> 0"),
        "z_dist": _f(_floats, lambda v: all(x > 0 for x in v), "values > 0"),
        "r1": _f(float, _prob, "(0, 1)"), "upper": _f(float, _positive, "> 0"),
    },
    "content": {
        "gauge": _f(_str), "set": _f(_str), "depth": _f(int, lambda v: v >= 3, ">= 3"),
        "trials": _f(int, _positive, "> 0"), "seed": _f(int, _nonneg, ">= 0"),
        "factor": _f(float, lambda v: v >= 1, ">= 1"), "tree_gauge": _f(_str),
        "c_tilde": _f(float, lambda v: 0 < v < 0.5, "(0, 1/2)"), "radius": _f(float, _positive, "> 0"),
        "budget": _f(int, _positive, "> 0"),
    },
    "verify-theorems": {
        "checks": _f(_str), "seed": _f(int, _nonneg, ">= 0"), "trials": _f(int, _positive, "> 0"),
        "factor": _f(float, lambda v: v >= 1, ">= 1"),
        "gamma_scale": _f(float, _positive, "> 0"),
        "kernel_tol": _f(float, _positive, "> 0"),
        "tree_depth": _f(int, lambda v: 3 <= v <= 14, "[3, 14]"),
        "cantor_depth": _f(int, lambda v: 3 <= v <= 14, "[3, 14]"),
        "u2_l0": _f(float, _prob, "(0, 1)"), "u2_depth": _f(int, lambda v: 3 <= v <= 12, "[3, 12]"),
    },
}


def parse_value(section: str, key: str, raw: str) -> Any:
    try:
        conv, ok, rng = SCHEMA[section][key]
    except KeyError:
        raise ConfigError(f"unknown key {key!r} in section [{section}]") from None
    try:
        value = conv(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid value") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"[{section}] {key} must be finite")
    if not ok(value):
        raise ConfigError(f"[{section}] {key} = {raw!r} out of range ({rng})")
    return value


def load(path: str) -> dict:
    """Parse and validate a config file into ``{section: {key: value}}``."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out: dict = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        out[section] = {k: parse_value(section, k, v) for k, v in cp.items(section)}
    meta = out.get("meta", {})
    if "schema_version" not in meta:
        raise ConfigError("config needs [meta] schema_version")
    return out


# -- literals --------------------------------------------------------------------------

def _literal(text: str, allowed: dict) -> tuple:
    """Split ``name:k=v,k=v`` and convert each value with ``allowed[name][k]``."""
    name, _, body = text.strip().partition(":")
    if name not in allowed:
        raise ConfigError(f"unknown kind {name!r} in {text!r}; expected one of {sorted(allowed)}")
    params = {}
    for item in filter(None, (s.strip() for s in body.split(","))):
        k, eq, v = item.partition("=")
        k = k.strip()
        if not eq or k not in allowed[name]:
            raise ConfigError(f"unknown parameter {k!r} in {text!r}")
        try:
            params[k] = allowed[name][k](v.strip())
        except ValueError:
            raise ConfigError(f"bad value for {k!r} in {text!r}") from None
    return name, params


_SET_KEYS = {
    "u1": {"l0": float, "alpha": float, "depth": int},
    "u2": {"l0": float, "beta": float, "depth": int},
    "segment": {"n": int, "length": float},
    "circle": {"n": int, "radius": float},
}


def parse_set(text: str):
    """Build a set from ``u1:l0=0.1,alpha=2,depth=6``, ``segment:n=200``, ``file:PATH`` ..."""
    from . import cantor
    from .errors import ConstructionError, DomainError
    from .geometry import PlanarSetSample, read_point_cloud

    if text.startswith("file:"):
        return read_point_cloud(text[5:])
    name, p = _literal(text, _SET_KEYS)
    try:
        if name in ("u1", "u2"):
            exp_key = "alpha" if name == "u1" else "beta"
            missing = {"l0", exp_key, "depth"} - set(p)
            if missing:
                raise ConfigError(f"set literal {text!r} is missing {sorted(missing)}")
            if not 0 < p["l0"] < 1:
                raise ConfigError("l0 must lie in (0, 1)")
            if name == "u1" and not p["alpha"] > 1:
                raise ConfigError("alpha must exceed 1")
            if name == "u2" and not p["beta"] > 0:
                raise ConfigError("beta must be positive")
            if not 0 <= p["depth"] <= cantor.MAX_DEPTH:
                raise ConfigError(f"depth must lie in [0, {cantor.MAX_DEPTH}]")
            ctor = cantor.CantorIntervalSet.u1 if name == "u1" else cantor.CantorIntervalSet.u2
            return ctor(p["l0"], p[exp_key], p["depth"])
        n = p.get("n", 200)
        if n < 2:
            raise ConfigError("n must be at least 2")
        if name == "segment":
            return PlanarSetSample.segment((0, 0), (p.get("length", 1.0), 0), n)
        return PlanarSetSample.circle((0, 0), p.get("radius", 1.0), n)
    except (DomainError, ConstructionError) as exc:
        raise ConfigError(f"set literal {text!r}: {exc}") from exc


_DOMAIN_KEYS = {
    "punctured": {},
    "symmetric": {"R": float},
    "centered": {"r": float, "m": float},
    "round": {"a": float, "b": float, "cx": float, "cy": float},
}


def parse_domain(text: str):
    """``punctured``, ``symmetric:R=4``, ``centered:r=0.1,m=1`` or ``round:a=1,b=3,cx=0,cy=0``."""
    from . import kernels
    from .errors import DomainError
    from .geometry import Point

    name, p = _literal(text, _DOMAIN_KEYS)
    try:
        if name == "punctured":
            return kernels.PuncturedDisk()
        if name == "symmetric":
            return kernels.SymmetricAnnulus(p["R"])
        if name == "centered":
            return kernels.CenteredAnnulus(p["r"], p["m"])
        return kernels.RoundAnnulus(p["a"], p["b"], Point(p.get("cx", 0.0), p.get("cy", 0.0)))
    except KeyError as exc:
        raise ConfigError(f"domain literal {text!r} is missing {exc.args[0]}") from None
    except DomainError as exc:
        raise ConfigError(f"domain literal {text!r}: {exc}") from exc


_PROFILE_KEYS = {"power": {"C": float, "alpha": float}, "log": {"C": float, "beta": float}}


def parse_profile(text: str):
    """Capacity profile literal: ``power:C=1,alpha=1.5`` or ``log:C=1,beta=2``."""
    from .errors import DomainError
    from .harmonic import CapacityProfile

    name, p = _literal(text, _PROFILE_KEYS)
    try:
        if name == "power":
            return CapacityProfile.power_law(p.get("C", 1.0), p["alpha"])
        return CapacityProfile.log_corrected(p.get("C", 1.0), p["beta"])
    except KeyError as exc:
        raise ConfigError(f"profile literal {text!r} is missing {exc.args[0]}") from None
    except DomainError as exc:
        raise ConfigError(f"profile literal {text!r}: {exc}") from exc

"""Diffusivity profiles A(p), flux maps g(p) = p A(p) and source nonlinearities f(u).

Every profile exposes the scalar maps used downstream together with the
asymptotic descriptors (flux limit, tail exponent at infinity, exponent at the
origin) that decide which existence criterion applies.  Builtin families answer
those questions analytically; tabulated data answer them conservatively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, FluxSaturation, ValidationError
from .numerics import invert_increasing

G_INV_RTOL = 1e-10
G_INV_ATOL = 1e-14


@dataclass(frozen=True)
class FluxLimit:
    """Limit of g(p) as p -> infinity: ``value`` is None when infinite."""

    value: Optional[float] = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def finite(self) -> bool:
        return self.value is not None

    @property
    def kind(self) -> str:
        return "Finite" if self.finite else "Infinite"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, **self.diagnostics}


INFINITE_FLUX = FluxLimit(None)


# --------------------------------------------------------------------------
# diffusivity profiles
# --------------------------------------------------------------------------

class Profile:
    """Base class for A(p).  Subclasses are immutable dataclasses."""

    family = "abstract"
    p_domain_floor = 0.0

    # --- maps -------------------------------------------------------------
    def A(self, p):
        raise NotImplementedError

    def g(self, p):
        """Flux map p A(p); accepts scalars or arrays, g(0) = 0."""
        p = np.asarray(p, dtype=float)
        out = np.zeros_like(p)
        pos = p > 0
        out[pos] = p[pos] * self.A(p[pos])
        return out if out.ndim else float(out)

    def dg(self, p):
        """Derivative g'(p) for p > 0 (central difference unless overridden)."""
        p = np.asarray(p, dtype=float)
        h = 1e-6 * p
        return (self.g(p + h) - self.g(p - h)) / (2.0 * h)

    def _g_inverse_exact(self, q: float) -> Optional[float]:
        return None

    # --- asymptotics ------------------------------------------------------
    def flux_limit(self) -> FluxLimit:
        return INFINITE_FLUX

    def tail_exponent_m(self) -> Optional[float]:
        return None

    def origin_exponent_l(self) -> Optional[float]:
        return None

    @property
    def continuous_at_zero(self) -> bool:
        """Whether A extends continuously to p = 0 with a finite value."""
        return False

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Profile):
    """A(p) = 1: Laplacian / k-Hessian operators."""

    family = "constant"

    def A(self, p):
        return np.ones_like(np.asarray(p, dtype=float)) if np.ndim(p) else 1.0

    def g(self, p):
        p = np.asarray(p, dtype=float)
        return p.copy() if p.ndim else float(p)

    def dg(self, p):
        return np.ones_like(np.asarray(p, dtype=float)) if np.ndim(p) else 1.0

    def _g_inverse_exact(self, q):
        return q

    def tail_exponent_m(self):
        return 2.0

    @property
    def continuous_at_zero(self):
        return True

    def to_dict(self):
        return {"family": "constant"}


@dataclass(frozen=True)
class PowerLaw(Profile):
    """A(p) = p^(m-2), m > 1: the m-Laplacian / m-k-Hessian operators."""

    m: float
    family = "power_law"

    def __post_init__(self):
        if not self.m > 1:
            raise ValidationError(f"power_law requires m > 1 (got m={self.m})")

    def A(self, p):
        return np.asarray(p, dtype=float) ** (self.m - 2.0) if np.ndim(p) else float(p) ** (self.m - 2.0)

    def g(self, p):
        if np.ndim(p):
            return np.asarray(p, dtype=float) ** (self.m - 1.0)
        return float(p) ** (self.m - 1.0)

    def dg(self, p):
        return (self.m - 1.0) * np.asarray(p, dtype=float) ** (self.m - 2.0)

    def _g_inverse_exact(self, q):
        return q ** (1.0 / (self.m - 1.0))

    def tail_exponent_m(self):
        return float(self.m)

    def origin_exponent_l(self):
        return float(self.m) if self.m > 2 else None

    @property
    def continuous_at_zero(self):
        return self.m >= 2

    def to_dict(self):
        return {"family": "power_law", "m": self.m}


@dataclass(frozen=True)
class MeanCurvature(Profile):
    """A(p) = (1 + p^2)^(-1/2): the k-mean curvature operator."""

    family = "mean_curvature"

    def A(self, p):
        p = np.asarray(p, dtype=float)
        out = 1.0 / np.sqrt(1.0 + p * p)
        return out if out.ndim else float(out)

    def g(self, p):
        p = np.asarray(p, dtype=float)
        out = p / np.hypot(1.0, p)
        return out if out.ndim else float(out)

    def dg(self, p):
        p = np.asarray(p, dtype=float)
        return (1.0 + p * p) ** -1.5

    def _g_inverse_exact(self, q):
        if q >= 1.0:
            raise FluxSaturation(q, 1.0)
        return q / math.sqrt((1.0 - q) * (1.0 + q))

    def flux_limit(self):
        return FluxLimit(1.0)

    @property
    def continuous_at_zero(self):
        return True

    def to_dict(self):
        return {"family": "mean_curvature"}


@dataclass(frozen=True)
class GeneralizedMeanCurvature(Profile):
    """A(p) = (1 + p^2)^(-alpha), alpha < 1/2; tail exponent m = 2 - 2 alpha."""

    alpha: float
    family = "generalized_mean_curvature"

    def __post_init__(self):
        if not self.alpha < 0.5:
            raise ValidationError(
                f"generalized_mean_curvature requires alpha < 1/2 (got {self.alpha}); "
                "otherwise g(p) = pA(p) is not strictly increasing to infinity")

    def A(self, p):
        p = np.asarray(p, dtype=float)
        out = (1.0 + p * p) ** (-self.alpha)
        return out if out.ndim else float(out)

    def g(self, p):
        if not np.ndim(p):
            p = float(p)
            return p * (1.0 + p * p) ** (-self.alpha)
        p = np.asarray(p, dtype=float)
        return p * (1.0 + p * p) ** (-self.alpha)

    def dg(self, p):
        p = np.asarray(p, dtype=float)
        s = 1.0 + p * p
        return s ** (-self.alpha - 1.0) * (1.0 + (1.0 - 2.0 * self.alpha) * p * p)

    def tail_exponent_m(self):
        return 2.0 - 2.0 * self.alpha

    @property
    def continuous_at_zero(self):
        return True

    def to_dict(self):
        return {"family": "generalized_mean_curvature", "alpha": self.alpha}


@dataclass(frozen=True)
class SaturatingPower(Profile):
    """A(p) = p^(2m-2) (1 + p^(2m))^(-1/2), m > 1."""

    m: float
    family = "saturating_power"

    def __post_init__(self):
        if not self.m > 1:
            raise ValidationError(f"saturating_power requires m > 1 (got m={self.m})")

    def A(self, p):
        p = np.asarray(p, dtype=float)
        m = self.m
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            small = p ** (2 * m - 2) / np.sqrt(1.0 + p ** (2 * m))
            # p^(m-2) / sqrt(1 + p^(-2m)) avoids overflow of p^(2m)
            large = p ** (m - 2) / np.sqrt(1.0 + p ** (-2 * m))
        out = np.where(p <= 1.0, small, large)
        return out if out.ndim else float(out)

    def g(self, p):
        m = self.m
        if not np.ndim(p):
            p = float(p)
            if p <= 1.0:
                return p ** (2 * m - 1) / math.sqrt(1.0 + p ** (2 * m))
            return p ** (m - 1) / math.sqrt(1.0 + p ** (-2 * m))
        p = np.asarray(p, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            small = p ** (2 * m - 1) / np.sqrt(1.0 + p ** (2 * m))
            large = p ** (m - 1) / np.sqrt(1.0 + p ** (-2 * m))
        return np.where(p <= 1.0, small, large)

    def dg(self, p):
        p = np.asarray(p, dtype=float)
        m = self.m
        # d/dp log g = ((2m-1) + (m-1) p^(2m)) / (p (1 + p^(2m)))
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            w = np.where(p <= 1.0, p ** (2 * m), 1.0)
            winv = np.where(p <= 1.0, 1.0, p ** (-2 * m))
            logder = np.where(p <= 1.0,
                              ((2 * m - 1) + (m - 1) * w) / (1.0 + w),
                              ((2 * m - 1) * winv + (m - 1)) / (winv + 1.0)) / p
        return self.g(p) * logder

    def tail_exponent_m(self):
        return float(self.m)

    def origin_exponent_l(self):
        return 2.0 * self.m

    def to_dict(self):
        return {"family": "saturating_power", "m": self.m}


@dataclass(frozen=True, eq=False)
class Tabulated(Profile):
    """User samples of A on a strictly increasing p grid.

    The flux map g = pA is interpolated with a shape-preserving (PCHIP) cubic
    anchored at g(0) = 0, so monotonicity of the samples carries over to the
    interpolant.  A is available on [p_1, p_N]; g on [0, p_N].
    """

    p: tuple
    A_samples: tuple
    family = "tabulated"

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        a = np.asarray(self.A_samples, dtype=float)
        if p.ndim != 1 or p.shape != a.shape or p.size < 2:
            raise ValidationError("tabulated profile needs equal-length p and A arrays (>= 2 samples)")
        if not np.all(p > 0) or not np.all(np.diff(p) > 0):
            raise ValidationError("tabulated p samples must be positive and strictly increasing")
        if not np.all(a > 0) or not np.all(np.isfinite(a)):
            raise ValidationError("A must be positive and finite at every sample")
        gs = p * a
        if not np.all(np.diff(gs) > 0):
            raise ValidationError("flux map g(p) = pA(p) must be strictly increasing in p")
        object.__setattr__(self, "_interp",
                           PchipInterpolator(np.concatenate([[0.0], p]),
                                             np.concatenate([[0.0], gs]), extrapolate=False))

    @property
    def p_domain_floor(self):
        return float(self.p[0])

    @property
    def p_max(self) -> float:
        return float(self.p[-1])

    def _check(self, p, lo):
        arr = np.asarray(p, dtype=float)
        if np.any(arr < lo) or np.any(arr > self.p_max):
            raise DomainError(f"tabulated profile queried outside [{lo}, {self.p_max}]")
        return arr

    def A(self, p):
        arr = self._check(p, self.p_domain_floor)
        out = self._interp(arr) / arr
        return out if np.ndim(out) else float(out)

    def g(self, p):
        arr = self._check(p, 0.0)
        out = self._interp(arr)
        return out if np.ndim(out) else float(out)

    def dg(self, p):
        arr = self._check(p, 0.0)
        return self._interp.derivative()(arr)

    def flux_limit(self):
        p = np.asarray(self.p, dtype=float)
        gs = p * np.asarray(self.A_samples, dtype=float)
        last = gs[-1]
        if p[-1] >= 10.0 * p[0]:
            growth = last / float(self.g(p[-1] / 10.0))
            if growth >= 2.0:
                return FluxLimit(None, {"estimated": True, "last_decade_growth": growth})
            return FluxLimit(float(last), {"estimated": True, "last_decade_growth": growth,
                                           "flag": "tail growth below factor 2"})
        return FluxLimit(float(last), {"estimated": True, "flag": "samples span less than a decade"})

    def to_dict(self):
        return {"family": "tabulated", "p": list(self.p), "A": list(self.A_samples)}


def eval_A(profile: Profile, p: float) -> float:
    if p < 0:
        raise DomainError(f"A(p) needs p >= 0 (got {p})")
    if p == 0 and not profile.continuous_at_zero:
        raise DomainError(f"{profile.family}: A is not continuous at p = 0")
    return profile.A(p)


def eval_g(profile: Profile, p: float) -> float:
    if p < 0:
        raise DomainError(f"g(p) needs p >= 0 (got {p})")
    return profile.g(p)


def eval_g_inverse(profile: Profile, q: float, *, rtol: float = G_INV_RTOL,
                   atol: float = G_INV_ATOL, guess: Optional[float] = None,
                   exact: bool = True) -> float:
    """Invert the flux map: the p >= 0 with g(p) = q.

    Raises FluxSaturation when q reaches a finite flux limit.  Families with an
    elementary inverse use it unless ``exact=False``.
    """
    if q < 0 or math.isnan(q):
        raise DomainError(f"g^-1 needs q >= 0 (got {q})")
    if q == 0:
        return 0.0
    lim = profile.flux_limit()
    if lim.finite and q >= lim.value:
        raise FluxSaturation(q, lim.value)
    if math.isinf(q):
        return math.inf
    if exact:
        p = profile._g_inverse_exact(q)
        if p is not None:
            return p
    upper = profile.p_max if isinstance(profile, Tabulated) else 1e300
    if isinstance(profile, Tabulated) and q > profile.g(upper):
        raise DomainError(f"q={q} exceeds tabulated flux range")
    if guess is None and isinstance(profile, Tabulated):
        guess = upper
    # stopping on rtol * q alone is at least as tight as rtol * max(q, atol)
    return invert_increasing(profile.g, q, rtol=rtol, atol=min(atol, q), guess=guess,
                             upper_limit=upper if isinstance(profile, Tabulated) else 1e300)


def flux_limit(profile: Profile) -> FluxLimit:
    return profile.flux_limit()


def tail_exponent_m(profile: Profile) -> Optional[float]:
    return profile.tail_exponent_m()


def origin_exponent_l(profile: Profile) -> Optional[float]:
    return profile.origin_exponent_l()


# --------------------------------------------------------------------------
# nonlinearities
# --------------------------------------------------------------------------

POSITIVE = "PositiveHalfLine"
WHOLE = "WholeLine"

_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class TailDescriptor:
    """Asymptotic class of f at +infinity: PowerTail / ExpTail / ConstantTail / Unknown."""

    kind: str
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.kind == "PowerTail" and (self.gamma is None or self.gamma < 0):
            raise ValidationError("PowerTail requires gamma >= 0")

    def to_dict(self):
        d = {"kind": self.kind}
        if self.gamma is not None:
            d["gamma"] = self.gamma
        return d


class Nonlinearity:
    """Base class for the source term f."""

    family = "abstract"
    domain = POSITIVE

    def log_f(self, u):
        raise NotImplementedError

    def f(self, u):
        return np.exp(self.log_f(u))

    def tail(self) -> TailDescriptor:
        return TailDescriptor("Unknown")

    def in_domain(self, u: float) -> bool:
        return u > 0 if self.domain == POSITIVE else math.isfinite(u)

    def check_domain(self, u):
        if isinstance(u, float):
            if self.domain == POSITIVE and not u > 0:
                raise DomainError(f"{self.family}: f is defined for u > 0 only")
            return u
        arr = np.asarray(u, dtype=float)
        if self.domain == POSITIVE and np.any(arr <= 0):
            raise DomainError(f"{self.family}: f is defined for u > 0 only")
        return arr

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Power(Nonlinearity):
    """f(u) = u^gamma on u > 0, gamma >= 0."""

    gamma: float
    family = "power"
    domain = POSITIVE

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValidationError(f"f(u) = u^gamma must be non-decreasing: need gamma >= 0 (got {self.gamma})")

    def log_f(self, u):
        u = self.check_domain(u)
        if isinstance(u, float):
            return self.gamma * math.log(u)
        out = self.gamma * np.log(u)
        return out if out.ndim else float(out)

    def f(self, u):
        u = self.check_domain(u)
        if isinstance(u, float):
            return u ** self.gamma
        out = u ** self.gamma
        return out if out.ndim else float(out)

    def tail(self):
        return TailDescriptor("PowerTail", float(self.gamma))

    def to_dict(self):
        return {"family": "power", "gamma": self.gamma}


@dataclass(frozen=True)
class Exponential(Nonlinearity):
    """f(u) = e^u on the whole line."""

    family = "exponential"
    domain = WHOLE

    def log_f(self, u):
        if isinstance(u, float):
            return u
        out = np.asarray(u, dtype=float) * 1.0
        return out if out.ndim else float(out)

    def tail(self):
        return TailDescriptor("ExpTail")

    def to_dict(self):
        return {"family": "exponential"}


@dataclass(frozen=True)
class ConstantSource(Nonlinearity):
    """f(u) = c > 0."""

    c: float = 1.0
    domain: str = WHOLE
    family = "constant"

    def __post_init__(self):
        if not self.c > 0:
            raise ValidationError(f"f must be positive: constant c={self.c}")
        if self.domain not in (POSITIVE, WHOLE):
            raise ValidationError(f"unknown domain {self.domain!r}")

    def log_f(self, u):
        u = self.check_domain(u)
        if isinstance(u, float):
            return math.log(self.c)
        out = np.full(np.shape(u), math.log(self.c))
        return out if out.ndim else float(out)

    def f(self, u):
        u = self.check_domain(u)
        if isinstance(u, float):
            return float(self.c)
        out = np.full(np.shape(u), float(self.c))
        return out if out.ndim else float(out)

    def tail(self):
        return TailDescriptor("ConstantTail")

    def to_dict(self):
        return {"family": "constant", "c": self.c,
                "domain": "positive" if self.domain == POSITIVE else "whole"}


@dataclass(frozen=True, eq=False)
class TabulatedSource(Nonlinearity):
    """Samples of a positive non-decreasing f, interpolated monotonically."""

    u: tuple
    f_samples: tuple
    domain: str = POSITIVE
    family = "tabulated"

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        fv = np.asarray(self.f_samples, dtype=float)
        if u.ndim != 1 or u.shape != fv.shape or u.size < 2:
            raise ValidationError("tabulated f needs equal-length u and f arrays (>= 2 samples)")
        if not np.all(np.diff(u) > 0):
            raise ValidationError("tabulated u samples must be strictly increasing")
        if not np.all(fv > 0):
            raise ValidationError("f must be positive at every sample")
        if not np.all(np.diff(fv) >= 0):
            raise ValidationError("f must be monotone non-decreasing")
        if self.domain == POSITIVE and u[0] <= 0:
            raise ValidationError("positive-half-line f needs u samples > 0")
        object.__setattr__(self, "_interp", PchipInterpolator(u, fv, extrapolate=False))

    def f(self, u):
        arr = self.check_domain(u)
        if np.any(arr < self.u[0]) or np.any(arr > self.u[-1]):
            raise DomainError(f"tabulated f queried outside [{self.u[0]}, {self.u[-1]}]")
        out = self._interp(arr)
        return out if np.ndim(out) else float(out)

    def log_f(self, u):
        out = np.log(self.f(u))
        return out if np.ndim(out) else float(out)

    def to_dict(self):
        return {"family": "tabulated", "u": list(self.u), "f": list(self.f_samples),
                "domain": "positive" if self.domain == POSITIVE else "whole"}


def eval_f(nl: Nonlinearity, u: float) -> float:
    return nl.f(u)


def log_f_pow_k(nl: Nonlinearity, u, k: int):
    return k * nl.log_f(u)


def eval_f_pow_k(nl: Nonlinearity, u: float, k: int) -> float:
    """f(u)^k, formed as exp(k log f) so large arguments overflow to inf, not error."""
    lf = k * nl.log_f(u)
    if np.ndim(lf):
        with np.errstate(over="ignore"):
            return np.exp(lf)
    return math.exp(lf) if lf < _LOG_MAX else math.inf


# --------------------------------------------------------------------------
# construction from JSON objects
# --------------------------------------------------------------------------

_DOMAIN_NAMES = {"positive": POSITIVE, "PositiveHalfLine": POSITIVE,
                 "whole": WHOLE, "WholeLine": WHOLE}


def profile_from_dict(d: dict[str, Any]) -> Profile:
    fam = str(d.get("family", "")).lower()
    try:
        if fam == "constant":
            return Constant()
        if fam == "power_law":
            return PowerLaw(float(d["m"]))
        if fam == "mean_curvature":
            return MeanCurvature()
        if fam == "generalized_mean_curvature":
            return GeneralizedMeanCurvature(float(d["alpha"]))
        if fam == "saturating_power":
            return SaturatingPower(float(d["m"]))
        if fam == "tabulated":
            return Tabulated(tuple(map(float, d["p"])), tuple(map(float, d["A"])))
    except KeyError as exc:
        raise ValidationError(f"profile family {fam!r} is missing parameter {exc}") from None
    raise ValidationError(f"unknown profile family {d.get('family')!r}")


def nonlinearity_from_dict(d: dict[str, Any]) -> Nonlinearity:
    fam = str(d.get("family", "")).lower()
    domain = _DOMAIN_NAMES.get(d.get("domain"), None)
    if d.get("domain") is not None and domain is None:
        raise ValidationError(f"unknown domain {d.get('domain')!r}")
    try:
        if fam == "power":
            return Power(float(d["gamma"]))
        if fam == "exponential":
            return Exponential()
        if fam == "constant":
            return ConstantSource(float(d.get("c", 1.0)), domain or WHOLE)
        if fam == "tabulated":
            return TabulatedSource(tuple(map(float, d["u"])), tuple(map(float, d["f"])),
                                   domain or POSITIVE)
    except KeyError as exc:
        raise ValidationError(f"nonlinearity family {fam!r} is missing parameter {exc}") from None
    raise ValidationError(f"unknown nonlinearity family {d.get('family')!r}")

"""Existence / nonexistence verdicts for entire solutions.

Dispatch order: a finite flux limit settles nonexistence outright; a power-like
diffusivity tail together with a known tail class of f settles the question by
comparing exponents; everything else falls back to a numerical probe of the
generalized Keller-Osserman integral

    int^inf ( Psi^-1( int^s f^k ) )^-1 ds,

whose divergence is equivalent to existence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import HessianEntireError, ValidationError
from .numerics import GeometricCumulative, adaptive_gk
from .profiles import Nonlinearity, Profile, TailDescriptor, eval_f_pow_k
from .psi_transform import PsiTransform

EXISTENCE = "Existence"
NONEXISTENCE = "Nonexistence"
INCONCLUSIVE = "Inconclusive"

FLUX_LIMIT_FINITE = "FluxLimitFinite"
KO_DIVERGES = "KOIntegralDiverges"
KO_CONVERGES = "KOIntegralConverges"
POWER_LAW_EXPONENT = "PowerLawExponent"
NUMERIC_PROBE = "NumericProbe"

# probe calibration (not derived from theory)
SLOPE_DIV_THRESHOLD = 0.05
CTOL = 1e-6
RHO_CONVERGE = 0.8
RHO_DIVERGE = 0.9
GAMMA_EPS = 1e-12


@dataclass(frozen=True)
class Verdict:
    outcome: str
    rule: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.outcome == INCONCLUSIVE and self.rule != NUMERIC_PROBE:
            raise ValueError("an inconclusive verdict can only come from the numeric probe")

    def to_dict(self) -> dict:
        return {"outcome": self.outcome, "rule": self.rule, "diagnostics": self.diagnostics}


def default_lower_limit(a: Optional[float] = None) -> float:
    return max(1.0, (a if a is not None else 0.0) + 1.0)


class InnerIntegral:
    """s -> int_{s0}^{s} f^k(t) dt with panel caching for increasing s."""

    def __init__(self, nl: Nonlinearity, k: int, s0: float, rtol: float = 1e-12):
        if not nl.in_domain(s0):
            raise ValidationError(f"lower limit {s0} outside the domain of f")
        self.nl = nl
        self.k = int(k)
        self.s0 = float(s0)
        width = max(abs(self.s0), 1.0)
        self._cum = GeometricCumulative(self._integrand, self.s0, width, rtol=rtol)

    def _integrand(self, t):
        with np.errstate(over="ignore"):
            return eval_f_pow_k(self.nl, np.asarray(t, dtype=float), self.k)

    def __call__(self, s: float) -> float:
        if s < self.s0:
            raise ValidationError(f"inner integral needs s >= s0 ({s} < {self.s0})")
        return self._cum(s)


def inner_integral(nl: Nonlinearity, k: int, s: float, s0: float) -> float:
    return InnerIntegral(nl, k, s0)(s)


def classify_powerlaw(m: float, k: int, tail: TailDescriptor) -> Verdict:
    """Exponent rule for a diffusivity with A(p) ~ p^(m-2) at infinity.

    With f ~ u^gamma the inner integral grows like s^(k gamma + 1) and the
    outer integrand like s^-((k gamma + 1) / (k(m-1) + 1)); the integral
    diverges exactly when gamma <= m - 1.
    """
    if not m > 1:
        raise ValidationError(f"tail exponent m must exceed 1 (got {m})")
    diag = {"m": m, "k": k, "tail": tail.to_dict(), "threshold_gamma": m - 1.0}
    if tail.kind == "ConstantTail":
        return Verdict(EXISTENCE, POWER_LAW_EXPONENT, diag)
    if tail.kind == "ExpTail":
        return Verdict(NONEXISTENCE, POWER_LAW_EXPONENT, diag)
    if tail.kind != "PowerTail":
        raise ValidationError(f"no exponent rule for tail {tail.kind}")
    gamma = tail.gamma
    outer = (k * gamma + 1.0) / (k * (m - 1.0) + 1.0)
    diag.update({"inner_growth_exponent": k * gamma + 1.0, "outer_decay_exponent": outer,
                 "boundary": abs(gamma - (m - 1.0)) <= GAMMA_EPS})
    if gamma <= m - 1.0 + GAMMA_EPS:
        return Verdict(EXISTENCE, POWER_LAW_EXPONENT, diag)
    return Verdict(NONEXISTENCE, POWER_LAW_EXPONENT, diag)


def _vectorize(func: Callable[[float], float]):
    def wrapped(x):
        x = np.asarray(x, dtype=float)
        return np.array([func(float(v)) for v in x.ravel()]).reshape(x.shape)
    return wrapped


def divergence_probe(outer_integrand: Callable[[float], float], s0: float,
                     cutoffs: Optional[Sequence[float]] = None, *,
                     slope_div_threshold: float = SLOPE_DIV_THRESHOLD, ctol: float = CTOL,
                     rho_converge: float = RHO_CONVERGE, rho_diverge: float = RHO_DIVERGE,
                     quad_rtol: float = 1e-9) -> Verdict:
    """Decide whether int_{s0}^inf h(s) ds diverges from partial integrals at cutoffs.

    Partial integrals I(S_j) are accumulated decade by decade in the variable
    log s.  The last three cutoffs give the log-log slope of I; the per-cutoff
    increments give a contraction ratio.  Increments below ``ctol`` relative,
    or contracting geometrically (ratio <= rho_converge), mean convergence.
    A slope >= slope_div_threshold with non-contracting increments
    (ratio >= rho_diverge) means divergence.  Anything else is inconclusive.
    """
    if cutoffs is None:
        cutoffs = [s0 * 10.0 ** j for j in range(1, 7)]
    cutoffs = [float(c) for c in cutoffs]
    if len(cutoffs) < 3 or any(b <= a for a, b in zip([s0] + cutoffs, cutoffs)):
        raise ValidationError("need at least three ascending cutoffs above s0")
    h = _vectorize(outer_integrand)

    def in_log(u):
        s = s0 * np.exp(u)
        return h(s) * s

    partial = []
    total = 0.0
    lo = 0.0
    diag: dict = {"s0": s0, "cutoffs": cutoffs}
    try:
        for c in cutoffs:
            hi = math.log(c / s0)
            val, _ = adaptive_gk(in_log, lo, hi, rtol=quad_rtol, max_panels=400)
            total += val
            partial.append(total)
            lo = hi
    except (HessianEntireError, ArithmeticError, ValueError) as exc:
        diag.update({"partial_integrals": partial, "error": f"{type(exc).__name__}: {exc}"})
        return Verdict(INCONCLUSIVE, NUMERIC_PROBE, diag)

    I = np.array(partial)
    diag["partial_integrals"] = partial
    if not np.all(np.isfinite(I)) or I[-1] <= 0:
        diag["error"] = "non-finite or non-positive partial integrals"
        return Verdict(INCONCLUSIVE, NUMERIC_PROBE, diag)
    logs = np.log(np.asarray(cutoffs[-3:]))
    slope = float(np.polyfit(logs, np.log(I[-3:]), 1)[0])
    inc = np.diff(I)
    ratios = [float(inc[i + 1] / inc[i]) for i in range(max(0, len(inc) - 3), len(inc) - 1)
              if inc[i] > 0]
    rel_last = float(inc[-1] / I[-1])
    diag.update({"log_slope": slope, "increment_ratios": ratios,
                 "relative_last_increment": rel_last,
                 "thresholds": {"slope_div": slope_div_threshold, "ctol": ctol,
                                "rho_converge": rho_converge, "rho_diverge": rho_diverge}})
    if abs(rel_last) < ctol:
        diag["integral"] = "Converges"
        diag["criterion"] = "cauchy"
        return Verdict(NONEXISTENCE, KO_CONVERGES, diag)
    if ratios and max(ratios) <= rho_converge:
        rho = ratios[-1]
        diag["integral"] = "Converges"
        diag["criterion"] = "geometric_increments"
        diag["tail_estimate"] = float(inc[-1] * rho / (1.0 - rho))
        return Verdict(NONEXISTENCE, KO_CONVERGES, diag)
    if slope >= slope_div_threshold and ratios and min(ratios) >= rho_diverge:
        diag["integral"] = "Diverges"
        return Verdict(EXISTENCE, KO_DIVERGES, diag)
    diag["integral"] = "Undecided"
    return Verdict(INCONCLUSIVE, NUMERIC_PROBE, diag)


def ko_outer_integrand(profile: Profile, nl: Nonlinearity, k: int, s0: float,
                       inner_start: Optional[float] = None) -> Callable[[float], float]:
    """s -> 1 / Psi^-1( int_{inner_start}^{s} f^k ), inner_start defaulting to s0/2."""
    if inner_start is None:
        inner_start = 0.5 * s0 if s0 > 0 else s0 - 1.0
    transform = PsiTransform(profile, k)
    inner = InnerIntegral(nl, k, inner_start)

    def outer(s: float) -> float:
        y = inner(s)
        if math.isinf(y):
            return 0.0
        return 1.0 / transform.psi_inverse(y)
    return outer


def probe_ko_integral(profile: Profile, nl: Nonlinearity, k: int, s0: float = 1.0,
                      cutoff_decades: int = 6, **kwargs) -> Verdict:
    cutoffs = [s0 * 10.0 ** j for j in range(1, cutoff_decades + 1)]
    try:
        outer = ko_outer_integrand(profile, nl, k, s0)
    except HessianEntireError as exc:
        return Verdict(INCONCLUSIVE, NUMERIC_PROBE, {"error": f"{type(exc).__name__}: {exc}"})
    return divergence_probe(outer, s0, cutoffs, **kwargs)


def validate_problem(profile: Profile, nl: Nonlinearity, n: int, k: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"dimension n must be a positive integer (got {n!r})")
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= n:
        raise ValidationError(f"Hessian order must satisfy 1 <= k <= n (got k={k}, n={n})")
    if not isinstance(profile, Profile):
        raise ValidationError("A must be a Profile (g(p) = pA(p) continuous, strictly increasing)")
    if not isinstance(nl, Nonlinearity):
        raise ValidationError("f must be a Nonlinearity (positive, non-decreasing)")


def classify(profile: Profile, nl: Nonlinearity, n: int, k: int, *,
             s0: Optional[float] = None, cutoff_decades: int = 6) -> Verdict:
    validate_problem(profile, nl, n, k)
    limit = profile.flux_limit()
    if limit.finite:
        return Verdict(NONEXISTENCE, FLUX_LIMIT_FINITE,
                       {"flux_limit": limit.to_dict(), "domain": nl.domain})
    m = profile.tail_exponent_m()
    tail = nl.tail()
    if m is not None and tail.kind in ("PowerTail", "ExpTail", "ConstantTail"):
        return classify_powerlaw(m, k, tail)
    s0 = default_lower_limit() if s0 is None else s0
    verdict = probe_ko_integral(profile, nl, k, s0, cutoff_decades)
    verdict.diagnostics.update({"tail_exponent_m": m, "tail": tail.to_dict()})
    return verdict

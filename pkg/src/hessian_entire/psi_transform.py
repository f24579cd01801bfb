"""The transform Psi(p) = p g(p)^k - int_0^p g(t)^k dt and its inverse."""

from __future__ import annotations

import copy
import math
from typing import Optional

import numpy as np

from .errors import ConvergenceError, DomainError, RangeError
from .numerics import GeometricCumulative, invert_increasing
from .profiles import PowerLaw, Profile, Tabulated

# Below this abscissa g^k is replaced by its local power law.
_ORIGIN_WIDTH = 2.0 ** -60

PSI_INV_RTOL = 1e-10
PSI_INV_ATOL = 1e-300


class PsiTransform:
    """Psi for a fixed profile and Hessian order k, with a cached quadrature of int g^k.

    Not safe to share between threads while in use; call :meth:`clone` per task.
    """

    def __init__(self, profile: Profile, k: int, quad_rtol: float = 1e-13):
        if k < 1:
            raise DomainError("k must be >= 1")
        self.profile = profile
        self.k = int(k)
        self._origin_power = self._origin_slope() * self.k
        self._cum = GeometricCumulative(self._gk, _ORIGIN_WIDTH, _ORIGIN_WIDTH, rtol=quad_rtol)
        self._last_inverse: Optional[float] = None

    # ------------------------------------------------------------------
    def _gk(self, t):
        return np.asarray(self.profile.g(t), dtype=float) ** self.k

    def _origin_slope(self) -> float:
        """Exponent e with g(t) ~ c t^e as t -> 0."""
        prof = self.profile
        l = prof.origin_exponent_l()
        if l is not None:
            return l - 1.0
        if isinstance(prof, PowerLaw):
            return prof.m - 1.0
        if prof.continuous_at_zero:
            return 1.0
        w = _ORIGIN_WIDTH
        return math.log(prof.g(w) / prof.g(0.5 * w)) / math.log(2.0)

    @property
    def p_max(self) -> float:
        """Current ceiling of the cached quadrature partition."""
        return self._cum.ceiling

    def clone(self) -> "PsiTransform":
        return copy.deepcopy(self)

    # ------------------------------------------------------------------
    def integral(self, p: float) -> float:
        """int_0^p g(t)^k dt."""
        if p < 0:
            raise DomainError(f"Psi needs p >= 0 (got {p})")
        if p == 0:
            return 0.0
        head = min(p, _ORIGIN_WIDTH)
        origin = head * self.profile.g(head) ** self.k / (self._origin_power + 1.0)
        if p <= _ORIGIN_WIDTH:
            return origin
        return origin + self._cum(p)

    def psi(self, p: float) -> float:
        if p < 0:
            raise DomainError(f"Psi needs p >= 0 (got {p})")
        if p == 0:
            return 0.0
        top = p * self.profile.g(p) ** self.k
        if p <= _ORIGIN_WIDTH:
            e = self._origin_power
            return top * e / (e + 1.0)
        return max(top - self.integral(p), 0.0)

    __call__ = psi

    def psi_inverse(self, y: float, rtol: float = PSI_INV_RTOL) -> float:
        if y < 0 or math.isnan(y):
            raise DomainError(f"Psi^-1 needs y >= 0 (got {y})")
        if y == 0:
            return 0.0
        if math.isinf(y):
            if self.profile.flux_limit().finite:
                raise RangeError("Psi is bounded for a finite flux limit")
            return math.inf
        upper = self.profile.p_max if isinstance(self.profile, Tabulated) else 1e15
        if isinstance(self.profile, Tabulated) and y > self.psi(upper):
            raise RangeError(f"y={y} exceeds Psi on the tabulated range")
        try:
            p = invert_increasing(self.psi, y, rtol=rtol, atol=PSI_INV_ATOL,
                                  guess=self._last_inverse, upper_limit=upper)
        except ConvergenceError as exc:
            if self.profile.flux_limit().finite:
                raise RangeError(f"y={y} exceeds sup Psi for a bounded transform") from exc
            raise
        self._last_inverse = p
        return p

    def ratio_bounds(self, m: float, p_lo: float, p_hi: float, num: int = 61) -> tuple[float, float]:
        """min and max of Psi(p) / p^(k(m-1)+1) over a log grid on [p_lo, p_hi]."""
        if not 0 < p_lo < p_hi:
            raise DomainError("need 0 < p_lo < p_hi")
        expo = self.k * (m - 1.0) + 1.0
        ratios = [self.psi(p) / p ** expo for p in np.geomspace(p_lo, p_hi, num)]
        return min(ratios), max(ratios)


def psi(t: PsiTransform, p: float) -> float:
    return t.psi(p)


def psi_inverse(t: PsiTransform, y: float) -> float:
    return t.psi_inverse(y)


def psi_ratio_bounds(t: PsiTransform, m: float, p_lo: float, p_hi: float) -> tuple[float, float]:
    return t.ratio_bounds(m, p_lo, p_hi)

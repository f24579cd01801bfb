"""Quadrature and root-finding kernels used by the transform, classifier and solver.

Adaptive Gauss-Kronrod (7/15) panels with a geometric breakpoint cache, and a
safeguarded bisection/secant inversion of increasing scalar maps.
"""

from __future__ import annotations

import heapq
import math
from typing import Callable, Optional

import numpy as np

from .errors import ConvergenceError, QuadratureError

# QUADPACK 15-point Kronrod abscissae (non-negative half) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
# 7-point Gauss weights attached to the odd-indexed Kronrod nodes.
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[[9, 11, 13]] = _WG[2::-1]

ArrayFunc = Callable[[np.ndarray], np.ndarray]


def gk15(func: ArrayFunc, a: float, b: float) -> tuple[float, float]:
    """One Gauss-Kronrod panel on [a, b]; returns (Kronrod value, |K - G|)."""
    half = 0.5 * (b - a)
    center = 0.5 * (a + b)
    values = np.asarray(func(center + half * NODES), dtype=float)
    kronrod = half * float(KRONROD_WEIGHTS @ values)
    gauss = half * float(GAUSS_WEIGHTS @ values)
    return kronrod, abs(kronrod - gauss)


def adaptive_gk(func: ArrayFunc, a: float, b: float, rtol: float = 1e-13,
                atol: float = 0.0, max_panels: int = 2000) -> tuple[float, float]:
    """Globally adaptive Gauss-Kronrod quadrature of a vectorised integrand.

    Bisects the panel with the largest error estimate until the summed estimate
    drops below ``max(atol, rtol * |integral|)``.  Raises QuadratureError when
    the panel count exceeds ``max_panels``.
    """
    if b == a:
        return 0.0, 0.0
    if b < a:
        val, err = adaptive_gk(func, b, a, rtol, atol, max_panels)
        return -val, err
    val, err = gk15(func, a, b)
    heap = [(-err, a, b, val)]
    total, total_err = val, err
    panels = 1
    while total_err > max(atol, rtol * abs(total)):
        if not math.isfinite(total):
            return total, math.inf
        if panels >= max_panels:
            raise QuadratureError(
                f"panel budget {max_panels} exhausted on [{a}, {b}] "
                f"(estimate {total}, error {total_err})")
        neg_err, lo, hi, pval = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        lv, le = gk15(func, lo, mid)
        rv, re_ = gk15(func, mid, hi)
        total += lv + rv - pval
        total_err += le + re_ + neg_err
        heapq.heappush(heap, (-le, lo, mid, lv))
        heapq.heappush(heap, (-re_, mid, hi, rv))
        panels += 1
    # Re-sum to shed accumulated rounding from the running updates.
    total = math.fsum(item[3] for item in heap)
    return total, total_err


class GeometricCumulative:
    """Cumulative integral ``origin_value(x0) + int_{x0}^{x} func`` on doubling panels.

    Breakpoints are ``base * 2**j`` (or ``start + scale*(2**j - 1)`` when an
    additive start is used).  Completed panels are cached, so a sequence of
    calls at increasing ``x`` re-integrates only the final partial panel.
    """

    def __init__(self, func: ArrayFunc, start: float, first_width: float,
                 rtol: float = 1e-13, max_panels: int = 2000):
        if first_width <= 0:
            raise ValueError("first_width must be positive")
        self.func = func
        self.start = float(start)
        self.first_width = float(first_width)
        self.rtol = rtol
        self.max_panels = max_panels
        # _cum[j] = integral from start to breakpoint j
        self._cum = [0.0]

    def breakpoint(self, j: int) -> float:
        return self.start + self.first_width * (2.0 ** j - 1.0)

    @property
    def ceiling(self) -> float:
        return self.breakpoint(len(self._cum) - 1)

    def _panel_index(self, x: float) -> int:
        t = (x - self.start) / self.first_width + 1.0
        j = int(math.floor(math.log2(t))) if t >= 1.0 else 0
        # guard against rounding at exact breakpoints
        while j > 0 and self.breakpoint(j) > x:
            j -= 1
        while self.breakpoint(j + 1) <= x:
            j += 1
        return j

    def __call__(self, x: float) -> float:
        if x < self.start:
            raise ValueError(f"{x} below integration start {self.start}")
        if x == self.start:
            return 0.0
        j = self._panel_index(x)
        while len(self._cum) <= j:
            i = len(self._cum) - 1
            val, _ = adaptive_gk(self.func, self.breakpoint(i), self.breakpoint(i + 1),
                                 rtol=self.rtol, max_panels=self.max_panels)
            self._cum.append(self._cum[-1] + val)
        lo = self.breakpoint(j)
        if x == lo:
            return self._cum[j]
        part, _ = adaptive_gk(self.func, lo, x, rtol=self.rtol, max_panels=self.max_panels)
        return self._cum[j] + part


def invert_increasing(func: Callable[[float], float], target: float, *,
                      rtol: float = 1e-10, atol: float = 1e-14,
                      guess: Optional[float] = None, lower: float = 0.0,
                      upper_limit: float = 1e300, max_iter: int = 400) -> float:
    """Solve ``func(x) = target`` for a continuous strictly increasing ``func`` on [lower, inf).

    The bracket is grown geometrically from ``guess`` (default 1): the upper end
    doubles until ``func(hi) >= target`` and the lower end halves while it still
    overshoots.  The bracket is then closed by Illinois-modified secant steps,
    falling back to bisection when a secant step fails to halve the bracket.
    Stops when ``|func(x) - target| <= rtol * max(|target|, atol)``.
    """
    if guess is None or not (guess > lower) or not math.isfinite(guess):
        guess = max(1.0, lower + 1.0)
    tol = rtol * max(abs(target), atol)

    hi = guess
    fhi = func(hi)
    lo, flo = lower, None
    if fhi < target:
        while fhi < target:
            lo, flo = hi, fhi
            hi = 2.0 * hi if hi > 0 else 1.0
            if hi > upper_limit:
                raise ConvergenceError(
                    f"could not bracket target {target}: func({lo}) = {flo}")
            fhi = func(hi)
    else:
        # shrink towards the lower end while the point still overshoots
        while True:
            cand = lower + 0.5 * (hi - lower)
            if cand <= lower or cand == hi:
                break
            fc = func(cand)
            if fc >= target:
                hi, fhi = cand, fc
                if hi - lower < 1e-300:
                    break
            else:
                lo, flo = cand, fc
                break
    if flo is None:
        flo = func(lo)
    if abs(fhi - target) <= tol:
        return hi
    if abs(flo - target) <= tol:
        return lo

    # Illinois false position with bisection safeguard.
    side = 0
    width = hi - lo
    for _ in range(max_iter):
        denom = fhi - flo
        x = lo + (target - flo) * (hi - lo) / denom if denom > 0 else 0.5 * (lo + hi)
        if not (lo < x < hi):
            x = 0.5 * (lo + hi)
        fx = func(x)
        if abs(fx - target) <= tol:
            return x
        if fx < target:
            lo, flo = x, fx
            if side == -1:
                fhi = target + 0.5 * (fhi - target)
            side = -1
        else:
            hi, fhi = x, fx
            if side == 1:
                flo = target + 0.5 * (flo - target)
            side = 1
        if hi - lo > 0.5 * width:
            mid = 0.5 * (lo + hi)
            fm = func(mid)
            if abs(fm - target) <= tol:
                return mid
            if fm < target:
                lo, flo = mid, fm
            else:
                hi, fhi = mid, fm
            side = 0
        width = hi - lo
        if width <= 4.0 * np.finfo(float).eps * max(abs(hi), 1e-300):
            return 0.5 * (lo + hi)
    raise ConvergenceError(f"no convergence after {max_iter} iterations (target {target})")

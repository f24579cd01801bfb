"""Radial solutions of the implicit Cauchy problem

    g(phi'(r)) = F(r, phi) = ( n r^(k-n) / C(n,k) * int_0^r s^(n-1) f^k(phi(s)) ds )^(1/k),
    phi(0) = a,

built with an Euler broken line: phi is held at ``a`` on the first piece
[0, r_1], then advanced piecewise linearly with slope g^-1(F) taken at the left
end of each piece.  The running integral J(r) = int_0^r s^(n-1) f^k(phi) ds is
carried in log space and advanced exactly for the linear interpolant of f^k
against the weight s^(n-1).  Each step is repeated as two half steps; the
difference estimates the local error and the extrapolated value is kept.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from math import comb, lgamma
from typing import Optional

import numpy as np

from .errors import DomainError, FluxSaturation, InterpolationError, StepCollapse, ValidationError
from .profiles import Nonlinearity, Profile, eval_f_pow_k, eval_g_inverse, log_f_pow_k
from .symfunc import sigma_k_radial

GLOBAL = "Global"
BLOW_UP = "BlowUp"
FLUX_SATURATED = "FluxSaturated"

SCHEMA = "hessian-entire/v1"
CSV_COLUMNS = ("r", "phi", "dphi", "gflux", "residual")


@dataclass(frozen=True)
class StepPolicy:
    """Step control for the broken line.

    ``rtol``/``atol`` bound the half-step Richardson estimate of the local
    error in phi (and ``rtol`` the relative error in J).  ``eps_target`` bounds
    the slope defect on the first, constant piece.  ``fixed_h`` switches to
    the plain broken line on a uniform partition with no extrapolation.

    Once phi exceeds ``blowup_onset`` and its decade-crossing radii contract
    geometrically, the local tolerance relaxes to ``blowup_rtol`` so the march
    can reach ``overflow_guard`` in double precision; only the estimate of the
    blow-up radius matters past that point.
    """

    rtol: float = 1e-6
    atol: float = 1e-12
    eps_target: float = 1e-8
    h0: Optional[float] = None
    h_max_rel: float = 0.02
    growth_cap: float = 2.0
    h_min: float = 1e-15
    overflow_guard: float = 1e12
    blowup_rel: float = 1e-4
    blowup_onset: float = 1e6
    blowup_rtol: float = 1e-2
    max_steps: int = 2_000_000
    fixed_h: Optional[float] = None

    def __post_init__(self):
        if not self.h_min > 0:
            raise ValidationError("h_min must be positive")
        if self.fixed_h is not None and not self.fixed_h > 0:
            raise ValidationError("fixed_h must be positive")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "StepPolicy":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown step policy keys {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class Termination:
    kind: str
    radius: float
    bracket: Optional[tuple] = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "radius": self.radius}
        if self.bracket is not None:
            d["bracket"] = list(self.bracket)
        return d


@dataclass
class RadialSolution:
    grid: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    gflux: np.ndarray
    a: float
    termination: Termination
    n: int
    k: int
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("grid", "phi", "dphi", "gflux"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    def __len__(self):
        return len(self.grid)

    @property
    def limit_slope(self) -> float:
        """Estimate of (g o phi')'(0) from the first grid point."""
        return float(self.gflux[1] / self.grid[1])

    def termination_dict(self) -> dict:
        return {"schema": SCHEMA, "termination": self.termination.to_dict(),
                "a": self.a, "n": self.n, "k": self.k, "points": len(self.grid),
                "diagnostics": self.diagnostics}

    # ------------------------------------------------------------------
    def to_csv(self, residuals: Optional[np.ndarray] = None) -> str:
        if residuals is None:
            residuals = np.full(len(self.grid), np.nan)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in zip(self.grid, self.phi, self.dphi, self.gflux, residuals):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, termination: Optional[dict] = None, *, a: Optional[float] = None,
                 n: Optional[int] = None, k: Optional[int] = None) -> "RadialSolution":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != CSV_COLUMNS:
            raise ValidationError(f"solution CSV must have header {','.join(CSV_COLUMNS)}")
        data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
        meta = termination or {}
        term = meta.get("termination", {"kind": GLOBAL, "radius": float(data[-1, 0])})
        return cls(grid=data[:, 0], phi=data[:, 1], dphi=data[:, 2], gflux=data[:, 3],
                   a=float(meta.get("a", data[0, 1] if a is None else a)),
                   termination=Termination(term["kind"], float(term["radius"]),
                                           tuple(term["bracket"]) if term.get("bracket") else None),
                   n=int(meta.get("n", n)), k=int(meta.get("k", k)),
                   diagnostics=dict(meta.get("diagnostics", {})))

    def to_json(self) -> str:
        return json.dumps(self.termination_dict(), indent=2)


# --------------------------------------------------------------------------
# the right-hand side
# --------------------------------------------------------------------------

def _log_weights(r: float, h: float, n: int) -> tuple[float, float]:
    """log of int_r^{r+h} s^(n-1) (1-t) ds and int_r^{r+h} s^(n-1) t ds, t = (s-r)/h.

    Expanded binomially in t so every term is positive (no cancellation).
    """
    w0 = 0.0
    w1 = 0.0
    for j in range(n):
        c = comb(n - 1, j) * r ** (n - 1 - j) * h ** j
        w0 += c / ((j + 1) * (j + 2))
        w1 += c / (j + 2)
    return math.log(h * w0), math.log(h * w1)


def _logaddexp(x: float, y: float) -> float:
    if x == -math.inf:
        return y
    if y == -math.inf:
        return x
    if x < y:
        x, y = y, x
    return x + math.log1p(math.exp(y - x))


class _RHS:
    def __init__(self, profile: Profile, nl: Nonlinearity, n: int, k: int):
        self.profile = profile
        self.nl = nl
        self.n = n
        self.k = k
        self.log_c = math.log(comb(n, k))
        self.log_n = math.log(n)
        lim = profile.flux_limit()
        self.flux_cap = lim.value if lim.finite else math.inf

    def log_fk(self, u: float) -> float:
        if not math.isfinite(u):
            return math.inf
        return float(log_f_pow_k(self.nl, u, self.k))

    def flux(self, r: float, log_j: float) -> float:
        """F(r) from log J(r)."""
        lf = (self.log_n + (self.k - self.n) * math.log(r) + log_j - self.log_c) / self.k
        return math.exp(lf) if lf < 709.0 else math.inf

    def slope(self, q: float, guess: Optional[float] = None) -> float:
        if not math.isfinite(q):
            return math.inf
        return eval_g_inverse(self.profile, q, guess=guess)

    def advance(self, r, psi, log_j, slope, lf0, h):
        """One broken-line piece of length h; returns (psi, log J, log f^k at new psi)."""
        psi_new = psi + slope * h
        lf1 = self.log_fk(psi_new)
        lw0, lw1 = _log_weights(r, h, self.n)
        log_dj = _logaddexp(lf0 + lw0, lf1 + lw1)
        return psi_new, _logaddexp(log_j, log_dj), lf1


def rhs_F(profile: Profile, nl: Nonlinearity, n: int, k: int, r: float, history: float) -> float:
    """F(r, phi) given ``history`` = int_0^r s^(n-1) f^k(phi(s)) ds."""
    if not r > 0:
        raise DomainError("F is evaluated at r > 0")
    if history <= 0:
        return 0.0
    return _RHS(profile, nl, n, k).flux(r, math.log(history))


# --------------------------------------------------------------------------
# solver
# --------------------------------------------------------------------------

def _first_radius(rhs: _RHS, a: float, eps: float) -> float:
    """r_1 with F(r_1, a) = g(eps), i.e. slope g^-1(F) = eps on the first piece."""
    fa = math.exp(rhs.log_fk(a) / rhs.k)
    q = rhs.profile.g(eps)
    if rhs.flux_cap < math.inf:
        q = min(q, 0.5 * rhs.flux_cap)
    return comb(rhs.n, rhs.k) ** (1.0 / rhs.k) * q / fa


class _Crossings:
    """Radii at which phi first exceeds successive powers of ten."""

    def __init__(self):
        self.radii: list[float] = []
        self.next_decade: Optional[int] = None

    def update(self, r_prev, psi_prev, r, psi):
        if not psi > 0:
            return
        if self.next_decade is None:
            self.next_decade = max(0, math.floor(math.log10(psi)) + 1) if psi >= 1 else 0
            return
        while psi >= 10.0 ** self.next_decade:
            level = 10.0 ** self.next_decade
            t = (level - psi_prev) / (psi - psi_prev) if psi > psi_prev else 1.0
            self.radii.append(r_prev + min(max(t, 0.0), 1.0) * (r - r_prev))
            self.next_decade += 1

    def approaching_pole(self, r: float) -> bool:
        c = self.contraction()
        return c is not None and c[0] <= 0.9 and c[1] <= 1e-2 * r

    def contraction(self) -> Optional[tuple[float, float]]:
        if len(self.radii) < 3:
            return None
        r0, r1, r2 = self.radii[-3:]
        d1, d2 = r1 - r0, r2 - r1
        if d1 <= 0:
            return None
        return d2 / d1, d2


def solve(profile: Profile, nl: Nonlinearity, n: int, k: int, a: float, r_stop: float,
          policy: Optional[StepPolicy] = None) -> RadialSolution:
    """Integrate the radial Cauchy problem from phi(0) = a up to r_stop or termination."""
    policy = policy or StepPolicy()
    if not (isinstance(n, (int, np.integer)) and isinstance(k, (int, np.integer)) and 1 <= k <= n):
        raise ValidationError(f"need integers 1 <= k <= n (got k={k}, n={n})")
    if not nl.in_domain(a):
        raise DomainError(f"initial value a={a} outside the domain of f")
    if not r_stop > 0:
        raise ValidationError("r_stop must be positive")
    if policy.fixed_h is not None:
        return _solve_fixed(profile, nl, int(n), int(k), float(a), float(r_stop), policy)
    return _solve_adaptive(profile, nl, int(n), int(k), float(a), float(r_stop), policy)


def _start(rhs: _RHS, a: float, r1: float):
    """State at the end of the constant first piece psi = a on [0, r1]."""
    lf = rhs.log_fk(a)
    log_j = lf + rhs.n * math.log(r1) - math.log(rhs.n)
    flux = rhs.flux(r1, log_j)
    return lf, log_j, flux


def _finish(grid, phi, dphi, gflux, a, term, n, k, diag):
    return RadialSolution(grid=np.array(grid), phi=np.array(phi), dphi=np.array(dphi),
                          gflux=np.array(gflux), a=a, termination=term, n=n, k=k,
                          diagnostics=diag)


def _solve_fixed(profile, nl, n, k, a, r_stop, policy):
    rhs = _RHS(profile, nl, n, k)
    h = policy.fixed_h
    grid, phi, dphi, gflux = [0.0], [a], [0.0], [0.0]
    r1 = min(h, r_stop)
    lf, log_j, flux = _start(rhs, a, r1)
    r, psi = r1, a
    try:
        slope = rhs.slope(flux)
    except FluxSaturation:
        return _finish(grid, phi, dphi, gflux, a, Termination(FLUX_SATURATED, 0.0, (0.0, r1)),
                       n, k, {"steps": 0, "mode": "fixed"})
    grid.append(r); phi.append(psi); dphi.append(slope); gflux.append(flux)
    steps = 0
    # radii i*h, so no sliver step accumulates from repeated addition
    last = max(1, math.ceil(r_stop / h - 1e-9))
    while steps + 1 < last:
        r_next = min((steps + 2) * h, r_stop)
        step = r_next - r
        psi_new, log_j_new, lf_new = rhs.advance(r, psi, log_j, slope, lf, step)
        flux_new = rhs.flux(r + step, log_j_new)
        if not (math.isfinite(psi_new) and math.isfinite(flux_new)) or psi_new > policy.overflow_guard:
            term = Termination(BLOW_UP, r, (r, r + step))
            return _finish(grid, phi, dphi, gflux, a, term, n, k, {"steps": steps, "mode": "fixed"})
        try:
            slope = rhs.slope(flux_new, guess=slope)
        except FluxSaturation:
            term = Termination(FLUX_SATURATED, r, (r, r + step))
            return _finish(grid, phi, dphi, gflux, a, term, n, k, {"steps": steps, "mode": "fixed"})
        r, psi, log_j, lf = r_next, psi_new, log_j_new, lf_new
        grid.append(r); phi.append(psi); dphi.append(slope); gflux.append(flux_new)
        steps += 1
        if steps > policy.max_steps:
            raise StepCollapse("step budget exhausted", r=r, h=h)
    return _finish(grid, phi, dphi, gflux, a, Termination(GLOBAL, r), n, k,
                   {"steps": steps, "mode": "fixed"})


def _solve_adaptive(profile, nl, n, k, a, r_stop, policy):
    rhs = _RHS(profile, nl, n, k)
    r1 = min(_first_radius(rhs, a, policy.eps_target), 0.5 * r_stop)
    lf, log_j, flux = _start(rhs, a, r1)
    grid, phi, dphi, gflux = [0.0], [a], [0.0], [0.0]
    slope = rhs.slope(flux)
    r, psi = r1, a
    grid.append(r); phi.append(psi); dphi.append(slope); gflux.append(flux)

    h = policy.h0 if policy.h0 is not None else r1
    crossings = _Crossings()
    crossings.update(0.0, a, r, psi)
    diag = {"mode": "adaptive", "r1": r1, "steps": 0, "rejected": 0, "max_defect": 0.0}
    steps = rejected = 0

    def collapse_verdict(h_try):
        if rhs.flux_cap < math.inf:
            return Termination(FLUX_SATURATED, r, (r, r + h_try))
        # phi itself may grow only logarithmically (f = e^u); phi' and F still diverge
        if max(psi, slope, flux) > policy.overflow_guard:
            return Termination(BLOW_UP, r, (r, r + h_try))
        return None

    while r < r_stop:
        h = min(h, r_stop - r, policy.h_max_rel * r)
        floor = policy.h_min * max(r, 1e-300)
        if h < floor and r_stop - r > floor:
            term = collapse_verdict(h)
            if term is None:
                diag.update(steps=steps, rejected=rejected, phi=psi, flux=flux)
                raise StepCollapse(f"step {h:.3e} below floor at r={r:.6g}", r=r, h=h,
                                   diagnostics=diag)
            diag.update(steps=steps, rejected=rejected, crossings=crossings.radii[-5:])
            return _finish(grid, phi, dphi, gflux, a, term, n, k, diag)
        err = math.inf
        rtol = policy.rtol
        if psi > policy.blowup_onset and crossings.approaching_pole(r):
            rtol = max(rtol, policy.blowup_rtol)
        try:
            # full step
            p_full, j_full, _ = rhs.advance(r, psi, log_j, slope, lf, h)
            # two half steps
            hh = 0.5 * h
            p_mid, j_mid, lf_mid = rhs.advance(r, psi, log_j, slope, lf, hh)
            flux_mid = rhs.flux(r + hh, j_mid)
            slope_mid = rhs.slope(flux_mid, guess=slope)
            p_half, j_half, _ = rhs.advance(r + hh, p_mid, j_mid, slope_mid, lf_mid, hh)
            ok = all(math.isfinite(v) for v in (p_full, j_full, p_half, j_half))
        except FluxSaturation:
            ok = False
            saturated = True
        else:
            saturated = False
        if ok:
            # p_half - p_full = (h/2)(slope_mid - slope), formed without cancellation
            err_psi = (0.5 * h * abs(slope_mid - slope)
                       / (rtol * max(abs(p_half), abs(psi)) + policy.atol))
            ratio_j = math.exp(j_full - j_half)
            err_j = abs(ratio_j - 1.0) / rtol
            err = max(err_psi, err_j)
            scale = 2.0 - ratio_j
            ok = scale > 0 and err <= 1.0
        if not ok:
            rejected += 1
            if saturated or not math.isfinite(err):
                h *= 0.25
            else:
                h *= max(0.2, 0.9 / math.sqrt(err))
            continue
        # 2 p_half - p_full, written as a non-negative increment
        psi_new = psi + h * slope_mid
        log_j_new = j_half + math.log(scale)
        flux_new = rhs.flux(r + h, log_j_new)
        try:
            slope_new = rhs.slope(flux_new, guess=slope)
        except FluxSaturation:
            rejected += 1
            h *= 0.25
            continue
        if not (math.isfinite(psi_new) and math.isfinite(slope_new)):
            rejected += 1
            h *= 0.25
            continue
        diag["max_defect"] = max(diag["max_defect"], abs(slope_new - slope))
        r_prev, psi_prev = r, psi
        r, psi, log_j, flux, slope = r + h, psi_new, log_j_new, flux_new, slope_new
        lf = rhs.log_fk(psi)
        grid.append(r); phi.append(psi); dphi.append(slope); gflux.append(flux)
        steps += 1
        if steps > policy.max_steps:
            raise StepCollapse("step budget exhausted", r=r, h=h, diagnostics=diag)
        crossings.update(r_prev, psi_prev, r, psi)
        if psi > policy.overflow_guard:
            c = crossings.contraction()
            if c is not None and c[0] <= 0.9 and c[1] <= policy.blowup_rel * r:
                rho, d2 = c
                tail = d2 * rho / (1.0 - rho)
                diag.update(steps=steps, rejected=rejected, crossings=crossings.radii[-5:],
                            R_extrapolated=r + tail, contraction=rho)
                return _finish(grid, phi, dphi, gflux, a,
                               Termination(BLOW_UP, r, (r, r + max(tail, h))), n, k, diag)
        h *= min(policy.growth_cap, 0.9 / math.sqrt(max(err, 1e-12)))
    diag.update(steps=steps, rejected=rejected)
    return _finish(grid, phi, dphi, gflux, a, Termination(GLOBAL, r), n, k, diag)


# --------------------------------------------------------------------------
# diagnostics on a computed solution
# --------------------------------------------------------------------------

def _central_derivative(x: np.ndarray, y: np.ndarray, i: int) -> float:
    """Second-order three-point derivative on a non-uniform grid."""
    if 0 < i < len(x) - 1:
        h0, h1 = x[i] - x[i - 1], x[i + 1] - x[i]
        return (-h1 / (h0 * (h0 + h1)) * y[i - 1] + (h1 - h0) / (h0 * h1) * y[i]
                + h0 / (h1 * (h0 + h1)) * y[i + 1])
    if i == len(x) - 1 and i >= 2:
        h0, h1 = x[i - 1] - x[i - 2], x[i] - x[i - 1]
        return (h1 / (h0 * (h0 + h1)) * y[i - 2] - (h0 + h1) / (h0 * h1) * y[i - 1]
                + (h0 + 2 * h1) / (h1 * (h0 + h1)) * y[i])
    raise IndexError("central derivative needs an interior or trailing index")


def residual(sol: RadialSolution, nl: Nonlinearity, i: int) -> float:
    """sigma_k((g o phi')', g(phi')/r) - f^k(phi) at grid index i.

    At i = 0 both eigenvalues use the limit slope read off the first grid point.
    """
    if i == 0:
        c = sol.limit_slope
        return sigma_k_radial(c, c, sol.n, sol.k) - eval_f_pow_k(nl, sol.a, sol.k)
    d = _central_derivative(sol.grid, sol.gflux, i)
    b = sol.gflux[i] / sol.grid[i]
    return sigma_k_radial(d, b, sol.n, sol.k) - eval_f_pow_k(nl, float(sol.phi[i]), sol.k)


def residuals(sol: RadialSolution, nl: Nonlinearity, relative: bool = False) -> np.ndarray:
    out = np.empty(len(sol.grid))
    for i in range(len(sol.grid)):
        try:
            res = residual(sol, nl, i)
            if relative:
                res /= eval_f_pow_k(nl, float(sol.phi[i]), sol.k)
        except (IndexError, ZeroDivisionError, OverflowError):
            res = math.nan
        out[i] = res
    return out


def limit_slope_expected(nl: Nonlinearity, a: float, n: int, k: int) -> float:
    """(f^k(a) / C(n,k))^(1/k): the limit of g(phi'(r)) / r at the origin."""
    return (eval_f_pow_k(nl, a, k) / comb(n, k)) ** (1.0 / k)


def initial_slope_estimate(sol: RadialSolution, points: int = 5) -> float:
    """Extrapolate g(phi'(r))/r to r = 0 by a linear fit over the first grid points."""
    r = sol.grid[1:points + 1]
    s = sol.gflux[1:points + 1] / r
    if len(r) < 2:
        return float(s[0])
    slope, intercept = np.polyfit(r, s, 1)
    return float(intercept)


def origin_regularity_check(sol: RadialSolution, profile: Profile, l: Optional[float] = None) -> list:
    """phi''(r) r^((l-2)/(l-1)) over the first grid decade; empty when no origin exponent."""
    l = profile.origin_exponent_l() if l is None else l
    if l is None or not l > 2:
        return []
    r1 = sol.grid[1]
    out = []
    for i in range(2, len(sol.grid) - 1):
        r = sol.grid[i]
        if r > 10.0 * r1:
            break
        # phi'' = (g o phi')' / g'(phi')
        dflux = _central_derivative(sol.grid, sol.gflux, i)
        d2 = dflux / float(profile.dg(sol.dphi[i]))
        out.append(float(d2 * r ** ((l - 2.0) / (l - 1.0))))
    return out


def dominates(sol: RadialSolution, r, u) -> bool:
    """True when phi(|x|) >= u at every sampled radius inside the solution's range.

    Runtime form of the comparison principle against a blow-up solution.
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(r < 0) or np.any(r > sol.grid[-1]):
        raise InterpolationError("subsolution radii outside the solution grid")
    phi = np.interp(r, sol.grid, sol.phi)
    return bool(np.all(u <= phi))

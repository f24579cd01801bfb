"""Pointwise verification of u(x) = phi(|x|) against sigma_k(lambda) = f^k(u).

The matrix D_i(A(|Du|) D_j u) of a radial function is a x x^T + b I with
b = g(phi')/r and a = ((g o phi')' - b)/r^2.  Off-grid values come from a
cubic spline of log g(phi') against log r (phi itself from a Hermite spline on
(phi, phi')); the closed-form matrix is cross-checked against a central
difference Jacobian of the field x -> g(phi'(|x|)) x/|x|.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import InterpolationError
from .profiles import Nonlinearity, Profile, log_f_pow_k
from .radial_solver import SCHEMA, RadialSolution
from .symfunc import RadialMatrixCoeffs, in_gamma_k, radial_eigenvalues, sigma_k

EQ_TOL = 1e-4
EQ_TOL_ORIGIN = 1e-2
FLUX_TOL = 1e-6


@dataclass
class PointCheck:
    x: list
    r: float
    eigenvalues: list
    sigma_k_val: float
    f_val: float
    in_cone: bool
    fd_matrix_error: float
    ratio: float
    tol: float
    passed: bool
    flux_consistency: float = 0.0

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


class _Interpolant:
    def __init__(self, sol: RadialSolution):
        if len(sol.grid) < 3:
            raise InterpolationError("solution grid too short to interpolate")
        self.sol = sol
        self.r_max = float(sol.grid[-1])
        self.r1 = float(sol.grid[1])
        r = sol.grid[1:]
        q = sol.gflux[1:]
        if np.any(np.diff(sol.grid) <= 0):
            raise InterpolationError("solution grid must be strictly increasing")
        # log-log spline resolves fast growth; a corrupted (non-positive) flux falls back to linear
        self.loglog = bool(np.all(q > 0))
        if self.loglog:
            self._q = CubicSpline(np.log(r), np.log(q))
        else:
            self._q = CubicSpline(r, q)
        self._phi = CubicHermiteSpline(sol.grid, sol.phi, sol.dphi)
        self.c0 = float(sol.gflux[1] / sol.grid[1])

    def check(self, r: float):
        if r < 0 or r > self.r_max * (1 + 1e-12):
            raise InterpolationError(f"radius {r} outside the solution grid [0, {self.r_max}]")

    def flux(self, r: float) -> float:
        if r <= self.r1:
            return self.c0 * r
        if not self.loglog:
            return float(self._q(r))
        return float(np.exp(self._q(math.log(r))))

    def dflux(self, r: float) -> float:
        if r <= self.r1:
            return self.c0
        if not self.loglog:
            return float(self._q(r, 1))
        return self.flux(r) / r * float(self._q(math.log(r), 1))

    def phi(self, r: float) -> float:
        return float(self._phi(r))


def assemble_coeffs(sol: RadialSolution, r: float, interp: Optional[_Interpolant] = None) -> RadialMatrixCoeffs:
    interp = interp or _Interpolant(sol)
    interp.check(r)
    if r == 0:
        return RadialMatrixCoeffs(0.0, sol.limit_slope, 0.0)
    b = interp.flux(r) / r
    a = (interp.dflux(r) - b) / (r * r)
    return RadialMatrixCoeffs(a, b, float(r))


def _field_jacobian(interp: _Interpolant, x: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian of V(x) = g(phi'(|x|)) x / |x|."""
    n = len(x)
    r = float(np.linalg.norm(x))
    h = max(1e-5, 1e-3 * r)

    def field_at(y):
        ry = float(np.linalg.norm(y))
        if ry == 0:
            return np.zeros(n)
        return interp.flux(min(ry, interp.r_max)) * y / ry

    jac = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        jac[:, j] = (field_at(x + e) - field_at(x - e)) / (2 * h)
    return jac


def verify_point(sol: RadialSolution, profile: Profile, nl: Nonlinearity, n: int, k: int,
                 x: Sequence[float], interp: Optional[_Interpolant] = None,
                 eq_tol: float = EQ_TOL, origin_tol: float = EQ_TOL_ORIGIN) -> PointCheck:
    """Check sigma_k^(1/k) = f(u) and cone membership at x.

    The finite-difference error is recorded but does not decide ``passed``:
    with the fixed step max(1e-5, 1e-3 r) it measures the solution's own
    curvature scale as much as the closed form.
    """
    interp = interp or _Interpolant(sol)
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"point must have {n} coordinates")
    r = float(np.linalg.norm(x))
    c = assemble_coeffs(sol, r, interp)
    lam = radial_eigenvalues(c, n)
    # sigma_k(lam) = s^k sigma_k(lam / s) keeps fast-growing solutions finite
    s = max(abs(v) for v in lam)
    unit = [v / s for v in lam] if s > 0 else lam
    sk_unit = float(sigma_k(unit, k))
    log_s = math.log(s) if s > 0 else -math.inf
    cone = in_gamma_k(unit, k)
    phi = sol.a if r == 0 else interp.phi(r)
    log_f = float(log_f_pow_k(nl, phi, k)) / k
    sk = sk_unit * math.exp(k * log_s) if k * log_s < 709.0 else math.copysign(math.inf, sk_unit)
    f_val = math.exp(log_f) if log_f < 709.0 else math.inf
    ratio = math.exp(log_s + math.log(sk_unit) / k - log_f) if sk_unit > 0 else -math.inf

    fd_err = 0.0
    if r > 0:
        closed = c.a_coef * np.outer(x, x) + c.b_coef * np.eye(n)
        fd_err = float(np.max(np.abs(_field_jacobian(interp, x) - closed)) / max(s, 1e-300))

    # g(phi') stored in the solution must agree with the profile
    consistency = 0.0
    if r > 0:
        j = int(np.searchsorted(sol.grid, r))
        j = min(max(j, 1), len(sol.grid) - 1)
        gj = float(profile.g(sol.dphi[j]))
        consistency = abs(gj - sol.gflux[j]) / max(abs(sol.gflux[j]), 1e-300)

    tol = origin_tol if r <= 10.0 * interp.r1 else eq_tol
    passed = cone and abs(ratio - 1.0) <= tol and consistency <= FLUX_TOL
    return PointCheck(x=x.tolist(), r=r, eigenvalues=[float(v) for v in lam], sigma_k_val=sk,
                      f_val=f_val, in_cone=cone, fd_matrix_error=fd_err, ratio=ratio, tol=tol,
                      passed=bool(passed), flux_consistency=consistency)


@dataclass
class VerifyReport:
    checks: list
    passed: bool
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, "passed": self.passed, "summary": self.summary,
                "checks": [c.to_dict() for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def summary_line(self) -> str:
        s = self.summary
        return (f"{s['passes']}/{s['count']} checks passed; worst |ratio-1| = "
                f"{s['worst_ratio_error']:.3e}; worst fd error = {s['worst_fd_error']:.3e}")


def sample_points(sol: RadialSolution, n: int, sample_count: int, seed: int,
                  radii: Optional[Sequence[float]] = None) -> np.ndarray:
    """Log-uniform radii over the grid with uniformly random directions."""
    rng = np.random.default_rng(seed)
    if radii is None:
        lo, hi = math.log(sol.grid[1]), math.log(sol.grid[-1])
        radii = np.exp(rng.uniform(lo, hi, size=sample_count))
    radii = np.asarray(radii, dtype=float)
    dirs = rng.standard_normal((len(radii), n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs * radii[:, None]


def verify_report(sol: RadialSolution, profile: Profile, nl: Nonlinearity, n: int, k: int,
                  sample_count: int = 100, seed: int = 0,
                  radii: Optional[Sequence[float]] = None, **tols) -> VerifyReport:
    if sample_count < 1 and radii is None:
        raise ValueError("sample_count must be >= 1")
    interp = _Interpolant(sol)
    pts = sample_points(sol, n, sample_count, seed, radii)
    checks = [verify_point(sol, profile, nl, n, k, x, interp, **tols) for x in pts]
    passes = sum(c.passed for c in checks)
    ratio_errs = [abs(c.ratio - 1.0) for c in checks]
    summary = {"count": len(checks), "passes": passes, "failures": len(checks) - passes,
               "worst_ratio_error": max(ratio_errs),
               "worst_fd_error": max(c.fd_matrix_error for c in checks),
               "all_in_cone": all(c.in_cone for c in checks), "seed": seed,
               "worst_flux_consistency": max(c.flux_consistency for c in checks)}
    return VerifyReport(checks=checks, passed=passes == len(checks), summary=summary)

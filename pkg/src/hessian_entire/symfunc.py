"""Elementary symmetric functions, the Gamma_k cone and radial eigenvalues."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence

from .errors import DomainError


@dataclass(frozen=True)
class RadialMatrixCoeffs:
    """Coefficients of the radial matrix a * x x^T + b * I at radius r."""

    a_coef: float
    b_coef: float
    r: float


def elementary_symmetric(lam: Sequence, k: int) -> list:
    """All sigma_0..sigma_k of ``lam`` by the one-pass product recurrence.

    e_j <- e_j + lam_i * e_{j-1}, run for j descending; exact for integer or
    Fraction entries, O(n k) operations.
    """
    e = [1] + [0] * k
    for i, x in enumerate(lam):
        for j in range(min(i + 1, k), 0, -1):
            e[j] = e[j] + x * e[j - 1]
    return e


def sigma_k(lam: Sequence, k: int):
    n = len(lam)
    if not 1 <= k <= n:
        raise DomainError(f"sigma_k needs 1 <= k <= n (k={k}, n={n})")
    return elementary_symmetric(lam, k)[k]


def in_gamma_k(lam: Sequence, k: int) -> bool:
    """True iff sigma_l(lam) > 0 for l = 1..k (open cone, no tolerance)."""
    n = len(lam)
    if not 1 <= k <= n:
        raise DomainError(f"Gamma_k needs 1 <= k <= n (k={k}, n={n})")
    e = elementary_symmetric(lam, k)
    return all(e[l] > 0 for l in range(1, k + 1))


def radial_eigenvalues(c: RadialMatrixCoeffs, n: int) -> list:
    """Eigenvalues (a r^2 + b, b, ..., b) of a x x^T + b I with |x| = r."""
    if n < 1:
        raise DomainError("dimension n must be >= 1")
    if c.r < 0:
        raise DomainError("radius must be non-negative")
    return [c.a_coef * c.r * c.r + c.b_coef] + [c.b_coef] * (n - 1)


def sigma_k_radial(gp_prime: float, gp_over_r: float, n: int, k: int) -> float:
    """sigma_k of (x, y, ..., y): C(n-1,k-1) x y^(k-1) + C(n-1,k) y^k."""
    if not 1 <= k <= n:
        raise DomainError(f"sigma_k needs 1 <= k <= n (k={k}, n={n})")
    return comb(n - 1, k - 1) * gp_prime * gp_over_r ** (k - 1) + comb(n - 1, k) * gp_over_r ** k

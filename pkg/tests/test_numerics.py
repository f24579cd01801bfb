import math

import numpy as np
import pytest
from scipy import integrate

from hessian_entire.errors import ConvergenceError, QuadratureError
from hessian_entire.numerics import GeometricCumulative, adaptive_gk, gk15, invert_increasing


@pytest.mark.parametrize("degree", range(0, 23))
def test_gk15_exact_for_polynomials(degree):
    # the 15-point Kronrod rule integrates polynomials up to degree 22 exactly
    val, _ = gk15(lambda x: x ** degree, 0.0, 1.0)
    assert val == pytest.approx(1.0 / (degree + 1), rel=1e-13)


def test_gk15_error_estimate_vanishes_on_low_degree():
    _, err = gk15(lambda x: 3 * x ** 2 + 1, -1.0, 2.0)
    assert err < 1e-13


@pytest.mark.parametrize("func, a, b", [(np.exp, 0.0, 5.0), (lambda x: np.sqrt(x), 0.0, 2.0),
                                        (lambda x: 1 / (1 + x * x), -30.0, 30.0),
                                        (lambda x: np.sin(20 * x) ** 2, 0.0, 3.0)])
def test_adaptive_against_scipy(func, a, b):
    ref, _ = integrate.quad(func, a, b, epsabs=0, epsrel=1e-13, limit=500)
    val, _ = adaptive_gk(func, a, b, rtol=1e-12)
    assert val == pytest.approx(ref, rel=1e-11)


def test_adaptive_budget():
    with pytest.raises(QuadratureError):
        adaptive_gk(lambda x: np.sin(1.0 / np.maximum(x, 1e-300)), 0.0, 1.0, rtol=1e-15, max_panels=5)


def test_geometric_cumulative_matches_quad():
    cum = GeometricCumulative(lambda t: t ** 1.5, 0.0, 1.0)
    for x in (0.3, 1.0, 7.0, 1e3, 2.5):
        assert cum(x) == pytest.approx(x ** 2.5 / 2.5, rel=1e-12)
    # panels are cached up to the last breakpoint below the largest query
    assert 5e2 <= cum.ceiling <= 1e3


@pytest.mark.parametrize("target", [1e-12, 0.5, 3.0, 1e9])
def test_invert_increasing(target):
    p = invert_increasing(lambda x: x ** 3 + x, target)
    assert abs(p ** 3 + p - target) <= 1e-10 * target


def test_invert_non_smooth_at_zero():
    func = lambda x: math.sqrt(x)
    p = invert_increasing(func, 1e-4, atol=1e-300)
    assert p == pytest.approx(1e-8, rel=1e-9)


def test_invert_bracket_failure():
    with pytest.raises(ConvergenceError):
        invert_increasing(lambda x: 1 - 1 / (1 + x), 2.0, upper_limit=1e10)

import numpy as np
import pytest

from hessian_entire.errors import InterpolationError
from hessian_entire.profiles import (Constant, ConstantSource, Exponential, GeneralizedMeanCurvature,
                                     MeanCurvature, Power, PowerLaw, SaturatingPower)
from hessian_entire.radial_solver import RadialSolution, solve
from hessian_entire.symfunc import radial_eigenvalues
from hessian_entire.verifier import assemble_coeffs, sample_points, verify_point, verify_report


@pytest.fixture(scope="module")
def oracle():
    return solve(Constant(), ConstantSource(1.0), 3, 1, 1.0, 1.0)


def perturbed(sol, profile, amp=1e-2, freq=10.0):
    """phi + amp sin(freq r) with phi', g(phi') updated consistently."""
    r = sol.grid
    dphi = sol.dphi + amp * freq * np.cos(freq * r)
    return RadialSolution(grid=r, phi=sol.phi + amp * np.sin(freq * r), dphi=dphi,
                          gflux=np.asarray(profile.g(dphi)), a=sol.a, termination=sol.termination,
                          n=sol.n, k=sol.k)


class TestAssemble:
    def test_oracle_is_multiple_of_identity(self, oracle):
        for r in (0.05, 0.3, 0.9):
            c = assemble_coeffs(oracle, r)
            assert abs(c.a_coef) < 1e-8
            assert c.b_coef == pytest.approx(1 / 3, rel=1e-10)

    def test_origin_branch(self, oracle):
        c = assemble_coeffs(oracle, 0.0)
        lam = radial_eigenvalues(c, 3)
        assert lam[0] == lam[1] == lam[2] == pytest.approx(1 / 3, rel=1e-8)

    def test_repeated_eigenvalues(self):
        sol = solve(PowerLaw(2.5), Power(1.0), 4, 2, 1.0, 10.0)
        lam = radial_eigenvalues(assemble_coeffs(sol, 3.7), 4)
        assert lam[1] == lam[2] == lam[3] != lam[0]

    def test_outside_grid(self, oracle):
        with pytest.raises(InterpolationError):
            assemble_coeffs(oracle, 2.0)


def test_point_example(oracle):
    pc = verify_point(oracle, Constant(), ConstantSource(1.0), 3, 1, [0.5, 0.0, 0.0])
    assert pc.sigma_k_val == pytest.approx(1.0, rel=1e-10)
    assert pc.f_val == 1.0 and pc.in_cone and pc.passed


def test_origin_point(oracle):
    rep = verify_report(oracle, Constant(), ConstantSource(1.0), 3, 1, 1, seed=0, radii=[0.0])
    (pc,) = rep.checks
    assert pc.r == 0.0 and len(set(pc.eigenvalues)) == 1 and pc.in_cone and rep.passed


def test_oracle_report(oracle):
    rep = verify_report(oracle, Constant(), ConstantSource(1.0), 3, 1, 100, seed=3)
    assert rep.summary["passes"] == 100
    assert rep.summary["worst_fd_error"] <= 1e-4


CASES = [
    (PowerLaw(2.5), Power(1.0), 3, 2, 1e3),
    (PowerLaw(3.0), Power(2.5), 3, 2, 100.0),
    (Constant(), Power(3.0), 3, 1, 100.0),
    (MeanCurvature(), ConstantSource(1.0), 3, 1, 10.0),
    (GeneralizedMeanCurvature(0.25), Power(0.3), 4, 2, 100.0),
    (SaturatingPower(2.0), Exponential(), 3, 3, 100.0),
]


@pytest.mark.parametrize("profile, nl, n, k, r_stop", CASES, ids=lambda v: repr(v))
def test_accepted_solutions_pass(profile, nl, n, k, r_stop):
    sol = solve(profile, nl, n, k, 1.0, r_stop)
    rep = verify_report(sol, profile, nl, n, k, 100, seed=11)
    assert rep.passed, rep.summary_line()
    assert rep.summary["all_in_cone"]
    interior = [c for c in rep.checks if c.tol == 1e-4]
    assert interior and all(abs(c.ratio - 1) <= 1e-4 for c in interior)


def test_rotation_invariance():
    sol = solve(PowerLaw(2.5), Power(1.0), 4, 2, 1.0, 10.0)
    rng = np.random.default_rng(5)
    for r in (0.01, 0.7, 6.0):
        d1, d2 = rng.standard_normal((2, 4))
        p1 = verify_point(sol, PowerLaw(2.5), Power(1.0), 4, 2, r * d1 / np.linalg.norm(d1))
        p2 = verify_point(sol, PowerLaw(2.5), Power(1.0), 4, 2, r * d2 / np.linalg.norm(d2))
        assert p1.eigenvalues == pytest.approx(p2.eigenvalues, rel=1e-12)
        assert p1.ratio == pytest.approx(p2.ratio, rel=1e-12)
        assert p1.passed == p2.passed


def test_negative_control(oracle):
    bad = perturbed(oracle, Constant())
    rep = verify_report(bad, Constant(), ConstantSource(1.0), 3, 1, 100, seed=3)
    assert not rep.passed
    assert rep.summary["failures"] > 50


def test_flux_inconsistency_flagged(oracle):
    bad = RadialSolution(grid=oracle.grid, phi=oracle.phi, dphi=oracle.dphi * 1.01,
                         gflux=oracle.gflux, a=oracle.a, termination=oracle.termination, n=3, k=1)
    pc = verify_point(bad, Constant(), ConstantSource(1.0), 3, 1, [0.5, 0.0, 0.0])
    assert not pc.passed and pc.flux_consistency > 1e-3


def test_sampling_is_reproducible(oracle):
    a = sample_points(oracle, 3, 20, seed=9)
    b = sample_points(oracle, 3, 20, seed=9)
    assert np.array_equal(a, b)
    radii = np.linalg.norm(a, axis=1)
    assert np.all((radii >= oracle.grid[1]) & (radii <= oracle.grid[-1]))


def test_report_json(oracle):
    rep = verify_report(oracle, Constant(), ConstantSource(1.0), 3, 1, 5, seed=0)
    doc = rep.to_dict()
    assert doc["schema"] == "hessian-entire/v1" and len(doc["checks"]) == 5
    assert "5/5 checks passed" in rep.summary_line()

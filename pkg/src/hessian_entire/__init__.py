"""Entire solutions of generalized k-Hessian inequalities sigma_k(lambda(D_i(A(|Du|) D_j u))) >= f(u).

Profiles and nonlinearities, the Keller-Osserman classifier, a radial
broken-line solver and a pointwise verifier.
"""

from .errors import (ConvergenceError, DomainError, FluxSaturation, HessianEntireError,
                     InterpolationError, QuadratureError, RangeError, StepCollapse,
                     ValidationError)
from .ko_classifier import (EXISTENCE, INCONCLUSIVE, NONEXISTENCE, Verdict, classify,
                            classify_powerlaw, probe_ko_integral)
from .profiles import (Constant, ConstantSource, Exponential, FluxLimit, GeneralizedMeanCurvature,
                       MeanCurvature, Power, PowerLaw, SaturatingPower, Tabulated, TabulatedSource,
                       eval_A, eval_f, eval_f_pow_k, eval_g, eval_g_inverse, flux_limit,
                       nonlinearity_from_dict, origin_exponent_l, profile_from_dict,
                       tail_exponent_m)
from .psi_transform import PsiTransform, psi, psi_inverse, psi_ratio_bounds
from .radial_solver import RadialSolution, StepPolicy, solve
from .symfunc import in_gamma_k, radial_eigenvalues, sigma_k, sigma_k_radial
from .verifier import verify_point, verify_report

__version__ = "0.1.0"

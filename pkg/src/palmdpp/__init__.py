"""Finite-rank determinantal point processes for weighted spaces of
holomorphic functions: reproducing kernels, Palm conditioning, exact
sampling, multiplicative functionals, and Monte Carlo experiments."""

from ._accel import NUMBA_ACTIVE
from .errors import (ConfigError, DegenerateInputError, DomainError,
                     EnvelopeError, EvaluationError, NumericalError,
                     PalmDppError, QuadratureError, UnsupportedWeightError)
from .kernelspace import (BergmanClassical, Domain, FockGaussian, FockRadial,
                          KernelModel, QuadratureSpec, TabulatedRadial,
                          build_kernel, christ_bound_scan, k_correlation,
                          kernel_eval, monomial_norms, trace_quadrature,
                          weighted_kernel)
from .palm import (PalmAnchor, palm_downdate, palm_downdate_once,
                   relation_check_bergman, relation_check_fock,
                   vanishing_at_origin_subspace)
from .sampler import (Configuration, RngStream, batch_sample,
                      sample_moduli_hyperbolic, sample_palm,
                      sample_projection_dpp)
from .functionals import (GSpec, MCEstimate, RadialRegion, RadiusSchedule,
                          additive_functional, blaschke_modulus_sq,
                          condition_integrals, custom_radial_g,
                          expected_additive, expected_count,
                          fredholm_expectation, multiplicative_functional,
                          normalized_rn_weight, rational_modulus_sq,
                          regularized_log_functional, var_pi_f,
                          var_pi_f_quadrature)
from .experiments import (ExperimentReport, blaschke_divergence,
                          det_identity_sweep, moduli_law_check,
                          order_separation, rigidity_variance, rn_verify)

__version__ = "0.1.0"

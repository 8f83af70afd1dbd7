"""Numerical checks and experiments for the weighted estimates."""
from .appendix import appendix_check
from .exponents import ExponentReport, alpha_beta, improvement_region, sharp_fw_factor
from .goodlambda import (GoodLambdaConfig, good_lambda_experiment, jn_height_experiment,
                         random_coefficients)
from .kolmogorov import kolmogorov_check, kolmogorov_optimal_c, kolmogorov_variant_c
from .packing import carleson_packing_check, default_thetas, packing_budget
from .report import ExperimentReport, linear_fit, spread
from .testing import TestingResult, testing_constant, testing_experiment
from .theorems import (SweepConfig, lemma34_check, linearization_check, random_family,
                       sparse_form_identities, theorem_a_experiment, theorem_a_ratios,
                       theorem_b_experiment, theorem_b_ratio, theorem_sweep)

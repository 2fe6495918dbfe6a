"""U-statistics of functionals of i.i.d. sequences.

Exact generalized Hoeffding decomposition, dependence coefficients and
Monte Carlo checks of the LLN, LIL and CLT for order-two U-statistics.
"""
from .config import Config, load_config, parse_config
from .dependence import (DependenceProfile, delta_coefficient, dependence_profile, holder_theta_bound,
                         summability_report, theta_coefficient, variance_kernel_theta_bound)
from .errors import ConfigurationError, DegenerateVarianceError, NumericError
from .hoeffding import (LevelSystem, block_partition, decompose_level, generalized_decomposition, level_kernel,
                        pair_coverage)
from .kernels import (PairKernel, abs_diff_kernel, check_degeneracy, degenerate_part, get_kernel, kernel_mean,
                      linear_combination, product_kernel, projection_h1, sum_kernel, variance_kernel,
                      with_holder, zero_kernel)
from .limits import (ExperimentReport, clt_experiment, lil_statistic, lln_experiment, remainder_decay,
                     sigma_squared)
from .processes import (CUSTOM_EVALUATORS, InnovationSpec, SamplePath, ShiftFunctional, ShiftProcess,
                        generate_path, geometric_functional)
from .rng import Stream
from .ustat import expected_u, u_statistic, u_statistic_prefixes

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "DegenerateVarianceError", "NumericError", "Stream",
    "InnovationSpec", "ShiftFunctional", "ShiftProcess", "SamplePath", "CUSTOM_EVALUATORS", "generate_path",
    "geometric_functional",
    "PairKernel", "variance_kernel", "sum_kernel", "product_kernel", "zero_kernel", "abs_diff_kernel",
    "with_holder", "linear_combination", "get_kernel", "kernel_mean", "projection_h1", "degenerate_part",
    "check_degeneracy",
    "u_statistic", "u_statistic_prefixes", "expected_u",
    "LevelSystem", "level_kernel", "block_partition", "decompose_level", "generalized_decomposition",
    "pair_coverage",
    "theta_coefficient", "delta_coefficient", "holder_theta_bound", "variance_kernel_theta_bound",
    "dependence_profile", "DependenceProfile", "summability_report",
    "ExperimentReport", "sigma_squared", "clt_experiment", "lln_experiment", "lil_statistic", "remainder_decay",
    "Config", "load_config", "parse_config",
]

"""Variance-reduced proximal stochastic gradient methods with oracle accounting."""

from .algorithms import (AlgoParams, default_params, run_proxgd, run_proxsgd,
                         run_proxsvrg_plus, run_ssrgd, run_ssrgd_saddle)
from .core import (CompositeProblem, ConfigurationError, ContractViolation,
                   NumericOverflowError, OracleCounters, RunTrace,
                   UnsupportedOperation, component_gradient_batch,
                   evaluate_phi, full_gradient)
from .kernels import BACKEND as KERNEL_BACKEND
from .problems import (make_online, make_pl_quadratic, make_quadratic_l1,
                       make_quartic_saddle, make_robust_regression,
                       reference_optimum)
from .prox import BallIndicator, BoxIndicator, L1, Zero, gradient_mapping, prox_apply

__version__ = "0.1.0"

"""Derivative-free saddle-point search from function values alone.

An outer loop steps along the zeroth-order gradient estimate reflected across
the current unstable subspace; an inner loop tracks that subspace with
stochastic Hessian-vector estimates.
"""

from .eigensearch import (
    EigenSearchConfig,
    FixedIterations,
    ResidualBatch,
    eigen_search,
    eigen_step,
    orthonormalize,
    subspace_distance,
)
from .estimators import batch_residual, grad_estimate, hess_vec_estimate, hessian_estimate, make_rng
from .oracle import (
    EvaluationError,
    LinearNetSpec,
    ModRosenbrockParams,
    MullerBrownParams,
    Objective,
    construct_net_saddle,
    make_benchmark,
    make_implicit_2d,
    make_linear_net,
    make_mod_rosenbrock,
    make_muller_brown,
    make_quadratic,
    make_sum_of_sines,
)
from .saddlesearch import RunRecord, SaddleConfig, deterministic_saddle_search, saddle_search, saddle_step
from .schedules import Constant, CoupledSqrt, PowerLaw, schedule_eval

__version__ = "0.1.0"

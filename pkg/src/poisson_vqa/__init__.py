"""Variational quantum solving of discretized Poisson equations on a simulated statevector."""
from .grid import ProblemSpec, make_spec, spec_with_coefficients
from .estimator import DENSE, EXACT, SHOTS, EvalMode, LossEvaluator, parse_mode
from .vqa import AnsatzConfig, OptimizerConfig, depth_sweep, optimize

__all__ = ["ProblemSpec", "make_spec", "spec_with_coefficients", "DENSE", "EXACT", "SHOTS",
           "EvalMode", "LossEvaluator", "parse_mode", "AnsatzConfig", "OptimizerConfig",
           "depth_sweep", "optimize"]
__version__ = "0.1.0"

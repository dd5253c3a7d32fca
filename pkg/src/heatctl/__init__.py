"""Least-squares (damped Newton) null controls for the 1D semilinear heat equation."""
from .config import ExperimentConfig, parse_config
from .driver import IterationRecord, LeastSquaresDriver, RunConfig, convergence_order
from .fem import Grid, QuadGrid, build_quadrature
from .forward import ForwardConfig, null_control_report, solve_forward
from .nonlinearity import Nonlinearity, linear, paper_g, zero
from .weights import WeightParams, bundle

__all__ = [
    "ExperimentConfig", "parse_config", "IterationRecord", "LeastSquaresDriver", "RunConfig",
    "convergence_order", "Grid", "QuadGrid", "build_quadrature", "ForwardConfig",
    "null_control_report", "solve_forward", "Nonlinearity", "linear", "paper_g", "zero",
    "WeightParams", "bundle",
]
__version__ = "0.1.0"

"""Reduced-rank multivariate kernel ridge regression with Matern kernels."""

__version__ = "0.1.0"

from .kernel import KernelMatrix, KernelSpec, kernel_cross, kernel_matrix, matern_eval
from .nuclear import SolverOptions, SolverReport, fit_relaxed, nuclear_norm, svt
from .reduced_rank import ProjectionInfo, build_projection, fit_hard_rank, lambda_from_lambda1
from .ridge import (
    Dataset,
    FittedModel,
    NumericalError,
    effective_rank,
    fit_elementwise,
    predict,
    ridge_solve,
    training_objective,
)
from .simulate import SimConfig, SimResult, halton_points, l2_error, run_experiment
from .tuning import TuneGrid, TuneResult, default_grid, gcv_univariate, tune_validation

__all__ = [
    "KernelSpec", "KernelMatrix", "matern_eval", "kernel_matrix", "kernel_cross",
    "Dataset", "FittedModel", "NumericalError", "ridge_solve", "fit_elementwise",
    "predict", "effective_rank", "training_objective",
    "ProjectionInfo", "build_projection", "fit_hard_rank", "lambda_from_lambda1",
    "SolverOptions", "SolverReport", "nuclear_norm", "svt", "fit_relaxed",
    "TuneGrid", "TuneResult", "default_grid", "tune_validation", "gcv_univariate",
    "SimConfig", "SimResult", "halton_points", "l2_error", "run_experiment",
]

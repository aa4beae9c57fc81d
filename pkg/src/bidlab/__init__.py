"""Counterfactual bid-response estimation under bid selection bias.

Modules: ``synthdata`` (semi-synthetic data), ``netcore`` (numpy networks),
``estimators`` (seven methods), ``evaluation`` (MISE, policy error, Brier),
``experiment`` (bias sweep) and ``cli``.
"""

from . import estimators, evaluation, experiment, netcore, synthdata
from .estimators import METHODS, fit_method
from .evaluation import BidGrid, MetricsReport, evaluate
from .experiment import ExperimentConfig, run_cell, run_sweep
from .synthdata import (draw_bias, draw_ground_truth, generate_dataset, split,
                        synthesize_covariates)

__version__ = "0.1.0"

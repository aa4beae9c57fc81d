"""Bid-response estimators behind one contract: fit on factual data, predict mu_hat(b, x)."""

from .base import (ConfigurationError, DegenerateDataError, FittedModel, NaivePricing,
                   OracleModel, UnsupportedOperation, expand_grid, fit_naive, load_model,
                   save_model, select_by_brier, validation_brier)
from .forest import RF_GRID, RandomForestModel, fit_random_forest
from .linear import (GpsModel, HieModel, LogisticModel, fit_gps, fit_hie, fit_logistic,
                     gps_density, hie_features, irls)
from .neural import (DRNET_GRID, MLP_GRID, VCNET_GRID, NeuralModel, build_drnet, build_mlp,
                     build_vcnet, fit_drnet, fit_mlp, fit_vcnet, merge_empty_strata,
                     spline_basis, stratum_index)

METHODS = ("naive", "logistic", "random_forest", "mlp", "hie", "drnet", "vcnet")

FITTERS = {
    "naive": fit_naive,
    "logistic": fit_logistic,
    "random_forest": fit_random_forest,
    "mlp": fit_mlp,
    "hie": fit_hie,
    "drnet": fit_drnet,
    "vcnet": fit_vcnet,
}

DEFAULT_GRIDS = {
    "random_forest": RF_GRID,
    "mlp": MLP_GRID,
    "drnet": DRNET_GRID,
    "vcnet": VCNET_GRID,
}


def fit_method(method: str, train, validation, grid=None, seed: int = 0) -> FittedModel:
    """Fit one of ``METHODS`` by name."""
    try:
        fitter = FITTERS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}") from None
    if grid is None:
        grid = DEFAULT_GRIDS.get(method)
    return fitter(train, validation, grid, seed)

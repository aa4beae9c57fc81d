from __future__ import annotations

import itertools
import pickle
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from ..synthdata import GroundTruthSpec, PricingDataset


class UnsupportedOperation(RuntimeError):
    """The model cannot answer this query (e.g. bid response of naive pricing)."""


class DegenerateDataError(ValueError):
    """Training data cannot identify the model (single outcome class, constant bids)."""


class ConfigurationError(ValueError):
    pass


def as_rows(x) -> np.ndarray:
    x = np.asarray(getattr(x, "values", x), dtype=float)
    return x[None, :] if x.ndim == 1 else x


def broadcast_bids(b, n: int) -> np.ndarray:
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.size == 1:
        b = np.full(n, float(b[0]))
    if b.shape[0] != n:
        raise ValueError(f"got {b.shape[0]} bids for {n} rows")
    if np.any((b < 0.0) | (b > 1.0)):
        raise ValueError("bids must lie in [0, 1]")
    return b


class FittedModel:
    """Uniform contract: ``predict_response(b, x)`` gives acceptance probabilities."""

    method = "base"

    def __init__(self, chosen_hyperparameters: dict | None = None):
        self.chosen_hyperparameters = dict(chosen_hyperparameters or {})

    def _predict(self, b: np.ndarray, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_response(self, b, x):
        """mu_hat(b, x) for one row (returns float) or a matrix of rows."""
        single = np.ndim(getattr(x, "values", x)) == 1
        rows = as_rows(x)
        p = np.clip(self._predict(broadcast_bids(b, len(rows)), rows), 0.0, 1.0)
        return float(p[0]) if single else p

    def predict_curves(self, bids, x) -> np.ndarray:
        """Predicted responses with one row per covariate row and one column per bid."""
        rows = as_rows(x)
        bids = np.asarray(bids, dtype=float)
        n, m = len(rows), len(bids)
        stacked = np.repeat(rows, m, axis=0)
        p = self.predict_response(np.tile(bids, n), stacked)
        return np.asarray(p).reshape(n, m)


class NaivePricing(FittedModel):
    """Proposes each customer's factually assigned bid as the optimal bid."""

    method = "naive"

    def __init__(self, train: PricingDataset):
        super().__init__()
        self._lookup = {row.tobytes(): float(b) for row, b in zip(train.x, train.bids)}

    def _predict(self, b, x):
        raise UnsupportedOperation("naive pricing does not estimate a bid response")

    def factual_bid(self, x) -> float:
        key = np.asarray(x, dtype=float).tobytes()
        try:
            return self._lookup[key]
        except KeyError:
            raise UnsupportedOperation("naive pricing has no factual bid for an unseen row") from None

    def propose_bids(self, dataset: PricingDataset) -> np.ndarray:
        """Rows carry their own factual bid; that bid is the proposal."""
        return np.array(dataset.bids)


class OracleModel(FittedModel):
    """Wraps a known ground truth behind the model contract."""

    method = "oracle"

    def __init__(self, truth: GroundTruthSpec):
        super().__init__()
        self.truth = truth

    def _predict(self, b, x):
        return self.truth.response(b, x)

    def predict_curves(self, bids, x):
        return self.truth.curves(bids, as_rows(x))


def fit_naive(train: PricingDataset, validation=None, grid=None, seed=0) -> NaivePricing:
    return NaivePricing(train)


# --------------------------------------------------------------------------
# hyperparameter search


def expand_grid(grid: dict) -> list[dict]:
    keys = list(grid)
    return [dict(zip(keys, values)) for values in itertools.product(*(grid[k] for k in keys))]


def validation_brier(model: FittedModel, validation: PricingDataset) -> float:
    p = model.predict_response(validation.bids, validation.x)
    return float(np.mean((validation.outcomes - p) ** 2))


def select_by_brier(candidates: Iterable[tuple[dict, Callable[[], FittedModel]]],
                    validation: PricingDataset) -> FittedModel:
    """Fit every candidate and keep the lowest validation Brier score (first wins ties)."""
    best, best_score = None, np.inf
    for hyper, build in candidates:
        model = build()
        model.chosen_hyperparameters = dict(hyper)
        score = validation_brier(model, validation)
        if score < best_score:
            best, best_score = model, score
    if best is None:
        raise ConfigurationError("empty hyperparameter grid")
    best.validation_brier = best_score
    return best


def save_model(model: FittedModel, path) -> None:
    with Path(path).open("wb") as fh:
        pickle.dump({"method": model.method, "payload": model}, fh)


def load_model(path) -> FittedModel:
    with Path(path).open("rb") as fh:
        doc = pickle.load(fh)
    model = doc["payload"]
    if model.method != doc["method"]:
        raise ValueError("model file method tag does not match its payload")
    return model

"""Counterfactual (MISE, revenue MISE, policy error) and factual (Brier) metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .estimators import FittedModel, NaivePricing
from .synthdata import GroundTruthSpec, PricingDataset

GRID_POINTS = 65


class InapplicableMetricError(ValueError):
    """Metric is undefined for this model (bid-response metrics for naive pricing)."""


@dataclass(frozen=True)
class BidGrid:
    b_min: float
    b_max: float
    points: int = GRID_POINTS

    def __post_init__(self):
        if self.points < 2 or not self.b_min <= self.b_max:
            raise ValueError("grid needs >= 2 points and b_min <= b_max")

    @classmethod
    def from_bids(cls, bids, points: int = GRID_POINTS) -> "BidGrid":
        bids = np.asarray(bids, dtype=float)
        return cls(float(bids.min()), float(bids.max()), points)

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.b_min, self.b_max, self.points)

    @property
    def spacing(self) -> float:
        return (self.b_max - self.b_min) / (self.points - 1)


def integrate(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Row-wise composite Simpson rule over the last axis.

    Exact for piecewise cubics on an even number of intervals (the default
    65-point grid has 64); all weights are positive, so pointwise bounds on the
    integrand carry over to the integral.
    """
    return simpson(values, x=grid, axis=-1)


def _require_response(model):
    if isinstance(model, NaivePricing):
        raise InapplicableMetricError(f"metric not applicable to {model.method}")


def mise(model: FittedModel, test: PricingDataset, truth: GroundTruthSpec, grid: BidGrid) -> float:
    _require_response(model)
    b = grid.values
    err = (truth.curves(b, test.x) - model.predict_curves(b, test.x)) ** 2
    return float(np.mean(integrate(err, b)))


def mise_revenue(model: FittedModel, test: PricingDataset, truth: GroundTruthSpec,
                 grid: BidGrid) -> float:
    """MISE of expected revenue curves b * mu(b, x)."""
    _require_response(model)
    b = grid.values
    err = (b * (truth.curves(b, test.x) - model.predict_curves(b, test.x))) ** 2
    return float(np.mean(integrate(err, b)))


def argmax_revenue(curves: np.ndarray, bids: np.ndarray) -> np.ndarray:
    """Revenue-maximizing bid per row; np.argmax keeps the first (lowest) of tied bids."""
    return bids[np.argmax(curves * bids, axis=-1)]


def optimal_bid(responder: Callable, grid: BidGrid | np.ndarray) -> float:
    """argmax over the grid of b * responder(b), ties toward the lower bid."""
    b = grid.values if isinstance(grid, BidGrid) else np.asarray(grid, dtype=float)
    p = np.array([responder(v) for v in b], dtype=float)
    return float(argmax_revenue(p, b))


def optimal_bids(model: FittedModel, x, grid: BidGrid) -> np.ndarray:
    b = grid.values
    return argmax_revenue(model.predict_curves(b, x), b)


def policy_error(model: FittedModel, test: PricingDataset, truth: GroundTruthSpec,
                 grid: BidGrid) -> float:
    b = grid.values
    best = argmax_revenue(truth.curves(b, test.x), b)
    if isinstance(model, NaivePricing):
        proposed = model.propose_bids(test)
    else:
        proposed = optimal_bids(model, test.x, grid)
    return float(np.mean((best - proposed) ** 2))


def brier(model: FittedModel, test: PricingDataset, grid: BidGrid | None = None) -> float:
    """Factual Brier score; with a grid, test bids are clamped to its range."""
    _require_response(model)
    bids = np.asarray(test.bids)
    if grid is not None:
        bids = np.clip(bids, grid.b_min, grid.b_max)
    p = model.predict_response(bids, test.x)
    return float(np.mean((test.outcomes - p) ** 2))


@dataclass(frozen=True)
class MetricsReport:
    """``None`` marks a metric that does not apply to the model."""

    mise: float | None
    mise_r: float | None
    pe: float | None
    bs: float | None

    FIELDS = ("mise", "mise_r", "pe", "bs")

    def get(self, metric: str) -> float | None:
        if metric not in self.FIELDS:
            raise ValueError(f"unknown metric {metric!r}; expected one of {self.FIELDS}")
        return getattr(self, metric)

    def to_record(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}

    @classmethod
    def from_record(cls, rec: dict) -> "MetricsReport":
        return cls(*(None if rec.get(k) in (None, "", "n.a.") else float(rec[k]) for k in cls.FIELDS))


def evaluate(model: FittedModel, test: PricingDataset, truth: GroundTruthSpec,
             grid: BidGrid) -> MetricsReport:
    pe = policy_error(model, test, truth, grid)
    if isinstance(model, NaivePricing):
        return MetricsReport(None, None, pe, None)
    return MetricsReport(mise(model, test, truth, grid), mise_revenue(model, test, truth, grid),
                         pe, brier(model, test, grid))

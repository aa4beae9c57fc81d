"""Logistic regression and the Hirano-Imbens generalized propensity score estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..netcore import sigmoid
from ..synthdata import PricingDataset
from .base import DegenerateDataError, FittedModel

RIDGE = 1e-6


def _penalized_nll(coef, z, y, ridge):
    eta = z @ coef
    return float(np.sum(np.logaddexp(0.0, eta) - y * eta) + 0.5 * ridge * coef[1:] @ coef[1:])


def irls(z: np.ndarray, y: np.ndarray, ridge: float = RIDGE, max_iter: int = 100,
         tol: float = 1e-10) -> np.ndarray:
    """Ridge-stabilized Newton/IRLS for logistic regression.

    ``z`` must carry an intercept column first; the intercept is not penalized.
    """
    y = np.asarray(y, dtype=float)
    if y.min() == y.max():
        raise DegenerateDataError("logistic regression needs both outcome classes")
    k = z.shape[1]
    penalty = np.full(k, ridge)
    penalty[0] = 0.0
    coef = np.zeros(k)
    mean = y.mean()
    coef[0] = math.log(mean / (1.0 - mean))
    obj = _penalized_nll(coef, z, y, ridge)
    for _ in range(max_iter):
        p = sigmoid(z @ coef)
        w = np.maximum(p * (1.0 - p), 1e-12)
        grad = z.T @ (p - y) + penalty * coef
        hess = (z * w[:, None]).T @ z + np.diag(penalty)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        t = 1.0
        while True:
            trial = coef - t * step
            trial_obj = _penalized_nll(trial, z, y, ridge)
            if trial_obj <= obj + 1e-12 * abs(obj) or t < 1e-10:
                break
            t *= 0.5
        coef, prev = trial, obj
        obj = trial_obj
        if np.max(np.abs(t * step)) < tol or abs(prev - obj) <= tol * max(1.0, abs(obj)):
            break
    if not np.all(np.isfinite(coef)):
        raise DegenerateDataError("logistic fit produced non-finite coefficients")
    return coef


def with_intercept(z: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((len(z), 1)), z])


class LogisticModel(FittedModel):
    """Logistic regression on [x, b] with intercept."""

    method = "logistic"

    def __init__(self, coef: np.ndarray):
        super().__init__()
        self.coef = np.asarray(coef, dtype=float)

    def _predict(self, b, x):
        return sigmoid(with_intercept(np.column_stack([x, b])) @ self.coef)


def fit_logistic(train: PricingDataset, validation=None, grid=None, seed=0) -> LogisticModel:
    z = with_intercept(np.column_stack([train.x, train.bids]))
    return LogisticModel(irls(z, train.outcomes))


# --------------------------------------------------------------------------
# Hirano-Imbens


@dataclass(frozen=True)
class GpsModel:
    coefficients: np.ndarray  # intercept first
    residual_sd: float

    def mean(self, x) -> np.ndarray:
        return with_intercept(np.atleast_2d(x)) @ self.coefficients


def fit_gps(x: np.ndarray, bids: np.ndarray) -> GpsModel:
    """Ordinary least squares of the bid on the covariates, normal residuals."""
    z = with_intercept(x)
    coef, *_ = np.linalg.lstsq(z, bids, rcond=None)
    resid = bids - z @ coef
    dof = max(len(bids) - z.shape[1], 1)
    sd = math.sqrt(float(resid @ resid) / dof)
    if not np.isfinite(sd) or sd <= 1e-12:
        raise DegenerateDataError("bid model has zero residual variance")
    return GpsModel(coef, sd)


def gps_density(gps: GpsModel, b, x) -> np.ndarray:
    """Normal density of ``b`` given covariates under the fitted bid model."""
    z = (np.asarray(b, dtype=float) - gps.mean(x)) / gps.residual_sd
    return np.exp(-0.5 * z * z) / (gps.residual_sd * math.sqrt(2.0 * math.pi))


def hie_features(b, r) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    r = np.asarray(r, dtype=float)
    return np.column_stack([b, b * b, r, r * r, b * r])


class HieModel(FittedModel):
    """Outcome model on a quadratic in (bid, GPS); GPS re-evaluated at the queried bid."""

    method = "hie"

    def __init__(self, gps: GpsModel, coef: np.ndarray):
        super().__init__()
        self.gps = gps
        self.coef = np.asarray(coef, dtype=float)

    def _predict(self, b, x):
        r = gps_density(self.gps, b, x)
        return sigmoid(with_intercept(hie_features(b, r)) @ self.coef)


def fit_hie(train: PricingDataset, validation=None, grid=None, seed=0) -> HieModel:
    gps = fit_gps(train.x, train.bids)
    r = gps_density(gps, train.bids, train.x)
    coef = irls(with_intercept(hie_features(train.bids, r)), train.outcomes)
    return HieModel(gps, coef)

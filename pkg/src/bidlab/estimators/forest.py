from __future__ import annotations

import numpy as np
from sklearn.ensemble import RandomForestClassifier

from ..synthdata import PricingDataset
from .base import FittedModel, select_by_brier, expand_grid

RF_GRID = {"n_trees": [100, 500], "max_depth": [None, 10]}


class RandomForestModel(FittedModel):
    """Bootstrap Gini forest on [x, b]; prediction is the mean positive-leaf fraction."""

    method = "random_forest"

    def __init__(self, forest: RandomForestClassifier | None, constant: float | None = None):
        super().__init__()
        self.forest = forest
        self.constant = constant

    def _predict(self, b, x):
        if self.forest is None:
            return np.full(len(x), self.constant)
        return self.forest.predict_proba(np.column_stack([x, b]))[:, 1]


def _tree_root_seed(seed: int) -> int:
    # sklearn derives per-tree seeds from a 32-bit root
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


def _fit_one(train: PricingDataset, n_trees: int, max_depth, seed: int,
             max_features="sqrt") -> RandomForestModel:
    y = train.outcomes
    if y.min() == y.max():
        return RandomForestModel(None, float(y[0]))
    forest = RandomForestClassifier(
        n_estimators=n_trees, criterion="gini", max_depth=max_depth, max_features=max_features,
        bootstrap=True, random_state=_tree_root_seed(seed), n_jobs=1)
    forest.fit(np.column_stack([train.x, train.bids]), y.astype(int))
    return RandomForestModel(forest)


def fit_random_forest(train: PricingDataset, validation: PricingDataset, grid=None,
                      seed: int = 0) -> RandomForestModel:
    grid = RF_GRID if grid is None else grid
    candidates = [(hp, lambda hp=hp: _fit_one(train, hp["n_trees"], hp["max_depth"], seed,
                                              hp.get("max_features", "sqrt")))
                  for hp in expand_grid(grid)]
    return select_by_brier(candidates, validation)

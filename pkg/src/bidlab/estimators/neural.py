"""Neural bid-response models: plain MLP, DRNet (stratum heads), VCNet (spline heads)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .. import netcore
from ..netcore import AppendBid, Dense, MixtureDense, Network, TrainConfig
from ..synthdata import PricingDataset, make_rng
from .base import ConfigurationError, FittedModel, expand_grid, validation_brier

log = logging.getLogger(__name__)

MLP_GRID = {
    "hidden_layers": [2],
    "width": [32, 48],
    "batch_size": [64, 128],
    "steps": [1000, 2000],
    "learning_rate": [0.01, 0.05],
}
DRNET_GRID = {
    "strata": [10],
    "representation_layers": [2],
    "inference_layers": [2],
    "width": [32, 48],
    "batch_size": [64, 128],
    "steps": [1000, 2000],
    "learning_rate": [0.01, 0.05],
}
VCNET_GRID = {
    "body_layers": [2],
    "width": [32, 48],
    "batch_size": [64, 128],
    "steps": [1000, 2000],
    "learning_rate": [0.01, 0.05],
}

SPLINE_KNOTS = (1.0 / 3.0, 2.0 / 3.0)
SPLINE_DEGREE = 2


def spline_basis(b):
    """Truncated power basis [1, b, b^2, (b - 1/3)_+^2, (b - 2/3)_+^2]."""
    b = np.asarray(b, dtype=float)
    cols = [np.ones_like(b), b, b * b]
    cols += [np.maximum(b - k, 0.0) ** SPLINE_DEGREE for k in SPLINE_KNOTS]
    return np.stack(cols, axis=-1)


def stratum_index(b, strata: int):
    """floor(b * strata), with b = 1 falling in the last stratum."""
    idx = np.minimum(np.floor(np.asarray(b, dtype=float) * strata).astype(int), strata - 1)
    return int(idx) if idx.ndim == 0 else idx


@dataclass(frozen=True)
class SplineMixing:
    def __call__(self, bids):
        return spline_basis(bids)


@dataclass(frozen=True)
class StrataMixing:
    """One-hot head selection; ``head_of[s]`` maps even stratum s to its (merged) head."""

    strata: int
    head_of: tuple[int, ...]

    @property
    def n_heads(self) -> int:
        return max(self.head_of) + 1

    def __call__(self, bids):
        heads = np.asarray(self.head_of)[stratum_index(bids, self.strata)]
        return np.eye(self.n_heads)[heads]


def merge_empty_strata(bids: np.ndarray, strata: int) -> tuple[tuple[int, ...], list[str]]:
    """Merge every empty stratum into a neighbour until all heads see data."""
    if len(bids) == 0:
        raise ConfigurationError("no training bids to populate strata")
    counts = np.bincount(stratum_index(bids, strata), minlength=strata)
    groups = [[s] for s in range(strata)]
    group_counts = list(counts)
    events = []
    while 0 in group_counts:
        i = group_counts.index(0)
        j = i + 1 if i + 1 < len(groups) else i - 1
        if j < 0:
            raise ConfigurationError("every stratum is empty")
        lo, hi = sorted((i, j))
        events.append(f"merged empty stratum group {groups[i]} into {groups[j]}")
        groups[lo:hi + 1] = [groups[lo] + groups[hi]]
        group_counts[lo:hi + 1] = [group_counts[lo] + group_counts[hi]]
    head_of = [0] * strata
    for h, members in enumerate(groups):
        for s in members:
            head_of[s] = h
    return tuple(head_of), events


# --------------------------------------------------------------------------
# architectures


def build_mlp(n_features: int, width: int, hidden_layers: int, rng) -> Network:
    return netcore.dense_network([n_features + 1] + [width] * hidden_layers + [1], rng)


def build_drnet(n_features: int, width: int, representation_layers: int, inference_layers: int,
                mixing: StrataMixing, rng) -> Network:
    layers: list = []
    n_in = n_features
    for _ in range(representation_layers):
        layers.append(Dense.init(n_in, width, "relu", rng))
        n_in = width
    for i in range(inference_layers):
        last = i == inference_layers - 1
        layers.append(AppendBid())
        layers.append(MixtureDense.init(mixing.n_heads, n_in + 1, 1 if last else width,
                                        "sigmoid" if last else "relu", rng))
        n_in = width
    return Network(layers, mixing)


def build_vcnet(n_features: int, width: int, body_layers: int, rng, head_layers: int = 2) -> Network:
    layers: list = []
    n_in = n_features
    for _ in range(body_layers):
        layers.append(Dense.init(n_in, width, "relu", rng))
        n_in = width
    n_basis = len(SPLINE_KNOTS) + SPLINE_DEGREE + 1
    for i in range(head_layers):
        last = i == head_layers - 1
        layers.append(MixtureDense.init(n_basis, n_in, 1 if last else width,
                                        "sigmoid" if last else "relu", rng))
        n_in = width
    return Network(layers, SplineMixing())


# --------------------------------------------------------------------------
# fitted models


class NeuralModel(FittedModel):
    """A trained network; ``concat_bid`` feeds [x, b] as a single input."""

    def __init__(self, method: str, network: Network, concat_bid: bool):
        super().__init__()
        self.method = method
        self.network = network
        self.concat_bid = concat_bid
        self.merge_events: list[str] = []

    def _predict(self, b, x):
        if self.concat_bid:
            return self.network.predict_proba(np.column_stack([x, b]))
        return self.network.predict_proba(x, b)


def _seeds(seed: int) -> tuple[np.random.Generator, int]:
    init_seq, batch_seq = np.random.SeedSequence(seed).spawn(2)
    return make_rng(init_seq), int(batch_seq.generate_state(1)[0])


def _grid_search(method: str, grid: dict, train: PricingDataset, validation: PricingDataset,
                 build, concat_bid: bool, seed: int) -> NeuralModel:
    """Select by validation Brier; runs sharing all but ``steps`` share one trajectory."""
    def data(ds):
        if concat_bid:
            return np.column_stack([ds.x, ds.bids]), None, ds.outcomes
        return ds.x, ds.bids, ds.outcomes

    def shared(hp):
        return tuple((k, repr(v)) for k, v in hp.items() if k != "steps")

    candidates = expand_grid(grid)
    horizons: dict = {}
    for hp in candidates:
        horizons.setdefault(shared(hp), set()).add(hp["steps"])

    train_data = data(train)
    val_data = data(validation) if validation is not None else None
    trained: dict = {}
    best, best_score = None, np.inf
    for hp in candidates:
        key = shared(hp)
        if key not in trained:
            steps = sorted(horizons[key])
            init_rng, batch_seed = _seeds(seed)
            cfg = TrainConfig(hp["batch_size"], steps[-1], hp["learning_rate"], batch_seed)
            trained[key] = netcore.train_path(build(hp, init_rng), train_data, cfg, val_data,
                                              milestones=steps)
        model = NeuralModel(method, trained[key][hp["steps"]], concat_bid)
        model.chosen_hyperparameters = dict(hp)
        score = validation_brier(model, validation) if validation is not None else 0.0
        if score < best_score:
            best, best_score = model, score
    if best is None:
        raise ConfigurationError("empty hyperparameter grid")
    best.validation_brier = best_score
    return best


def fit_mlp(train: PricingDataset, validation: PricingDataset, grid=None, seed: int = 0) -> NeuralModel:
    grid = MLP_GRID if grid is None else grid
    if train.n < min(grid["batch_size"]):
        raise ConfigurationError("training set smaller than the batch size")
    d = train.x.shape[1]
    return _grid_search("mlp", grid, train, validation,
                        lambda hp, rng: build_mlp(d, hp["width"], hp.get("hidden_layers", 2), rng),
                        concat_bid=True, seed=seed)


def fit_drnet(train: PricingDataset, validation: PricingDataset, grid=None, seed: int = 0) -> NeuralModel:
    grid = DRNET_GRID if grid is None else grid
    d = train.x.shape[1]
    mixings = {}
    events: list[str] = []
    for strata in grid.get("strata", [10]):
        if strata < 1:
            raise ConfigurationError("need at least one stratum")
        head_of, ev = merge_empty_strata(train.bids, strata)
        for e in ev:
            log.info("drnet strata=%d: %s", strata, e)
        events += ev
        mixings[strata] = StrataMixing(strata, head_of)

    def build(hp, rng):
        return build_drnet(d, hp["width"], hp.get("representation_layers", 2),
                           hp.get("inference_layers", 2), mixings[hp.get("strata", 10)], rng)

    model = _grid_search("drnet", grid, train, validation, build, concat_bid=False, seed=seed)
    model.merge_events = events
    return model


def fit_vcnet(train: PricingDataset, validation: PricingDataset, grid=None, seed: int = 0) -> NeuralModel:
    grid = VCNET_GRID if grid is None else grid
    if train.n < min(grid["batch_size"]):
        raise ConfigurationError("training set smaller than the batch size")
    d = train.x.shape[1]
    return _grid_search("vcnet", grid, train, validation,
                        lambda hp, rng: build_vcnet(d, hp["width"], hp.get("body_layers", 2), rng),
                        concat_bid=False, seed=seed)

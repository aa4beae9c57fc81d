"""Semi-synthetic loan-pricing data.

Covariates are either synthesized or read from CSV; bid-response ground
truths (Richards curve, stacked sigmoid) and the Beta bid-assignment
policy are parameterized by random linear scores of the covariates.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

RICHARDS = "richards"
STACKED_SIGMOID = "stacked_sigmoid"
FAMILIES = (RICHARDS, STACKED_SIGMOID)

CONTINUOUS = "continuous"
DUMMY = "dummy"

SPLIT_RATIOS = (0.7, 0.1, 0.2)

# modal bid is kept strictly inside (0, 1)
PHI_MARGIN = 0.01


class DataError(ValueError):
    """Invalid covariate data or generator arguments."""


class IngestionError(DataError):
    """A covariate CSV could not be ingested."""


class CovariateParseError(IngestionError):
    """A covariate CSV cell is not numeric."""


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator; streams derived from one seed never overlap."""
    return np.random.Generator(np.random.Philox(_as_seed_sequence(seed)))


# --------------------------------------------------------------------------
# covariates


@dataclass(frozen=True)
class CovariateMatrix:
    values: np.ndarray
    column_kinds: tuple[str, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError("covariates must be a 2-D matrix")
        if len(self.column_kinds) != values.shape[1]:
            raise DataError("one column kind per column is required")
        if not np.all(np.isfinite(values)):
            raise DataError("covariates contain missing or non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_kinds", tuple(self.column_kinds))
        if not self.names:
            names = tuple(f"x_{j}" for j in range(values.shape[1]))
            object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def rows(self, idx) -> "CovariateMatrix":
        return CovariateMatrix(self.values[idx], self.column_kinds, self.names)


def standardize(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    mean = values.mean(axis=0)
    sd = values.std(axis=0)
    bad = np.flatnonzero(sd <= 1e-12 * np.maximum(1.0, np.abs(mean)))
    if bad.size:
        raise DataError(f"zero variance column(s): {bad.tolist()}")
    return (values - mean) / sd


def synthesize_covariates(n: int, d: int, n_dummy: int, seed: int) -> CovariateMatrix:
    """Gaussian continuous columns followed by Bernoulli(q) dummies, all standardized."""
    if n < 10 or d < 1 or not 0 <= n_dummy < d:
        raise DataError(f"invalid dimensions n={n}, d={d}, n_dummy={n_dummy}")
    rng = make_rng(seed)
    n_cont = d - n_dummy
    cont = rng.standard_normal((n, n_cont))
    dummies = np.empty((n, n_dummy))
    for j in range(n_dummy):
        q = rng.uniform(0.1, 0.9)
        col = rng.random(n) < q
        while col.all() or not col.any():
            col = rng.random(n) < q
        dummies[:, j] = col
    kinds = (CONTINUOUS,) * n_cont + (DUMMY,) * n_dummy
    return CovariateMatrix(standardize(np.hstack([cont, dummies])), kinds)


def load_covariates(path, schema: Sequence[str]) -> CovariateMatrix:
    """Read a header-first numeric CSV and standardize every column.

    ``schema`` tags each column ``"continuous"`` or ``"dummy"``; dummy columns
    must hold only 0/1 before standardization.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(schema) != len(header):
            raise IngestionError(
                f"{path}: schema has {len(schema)} kinds for {len(header)} columns")
        for kind in schema:
            if kind not in (CONTINUOUS, DUMMY):
                raise IngestionError(f"unknown column kind {kind!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestionError(
                    f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
            parsed = []
            for name, cell in zip(header, row):
                cell = cell.strip()
                if cell == "" or cell.lower() in ("na", "nan"):
                    raise IngestionError(f"{path}: missing value at row {lineno}, column {name!r}")
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise CovariateParseError(
                        f"{path}: non-numeric value {cell!r} at row {lineno}, column {name!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise IngestionError(f"{path}: no data rows")
    values = np.array(rows)
    for j, kind in enumerate(schema):
        if kind == DUMMY and not np.all(np.isin(values[:, j], (0.0, 1.0))):
            raise IngestionError(f"{path}: dummy column {header[j]!r} is not binary")
    try:
        values = standardize(values)
    except DataError as exc:
        raise IngestionError(f"{path}: {exc}") from None
    return CovariateMatrix(values, tuple(schema), tuple(header))


# --------------------------------------------------------------------------
# linear scores


def _bounds(raw: np.ndarray) -> np.ndarray:
    lo, hi = raw.min(axis=0), raw.max(axis=0)
    degenerate = hi - lo <= 1e-12
    lo = np.where(degenerate, lo - 0.5, lo)
    hi = np.where(degenerate, hi + 0.5, hi)
    return np.column_stack([lo, hi])


def _normalize(raw: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    return np.clip((raw - bounds[:, 0]) / (bounds[:, 1] - bounds[:, 0]), 0.0, 1.0)


def _rows(x) -> np.ndarray:
    if isinstance(x, CovariateMatrix):
        return x.values
    return np.atleast_2d(np.asarray(x, dtype=float))


def decreasing_sigmoid(z):
    """1 / (1 + exp(20 (z - 0.5))): 1 well below 0.5, 0 well above."""
    return 0.5 - 0.5 * np.tanh(10.0 * (np.asarray(z, dtype=float) - 0.5))


@dataclass(frozen=True)
class GroundTruthSpec:
    """Known bid-response function mu(b, x) for one family.

    ``weights`` has shape (4, d): rows are the coefficient vectors for the
    four curve parameters. ``score_bounds`` (4, 2) hold the min/max of the
    raw scores over the generating matrix.
    """

    family: str
    weights: np.ndarray
    noise_sd: float
    score_bounds: np.ndarray

    def scores(self, x) -> np.ndarray:
        return _normalize(_rows(x) @ self.weights.T, self.score_bounds)

    def curve_parameters(self, x) -> tuple[np.ndarray, ...]:
        s = self.scores(x)
        if self.family == RICHARDS:
            alpha = 0.2 * s[:, 0]
            beta = 0.8 + 0.2 * s[:, 1]
            gamma = 0.5 + 5.0 * s[:, 2]
            delta = s[:, 3]
        else:
            alpha = 0.2 * s[:, 0]
            beta = 0.8 * s[:, 1]
            gamma = 0.25 + 0.75 * s[:, 2]
            delta = 0.9 * s[:, 3]
        return alpha, beta, gamma, delta

    def response(self, b, x) -> np.ndarray:
        """Noiseless mu(b, x); ``b`` broadcasts against the rows of ``x``."""
        alpha, beta, gamma, delta = self.curve_parameters(x)
        b = np.asarray(b, dtype=float)
        if self.family == RICHARDS:
            # 1 / (1 + exp(-gamma (b - delta))) written via tanh for stability
            rise = 0.5 + 0.5 * np.tanh(0.5 * gamma * (b - delta))
            p = (1.0 - alpha) - (beta - alpha) * rise
        else:
            p = (alpha + beta * decreasing_sigmoid(b / gamma)
                 + (1.0 - alpha - beta) * decreasing_sigmoid((b - delta) / (1.0 - delta)))
        return np.clip(p, 0.0, 1.0)

    def curves(self, bids, x) -> np.ndarray:
        """Matrix of mu over ``bids`` (columns) for each row of ``x``."""
        bids = np.asarray(bids, dtype=float)
        alpha, beta, gamma, delta = (p[:, None] for p in self.curve_parameters(x))
        b = bids[None, :]
        if self.family == RICHARDS:
            rise = 0.5 + 0.5 * np.tanh(0.5 * gamma * (b - delta))
            p = (1.0 - alpha) - (beta - alpha) * rise
        else:
            p = (alpha + beta * decreasing_sigmoid(b / gamma)
                 + (1.0 - alpha - beta) * decreasing_sigmoid((b - delta) / (1.0 - delta)))
        return np.clip(p, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "weights": self.weights.tolist(),
            "noise_sd": self.noise_sd,
            "score_bounds": self.score_bounds.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GroundTruthSpec":
        return cls(doc["family"], np.array(doc["weights"], dtype=float),
                   float(doc["noise_sd"]), np.array(doc["score_bounds"], dtype=float))


def draw_ground_truth(family: str, covariates: CovariateMatrix, noise_sd: float = 0.1,
                      seed=0) -> GroundTruthSpec:
    if family not in FAMILIES:
        raise ValueError(f"unknown curve family {family!r}; expected one of {FAMILIES}")
    x = _rows(covariates)
    if x.size == 0:
        raise DataError("covariates are empty")
    rng = make_rng(seed)
    weights = rng.random((4, x.shape[1]))
    return GroundTruthSpec(family, weights, float(noise_sd), _bounds(x @ weights.T))


def true_response(spec: GroundTruthSpec, b: float, x) -> float:
    """Noiseless acceptance probability of one covariate row at bid ``b``."""
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"bid {b} outside [0, 1]")
    return float(spec.response(b, np.asarray(x, dtype=float)[None, :])[0])


# --------------------------------------------------------------------------
# bid assignment


def beta_shape(theta, phi):
    """Beta shapes (theta + 1, theta / phi + 1 - theta): mode phi, uniform at theta = 0."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    a = theta + 1.0
    b = theta / phi + 1.0 - theta
    if np.any(b <= 0):
        raise AssertionError("non-positive Beta shape; modal bid must lie in (0, 1)")
    return a, b


@dataclass(frozen=True)
class BiasSpec:
    theta: float
    w5: np.ndarray
    phi_bounds: tuple[float, float]

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("bias strength theta must be >= 0")

    def phi(self, x) -> np.ndarray:
        lo, hi = self.phi_bounds
        s = np.clip((_rows(x) @ self.w5 - lo) / (hi - lo), 0.0, 1.0)
        return PHI_MARGIN + (1.0 - 2.0 * PHI_MARGIN) * s

    def to_dict(self) -> dict:
        return {"theta": self.theta, "w5": self.w5.tolist(), "phi_bounds": list(self.phi_bounds)}

    @classmethod
    def from_dict(cls, doc: dict) -> "BiasSpec":
        return cls(float(doc["theta"]), np.array(doc["w5"], dtype=float),
                   tuple(float(v) for v in doc["phi_bounds"]))


def draw_bias(theta: float, covariates: CovariateMatrix, seed=0) -> BiasSpec:
    x = _rows(covariates)
    w5 = make_rng(seed).random(x.shape[1])
    lo, hi = _bounds((x @ w5)[:, None])[0]
    return BiasSpec(float(theta), w5, (float(lo), float(hi)))


def sample_bids_at_mode(theta: float, phi, rng: np.random.Generator) -> np.ndarray:
    a, b = beta_shape(theta, phi)
    return rng.beta(a, b)


def sample_bid(bias: BiasSpec, x, rng: np.random.Generator):
    """Factual bid(s) for covariate row(s) ``x``."""
    x = np.asarray(_rows(x))
    draws = sample_bids_at_mode(bias.theta, bias.phi(x), rng)
    draws = np.clip(draws, 1e-12, 1.0 - 1e-12)
    return float(draws[0]) if np.ndim(x) == 2 and x.shape[0] == 1 else draws


# --------------------------------------------------------------------------
# datasets


@dataclass(frozen=True)
class PricingDataset:
    covariates: CovariateMatrix
    bids: np.ndarray
    accept_probs: np.ndarray
    outcomes: np.ndarray
    truth: GroundTruthSpec
    bias: BiasSpec
    seed: int = 0
    indices: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        n = self.covariates.n
        for name in ("bids", "accept_probs", "outcomes"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise DataError(f"{name} must have length {n}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.covariates.n

    @property
    def x(self) -> np.ndarray:
        return self.covariates.values

    def subset(self, idx) -> "PricingDataset":
        idx = np.asarray(idx)
        base = self.indices if self.indices is not None else np.arange(self.n)
        return PricingDataset(self.covariates.rows(idx), self.bids[idx], self.accept_probs[idx],
                              self.outcomes[idx], self.truth, self.bias, self.seed, base[idx])

    def to_csv(self, path) -> None:
        header = list(self.covariates.names) + ["bid", "p_factual", "y"]
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row, b, p, y in zip(self.x, self.bids, self.accept_probs, self.outcomes):
                w.writerow([repr(float(v)) for v in row] + [repr(float(b)), repr(float(p)), int(y)])

    def spec_document(self) -> dict:
        return {
            "seed": self.seed,
            "column_kinds": list(self.covariates.column_kinds),
            "truth": self.truth.to_dict(),
            "bias": self.bias.to_dict(),
        }

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.to_csv(directory / "dataset.csv")
        (directory / "spec.json").write_text(json.dumps(self.spec_document(), indent=2) + "\n")

    @classmethod
    def load(cls, directory) -> "PricingDataset":
        directory = Path(directory)
        doc = json.loads((directory / "spec.json").read_text())
        with (directory / "dataset.csv").open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            table = np.array([[float(c) for c in row] for row in reader if row])
        d = len(header) - 3
        covariates = CovariateMatrix(table[:, :d], tuple(doc["column_kinds"]), tuple(header[:d]))
        return cls(covariates, table[:, d], table[:, d + 1], table[:, d + 2],
                   GroundTruthSpec.from_dict(doc["truth"]), BiasSpec.from_dict(doc["bias"]),
                   int(doc["seed"]))


def generate_dataset(covariates: CovariateMatrix, truth: GroundTruthSpec, bias: BiasSpec,
                     seed: int) -> PricingDataset:
    """Factual bids, noisy acceptance probabilities and Bernoulli outcomes."""
    rng = make_rng(seed)
    x = covariates.values
    bids = np.clip(sample_bids_at_mode(bias.theta, bias.phi(x), rng), 1e-12, 1.0 - 1e-12)
    mu = truth.response(bids, x)
    noise = rng.normal(0.0, truth.noise_sd, size=covariates.n) if truth.noise_sd > 0 else 0.0
    p = np.clip(mu + noise, 0.0, 1.0)
    y = (rng.random(covariates.n) < p).astype(float)
    return PricingDataset(covariates, bids, p, y, truth, bias, int(seed))


@dataclass(frozen=True)
class SplitDataset:
    train: PricingDataset
    validation: PricingDataset
    test: PricingDataset
    ratios: tuple[float, float, float] = SPLIT_RATIOS


def split_sizes(n: int) -> tuple[int, int, int]:
    n_train = int(math.floor(SPLIT_RATIOS[0] * n + 0.5))
    n_val = int(math.floor(SPLIT_RATIOS[1] * n + 0.5))
    return n_train, n_val, n - n_train - n_val


def split(dataset: PricingDataset, seed) -> SplitDataset:
    if dataset.n < 10:
        raise DataError("need at least 10 rows to split")
    perm = make_rng(seed).permutation(dataset.n)
    n_train, n_val, _ = split_sizes(dataset.n)
    return SplitDataset(dataset.subset(perm[:n_train]),
                        dataset.subset(perm[n_train:n_train + n_val]),
                        dataset.subset(perm[n_train + n_val:]))

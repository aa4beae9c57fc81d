"""Small numpy neural-network engine with hand-written reverse mode.

Networks are ordered stacks of layers. Besides plain dense layers there is
``AppendBid`` (concatenates the bid to the hidden state) and
``MixtureDense``, whose weights are a per-sample mixture of K component
matrices. With a one-hot mixture this gives stratum-specific heads; with a
spline-basis mixture it gives bid-varying coefficients.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .synthdata import make_rng

CLIP = 1e-7
CHECKPOINT_EVERY = 100
MAX_GRAD_NORM = 10.0


class TrainingDivergenceError(RuntimeError):
    def __init__(self, step: int, loss: float):
        super().__init__(f"non-finite training loss {loss} at step {step}")
        self.step = step
        self.loss = loss


def relu(z):
    return np.maximum(z, 0.0)


def sigmoid(z):
    return 0.5 + 0.5 * np.tanh(0.5 * z)


def identity(z):
    return z


ACTIVATIONS: dict[str, Callable] = {"relu": relu, "sigmoid": sigmoid, "identity": identity}


def _activation_grad(name: str, a: np.ndarray) -> np.ndarray | float:
    if name == "relu":
        return (a > 0).astype(a.dtype)
    if name == "sigmoid":
        return a * (1.0 - a)
    return 1.0


def bce_loss(pred, target) -> float:
    """Mean binary cross-entropy with predictions clipped to [1e-7, 1 - 1e-7]."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {pred.shape} != target shape {target.shape}")
    p = np.clip(pred, CLIP, 1.0 - CLIP)
    return float(-np.mean(target * np.log(p) + (1.0 - target) * np.log1p(-p)))


# --------------------------------------------------------------------------
# layers


class Dense:
    kind = "dense"

    def __init__(self, weight: np.ndarray, bias: np.ndarray, activation: str = "relu"):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.weight = np.asarray(weight, dtype=float)
        self.bias = np.asarray(bias, dtype=float)
        self.activation = activation

    @classmethod
    def init(cls, n_in: int, n_out: int, activation: str, rng: np.random.Generator) -> "Dense":
        bound = 1.0 / np.sqrt(n_in)
        weight = rng.uniform(-bound, bound, size=(n_in, n_out))
        bias = rng.uniform(-bound, bound, size=n_out)
        return cls(weight, bias, activation)

    @property
    def n_in(self) -> int:
        return self.weight.shape[0]

    @property
    def params(self) -> list[np.ndarray]:
        return [self.weight, self.bias]

    def forward(self, h, bids, mixing):
        a = ACTIVATIONS[self.activation](h @ self.weight + self.bias)
        return a, (h, a)

    def backward(self, g, cache, logit_grad=False):
        h, a = cache
        gz = g if logit_grad else g * _activation_grad(self.activation, a)
        return gz @ self.weight.T, [h.T @ gz, gz.sum(axis=0)]

    def describe(self) -> dict:
        return {"kind": self.kind, "activation": self.activation,
                "shapes": [list(p.shape) for p in self.params]}


class AppendBid:
    kind = "append_bid"
    params: list = []

    def forward(self, h, bids, mixing):
        if bids is None:
            raise ValueError("this network needs bids as a second input")
        return np.hstack([h, bids[:, None]]), None

    def backward(self, g, cache, logit_grad=False):
        return g[:, :-1], []

    def describe(self) -> dict:
        return {"kind": self.kind}


class MixtureDense:
    """Dense layer whose weights are sum_k m_k(b) (W_k, c_k) for mixing weights m(b)."""

    kind = "mixture_dense"

    def __init__(self, weight: np.ndarray, bias: np.ndarray, activation: str = "relu"):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.weight = np.asarray(weight, dtype=float)  # (K, in, out)
        self.bias = np.asarray(bias, dtype=float)  # (K, out)
        self.activation = activation

    @classmethod
    def init(cls, n_components: int, n_in: int, n_out: int, activation: str,
             rng: np.random.Generator) -> "MixtureDense":
        bound = 1.0 / np.sqrt(n_in)
        weight = np.empty((n_components, n_in, n_out))
        bias = np.empty((n_components, n_out))
        for k in range(n_components):
            weight[k] = rng.uniform(-bound, bound, size=(n_in, n_out))
            bias[k] = rng.uniform(-bound, bound, size=n_out)
        return cls(weight, bias, activation)

    @property
    def n_in(self) -> int:
        return self.weight.shape[1]

    @property
    def params(self) -> list[np.ndarray]:
        return [self.weight, self.bias]

    def forward(self, h, bids, mixing):
        if mixing is None:
            raise ValueError("mixture layer needs mixing weights")
        k, n_in, n_out = self.weight.shape
        expanded = (mixing[:, :, None] * h[:, None, :]).reshape(len(h), k * n_in)
        z = expanded @ self.weight.reshape(k * n_in, n_out) + mixing @ self.bias
        a = ACTIVATIONS[self.activation](z)
        return a, (expanded, mixing, a)

    def backward(self, g, cache, logit_grad=False):
        expanded, mixing, a = cache
        k, n_in, n_out = self.weight.shape
        gz = g if logit_grad else g * _activation_grad(self.activation, a)
        flat = self.weight.reshape(k * n_in, n_out)
        g_expanded = (gz @ flat.T).reshape(len(gz), k, n_in)
        g_h = np.einsum("nk,nki->ni", mixing, g_expanded)
        g_w = (expanded.T @ gz).reshape(k, n_in, n_out)
        return g_h, [g_w, mixing.T @ gz]

    def describe(self) -> dict:
        return {"kind": self.kind, "activation": self.activation,
                "shapes": [list(p.shape) for p in self.params]}


LAYER_KINDS = {"dense": Dense, "append_bid": AppendBid, "mixture_dense": MixtureDense}


# --------------------------------------------------------------------------
# networks


class Network:
    """Feed-forward stack mapping (x[, bids]) to an output vector per row.

    ``mixing`` maps a bid vector to per-sample mixture weights (n, K) and is
    required only by ``MixtureDense`` layers.
    """

    def __init__(self, layers: list, mixing: Callable | None = None):
        self.layers = list(layers)
        self.mixing = mixing
        self.n_inputs = None
        appended = 0
        for layer in self.layers:
            if isinstance(layer, AppendBid):
                appended += 1
            elif layer.params:
                self.n_inputs = layer.n_in - appended
                break

    @property
    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    @property
    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params))

    def _forward(self, x, bids):
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or (self.n_inputs is not None and x.shape[1] != self.n_inputs):
            raise ValueError(f"expected inputs with {self.n_inputs} columns, got shape {x.shape}")
        if bids is not None:
            bids = np.asarray(bids, dtype=float).reshape(-1)
            if bids.shape[0] != x.shape[0]:
                raise ValueError("one bid per input row is required")
        mixing = self.mixing(bids) if self.mixing is not None and bids is not None else None
        caches = []
        h = x
        for layer in self.layers:
            h, cache = layer.forward(h, bids, mixing)
            caches.append(cache)
        return h, caches

    def forward(self, x, bids=None) -> np.ndarray:
        """Network output; a 1-D input vector yields a 1-D output vector."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
            if bids is not None:
                bids = np.atleast_1d(bids)
        out, _ = self._forward(x, bids)
        return out[0] if single else out

    def predict_proba(self, x, bids=None) -> np.ndarray:
        return self.forward(x, bids)[:, 0]

    def loss_and_grad(self, x, bids, y) -> tuple[float, list[np.ndarray]]:
        """Mean BCE of a sigmoid-output network and its exact parameter gradients."""
        if self.layers[-1].activation != "sigmoid":
            raise ValueError("loss_and_grad requires a sigmoid output layer")
        y = np.asarray(y, dtype=float).reshape(-1)
        out, caches = self._forward(x, bids)
        p = out[:, 0]
        loss = bce_loss(p, y)
        g = ((p - y) / len(y))[:, None]
        grads: list[list[np.ndarray]] = []
        for i in range(len(self.layers) - 1, -1, -1):
            g, layer_grads = self.layers[i].backward(g, caches[i], logit_grad=i == len(self.layers) - 1)
            grads.append(layer_grads)
        return loss, [gp for layer_grads in reversed(grads) for gp in layer_grads]

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    def snapshot(self) -> tuple[np.ndarray, dict]:
        """Flat parameter vector plus an architecture descriptor."""
        params = self.params
        flat = np.concatenate([p.ravel() for p in params]) if params else np.empty(0)
        return flat, {"layers": [layer.describe() for layer in self.layers]}

    @classmethod
    def from_snapshot(cls, flat: np.ndarray, descriptor: dict, mixing: Callable | None = None) -> "Network":
        layers, offset = [], 0
        for spec in descriptor["layers"]:
            if spec["kind"] == "append_bid":
                layers.append(AppendBid())
                continue
            arrays = []
            for shape in spec["shapes"]:
                size = int(np.prod(shape))
                arrays.append(np.asarray(flat[offset:offset + size]).reshape(shape).copy())
                offset += size
            layers.append(LAYER_KINDS[spec["kind"]](*arrays, spec["activation"]))
        if offset != len(flat):
            raise ValueError("snapshot length does not match descriptor")
        return cls(layers, mixing)


def dense_network(sizes: list[int], rng: np.random.Generator, hidden="relu", output="sigmoid") -> Network:
    layers = [Dense.init(a, b, hidden if i < len(sizes) - 2 else output, rng)
              for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:]))]
    return Network(layers)


def forward(net: Network, x, bids=None) -> np.ndarray:
    return net.forward(x, bids)


def backward(net: Network, x, bids, y) -> list[np.ndarray]:
    """Gradients of mean BCE on one batch with respect to every parameter."""
    return net.loss_and_grad(x, bids, y)[1]


# --------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    steps: int = 1000
    learning_rate: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.batch_size <= 0 or self.steps <= 0 or self.learning_rate <= 0:
            raise ValueError("batch size, steps and learning rate must be positive")


class Adam:
    def __init__(self, params, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def clip_by_global_norm(grads, max_norm=MAX_GRAD_NORM):
    norm = np.sqrt(sum(float(np.vdot(g, g)) for g in grads))
    if norm > max_norm:
        return [g * (max_norm / norm) for g in grads]
    return grads


def train_path(net: Network, data, config: TrainConfig, validation=None,
               milestones=()) -> dict[int, Network]:
    """Train once for ``config.steps`` steps and return the model as of each milestone.

    The network at milestone ``k`` is exactly what ``train`` with ``steps=k``
    returns, since batches and optimizer state do not depend on the horizon.
    """
    x, bids, y = data
    n = len(y)
    if n == 0:
        raise ValueError("training data is empty")
    milestones = sorted(set(milestones) | {config.steps})
    if milestones[0] <= 0 or milestones[-1] > config.steps:
        raise ValueError("milestones must lie in 1..steps")
    net = net.copy()
    rng = make_rng(config.seed)
    opt = Adam(net.params, config.learning_rate)
    batch = min(config.batch_size, n)

    out: dict[int, Network] = {}
    best_loss, best_params = np.inf, None
    order, cursor = rng.permutation(n), 0
    for step in range(1, config.steps + 1):
        if cursor + batch > n:
            order, cursor = rng.permutation(n), 0
        idx = order[cursor:cursor + batch]
        cursor += batch
        loss, grads = net.loss_and_grad(x[idx], None if bids is None else bids[idx], y[idx])
        if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
            raise TrainingDivergenceError(step, loss)
        opt.step(clip_by_global_norm(grads))
        if validation is not None and (step % CHECKPOINT_EVERY == 0 or step in milestones):
            vx, vb, vy = validation
            val_loss = bce_loss(net.predict_proba(vx, vb), vy)
            if val_loss < best_loss:
                best_loss, best_params = val_loss, [p.copy() for p in net.params]
        if step in milestones:
            snap = net.copy()
            if best_params is not None:
                for p, best in zip(snap.params, best_params):
                    p[...] = best
            out[step] = snap
    return out


def train(net: Network, data, config: TrainConfig, validation=None) -> Network:
    """Minibatch Adam on mean BCE; returns a trained copy of ``net``.

    ``data`` and ``validation`` are ``(x, bids, y)`` triples (``bids`` may be
    None). With validation data the parameters at the best validation-BCE
    checkpoint (every 100 steps, plus the last step) are returned.
    """
    return train_path(net, data, config, validation)[config.steps]

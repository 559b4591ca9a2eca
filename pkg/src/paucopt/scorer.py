"""Parametric scoring functions f: features -> (0,1) with analytic gradients.

Two kinds: a logistic-linear model and a small MLP (tanh hidden layers,
sigmoid output). Gradients are hand-rolled backprop over a flat parameter
vector, so no autodiff framework is needed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit


@dataclass(frozen=True)
class ScorerParams:
    """Flat parameter vector plus the layer shape it encodes.

    layer_dims includes input and output widths, e.g. [2, 3, 1] for an MLP
    with one 3-unit hidden layer; a linear scorer over d features is [d, 1].
    """

    kind: str  # "linear" | "mlp"
    layer_dims: tuple[int, ...]
    weights: np.ndarray

    def __post_init__(self):
        if self.kind not in ("linear", "mlp"):
            raise ValueError(f"unknown scorer kind {self.kind!r}")
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2 or dims[-1] != 1 or any(d < 1 for d in dims):
            raise ValueError(f"bad layer_dims {dims}")
        if self.kind == "linear" and len(dims) != 2:
            raise ValueError("linear scorer takes layer_dims [d, 1]")
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if w.shape != (param_count(dims),):
            raise ValueError(
                f"weights length {w.shape} does not match layer_dims {dims}"
            )
        w.setflags(write=False)
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "weights", w)

    @property
    def n_params(self) -> int:
        return len(self.weights)

    def with_weights(self, w: np.ndarray) -> "ScorerParams":
        return ScorerParams(self.kind, self.layer_dims, w)

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind,
            "layer_dims": list(self.layer_dims),
            "weights": self.weights.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "ScorerParams":
        doc = json.loads(text)
        return cls(doc["kind"], tuple(doc["layer_dims"]),
                   np.asarray(doc["weights"], dtype=np.float64))


def param_count(layer_dims) -> int:
    return sum((din + 1) * dout for din, dout in zip(layer_dims[:-1], layer_dims[1:]))


def init_scorer(kind: str, dim: int, hidden=(), seed: int = 0) -> ScorerParams:
    """Seeded uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer."""
    dims = (dim, 1) if kind == "linear" else (dim, *hidden, 1)
    rng = np.random.default_rng(seed)
    chunks = []
    for din, dout in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(din)
        chunks.append(rng.uniform(-bound, bound, size=(din + 1) * dout))
    return ScorerParams(kind, dims, np.concatenate(chunks))


def _layers(params: ScorerParams):
    """Yield (W: dout x din, b: dout) views into the flat weight vector."""
    dims = params.layer_dims
    off = 0
    for din, dout in zip(dims[:-1], dims[1:]):
        w = params.weights[off:off + din * dout].reshape(dout, din)
        off += din * dout
        b = params.weights[off:off + dout]
        off += dout
        yield w, b


def _forward(params: ScorerParams, x: np.ndarray):
    """Batch forward pass. Returns (scores, activations, pre_logits)."""
    acts = [x]
    layers = list(_layers(params))
    h = x
    for w, b in layers[:-1]:
        h = np.tanh(h @ w.T + b)
        acts.append(h)
    w, b = layers[-1]
    z = (h @ w.T + b)[:, 0]
    # keep scores strictly inside (0,1) even when the sigmoid saturates
    f = np.clip(expit(z), 1e-300, np.nextafter(1.0, 0.0))
    return f, acts, z


def score_batch(params: ScorerParams, x: np.ndarray) -> np.ndarray:
    """Scores for a batch of rows; each value lies in (0,1)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != params.layer_dims[0]:
        raise ValueError(
            f"feature dimension {x.shape[1]} does not match scorer input "
            f"{params.layer_dims[0]}"
        )
    return _forward(params, x)[0]


def score(params: ScorerParams, x: np.ndarray) -> float:
    """Score a single feature row."""
    return float(score_batch(params, np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


def backprop_logit(params: ScorerParams, x: np.ndarray,
                   dz: np.ndarray) -> np.ndarray:
    """Gradient of sum_i dz_i * z_i w.r.t. the flat weights.

    z_i is the pre-sigmoid logit of row i; callers fold the sigmoid factor
    (or a cross-entropy residual) into dz.
    """
    _, acts, _ = _forward(params, x)
    layers = list(_layers(params))
    grads = [None] * len(layers)
    delta = dz[:, None]  # (n, dout) running upstream derivative at layer input
    for li in range(len(layers) - 1, -1, -1):
        w, _ = layers[li]
        a_in = acts[li]
        gw = delta.T @ a_in
        gb = delta.sum(axis=0)
        grads[li] = np.concatenate([gw.ravel(), gb])
        if li > 0:
            # tanh' = 1 - a^2 at the producing layer's output
            delta = (delta @ w) * (1.0 - acts[li] ** 2)
    return np.concatenate(grads)


def score_grad(params: ScorerParams, x: np.ndarray):
    """Score and the flat gradient d f / d weights for a single row."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    f = score_batch(params, x)
    dz = f * (1.0 - f)  # sigmoid'
    return float(f[0]), backprop_logit(params, x, dz)


def weighted_score_grad(params: ScorerParams, x: np.ndarray,
                        weights: np.ndarray):
    """Scores plus the flat gradient of sum_i weights_i * f_i."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    f = score_batch(params, x)
    dz = weights * f * (1.0 - f)
    return f, backprop_logit(params, x, dz)


def warmup_logistic(params: ScorerParams, ds, epochs: int, lr: float,
                    batch_size: int = 256, seed: int = 0) -> ScorerParams:
    """Minibatch gradient descent on binary cross-entropy."""
    if epochs < 0:
        raise ValueError("epochs must be nonnegative")
    if epochs == 0 or lr == 0:
        return params
    rng = np.random.default_rng(seed)
    w = params.weights.copy()
    for _ in range(epochs):
        order = rng.permutation(ds.n)
        for start in range(0, ds.n, batch_size):
            idx = order[start:start + batch_size]
            x = ds.features[idx]
            y = ds.labels[idx].astype(np.float64)
            cur = params.with_weights(w)
            f = score_batch(cur, x)
            # dCE/dz = f - y, averaged over the batch
            g = backprop_logit(cur, x, (f - y) / len(idx))
            w = w - lr * g
    return params.with_weights(w)


def cross_entropy(params: ScorerParams, ds) -> float:
    """Mean binary cross-entropy over a dataset."""
    f = np.clip(score_batch(params, ds.features), 1e-12, 1 - 1e-12)
    y = ds.labels.astype(np.float64)
    return float(-np.mean(y * np.log(f) + (1 - y) * np.log(1 - f)))

"""Two-layer GCN target model, MLP reference model, and their training loops.

The convolution uses the symmetric renormalisation with self-loops,
``A_hat = D~^-1/2 (A + I) D~^-1/2``.  Logits are
``A_hat @ relu(A_hat @ X @ W1) @ W2`` with dropout applied after the first
activation during training only; predictions are the row-argmax of the
softmax.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .diffcore import (
    Adam,
    RngStream,
    Tensor,
    backward,
    cross_entropy_rows,
    matmul,
    mul,
    relu,
    zero_grad,
)
from .graphdata import AttributedGraph

__all__ = [
    "GcnConfig",
    "GcnModel",
    "MlpModel",
    "TrainingError",
    "normalize_adjacency",
    "train_target",
    "train_mlp",
    "posteriors",
    "predictions",
    "accuracy",
    "save_checkpoint",
    "load_checkpoint",
    "checkpoint_hash",
]


class TrainingError(RuntimeError):
    """Training produced a non-finite loss; message carries the epoch index."""


@dataclass
class GcnConfig:
    hidden: int = 32
    dropout: float = 0.5
    lr: float = 0.01  # hyperparameter-table default; 0.001 also supported
    weight_decay: float = 5e-4
    epochs: int = 200
    seed: int = 0


def normalize_adjacency(a: np.ndarray) -> np.ndarray:
    """D~^-1/2 (A + I) D~^-1/2 with D~ = diag(rowsum(A + I))."""
    a = np.asarray(a, dtype=np.float64)
    at = a + np.eye(a.shape[0])
    dinv = 1.0 / np.sqrt(at.sum(axis=1))
    return at * dinv[:, None] * dinv[None, :]


def _glorot(rng: RngStream, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class GcnModel:
    """The target network: weights, hyperparameters, cached A_hat."""

    kind = "gcn"

    def __init__(self, d: int, hidden: int, num_classes: int, dropout: float,
                 rng: RngStream | None = None):
        rng = rng or RngStream(0)
        self.W1 = Tensor(_glorot(rng, d, hidden), requires_grad=True)
        self.W2 = Tensor(_glorot(rng, hidden, num_classes), requires_grad=True)
        self.hidden = hidden
        self.dropout = dropout
        self.normalized_adjacency: np.ndarray | None = None

    @property
    def params(self):
        return [self.W1, self.W2]

    def forward(self, x, a_hat, train: bool = False, rng: RngStream | None = None) -> Tensor:
        """Logits A_hat @ relu(A_hat @ X @ W1) @ W2 on the tape."""
        xt = x if isinstance(x, Tensor) else Tensor(x)
        at = a_hat if isinstance(a_hat, Tensor) else Tensor(a_hat)
        if xt.data.shape[0] != at.data.shape[0]:
            raise ValueError("feature and adjacency row counts differ")
        # A @ (X @ W1) needs n*d*h + n^2*h flops vs n^2*d for (A @ X) @ W1
        h = relu(matmul(at, matmul(xt, self.W1)))
        if train and self.dropout > 0:
            keep = (rng.uniform(size=h.data.shape) >= self.dropout) / (1.0 - self.dropout)
            h = mul(h, Tensor(keep))
        return matmul(at, matmul(h, self.W2))

    def logits(self, x: np.ndarray, a_hat: np.ndarray) -> np.ndarray:
        """Inference-only forward on raw arrays (no tape, no dropout)."""
        return a_hat @ (np.maximum(a_hat @ (x @ self.W1.data), 0.0) @ self.W2.data)


class MlpModel:
    """Structure-free reference model for the posterior-similarity baseline."""

    kind = "mlp"

    def __init__(self, d: int, hidden: int, num_classes: int, dropout: float = 0.5,
                 rng: RngStream | None = None):
        rng = rng or RngStream(0)
        self.W1 = Tensor(_glorot(rng, d, hidden), requires_grad=True)
        self.W2 = Tensor(_glorot(rng, hidden, num_classes), requires_grad=True)
        self.hidden = hidden
        self.dropout = dropout

    @property
    def params(self):
        return [self.W1, self.W2]

    def forward(self, x, a_hat=None, train: bool = False, rng: RngStream | None = None) -> Tensor:
        xt = x if isinstance(x, Tensor) else Tensor(x)
        h = relu(matmul(xt, self.W1))
        if train and self.dropout > 0:
            keep = (rng.uniform(size=h.data.shape) >= self.dropout) / (1.0 - self.dropout)
            h = mul(h, Tensor(keep))
        return matmul(h, self.W2)

    def logits(self, x: np.ndarray, a_hat=None) -> np.ndarray:
        return np.maximum(x @ self.W1.data, 0.0) @ self.W2.data


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def posteriors(model, x: np.ndarray, a_hat: np.ndarray | None = None) -> np.ndarray:
    if model.kind == "gcn":
        if a_hat is None:
            a_hat = model.normalized_adjacency
        if a_hat is None:
            raise ValueError("GCN posteriors need a normalized adjacency")
        return _softmax(model.logits(x, a_hat))
    return _softmax(model.logits(x))


def predictions(model, x: np.ndarray, a_hat: np.ndarray | None = None) -> np.ndarray:
    """Row-argmax of the softmax; ties resolve to the lowest class index."""
    return np.argmax(posteriors(model, x, a_hat), axis=1)


def accuracy(model, g: AttributedGraph, nodes: np.ndarray) -> float:
    pred = predictions(model, g.features)
    return float((pred[nodes] == g.labels[nodes]).mean())


def _train(model, g: AttributedGraph, cfg: GcnConfig, use_graph: bool):
    if len(g.splits.train) == 0:
        raise ValueError("graph has an empty train split")
    rng = RngStream(cfg.seed, 1)
    a_hat = normalize_adjacency(g.adjacency) if use_graph else None
    if use_graph:
        model.normalized_adjacency = a_hat
    opt = Adam(model.params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    x = Tensor(g.features)
    for epoch in range(cfg.epochs):
        zero_grad(*model.params)
        logits = model.forward(x, a_hat, train=True, rng=rng)
        loss = cross_entropy_rows(logits, g.labels, g.splits.train)
        if not np.isfinite(loss.data):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        backward(loss)
        opt.step()
    return model


def train_target(g: AttributedGraph, cfg: GcnConfig | None = None) -> GcnModel:
    """Train the 2-layer GCN with cross-entropy on the train split."""
    cfg = cfg or GcnConfig()
    model = GcnModel(g.d, cfg.hidden, g.num_classes, cfg.dropout, RngStream(cfg.seed))
    return _train(model, g, cfg, use_graph=True)


def train_mlp(g: AttributedGraph, cfg: GcnConfig | None = None) -> MlpModel:
    """Train the structure-free reference MLP on the same split."""
    cfg = cfg or GcnConfig()
    model = MlpModel(g.d, cfg.hidden, g.num_classes, cfg.dropout, RngStream(cfg.seed))
    return _train(model, g, cfg, use_graph=False)


# ---------------------------------------------------------------------------
# checkpoints: JSON of shapes + row-major values, bit-exact via float repr


def _checkpoint_payload(model) -> dict:
    return {
        "kind": model.kind,
        "hidden": model.hidden,
        "dropout": model.dropout,
        "W1_shape": list(model.W1.data.shape),
        "W2_shape": list(model.W2.data.shape),
        "W1": [float(v) for v in model.W1.data.reshape(-1)],
        "W2": [float(v) for v in model.W2.data.reshape(-1)],
    }


def save_checkpoint(model, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(_checkpoint_payload(model), fh)


def load_checkpoint(path: str):
    with open(path) as fh:
        payload = json.load(fh)
    d, hidden = payload["W1_shape"]
    _, num_classes = payload["W2_shape"]
    cls = GcnModel if payload["kind"] == "gcn" else MlpModel
    model = cls(d, hidden, num_classes, payload["dropout"])
    model.W1.data = np.array(payload["W1"], dtype=np.float64).reshape(payload["W1_shape"])
    model.W2.data = np.array(payload["W2"], dtype=np.float64).reshape(payload["W2_shape"])
    return model


def checkpoint_hash(model) -> str:
    blob = json.dumps(_checkpoint_payload(model), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]

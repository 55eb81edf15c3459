"""Shared explainer machinery: containers, noise model, local receptive fields.

A 2-layer GCN prediction at a node depends only on its closed 2-hop
neighbourhood, so fidelity estimation and mask optimisation run on a
``LocalView`` instead of the full graph.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from ..diffcore import RngStream
from ..gnncore import GcnModel, normalize_adjacency
from ..graphdata import AttributedGraph

__all__ = [
    "ExplanationSet",
    "EXPLAINER_KINDS",
    "EmpiricalNoise",
    "LocalView",
    "build_local_view",
    "save_explanations",
    "load_explanations",
]

EXPLAINER_KINDS = {
    "grad": "soft",
    "grad_input": "soft",
    "zorro": "hard",
    "zorro_soft": "soft",
    "glime": "soft",
    "gnnexp": "soft",
}


@dataclass
class ExplanationSet:
    """Per-node feature-importance matrix produced by one explainer."""

    scores: np.ndarray  # n x d
    kind: str  # "hard" | "soft"
    explainer_id: str
    target_model_ref: str = ""
    seed: int = 0

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.kind not in ("hard", "soft"):
            raise ValueError(f"unknown explanation kind {self.kind!r}")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("explanation scores must be finite")
        if self.kind == "hard" and not np.all(np.isin(self.scores, (0.0, 1.0))):
            raise ValueError("hard explanations must be 0/1")

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    @property
    def d(self) -> int:
        return self.scores.shape[1]


class EmpiricalNoise:
    """Noise values resampled from the global per-feature distribution of X.

    Replacing a masked-out entry (i, f) with the value another random node
    holds at feature f keeps binary features binary and continuous features
    on-distribution.  For 0/1 matrices the per-column empirical distribution
    is Bernoulli(column mean), drawn from uniforms instead of row gathers.
    """

    def __init__(self, x: np.ndarray, rng: RngStream):
        self.x = x
        self.rng = rng
        self._cols = np.arange(x.shape[1])
        self._binary = bool(np.all((x == 0.0) | (x == 1.0)))
        self._col_mean = x.mean(axis=0) if self._binary else None

    def sample(self, rows: int, samples: int = 1) -> np.ndarray:
        """(samples, rows, d) noise block."""
        if self._binary:
            u = self.rng.uniform(size=(samples, rows, self.x.shape[1]))
            return (u < self._col_mean[None, None, :]).astype(np.float64)
        r = self.rng.integers(0, self.x.shape[0], size=(samples, rows, self.x.shape[1]))
        return self.x[r, self._cols[None, None, :]]


@dataclass
class LocalView:
    """Everything needed to evaluate one node's prediction locally."""

    node: int
    l1: np.ndarray  # closed 1-hop ids (A_hat row support)
    l2: np.ndarray  # closed 2-hop ids
    a11: np.ndarray  # A_hat[node, l1]
    a12: np.ndarray  # A_hat[l1][:, l2]
    x_local: np.ndarray  # X[l2]
    w1: np.ndarray
    w2: np.ndarray
    orig_class: int

    def logits_batch(self, x_tilde: np.ndarray) -> np.ndarray:
        """(S, C) logits at the node for a (S, |l2|, d) batch of inputs."""
        s, m, d = x_tilde.shape
        h1 = (x_tilde.reshape(s * m, d) @ self.w1).reshape(s, m, -1)
        act = np.maximum(self.a12 @ h1, 0.0)
        z = np.einsum("l,slh->sh", self.a11, act)
        return z @ self.w2

    def predict_batch(self, x_tilde: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits_batch(x_tilde), axis=1)


def resolve_a_hat(model: GcnModel, g: AttributedGraph) -> np.ndarray:
    a_hat = getattr(model, "normalized_adjacency", None)
    if a_hat is None or a_hat.shape[0] != g.n:
        a_hat = normalize_adjacency(g.adjacency)
    return a_hat


def build_local_view(model: GcnModel, g: AttributedGraph, node: int,
                     a_hat: np.ndarray | None = None,
                     orig_class: int | None = None) -> LocalView:
    if a_hat is None:
        a_hat = resolve_a_hat(model, g)
    l1 = np.nonzero(a_hat[node])[0]
    mask = np.zeros(g.n, dtype=bool)
    for j in l1:
        mask |= a_hat[j] != 0
    l2 = np.nonzero(mask)[0]
    view = LocalView(
        node=node,
        l1=l1,
        l2=l2,
        a11=a_hat[node, l1],
        a12=a_hat[np.ix_(l1, l2)],
        x_local=g.features[l2],
        w1=model.W1.data,
        w2=model.W2.data,
        orig_class=-1,
    )
    if orig_class is None:
        orig_class = int(view.predict_batch(view.x_local[None])[0])
    view.orig_class = orig_class
    return view


# ---------------------------------------------------------------------------
# on-disk explanation cache: CSV matrix + JSON sidecar


def save_explanations(e: ExplanationSet, base: str) -> None:
    np.savetxt(base + ".csv", e.scores, delimiter=",")
    sidecar = {
        "explainer_id": e.explainer_id,
        "kind": e.kind,
        "seed": e.seed,
        "target_model_ref": e.target_model_ref,
        "shape": list(e.scores.shape),
    }
    with open(base + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=1)


def load_explanations(base: str) -> ExplanationSet:
    if not os.path.exists(base + ".json"):
        raise FileNotFoundError(base + ".json")
    with open(base + ".json") as fh:
        sidecar = json.load(fh)
    scores = np.loadtxt(base + ".csv", delimiter=",", ndmin=2)
    return ExplanationSet(
        scores=scores,
        kind=sidecar["kind"],
        explainer_id=sidecar["explainer_id"],
        target_model_ref=sidecar.get("target_model_ref", ""),
        seed=int(sidecar.get("seed", 0)),
    )

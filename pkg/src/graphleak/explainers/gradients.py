"""Gradient-based feature explanations.

The importance vector for node i is row i of the gradient of the model's
total predicted-class response, d(sum_j logits[j, pred_j])/dX — what one
reverse pass over the released model produces.  Besides the node's own
prediction term, row i collects the contributions x_i makes to every
neighbour's prediction inside the 2-hop receptive field; for an isolated
node it reduces to d(logit[i, pred_i])/dx_i exactly.

``explain_grad`` differentiates on the tape; ``explain_grad_all`` evaluates
the closed form of the 2-layer GCN for every node at once.  The two routes
are cross-checked in the test suite.
"""

from __future__ import annotations

import numpy as np

from ..diffcore import Tensor, backward, gather_rc, tsum
from ..gnncore import GcnModel
from ..graphdata import AttributedGraph
from .base import resolve_a_hat

__all__ = [
    "explain_grad",
    "explain_grad_input",
    "explain_grad_all",
    "explain_grad_input_all",
]


def explain_grad(model: GcnModel, g: AttributedGraph, node: int) -> np.ndarray:
    """Row ``node`` of the predicted-class response gradient, via the tape."""
    a_hat = resolve_a_hat(model, g)
    xt = Tensor(g.features, requires_grad=True)
    logits = model.forward(xt, a_hat)
    cls = np.argmax(logits.data, axis=1)
    backward(tsum(gather_rc(logits, np.arange(g.n), cls)))
    return xt.grad[node].copy()


def explain_grad_input(model: GcnModel, g: AttributedGraph, node: int) -> np.ndarray:
    return explain_grad(model, g, node) * g.features[node]


def explain_grad_all(model: GcnModel, g: AttributedGraph) -> np.ndarray:
    """All rows of d(sum_j logits[j, pred_j])/dX in four matmuls.

    With logits = A relu(A X W1) W2 and C[j] = onehot(pred_j):
      dL/dX = A @ ((1[pre > 0] * (A @ C @ W2^T)) @ W1^T),
    using the symmetry of A_hat.
    """
    a_hat = resolve_a_hat(model, g)
    w1, w2 = model.W1.data, model.W2.data
    pre = a_hat @ (g.features @ w1)
    relumask = pre > 0
    logits = a_hat @ (np.maximum(pre, 0.0) @ w2)
    cls = np.argmax(logits, axis=1)
    upstream = a_hat @ w2[:, cls].T  # n x h
    return a_hat @ ((relumask * upstream) @ w1.T)


def explain_grad_input_all(model: GcnModel, g: AttributedGraph) -> np.ndarray:
    return explain_grad_all(model, g) * g.features

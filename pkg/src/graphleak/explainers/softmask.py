"""Soft feature masks learned by gradient descent on the local receptive field.

Two objectives share one optimisation loop:

* ``gnnexp`` minimises the cross-entropy between the original prediction and
  the prediction on masked features ``X * M``.
* ``zorro_soft`` minimises the same cross-entropy under the noisy
  interpolation ``X * M + Z * (1 - M)`` with fresh noise each epoch — the
  softmax relaxation of the greedy fidelity objective.

Both add the size and entropy regularisers of the masked-prediction method.
"""

from __future__ import annotations

import numpy as np

from ..diffcore import (
    Adam,
    RngStream,
    Tensor,
    add,
    affine,
    backward,
    cross_entropy_rows,
    log,
    matmul,
    mul,
    relu,
    reshape,
    scale,
    sigmoid,
    tmean,
    zero_grad,
)
from ..gnncore import GcnModel
from ..graphdata import AttributedGraph
from .base import EmpiricalNoise, build_local_view, resolve_a_hat

__all__ = ["explain_gnnexp", "explain_zorro_soft", "OptimizationError"]

_EPS = 1e-12


class OptimizationError(RuntimeError):
    """Mask optimisation produced a non-finite loss."""


def _mask_regularizers(mask, reg_size, reg_entropy):
    reg = scale(tmean(mask), reg_size)
    if reg_entropy:
        log_m = log(affine(mask, 1.0, _EPS))
        log_1m = log(affine(mask, -1.0, 1.0 + _EPS))
        ent = scale(add(mul(mask, log_m), mul(affine(mask, -1.0, 1.0), log_1m)), -1.0)
        reg = add(reg, scale(tmean(ent), reg_entropy))
    return reg


def _optimize_mask(model, g, node, epochs, lr, reg_size, reg_entropy, rng, noisy):
    view = build_local_view(model, g, node, resolve_a_hat(model, g))
    d = g.d
    theta = Tensor(rng.normal(scale=0.1, size=d), requires_grad=True)
    opt = Adam([theta], lr=lr)
    noise = EmpiricalNoise(g.features, rng) if noisy else None

    x_const = Tensor(view.x_local)
    a12 = Tensor(view.a12)
    a11 = Tensor(view.a11.reshape(1, -1))
    w1 = Tensor(view.w1)
    w2 = Tensor(view.w2)
    label = np.array([view.orig_class])

    for epoch in range(epochs):
        zero_grad(theta)
        mask = sigmoid(reshape(theta, (1, d)))
        if noisy:
            z = Tensor(noise.sample(len(view.l2), 1)[0])
            x_tilde = add(mul(x_const, mask), mul(z, affine(mask, -1.0, 1.0)))
        else:
            x_tilde = mul(x_const, mask)
        hidden = relu(matmul(a12, matmul(x_tilde, w1)))
        logits = matmul(matmul(a11, hidden), w2)
        loss = add(
            cross_entropy_rows(logits, label),
            _mask_regularizers(mask, reg_size, reg_entropy),
        )
        if not np.isfinite(loss.data):
            raise OptimizationError(f"non-finite mask loss at epoch {epoch}")
        backward(loss)
        opt.step()

    # final mask in [0,1]
    return 1.0 / (1.0 + np.exp(-theta.data))


def explain_gnnexp(model: GcnModel, g: AttributedGraph, node: int,
                   epochs: int = 100, lr: float = 0.01,
                   reg_size: float = 0.005, reg_entropy: float = 1.0,
                   rng: RngStream | None = None) -> np.ndarray:
    """Soft feature mask minimising masked-prediction cross-entropy."""
    return _optimize_mask(model, g, node, epochs, lr, reg_size, reg_entropy,
                          rng or RngStream(0), noisy=False)


def explain_zorro_soft(model: GcnModel, g: AttributedGraph, node: int,
                       epochs: int = 100, lr: float = 0.01,
                       reg_size: float = 0.005, reg_entropy: float = 1.0,
                       rng: RngStream | None = None) -> np.ndarray:
    """Soft mask trained under the noisy interpolation objective."""
    return _optimize_mask(model, g, node, epochs, lr, reg_size, reg_entropy,
                          rng or RngStream(0), noisy=True)

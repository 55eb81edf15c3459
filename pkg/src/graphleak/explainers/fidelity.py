"""Prediction-robustness fidelity of a feature mask under input randomisation.

The perturbed input keeps masked features and replaces the rest with noise:
``X~ = X * M + Z * (1 - M)``.  Fractional masks interpolate convexly.  The
score is the Monte-Carlo probability that the model's prediction at the node
is unchanged.
"""

from __future__ import annotations

import numpy as np

from ..diffcore import RngStream
from ..gnncore import GcnModel
from ..graphdata import AttributedGraph
from .base import EmpiricalNoise, LocalView, build_local_view, resolve_a_hat

__all__ = ["rdt_fidelity", "fidelity_on_view"]


def fidelity_on_view(view: LocalView, mask: np.ndarray, noise: EmpiricalNoise,
                     samples: int, batch: int = 32) -> float:
    """Monte-Carlo fidelity of a (d,) mask in [0,1] on a prebuilt view."""
    mask = np.asarray(mask, dtype=np.float64)
    rows = len(view.l2)
    agree = 0
    done = 0
    keep = view.x_local * mask
    while done < samples:
        take = min(batch, samples - done)
        z = noise.sample(rows, take)
        x_tilde = keep[None, :, :] + z * (1.0 - mask)
        agree += int((view.predict_batch(x_tilde) == view.orig_class).sum())
        done += take
    return agree / samples


def rdt_fidelity(model: GcnModel, g: AttributedGraph, node: int, mask: np.ndarray,
                 samples: int = 100, rng: RngStream | None = None) -> float:
    """Pr[prediction unchanged] when unmasked features are replaced by noise."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = rng or RngStream(0)
    view = build_local_view(model, g, node, resolve_a_hat(model, g))
    noise = EmpiricalNoise(g.features, rng)
    return fidelity_on_view(view, mask, noise, samples)

"""Surrogate explanations via kernelised sparse feature selection.

Fits a nonnegative lasso between per-feature Gaussian-kernel Gram matrices of
the local dataset (the node plus its 1- and 2-hop neighbours) and the Gram of
the model's posteriors over the same nodes.  Centred, Frobenius-normalised
Grams with median-heuristic bandwidths; solved by projected gradient descent,
which keeps duplicate feature columns exactly symmetric.
"""

from __future__ import annotations

import numpy as np

from ..diffcore import RngStream
from ..gnncore import GcnModel, posteriors
from ..graphdata import AttributedGraph
from .base import build_local_view, resolve_a_hat

__all__ = ["explain_glime", "DegenerateNeighborhoodError"]


class DegenerateNeighborhoodError(RuntimeError):
    """The node's local dataset has fewer than two members."""


def _center_normalize(k: np.ndarray) -> np.ndarray:
    s = k.shape[0]
    h = np.eye(s) - np.full((s, s), 1.0 / s)
    kc = h @ k @ h
    norm = np.linalg.norm(kc)
    # a constant-feature kernel centres to numerical zero; normalising it
    # would amplify rounding noise into a spurious signal
    if norm <= 1e-10 * s:
        return np.zeros_like(kc)
    return kc / norm


def _median_bandwidth(sq_dists: np.ndarray) -> float:
    iu = np.triu_indices(sq_dists.shape[0], k=1)
    vals = np.sqrt(sq_dists[iu])
    vals = vals[vals > 0]
    if len(vals) == 0:
        return 1.0
    return float(np.median(vals))


def _feature_grams(x_local: np.ndarray) -> np.ndarray:
    """(d, s, s) stack of centred, normalised per-feature Gaussian Grams."""
    s, d = x_local.shape
    diffs = x_local[:, None, :] - x_local[None, :, :]  # (s, s, d)
    sq = diffs**2
    grams = np.empty((d, s, s))
    for f in range(d):
        sigma = _median_bandwidth(sq[:, :, f])
        grams[f] = _center_normalize(np.exp(-sq[:, :, f] / (2.0 * sigma**2)))
    return grams


def _output_gram(post_local: np.ndarray) -> np.ndarray:
    sq = ((post_local[:, None, :] - post_local[None, :, :]) ** 2).sum(axis=2)
    sigma = _median_bandwidth(sq)
    return _center_normalize(np.exp(-sq / (2.0 * sigma**2)))


def _nonneg_lasso(m: np.ndarray, target: np.ndarray, lam: float,
                  max_iter: int = 500, tol: float = 1e-6) -> np.ndarray:
    """min 0.5||target - m beta||^2 + lam*sum(beta), beta >= 0 (proj. gradient)."""
    d = m.shape[1]
    beta = np.zeros(d)
    # Lipschitz constant of the quadratic via power iteration on m^T m
    v = np.ones(d) / np.sqrt(d)
    lip = 1.0
    for _ in range(30):
        w = m.T @ (m @ v)
        norm = np.linalg.norm(w)
        if norm == 0:
            break
        lip = norm
        v = w / norm
    step = 1.0 / max(lip, 1e-12)
    mt_target = m.T @ target
    for _ in range(max_iter):
        grad = m.T @ (m @ beta) - mt_target + lam
        new = np.maximum(0.0, beta - step * grad)
        if np.max(np.abs(new - beta)) < tol:
            beta = new
            break
        beta = new
    return beta


def explain_glime(model: GcnModel, g: AttributedGraph, node: int,
                  lam: float = 0.4, max_local_size: int = 64,
                  rng: RngStream | None = None) -> np.ndarray:
    """Nonnegative per-feature scores from the local kernel regression."""
    rng = rng or RngStream(0)
    a_hat = resolve_a_hat(model, g)
    view = build_local_view(model, g, node, a_hat)
    local = view.l2
    if len(local) < 2:
        raise DegenerateNeighborhoodError(
            f"node {node} has a singleton local dataset"
        )
    if len(local) > max_local_size:
        others = local[local != node]
        keep = rng.choice(len(others), size=max_local_size - 1, replace=False)
        local = np.sort(np.concatenate([[node], others[keep]]))

    post = posteriors(model, g.features, a_hat)[local]
    x_local = g.features[local]
    grams = _feature_grams(x_local)  # (d, s, s)
    target = _output_gram(post).reshape(-1)
    m = grams.reshape(grams.shape[0], -1).T  # (s*s, d)
    return _nonneg_lasso(m, target, lam)

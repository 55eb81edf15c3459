"""Explanation utility metrics: fidelity aggregation, entropy sparsity,
mask intersection.

Sparsity uses natural-log Shannon entropy of the normalised absolute mask,
bounded by log(d); lower is sparser.  Soft masks enter fidelity through the
convex interpolation directly (fractional mask values act as keep-weights),
clamped to [0,1] for explainers with unbounded scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffcore import RngStream
from .explainers import EmpiricalNoise, ExplanationSet, build_local_view
from .explainers.base import resolve_a_hat
from .explainers.fidelity import fidelity_on_view
from .gnncore import GcnModel
from .graphdata import AttributedGraph

__all__ = [
    "FidelityReport",
    "sparsity_entropy",
    "explanation_sparsity",
    "dataset_fidelity",
    "intersection_pct",
]


@dataclass
class FidelityReport:
    per_node_fidelity: np.ndarray
    mean_fidelity: float
    sparsity: float
    explainer_id: str


def sparsity_entropy(mask_row: np.ndarray) -> float:
    """Entropy of |mask| normalised to a distribution; 0·log 0 := 0."""
    p = np.abs(np.asarray(mask_row, dtype=np.float64))
    total = p.sum()
    if total == 0:
        raise ValueError("all-zero mask has no normalised distribution")
    p = p / total
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def explanation_sparsity(e: ExplanationSet) -> float:
    """Mean of per-node row entropies; rows with no mass are skipped."""
    vals = []
    for row in e.scores:
        if np.abs(row).sum() > 0:
            vals.append(sparsity_entropy(row))
    if not vals:
        raise ValueError("explanation set has no nonzero rows")
    return float(np.mean(vals))


def _fidelity_mask(row: np.ndarray, kind: str) -> np.ndarray:
    if kind == "hard":
        return row
    return np.clip(row, 0.0, 1.0)


def dataset_fidelity(model: GcnModel, g: AttributedGraph, e: ExplanationSet,
                     samples: int = 100, rng: RngStream | None = None,
                     nodes: np.ndarray | None = None) -> FidelityReport:
    """Mean per-node fidelity of an explanation set plus its sparsity."""
    if e.n != g.n:
        raise ValueError("explanation set does not cover all nodes")
    rng = rng or RngStream(0)
    if nodes is None:
        nodes = np.arange(g.n)
    a_hat = resolve_a_hat(model, g)
    fidelities = np.zeros(len(nodes))
    for k, node in enumerate(nodes):
        view = build_local_view(model, g, int(node), a_hat)
        noise = EmpiricalNoise(g.features, rng.derive(int(node)))
        mask = _fidelity_mask(e.scores[int(node)], e.kind)
        fidelities[k] = fidelity_on_view(view, mask, noise, samples)
    return FidelityReport(
        per_node_fidelity=fidelities,
        mean_fidelity=float(fidelities.mean()),
        sparsity=explanation_sparsity(e),
        explainer_id=e.explainer_id,
    )


def intersection_pct(original: np.ndarray, perturbed: np.ndarray) -> float:
    """Percentage of 1-bits of the original mask retained in the perturbed one."""
    original = np.asarray(original)
    perturbed = np.asarray(perturbed)
    if original.shape != perturbed.shape:
        raise ValueError("mask shapes differ")
    for m in (original, perturbed):
        if not np.all(np.isin(m, (0.0, 1.0))):
            raise ValueError("intersection_pct expects binary masks")
    ones = original == 1
    total = int(ones.sum())
    if total == 0:
        raise ValueError("original mask has no 1-bits")
    return 100.0 * float((perturbed[ones] == 1).sum()) / total

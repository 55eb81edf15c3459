"""Similarity-based reconstruction attacks over probe pairs.

Scores are cosine similarities between released row vectors: explanation rows,
raw feature rows, or model posteriors contrasted against a structure-free
reference model.  All-zero rows score 0 against everything.
"""

from __future__ import annotations

import numpy as np

from ..explainers import ExplanationSet
from ..gnncore import GcnModel, MlpModel, posteriors
from ..graphdata import AttributedGraph, EdgeProbeSet

__all__ = [
    "cosine_pair_scores",
    "explain_sim",
    "feature_sim",
    "lsa_posterior",
]


def _unit_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return m / safe


def cosine_pair_scores(m: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    unit = _unit_rows(np.asarray(m, dtype=np.float64))
    return (unit[u] * unit[v]).sum(axis=1)


def explain_sim(e: ExplanationSet, probes: EdgeProbeSet) -> np.ndarray:
    """Cosine similarity of the endpoints' explanation rows."""
    if probes.endpoints().max() >= e.n:
        raise ValueError("probe endpoints exceed explanation coverage")
    return cosine_pair_scores(e.scores, probes.u, probes.v)


def feature_sim(g: AttributedGraph, probes: EdgeProbeSet) -> np.ndarray:
    """Cosine similarity of the endpoints' raw feature rows."""
    return cosine_pair_scores(g.features, probes.u, probes.v)


def lsa_posterior(m_target: GcnModel, m_ref: MlpModel, g: AttributedGraph,
                  probes: EdgeProbeSet) -> np.ndarray:
    """Target-posterior similarity with the reference model as control.

    score = (cos(target_u, target_v) - cos(ref_u, ref_v) + 1) / 2, mapping the
    graph-attributable excess similarity into [0, 1].
    """
    if m_target.normalized_adjacency is None:
        raise ValueError("target model must be trained (missing adjacency)")
    post_t = posteriors(m_target, g.features)
    post_r = posteriors(m_ref, g.features)
    sim_t = cosine_pair_scores(post_t, probes.u, probes.v)
    sim_r = cosine_pair_scores(post_r, probes.u, probes.v)
    return (sim_t - sim_r + 1.0) / 2.0

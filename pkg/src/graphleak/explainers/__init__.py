"""Six post-hoc feature explainers over a trained 2-layer GCN."""

from __future__ import annotations

import numpy as np

from ..diffcore import RngStream
from ..gnncore import GcnModel, checkpoint_hash
from ..graphdata import AttributedGraph
from .base import (
    EXPLAINER_KINDS,
    EmpiricalNoise,
    ExplanationSet,
    LocalView,
    build_local_view,
    load_explanations,
    save_explanations,
)
from .fidelity import rdt_fidelity
from .glime import DegenerateNeighborhoodError, explain_glime
from .gradients import (
    explain_grad,
    explain_grad_all,
    explain_grad_input,
    explain_grad_input_all,
)
from .softmask import OptimizationError, explain_gnnexp, explain_zorro_soft
from .zorro import explain_zorro

__all__ = [
    "EXPLAINER_KINDS",
    "ExplanationSet",
    "EmpiricalNoise",
    "LocalView",
    "build_local_view",
    "DegenerateNeighborhoodError",
    "OptimizationError",
    "rdt_fidelity",
    "explain_grad",
    "explain_grad_input",
    "explain_grad_all",
    "explain_grad_input_all",
    "explain_zorro",
    "explain_zorro_soft",
    "explain_gnnexp",
    "explain_glime",
    "explain_all",
    "save_explanations",
    "load_explanations",
]

_PER_NODE = {
    "zorro": explain_zorro,
    "zorro_soft": explain_zorro_soft,
    "gnnexp": explain_gnnexp,
    "glime": explain_glime,
}


def explain_all(model: GcnModel, g: AttributedGraph, explainer_id: str,
                rng: RngStream | None = None, **params) -> ExplanationSet:
    """Explain every node; per-node randomness uses streams derived by node id."""
    rng = rng or RngStream(0)
    if explainer_id == "grad":
        scores = explain_grad_all(model, g)
    elif explainer_id == "grad_input":
        scores = explain_grad_input_all(model, g)
    elif explainer_id in _PER_NODE:
        fn = _PER_NODE[explainer_id]
        scores = np.zeros((g.n, g.d))
        for node in range(g.n):
            scores[node] = fn(model, g, node, rng=rng.derive(node), **params)
    else:
        raise ValueError(f"unknown explainer {explainer_id!r}")
    return ExplanationSet(
        scores=scores,
        kind=EXPLAINER_KINDS[explainer_id],
        explainer_id=explainer_id,
        target_model_ref=checkpoint_hash(model),
        seed=rng.seed,
    )

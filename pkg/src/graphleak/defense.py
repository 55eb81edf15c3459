"""Randomised-response perturbation of released explanations.

Each released bit is resampled independently: a 1 stays 1 with probability
e^eps / (e^eps + 1) and a 0 becomes 1 with probability 1 / (e^eps + 1), which
is eps-local-DP per bit and d*eps for a d-dimensional explanation.  The soft
variant keeps each value with the same coin and otherwise replaces it with a
standard-normal draw.  eps is capped at 50; beyond the cap the mechanism is
the identity (the flip probability underflows anyway).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffcore import RngStream
from .explainers import ExplanationSet

__all__ = [
    "EPS_CAP",
    "PrivacyBudget",
    "transition_probabilities",
    "perturb_hard",
    "perturb_soft",
    "ldp_account",
]

EPS_CAP = 50.0


@dataclass
class PrivacyBudget:
    epsilon: float
    d: int

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def total(self) -> float:
        return self.d * self.epsilon


def transition_probabilities(eps: float) -> tuple[float, float]:
    """(Pr[out=1 | in=1], Pr[out=1 | in=0]) for the per-bit mechanism."""
    eps = min(float(eps), EPS_CAP)
    e = np.exp(eps)
    return e / (e + 1.0), 1.0 / (e + 1.0)


def _as_epsilon(eps) -> float:
    return eps.epsilon if isinstance(eps, PrivacyBudget) else float(eps)


def perturb_hard(e: ExplanationSet, eps, rng: RngStream) -> ExplanationSet:
    """Independently resample every bit of a hard explanation set."""
    if e.kind != "hard":
        raise ValueError("perturb_hard expects a hard explanation set")
    epsilon = _as_epsilon(eps)
    if epsilon > EPS_CAP:
        out = e.scores.copy()
    else:
        p_keep, p_up = transition_probabilities(epsilon)
        p_one = np.where(e.scores == 1.0, p_keep, p_up)
        out = (rng.uniform(size=e.scores.shape) < p_one).astype(np.float64)
    return ExplanationSet(out, "hard", e.explainer_id, e.target_model_ref, e.seed)


def perturb_soft(e: ExplanationSet, eps, rng: RngStream) -> ExplanationSet:
    """Keep each value with prob e^eps/(e^eps+1); else draw from N(0,1)."""
    if e.kind != "soft":
        raise ValueError("perturb_soft expects a soft explanation set")
    epsilon = _as_epsilon(eps)
    if epsilon > EPS_CAP:
        out = e.scores.copy()
    else:
        p_keep, _ = transition_probabilities(epsilon)
        keep = rng.uniform(size=e.scores.shape) < p_keep
        noise = rng.normal(size=e.scores.shape)
        out = np.where(keep, e.scores, noise)
    return ExplanationSet(out, "soft", e.explainer_id, e.target_model_ref, e.seed)


def ldp_account(eps_per_bit: float, d: int) -> float:
    """Total privacy budget of releasing d independently perturbed bits."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return d * float(eps_per_bit)

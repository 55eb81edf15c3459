"""Attack scoring and experiment protocols.

AUC is the rank-based (Mann-Whitney) statistic with average-rank tie
handling; AP sums precision over the descending-score ranking with ties
broken by stable input order.  ``run_protocol`` implements the paired
10-runs protocol and the crossed 100-runs variant over pre-generated
balanced probe sets.  The attacker's advantage retrains a fresh 2-layer GCN
on the reconstructed graph and reports downstream test accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .attacks.gsl import ReconScore
from .diffcore import RngStream
from .gnncore import GcnConfig, GcnModel, accuracy, normalize_adjacency, train_target
from .graphdata import AttributedGraph, EdgeProbeSet, sample_probe_set

__all__ = [
    "MetricError",
    "auc",
    "average_precision",
    "AttackRun",
    "AttackReport",
    "run_protocol",
    "AdvantageReport",
    "attacker_advantage",
    "downstream_accuracy",
]


class MetricError(ValueError):
    """The scored probes cannot support the requested metric."""


def _check_two_classes(labels: np.ndarray) -> None:
    if not ((labels == 1).any() and (labels == 0).any()):
        raise MetricError("need at least one positive and one negative probe")


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUC with average ranks on ties."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    _check_two_classes(labels)
    ranks = rankdata(scores, method="average")
    n_pos = int((labels == 1).sum())
    n_neg = len(labels) - n_pos
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """Precision/recall staircase AP; ties keep stable input order."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    _check_two_classes(labels)
    order = np.argsort(-scores, kind="stable")
    sorted_labels = labels[order]
    hits = np.cumsum(sorted_labels == 1)
    ks = np.arange(1, len(labels) + 1)
    precision_at_hits = (hits / ks)[sorted_labels == 1]
    return float(precision_at_hits.sum() / hits[-1])


@dataclass
class AttackRun:
    seed: int
    probe_seed: int
    auc: float
    ap: float


@dataclass
class AttackReport:
    runs: list[AttackRun]
    mean_auc: float = field(init=False)
    std_auc: float = field(init=False)
    mean_ap: float = field(init=False)
    std_ap: float = field(init=False)

    def __post_init__(self):
        aucs = np.array([r.auc for r in self.runs])
        aps = np.array([r.ap for r in self.runs])
        self.mean_auc = float(aucs.mean())
        self.mean_ap = float(aps.mean())
        ddof = 1 if len(self.runs) > 1 else 0
        self.std_auc = float(aucs.std(ddof=ddof))
        self.std_ap = float(aps.std(ddof=ddof))

    def to_dict(self) -> dict:
        return {
            "runs": [r.__dict__ for r in self.runs],
            "mean_auc": self.mean_auc,
            "std_auc": self.std_auc,
            "mean_ap": self.mean_ap,
            "std_ap": self.std_ap,
        }


def run_protocol(attack_factory, g: AttributedGraph, seeds: list[int],
                 mode: str = "runs10", node_fraction: float = 0.10,
                 probes: list[EdgeProbeSet] | None = None,
                 probe_seeds: list[int] | None = None) -> AttackReport:
    """Evaluate an attack over pre-generated probe sets.

    ``attack_factory(seed)`` returns a scorer ``f(probes) -> scores``.
    ``runs10`` pairs instantiation i with probe set i; ``runs100`` crosses
    every instantiation with every probe set (the instantiation list may then
    be shorter than the probe list).
    """
    if mode not in ("runs10", "runs100"):
        raise ValueError(f"unknown protocol mode {mode!r}")
    if probe_seeds is None:
        probe_seeds = list(seeds)
    if probes is None:
        probes = [
            sample_probe_set(g, node_fraction, RngStream(seed, 31))
            for seed in probe_seeds
        ]
    if mode == "runs10" and len(probes) != len(seeds):
        raise ValueError("runs10 pairs instantiations with probe sets one-to-one")

    runs = []
    for i, seed in enumerate(seeds):
        scorer = attack_factory(seed)
        targets = [i] if mode == "runs10" else range(len(probes))
        for j in targets:
            scores = scorer(probes[j])
            runs.append(AttackRun(
                seed=seed,
                probe_seed=probe_seeds[j],
                auc=auc(scores, probes[j].labels),
                ap=average_precision(scores, probes[j].labels),
            ))
    return AttackReport(runs=runs)


# ---------------------------------------------------------------------------
# attacker's advantage


@dataclass
class AdvantageReport:
    input_kind: str
    adj_source: str
    accuracy: float
    baselines: dict = field(default_factory=dict)


def downstream_accuracy(x: np.ndarray, adjacency01: np.ndarray,
                        g: AttributedGraph, y: np.ndarray | None = None,
                        cfg: GcnConfig | None = None) -> float:
    """Test accuracy of a fresh 2-layer GCN trained on (x, adjacency01)."""
    cfg = cfg or GcnConfig()
    surrogate = AttributedGraph(
        n=g.n,
        features=np.asarray(x, dtype=np.float64),
        labels=g.labels if y is None else np.asarray(y, dtype=np.int64),
        adjacency=np.asarray(adjacency01, dtype=np.float64),
        splits=g.splits,
        feature_kind="continuous",
        num_classes=g.num_classes,
    )
    model = train_target(surrogate, cfg)
    return accuracy(model, surrogate, surrogate.splits.test)


def attacker_advantage(i_x: np.ndarray, recon: ReconScore, y: np.ndarray,
                       g: AttributedGraph, cfg: GcnConfig | None = None,
                       rng: RngStream | None = None,
                       with_max_baseline: bool = False,
                       slaps_recon: ReconScore | None = None,
                       input_kind: str = "explanations") -> AdvantageReport:
    """Downstream accuracy of a GCN trained on the attacker's inputs.

    The reconstructed graph is Bernoulli-sampled from the edge scores.  The
    ``max`` baseline retrains with the true features and graph under the same
    config; a SLAPS baseline is computed when its reconstruction is supplied.
    """
    cfg = cfg or GcnConfig()
    rng = rng or RngStream(cfg.seed, 17)
    sampled = recon.sample_graph(rng)
    acc = downstream_accuracy(i_x, sampled, g, y, cfg)
    baselines = {}
    if with_max_baseline:
        baselines["max_acc"] = downstream_accuracy(g.features, g.adjacency, g, None, cfg)
    if slaps_recon is not None:
        slaps_sampled = slaps_recon.sample_graph(rng.derive(1))
        baselines["slaps_acc"] = downstream_accuracy(g.features, slaps_sampled, g, None, cfg)
    return AdvantageReport(
        input_kind=input_kind,
        adj_source=recon.provenance,
        accuracy=acc,
        baselines=baselines,
    )

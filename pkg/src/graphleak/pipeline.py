"""Experiment harness: config validation, stage orchestration, caching.

A single JSON config declares the pipeline; each stage's artifact is cached
under a content hash of (dataset bytes, stage params, seed), so reruns with
an identical config are cache hits and produce bit-identical reports.  No
artifact embeds a timestamp.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .attacks import (
    ConfigurationError,
    VARIANT_REQUIREMENTS,
    GslConfig,
    ReconScore,
    black_box_labels,
    explain_sim,
    feature_sim,
    lsa_posterior,
    run_gsl_attack,
)
from .defense import perturb_hard, perturb_soft
from .diffcore import RngStream
from .evaluation import AttackReport, attacker_advantage, run_protocol
from .expmetrics import dataset_fidelity, explanation_sparsity, intersection_pct
from .explainers import ExplanationSet, explain_all, load_explanations, save_explanations
from .gnncore import (
    GcnConfig,
    accuracy,
    checkpoint_hash,
    load_checkpoint,
    save_checkpoint,
    train_mlp,
    train_target,
)
from .graphdata import AttributedGraph, induced_subgraph, load_graph, synth_sbm

__all__ = ["ConfigError", "ExperimentConfig", "Pipeline"]

SIMILARITY_VARIANTS = ("explain_sim", "feature_sim", "lsa")
GSL_VARIANTS = tuple(VARIANT_REQUIREMENTS)

_SCHEMA = {
    "dataset": {"kind", "path", "blocks", "sizes", "p_in", "p_out",
                "feature_signal", "d", "seed", "split_seed"},
    "target": {"hidden", "dropout", "lr", "weight_decay", "epochs", "seed"},
    "explainer": {"id", "tau", "samples", "epochs", "lr", "reg_size",
                  "reg_entropy", "lam", "max_features", "max_local_size", "seed"},
    "attack": {"variant", "epochs", "lr", "dae_hidden", "dae_dropout", "cls_lr",
               "cls_hidden", "cls_dropout", "noise_ratio", "warmup_frac",
               "instantiations", "seed"},
    "defense": {"epsilon", "fidelity_samples", "seed"},
    "protocol": {"mode", "seeds", "node_fraction"},
    "advantage": {"enabled", "input", "with_baselines", "hidden", "dropout",
                  "lr", "weight_decay", "epochs", "seed"},
}
_TOP_LEVEL = set(_SCHEMA) | {"partial_nodes", "black_box_labels", "output_dir"}


class ConfigError(ValueError):
    """Invalid experiment config; message names the offending field."""


def _check_keys(section: str, given: dict) -> None:
    unknown = set(given) - _SCHEMA[section]
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {sorted(unknown)}")


@dataclass
class ExperimentConfig:
    raw: dict

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})")
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        unknown = set(raw) - _TOP_LEVEL
        if unknown:
            raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
        if "dataset" not in raw:
            raise ConfigError("missing required section 'dataset'")
        for section in _SCHEMA:
            if section in raw:
                if not isinstance(raw[section], dict):
                    raise ConfigError(f"section '{section}' must be an object")
                _check_keys(section, raw[section])
        cfg = cls(raw=raw)
        cfg.validate_dependencies()
        return cfg

    def section(self, name: str, default=None) -> dict:
        return dict(self.raw.get(name, default or {}))

    def validate_dependencies(self) -> None:
        attack = self.raw.get("attack", {})
        variant = attack.get("variant")
        if variant is not None:
            known = SIMILARITY_VARIANTS + GSL_VARIANTS
            if variant not in known:
                raise ConfigError(f"unknown attack variant {variant!r}")
            needs_expl = variant == "explain_sim" or (
                variant in GSL_VARIANTS
                and "explanations" in VARIANT_REQUIREMENTS[variant]
            )
            if needs_expl and "explainer" not in self.raw:
                raise ConfigError(
                    f"attack '{variant}' needs explanations: configure the "
                    "'explainer' section and run the explain stage first"
                )
        if "defense" in self.raw and "explainer" not in self.raw:
            raise ConfigError(
                "defense needs explanations: configure the 'explainer' "
                "section and run the explain stage first"
            )
        adv = self.raw.get("advantage", {})
        if adv.get("enabled") and variant not in GSL_VARIANTS:
            raise ConfigError(
                "advantage needs a reconstructed adjacency: run a structure-"
                "learning attack stage first (gsef/gsef_concat/gsef_mult/gse/slaps)"
            )

    def resolved(self) -> dict:
        out = {k: self.raw[k] for k in sorted(self.raw)}
        out.setdefault("protocol", {"mode": "runs10", "seeds": list(range(10)),
                                    "node_fraction": 0.10})
        return out


def _digest(*parts) -> str:
    blob = json.dumps(parts, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _graph_digest(g: AttributedGraph) -> str:
    h = hashlib.sha256()
    for arr in (g.features, g.labels, g.adjacency, g.splits.train, g.splits.val,
                g.splits.test):
        h.update(np.ascontiguousarray(arr).tobytes())
    h.update(g.feature_kind.encode())
    return h.hexdigest()[:16]


class Pipeline:
    """Runs the declared stages with content-addressed caching."""

    def __init__(self, config: ExperimentConfig, out_dir: str,
                 cache_dir: str | None = None):
        self.config = config
        self.out_dir = out_dir
        cache = cache_dir or os.environ.get("GRAPHLEAK_CACHE") or os.path.join(out_dir, ".cache")
        self.cache_dir = cache
        os.makedirs(out_dir, exist_ok=True)
        os.makedirs(cache, exist_ok=True)
        self._graph: AttributedGraph | None = None
        self._target = None
        self._mlp = None
        self._explanations: ExplanationSet | None = None

    # -- stages -------------------------------------------------------------

    def graph(self) -> AttributedGraph:
        if self._graph is not None:
            return self._graph
        ds = self.config.section("dataset")
        kind = ds.get("kind")
        if kind == "sbm":
            g = synth_sbm(
                int(ds.get("blocks", len(ds.get("sizes", [])))),
                list(ds["sizes"]),
                float(ds["p_in"]), float(ds["p_out"]),
                float(ds.get("feature_signal", 1.0)), int(ds["d"]),
                RngStream(int(ds.get("seed", 0))),
            )
        elif kind in ("canonical", "planetoid_raw"):
            g = load_graph(ds["path"], format=kind,
                           split_seed=int(ds.get("split_seed", 0)))
        else:
            raise ConfigError(f"dataset.kind must be sbm/canonical/planetoid_raw, got {kind!r}")
        partial = self.config.raw.get("partial_nodes")
        if partial is not None:
            g = induced_subgraph(g, float(partial),
                                 RngStream(int(ds.get("seed", 0)), 3))
        self._graph = g
        return g

    def target(self):
        if self._target is not None:
            return self._target
        g = self.graph()
        params = self.config.section("target")
        cfg = GcnConfig(**{k: params[k] for k in params})
        key = _digest("target", _graph_digest(g), params)
        path = os.path.join(self.cache_dir, f"target-{key}.json")
        if os.path.exists(path):
            model = load_checkpoint(path)
            from .gnncore import normalize_adjacency

            model.normalized_adjacency = normalize_adjacency(g.adjacency)
        else:
            model = train_target(g, cfg)
            save_checkpoint(model, path)
        self._target = model
        return model

    def reference_mlp(self):
        if self._mlp is not None:
            return self._mlp
        g = self.graph()
        params = self.config.section("target")
        cfg = GcnConfig(**{k: params[k] for k in params})
        key = _digest("mlp", _graph_digest(g), params)
        path = os.path.join(self.cache_dir, f"mlp-{key}.json")
        if os.path.exists(path):
            model = load_checkpoint(path)
        else:
            model = train_mlp(g, cfg)
            save_checkpoint(model, path)
        self._mlp = model
        return model

    def explanations(self) -> ExplanationSet:
        if self._explanations is not None:
            return self._explanations
        if "explainer" not in self.config.raw:
            raise ConfigurationError(
                "no 'explainer' section configured: run the explain stage first"
            )
        params = self.config.section("explainer")
        explainer_id = params.pop("id")
        seed = int(params.pop("seed", 0))
        g = self.graph()
        model = self.target()
        key = _digest("explain", _graph_digest(g), checkpoint_hash(model),
                      explainer_id, params, seed)
        base = os.path.join(self.cache_dir, f"expl-{key}")
        if os.path.exists(base + ".json"):
            e = load_explanations(base)
        else:
            e = explain_all(model, g, explainer_id, RngStream(seed), **params)
            save_explanations(e, base)
        self._explanations = e
        return e

    def labels(self) -> np.ndarray:
        g = self.graph()
        if self.config.raw.get("black_box_labels"):
            return black_box_labels(self.target(), g)
        return g.labels

    # -- attack + evaluation --------------------------------------------------

    def _protocol(self) -> dict:
        return self.config.resolved()["protocol"]

    def _attack_factory_and_seeds(self):
        g = self.graph()
        attack = self.config.section("attack")
        if not attack:
            raise ConfigError("missing 'attack' section")
        variant = attack.pop("variant")
        proto = self._protocol()
        probe_seeds = [int(s) for s in proto["seeds"]]

        if variant == "feature_sim":
            return (lambda seed: lambda p: feature_sim(g, p)), probe_seeds, probe_seeds, "runs10"
        if variant == "explain_sim":
            e = self.defended_or_raw_explanations()
            return (lambda seed: lambda p: explain_sim(e, p)), probe_seeds, probe_seeds, "runs10"
        if variant == "lsa":
            target, mlp = self.target(), self.reference_mlp()
            return (
                (lambda seed: lambda p: lsa_posterior(target, mlp, g, p)),
                probe_seeds, probe_seeds, "runs10",
            )

        # structure-learning family: instantiations may be fewer than probes
        instantiations = int(attack.pop("instantiations", 1))
        base_seed = int(attack.pop("seed", 0))
        gsl_kwargs = dict(attack)
        e = (self.explanations()
             if "explanations" in VARIANT_REQUIREMENTS[variant] else None)
        labels = self.labels()

        def factory(seed):
            cfg = GslConfig(seed=seed, **gsl_kwargs)
            recon, history = run_gsl_attack(variant, g, e, cfg, labels=labels)
            self._save_recon(variant, seed, recon)
            return lambda p: recon.pair_scores(p.u, p.v)

        seeds = [base_seed + i for i in range(instantiations)]
        mode = "runs10" if self._protocol()["mode"] == "runs10" and instantiations == len(probe_seeds) else "runs100"
        return factory, seeds, probe_seeds, mode

    def _save_recon(self, variant, seed, recon: ReconScore):
        path = os.path.join(self.out_dir, f"recon-{variant}-seed{seed}.npy")
        np.save(path, recon.edge_scores)
        self._last_recon = recon

    def defended_or_raw_explanations(self) -> ExplanationSet:
        e = self.explanations()
        defense = self.config.section("defense")
        if not defense:
            return e
        eps = float(defense["epsilon"])
        rng = RngStream(int(defense.get("seed", 0)), 13)
        return perturb_hard(e, eps, rng) if e.kind == "hard" else perturb_soft(e, eps, rng)

    def run_attack_stage(self) -> AttackReport:
        g = self.graph()
        proto = self._protocol()
        factory, seeds, probe_seeds, mode = self._attack_factory_and_seeds()
        report = run_protocol(
            factory, g, seeds, mode=mode,
            node_fraction=float(proto.get("node_fraction", 0.10)),
            probe_seeds=probe_seeds,
        )
        self._write_json("attack_report.json", {"report": report.to_dict()})
        rows = ["seed,probe_seed,auc,ap"]
        rows += [f"{r.seed},{r.probe_seed},{r.auc!r},{r.ap!r}" for r in report.runs]
        self._write_text("attack_report.csv", "\n".join(rows) + "\n")
        return report

    def run_fidelity_stage(self) -> dict:
        e = self.defended_or_raw_explanations()
        g = self.graph()
        model = self.target()
        defense = self.config.section("defense")
        samples = int(defense.get("fidelity_samples", 50)) if defense else 50
        rep = dataset_fidelity(model, g, e, samples=samples, rng=RngStream(5, 19))
        row = {
            "explainer": e.explainer_id,
            "dataset": self.config.section("dataset").get("kind", "dataset"),
            "fidelity": rep.mean_fidelity,
            "sparsity": rep.sparsity,
        }
        if defense and e.kind == "hard":
            row["intersection_pct"] = intersection_pct(
                self.explanations().scores, e.scores
            )
        header = ",".join(row)
        values = ",".join(repr(v) if isinstance(v, float) else str(v) for v in row.values())
        self._write_text("fidelity_report.csv", header + "\n" + values + "\n")
        return row

    def run_advantage_stage(self) -> dict:
        adv = self.config.section("advantage")
        if not adv.get("enabled"):
            raise ConfigError("advantage stage not enabled in config")
        g = self.graph()
        recon = getattr(self, "_last_recon", None)
        if recon is None:
            raise ConfigError("advantage needs a reconstruction: run the attack stage first")
        e = self.explanations() if "explainer" in self.config.raw else None
        input_kind = adv.get("input", "explanations")
        if input_kind == "explanations":
            i_x = e.scores
        elif input_kind == "features":
            i_x = g.features
        elif input_kind == "features_plus_explanations":
            i_x = np.concatenate([g.features, e.scores], axis=1)
        else:
            raise ConfigError(f"unknown advantage input {input_kind!r}")
        cfg = GcnConfig(**{k: adv[k] for k in adv
                           if k in ("hidden", "dropout", "lr", "weight_decay", "epochs", "seed")})
        report = attacker_advantage(
            i_x, recon, self.labels(), g, cfg,
            RngStream(int(adv.get("seed", 0)), 17),
            with_max_baseline=bool(adv.get("with_baselines", False)),
            input_kind=input_kind,
        )
        payload = {
            "input_kind": report.input_kind,
            "adj_source": report.adj_source,
            "accuracy": report.accuracy,
            "baselines": report.baselines,
        }
        self._write_json("advantage_report.json", {"advantage": payload})
        return payload

    def run(self) -> dict:
        """Execute the declared pipeline; returns a summary dict."""
        summary = {"target_test_accuracy": None, "attack": None}
        g = self.graph()
        model = self.target()
        summary["target_test_accuracy"] = accuracy(model, g, g.splits.test)
        if "attack" in self.config.raw:
            report = self.run_attack_stage()
            summary["attack"] = {"mean_auc": report.mean_auc, "mean_ap": report.mean_ap}
        if "explainer" in self.config.raw:
            summary["explanation_utility"] = self.run_fidelity_stage()
        if self.config.section("advantage").get("enabled"):
            summary["advantage"] = self.run_advantage_stage()
        self._write_json("summary.json", {"summary": summary})
        return summary

    # -- artifact helpers -----------------------------------------------------

    def _write_json(self, name: str, payload: dict) -> None:
        body = {"config": self.config.resolved(), **payload}
        with open(os.path.join(self.out_dir, name), "w") as fh:
            json.dump(body, fh, indent=1, sort_keys=True)

    def _write_text(self, name: str, text: str) -> None:
        with open(os.path.join(self.out_dir, name), "w") as fh:
            fh.write(text)

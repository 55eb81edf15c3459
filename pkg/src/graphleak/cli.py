"""Command-line harness around the experiment pipeline.

Subcommands: run, sweep, explain, attack, defend, advantage, report.
Common flags: --config, --seed, --out, --cache-dir, --mode, --partial-nodes,
--black-box-labels.  GRAPHLEAK_CACHE overrides the cache directory.
"""

from __future__ import annotations

import argparse
import copy
import itertools
import json
import os
import sys

from .attacks import ConfigurationError
from .pipeline import ConfigError, ExperimentConfig, Pipeline


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    raw = copy.deepcopy(cfg.raw)
    if getattr(args, "seed", None) is not None:
        raw.setdefault("protocol", {})
        raw["protocol"]["seeds"] = [args.seed + i for i in range(10)]
    if getattr(args, "mode", None):
        raw.setdefault("protocol", {})
        raw["protocol"]["mode"] = args.mode
    if getattr(args, "partial_nodes", None) is not None:
        raw["partial_nodes"] = args.partial_nodes
    if getattr(args, "black_box_labels", False):
        raw["black_box_labels"] = True
    if getattr(args, "out", None):
        raw["output_dir"] = args.out
    return ExperimentConfig.from_dict(raw)


def _pipeline(args) -> Pipeline:
    cfg = _load_config(args)
    out = cfg.raw.get("output_dir", "out")
    return Pipeline(cfg, out, cache_dir=getattr(args, "cache_dir", None))


def cmd_run(args) -> int:
    summary = _pipeline(args).run()
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


def cmd_explain(args) -> int:
    p = _pipeline(args)
    e = p.explanations()
    print(f"explained {e.n} nodes with {e.explainer_id} (kind={e.kind})")
    return 0


def cmd_attack(args) -> int:
    p = _pipeline(args)
    report = p.run_attack_stage()
    print(f"mean AUC {report.mean_auc:.4f}  mean AP {report.mean_ap:.4f} "
          f"over {len(report.runs)} runs")
    return 0


def cmd_defend(args) -> int:
    p = _pipeline(args)
    if "defense" not in p.config.raw:
        raise ConfigError("no 'defense' section in config")
    row = p.run_fidelity_stage()
    report = p.run_attack_stage() if "attack" in p.config.raw else None
    if report is not None:
        row = {**row, "auc": report.mean_auc, "ap": report.mean_ap}
    print(json.dumps(row, indent=1, sort_keys=True))
    return 0


def cmd_advantage(args) -> int:
    p = _pipeline(args)
    p.run_attack_stage()
    payload = p.run_advantage_stage()
    print(json.dumps(payload, indent=1, sort_keys=True))
    return 0


def _set_dotted(raw: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = raw
    for key in parts[:-1]:
        node = node.setdefault(key, {})
    node[parts[-1]] = value


def cmd_sweep(args) -> int:
    with open(args.grid) as fh:
        grid = json.load(fh)
    if not grid or not all(isinstance(v, list) and v for v in grid.values()):
        raise ConfigError("sweep grid must map dotted keys to non-empty value lists")
    base = ExperimentConfig.from_file(args.config).raw
    out_root = args.out or base.get("output_dir", "out")
    os.makedirs(out_root, exist_ok=True)

    keys = sorted(grid)
    rows = []
    failures = []
    for i, combo in enumerate(itertools.product(*(grid[k] for k in keys))):
        raw = copy.deepcopy(base)
        for k, v in zip(keys, combo):
            _set_dotted(raw, k, v)
        cell_dir = os.path.join(out_root, f"cell-{i:03d}")
        raw["output_dir"] = cell_dir
        try:
            cfg = ExperimentConfig.from_dict(raw)
            summary = Pipeline(cfg, cell_dir, cache_dir=args.cache_dir).run()
            row = dict(zip(keys, combo))
            row["cell"] = i
            if summary.get("attack"):
                row["mean_auc"] = summary["attack"]["mean_auc"]
                row["mean_ap"] = summary["attack"]["mean_ap"]
            util = summary.get("explanation_utility")
            if util:
                row.update({k: v for k, v in util.items()
                            if k in ("fidelity", "sparsity", "intersection_pct")})
            rows.append(row)
        except Exception as e:  # partial results still flushed below
            failures.append({"cell": i, "params": dict(zip(keys, combo)), "error": str(e)})

    if rows:
        cols = sorted({c for r in rows for c in r})
        lines = [",".join(cols)]
        for r in rows:
            lines.append(",".join(str(r.get(c, "")) for c in cols))
        with open(os.path.join(out_root, "sweep.csv"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
    if failures:
        with open(os.path.join(out_root, "failure_manifest.json"), "w") as fh:
            json.dump(failures, fh, indent=1)
        print(f"{len(failures)} sweep cell(s) failed", file=sys.stderr)
        return 1
    print(f"swept {len(rows)} cells -> {os.path.join(out_root, 'sweep.csv')}")
    return 0


def cmd_report(args) -> int:
    """Merge per-run attack reports under a directory into one CSV."""
    root = args.out or "out"
    rows = []
    for dirpath, _, files in os.walk(root):
        if "attack_report.json" in files:
            with open(os.path.join(dirpath, "attack_report.json")) as fh:
                payload = json.load(fh)
            rep = payload["report"]
            rows.append({
                "dir": os.path.relpath(dirpath, root),
                "mean_auc": rep["mean_auc"],
                "std_auc": rep["std_auc"],
                "mean_ap": rep["mean_ap"],
                "std_ap": rep["std_ap"],
            })
    if not rows:
        print(f"no attack reports found under {root}", file=sys.stderr)
        return 1
    cols = ["dir", "mean_auc", "std_auc", "mean_ap", "std_ap"]
    lines = [",".join(cols)] + [",".join(str(r[c]) for c in cols) for r in rows]
    path = os.path.join(root, "merged_reports.csv")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"merged {len(rows)} reports -> {path}")
    return 0


def _add_common(p: argparse.ArgumentParser, needs_config=True) -> None:
    if needs_config:
        p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--seed", type=int, default=None,
                   help="override base seed (protocol seeds become seed..seed+9)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--cache-dir", default=None,
                   help="cache directory (default: GRAPHLEAK_CACHE or <out>/.cache)")
    p.add_argument("--mode", choices=["runs10", "runs100"], default=None)
    p.add_argument("--partial-nodes", type=float, default=None,
                   help="restrict to a sampled node fraction before running")
    p.add_argument("--black-box-labels", action="store_true",
                   help="replace ground-truth labels with target predictions")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphleak",
        description="Graph reconstruction attacks on GNN feature explanations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in [("run", cmd_run), ("explain", cmd_explain),
                     ("attack", cmd_attack), ("defend", cmd_defend),
                     ("advantage", cmd_advantage)]:
        p = sub.add_parser(name)
        _add_common(p)
        p.set_defaults(fn=fn)
    p = sub.add_parser("sweep")
    _add_common(p)
    p.add_argument("--grid", required=True, help="JSON grid of dotted keys to value lists")
    p.set_defaults(fn=cmd_sweep)
    p = sub.add_parser("report")
    p.add_argument("--out", default="out")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ConfigurationError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

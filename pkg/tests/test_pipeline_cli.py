import json
import os
import time

import numpy as np
import pytest

from graphleak.cli import main
from graphleak.pipeline import ConfigError, ExperimentConfig, Pipeline


def sbm_config(out_dir, **extra):
    cfg = {
        "dataset": {"kind": "sbm", "blocks": 2, "sizes": [20, 20], "p_in": 0.5,
                    "p_out": 0.05, "feature_signal": 3.0, "d": 6, "seed": 1},
        "target": {"hidden": 8, "dropout": 0.2, "epochs": 40, "seed": 0},
        "explainer": {"id": "grad", "seed": 0},
        "attack": {"variant": "explain_sim"},
        "protocol": {"mode": "runs10", "seeds": [0, 1, 2, 3], "node_fraction": 0.2},
        "output_dir": str(out_dir),
    }
    cfg.update(extra)
    return cfg


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


class TestConfigValidation:
    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown top-level"):
            ExperimentConfig.from_dict({"dataset": {"kind": "sbm"}, "typo": 1})

    def test_unknown_stage_key_named(self):
        cfg = sbm_config("x")
        cfg["target"]["learning_rate"] = 0.1  # should be "lr"
        with pytest.raises(ConfigError, match="target"):
            ExperimentConfig.from_dict(cfg)

    def test_gse_without_explainer_names_missing_stage(self):
        cfg = sbm_config("x")
        del cfg["explainer"]
        cfg["attack"] = {"variant": "gse", "epochs": 1}
        with pytest.raises(ConfigError, match="explain stage first"):
            ExperimentConfig.from_dict(cfg)

    def test_advantage_without_gsl_attack_rejected(self):
        cfg = sbm_config("x")
        cfg["advantage"] = {"enabled": True}
        with pytest.raises(ConfigError, match="structure-"):
            ExperimentConfig.from_dict(cfg)


class TestPipelineRun:
    def test_smoke_run_under_a_minute_and_writes_reports(self, tmp_path):
        started = time.time()
        cfg = ExperimentConfig.from_dict(sbm_config(tmp_path / "out"))
        summary = Pipeline(cfg, str(tmp_path / "out")).run()
        assert time.time() - started < 60
        assert summary["attack"]["mean_auc"] > 0.5
        for name in ("attack_report.json", "attack_report.csv",
                     "fidelity_report.csv", "summary.json"):
            assert (tmp_path / "out" / name).exists()
        payload = json.loads((tmp_path / "out" / "attack_report.json").read_text())
        assert payload["config"]["protocol"]["seeds"] == [0, 1, 2, 3]

    def test_rerun_is_cache_hit_and_bit_identical(self, tmp_path):
        cfg = ExperimentConfig.from_dict(sbm_config(tmp_path / "out"))
        cache = str(tmp_path / "cache")
        Pipeline(cfg, str(tmp_path / "out"), cache_dir=cache).run()
        first = (tmp_path / "out" / "attack_report.json").read_bytes()
        cached_files = set(os.listdir(cache))
        started = time.time()
        Pipeline(ExperimentConfig.from_dict(sbm_config(tmp_path / "out")),
                 str(tmp_path / "out"), cache_dir=cache).run()
        rerun_time = time.time() - started
        assert (tmp_path / "out" / "attack_report.json").read_bytes() == first
        assert set(os.listdir(cache)) == cached_files
        assert rerun_time < 10

    def test_gsl_attack_with_advantage(self, tmp_path):
        cfg_dict = sbm_config(
            tmp_path / "out",
            attack={"variant": "gse", "epochs": 10, "dae_hidden": 8,
                    "cls_hidden": 4, "instantiations": 1, "seed": 0},
            advantage={"enabled": True, "input": "explanations",
                       "hidden": 8, "epochs": 20, "with_baselines": True},
        )
        cfg_dict["explainer"] = {"id": "zorro", "tau": 0.7, "samples": 10, "seed": 0}
        cfg = ExperimentConfig.from_dict(cfg_dict)
        p = Pipeline(cfg, str(tmp_path / "out"))
        summary = p.run()
        assert "advantage" in summary
        assert 0.0 <= summary["advantage"]["accuracy"] <= 1.0
        assert "max_acc" in summary["advantage"]["baselines"]
        assert (tmp_path / "out" / "advantage_report.json").exists()
        assert (tmp_path / "out" / "recon-gse-seed0.npy").exists()

    def test_partial_nodes_restricts_graph(self, tmp_path):
        cfg = ExperimentConfig.from_dict(
            sbm_config(tmp_path / "out", partial_nodes=0.5)
        )
        p = Pipeline(cfg, str(tmp_path / "out"))
        assert p.graph().n == 20

    def test_black_box_labels_used(self, tmp_path):
        cfg = ExperimentConfig.from_dict(sbm_config(tmp_path / "out", black_box_labels=True))
        p = Pipeline(cfg, str(tmp_path / "out"))
        labels = p.labels()
        from graphleak.gnncore import predictions

        np.testing.assert_array_equal(labels, predictions(p.target(), p.graph().features))

    def test_defense_reduces_explain_sim_auc(self, tmp_path):
        base = sbm_config(tmp_path / "a")
        base["explainer"] = {"id": "zorro", "tau": 0.7, "samples": 10, "seed": 0}
        plain = Pipeline(ExperimentConfig.from_dict(base), str(tmp_path / "a")).run()
        defended_cfg = sbm_config(tmp_path / "b", defense={"epsilon": 0.0001, "seed": 0})
        defended_cfg["explainer"] = {"id": "zorro", "tau": 0.7, "samples": 10, "seed": 0}
        defended = Pipeline(ExperimentConfig.from_dict(defended_cfg), str(tmp_path / "b")).run()
        assert defended["attack"]["mean_auc"] < plain["attack"]["mean_auc"]
        assert abs(defended["attack"]["mean_auc"] - 0.5) < 0.2


class TestCli:
    def test_run_and_exit_codes(self, tmp_path, capsys):
        path = write_config(tmp_path, sbm_config(tmp_path / "out"))
        assert main(["run", "--config", path]) == 0
        out = capsys.readouterr().out
        assert "mean_auc" in out

    def test_invalid_config_nonzero_exit(self, tmp_path, capsys):
        path = write_config(tmp_path, {"dataset": {"kind": "sbm"}, "bogus": {}})
        assert main(["run", "--config", path]) == 2
        assert "config error" in capsys.readouterr().err

    def test_explain_attack_defend_subcommands(self, tmp_path, capsys):
        cfg = sbm_config(tmp_path / "out", defense={"epsilon": 1.0, "seed": 0})
        cfg["explainer"] = {"id": "zorro", "tau": 0.7, "samples": 10, "seed": 0}
        path = write_config(tmp_path, cfg)
        assert main(["explain", "--config", path]) == 0
        assert main(["attack", "--config", path]) == 0
        assert main(["defend", "--config", path]) == 0
        assert "intersection_pct" in capsys.readouterr().out

    def test_sweep_cell_count_and_merged_csv(self, tmp_path):
        cfg = sbm_config(tmp_path / "out", defense={"epsilon": 1.0, "seed": 0})
        cfg["explainer"] = {"id": "zorro", "tau": 0.7, "samples": 10, "seed": 0}
        cfg_path = write_config(tmp_path, cfg)
        grid_path = tmp_path / "grid.json"
        grid_path.write_text(json.dumps({
            "defense.epsilon": [0.0001, 1.0],
            "defense.seed": [0, 1],
        }))
        assert main(["sweep", "--config", cfg_path, "--grid", str(grid_path),
                     "--out", str(tmp_path / "sweep")]) == 0
        lines = (tmp_path / "sweep" / "sweep.csv").read_text().strip().split("\n")
        assert len(lines) == 1 + 4  # header + 2x2 grid

    def test_single_point_sweep_equals_run(self, tmp_path):
        cfg = sbm_config(tmp_path / "out")
        cfg_path = write_config(tmp_path, cfg)
        grid_path = tmp_path / "grid.json"
        grid_path.write_text(json.dumps({"protocol.node_fraction": [0.2]}))
        assert main(["sweep", "--config", cfg_path, "--grid", str(grid_path),
                     "--out", str(tmp_path / "sweep1")]) == 0
        run_dir = tmp_path / "runout"
        assert main(["run", "--config", cfg_path, "--out", str(run_dir)]) == 0
        cell = json.loads((tmp_path / "sweep1" / "cell-000" / "attack_report.json").read_text())
        direct = json.loads((run_dir / "attack_report.json").read_text())
        assert cell["report"] == direct["report"]

    def test_report_merges(self, tmp_path):
        cfg_path = write_config(tmp_path, sbm_config(tmp_path / "r1"))
        assert main(["run", "--config", cfg_path]) == 0
        assert main(["report", "--out", str(tmp_path / "r1")]) == 0
        assert (tmp_path / "r1" / "merged_reports.csv").exists()

    def test_env_var_cache_dir(self, tmp_path, monkeypatch):
        cache = tmp_path / "envcache"
        monkeypatch.setenv("GRAPHLEAK_CACHE", str(cache))
        cfg_path = write_config(tmp_path, sbm_config(tmp_path / "out"))
        assert main(["run", "--config", cfg_path]) == 0
        assert cache.exists() and len(os.listdir(cache)) > 0

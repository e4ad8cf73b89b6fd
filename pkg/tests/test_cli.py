"""End-to-end tests of the command-line interface."""

import json
from pathlib import Path

import pytest

from annealab.cli import main


@pytest.fixture()
def cfg_file(tmp_path):
    cfg = {
        "problem": "maxcut", "n": 5, "densities": [0.5], "instances_per_density": 2,
        "validation_instances": 2, "baseline_shots": 60, "baseline_T": 1.0,
        "anneal_T": [1.0], "init_points": 3, "n_iter": 1, "noise": 0.01,
        "dt": 0.004, "seed": 21,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def run(args):
    return main([str(a) for a in args])


class TestPipeline:
    def test_gen_baseline_tune_compare_export(self, tmp_path, cfg_file, capsys):
        out = tmp_path / "out"
        assert run(["--config", cfg_file, "--out", out, "gen"]) == 0
        assert (out / "instances" / "manifest.json").exists()
        assert (out / "instances" / "p0.5" / "train" / "graph_000.json").exists()

        assert run(["--config", cfg_file, "--out", out, "baseline"]) == 0
        baselines = json.loads((out / "baselines.json").read_text())
        assert len(baselines["0.5"]) == 2

        assert run(["--config", cfg_file, "--out", out, "tune-schedule", "--method", "HG"]) == 0
        registry = json.loads((out / "registry.json").read_text())
        assert "HG" in registry["maxcut"]
        assert (out / "tuning_HG_p0.5.json").exists()

        assert run(["--config", cfg_file, "--out", out, "compare", "--methods", "FA,HG"]) == 0
        text = (out / "comparison.csv").read_text()
        assert text.splitlines()[0] == "method,T,density,mean_improvement"
        assert len(text.strip().splitlines()) == 3

        assert run(["--config", cfg_file, "--out", out, "export",
                    "--input", out / "comparison.json", "--format", "svg"]) == 0
        assert (out / "comparison.svg").exists()
        capsys.readouterr()

    def test_tune_scaling_csv(self, tmp_path, capsys):
        cfg = {
            "problem": "maxcut", "n": 4, "densities": [0.5], "instances_per_density": 1,
            "validation_instances": 1, "baseline_shots": 20, "baseline_T": 1.0,
            "anneal_T": [1.0], "init_points": 2, "n_iter": 0, "backend": "classical",
            "sweeps": 20, "seed": 3,
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg), encoding="utf-8")
        out = tmp_path / "out"
        assert run(["--config", path, "--out", out, "tune-scaling"]) == 0
        lines = (out / "scaling_p0.5.csv").read_text().strip().splitlines()
        assert lines[0] == "alpha1,mean_improvement"
        assert len(lines) == 101
        capsys.readouterr()


class TestExitCodes:
    def test_validation_error_is_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"problem": "tsp"}), encoding="utf-8")
        assert run(["--config", bad, "--out", tmp_path / "o", "gen"]) == 2
        capsys.readouterr()

    def test_missing_config_file_is_2(self, tmp_path, capsys):
        assert run(["--config", tmp_path / "nope.json", "--out", tmp_path / "o", "gen"]) == 2
        capsys.readouterr()

    def test_simulation_error_is_3(self, tmp_path, capsys):
        # dt far above the stability limit triggers the norm-drift abort
        cfg = {
            "problem": "maxcut", "n": 6, "densities": [0.9], "instances_per_density": 1,
            "validation_instances": 1, "baseline_shots": 10, "baseline_T": 20.0,
            "anneal_T": [20.0], "init_points": 1, "n_iter": 0, "dt": 3.0, "seed": 2,
            "edge_weight_range": [-8.0, 8.0],
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg), encoding="utf-8")
        assert run(["--config", path, "--out", tmp_path / "o", "baseline"]) == 3
        capsys.readouterr()

    def test_seed_override_changes_instances(self, tmp_path, cfg_file, capsys):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run(["--config", cfg_file, "--out", out1, "gen"]) == 0
        assert run(["--config", cfg_file, "--seed", "99", "--out", out2, "gen"]) == 0
        g1 = (out1 / "instances" / "p0.5" / "train" / "graph_000.json").read_text()
        g2 = (out2 / "instances" / "p0.5" / "train" / "graph_000.json").read_text()
        assert g1 != g2
        capsys.readouterr()

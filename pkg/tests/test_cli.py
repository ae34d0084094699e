import json
import os

import numpy as np
import pytest

from rpfgcn import cli, config as cfgmod, plots, runner
from rpfgcn.errors import ConfigError, RunError

SMALL_CONFIG = """
[run]
datasets = blobs
builders = rpforest, knn
seeds = 2
seed0 = 0

[dataset:blobs]
kind = clusters
clusters = 0,0:15:0.3; 5,5:15:0.3
n_train = 4
n_val = 6

[builder:rpforest]
kind = rpforest
trees = 4
max_leaf_size = 8

[builder:knn]
kind = knn
k = 3

[gcn]
epochs = 15

[sweep]
t_values = 1:5
seeds = 2
max_leaf_size = 8
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "cfg.ini"
    path.write_text(SMALL_CONFIG)
    cfg = cfgmod.load_config(path)
    cfg["run"]["out"] = str(tmp_path / "out")
    return cfg


class TestConfig:
    def test_defaults_plus_file(self, small_cfg):
        assert small_cfg["run"]["datasets"] == "blobs"
        assert small_cfg["gcn"]["epochs"] == "15"
        assert small_cfg["gcn"]["hidden"] == "16"  # default survives

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            cfgmod.load_config("/nonexistent/path.ini")

    def test_hash_is_stable_and_sensitive(self, small_cfg):
        h1 = cfgmod.config_hash(small_cfg)
        assert h1 == cfgmod.config_hash(json.loads(json.dumps(small_cfg)))
        small_cfg["gcn"]["epochs"] = "16"
        assert cfgmod.config_hash(small_cfg) != h1

    def test_parsers(self):
        assert cfgmod.parse_t_values("1:4") == [1, 2, 3, 4]
        assert cfgmod.parse_t_values("2, 5, 9") == [2, 5, 9]
        assert cfgmod.parse_ring_specs("1.0:5:0.1; 2:7:0") == [(1.0, 5, 0.1), (2.0, 7, 0.0)]
        specs = cfgmod.parse_cluster_specs("0,0:3:0.5; 1.5,-2:4:1")
        assert specs == [((0.0, 0.0), 3, 0.5), ((1.5, -2.0), 4, 1.0)]
        assert cfgmod.parse_percents("0, 50, 100") == [0.0, 50.0, 100.0]
        with pytest.raises(ConfigError):
            cfgmod.parse_percents("0, 120")

    def test_cli_overrides(self, small_cfg):
        args = cli.build_parser().parse_args(
            ["compare", "--k", "5", "--trees", "7", "--seed", "3", "--seeds", "4", "--standardize"]
        )
        cfg = cfgmod.apply_overrides(small_cfg, args)
        assert runner.builder_params(cfg, "knn")["k"] == "5"
        assert runner.builder_params(cfg, "rpforest")["trees"] == "7"
        assert cfg["run"]["seed0"] == "3"
        assert cfg["run"]["seeds"] == "4"
        assert cfg["run"]["standardize"] == "true"

    def test_dataset_leaf_size_beats_builder_section(self, small_cfg):
        small_cfg["dataset:blobs"]["max_leaf_size"] = "3"
        params = runner.builder_params(small_cfg, "rpforest", "blobs")
        assert params["max_leaf_size"] == "3"
        # but an explicit CLI flag wins over the dataset pin
        small_cfg["cli_overrides"] = {"max_leaf_size": "6"}
        params = runner.builder_params(small_cfg, "rpforest", "blobs")
        assert params["max_leaf_size"] == "6"


class TestRunner:
    def test_compare_outputs(self, small_cfg):
        out = runner.run_compare(small_cfg)
        lines = open(os.path.join(out, "results.csv")).read().splitlines()
        assert lines[0] == runner.RESULT_HEADER
        assert len(lines) == 1 + 2 * 2  # 2 builders x 2 seeds
        summary = open(os.path.join(out, "summary.csv")).read().splitlines()
        assert len(summary) == 1 + 2
        meta = json.load(open(os.path.join(out, "run_meta.json")))
        assert meta["config_hash"] == cfgmod.config_hash(small_cfg)
        assert os.path.exists(os.path.join(out, "timings.csv"))

    def test_results_deterministic_across_workers(self, small_cfg):
        out1 = runner.run_compare(small_cfg)
        data1 = open(os.path.join(out1, "results.csv"), "rb").read()
        small_cfg["run"]["workers"] = "4"
        small_cfg["run"]["out"] = small_cfg["run"]["out"] + "_w4"
        out2 = runner.run_compare(small_cfg)
        data2 = open(os.path.join(out2, "results.csv"), "rb").read()
        assert data1 == data2

    def test_out_dir_hash_protection(self, small_cfg):
        runner.run_compare(small_cfg)
        small_cfg["gcn"]["epochs"] = "14"
        with pytest.raises(ConfigError, match="--force"):
            runner.run_compare(small_cfg)
        runner.run_compare(small_cfg, force=True)  # allowed when forced

    def test_empty_datasets_rejected(self, small_cfg):
        small_cfg["run"]["datasets"] = ""
        with pytest.raises(ConfigError, match="datasets"):
            runner.run_compare(small_cfg)

    def test_unknown_builder_kind(self, small_cfg):
        small_cfg["builder:weird"] = {"kind": "voronoi"}
        small_cfg["run"]["builders"] = "weird"
        with pytest.raises(RunError, match="dataset=blobs, builder=weird, seed=0"):
            runner.run_compare(small_cfg)

    def test_cell_error_carries_context(self, small_cfg):
        small_cfg["builder:knn"]["k"] = "500"  # k >= n
        with pytest.raises(RunError, match=r"builder=knn, seed=0"):
            runner.run_compare(small_cfg)

    def test_sweep_outputs_and_elbow_file(self, small_cfg):
        out = runner.run_sweep(small_cfg)
        files = sorted(os.listdir(out))
        assert "elbows.csv" in files
        sweeps = [f for f in files if f.startswith("sweep_blobs_seed")]
        assert len(sweeps) == 2
        header = open(os.path.join(out, sweeps[0])).read().splitlines()[0]
        assert header == "T,std_v0,components"
        elbows = open(os.path.join(out, "elbows.csv")).read().splitlines()
        assert elbows[0] == "dataset,seed,t_star,connected"
        assert len(elbows) == 3

    def test_sweep_needs_three_points(self, small_cfg):
        small_cfg["sweep"]["t_values"] = "4"
        with pytest.raises(ConfigError, match=">= 3"):
            runner.run_sweep(small_cfg)

    def test_extra_edges_percent_zero_matches_plain_rpforest(self, small_cfg):
        small_cfg["extra_edges"]["percents"] = "0, 100"
        out = runner.run_extra_edges(small_cfg)
        rows = open(os.path.join(out, "results.csv")).read().splitlines()[1:]
        zero_rows = {
            tuple(r.split(",")[:3]): r.split(",")[3] for r in rows if "extra0," in r
        }
        small_cfg["run"]["out"] = small_cfg["run"]["out"] + "_cmp"
        out2 = runner.run_compare(small_cfg, force=True)
        cmp_rows = open(os.path.join(out2, "results.csv")).read().splitlines()[1:]
        for r in cmp_rows:
            parts = r.split(",")
            if parts[1] != "rpforest":
                continue
            key = (parts[0], f"rpforest_extra0", parts[2])
            assert zero_rows[key] == parts[3]  # identical accuracy per seed

    def test_live_timings_inline(self, small_cfg):
        small_cfg["run"]["live_timings"] = "true"
        out = runner.run_compare(small_cfg)
        rows = open(os.path.join(out, "results.csv")).read().splitlines()[1:]
        assert any(row.rsplit(",", 2)[1] != "0" for row in rows)


class TestPlots:
    def test_sweep_and_results_plots(self, small_cfg):
        out = runner.run_sweep(small_cfg)
        small_cfg["run"]["out"] = out + "_cmp"
        out2 = runner.run_compare(small_cfg)
        produced = plots.emit_plots(out)
        assert any(p.endswith("sweep.svg") for p in produced)
        produced2 = plots.emit_plots(out2)
        names = {os.path.basename(p) for p in produced2}
        assert names == {"accuracy.svg", "total_weight.svg"}
        for p in produced + produced2:
            assert open(p).read(200).lstrip().startswith("<?xml")

    def test_empty_dir_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="nothing to plot"):
            plots.emit_plots(tmp_path)

    def test_empty_csv_rejected(self, tmp_path):
        (tmp_path / "results.csv").write_text("dataset,builder\n")
        with pytest.raises(ConfigError, match="no data rows"):
            plots.emit_plots(tmp_path)


class TestMain:
    def test_compare_subcommand_end_to_end(self, tmp_path):
        cfg_path = tmp_path / "cfg.ini"
        cfg_path.write_text(SMALL_CONFIG)
        out = tmp_path / "run1"
        rc = cli.main(["compare", "--config", str(cfg_path), "--out", str(out), "--workers", "2"])
        assert rc == 0
        assert (out / "results.csv").exists()
        rc = cli.main(["plot", "--out", str(out)])
        assert rc == 0
        assert (out / "accuracy.svg").exists()

    def test_error_exit_code(self, tmp_path, capsys):
        rc = cli.main(["compare", "--config", str(tmp_path / "missing.ini")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

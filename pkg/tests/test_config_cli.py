import csv
import json

import numpy as np
import pytest

from dimreg import runs
from dimreg.cli import main
from dimreg.config import ConfigError, RunConfig, apply_overrides
from dimreg.graph import EdgeSplit, load_edge_list


@pytest.fixture(scope="module")
def graph_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "sbm.edgelist"
    assert main(["generate", "sbm", "--n", "60", "--p-within", "0.3", "--p-between", "0.03",
                 "--seed", "1", "--out", str(path)]) == 0
    return path


def tiny(graph_file, **extra):
    cfg = {"dataset": str(graph_file), "method": "line", "variant": "II", "seed": 0,
           "train": {"dim": 8, "epochs": 2, "batch_size": 64, "eta": 0.05},
           "classifier": {"epochs": 3, "hidden": 8, "candidates": 20, "k_list": [5, 10]}}
    cfg.update(extra)
    return cfg


# --- configuration ----------------------------------------------------------------

def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown"):
        RunConfig.from_dict({"datset": "x"})
    with pytest.raises(ConfigError, match="train"):
        RunConfig.from_dict({"train": {"learning_rate": 0.1}})


def test_lambda_key_and_round_trip():
    cfg = RunConfig.from_dict({"train": {"lambda": 10}})
    assert cfg.train.lam == 10
    again = RunConfig.from_dict(json.loads(cfg.canonical_json()))
    assert again.digest() == cfg.digest()


def test_attraction_only_epoch_guard():
    with pytest.raises(ConfigError, match="allow_long_attraction_only"):
        RunConfig.from_dict({"variant": "II0", "train": {"epochs": 50}})
    cfg = RunConfig.from_dict({"variant": "II0", "train": {"epochs": 50}, "allow_long_attraction_only": True})
    assert cfg.train.effective_epochs == 50
    assert RunConfig.from_dict({"variant": "II0"}).train.epochs == 2


def test_variant_sets_repulsion_mode():
    assert RunConfig.from_dict({"variant": "I"}).train.repulsion_mode == "sgns"
    assert RunConfig.from_dict({"variant": "II"}).train.repulsion_mode == "dimreg"
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"variant": "III"})


def test_digest_tracks_content():
    a = RunConfig.from_dict({"dataset": "x", "train": {"eta": 0.1}})
    b = RunConfig.from_dict({"train": {"eta": 0.1}, "dataset": "x"})
    c = RunConfig.from_dict({"dataset": "x", "train": {"eta": 0.2}})
    assert a.digest() == b.digest() != c.digest()


def test_overrides():
    d = apply_overrides({"train": {"eta": 1}}, ["train.eta=0.5", "seed=3", "dataset=cora", "train.lambda=10"])
    assert d == {"train": {"eta": 0.5, "lambda": 10}, "seed": 3, "dataset": "cora"}
    with pytest.raises(ConfigError):
        apply_overrides({}, ["novalue"])


# --- train / eval -----------------------------------------------------------------------

def test_train_writes_run_directory(graph_file, tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(tiny(graph_file)))
    assert main(["train", "--config", str(cfg_path), "--out", str(tmp_path / "runs")]) == 0
    run = next((tmp_path / "runs").iterdir())
    expected = RunConfig.from_dict(tiny(graph_file))
    assert run.name == f"run-{expected.digest()}"
    written = json.loads((run / "config.json").read_text())
    assert written["train"]["k"] == 1 and written["train"]["lambda"] == 1.0  # defaults materialised
    lines = (run / "embeddings.tsv").read_text().splitlines()
    assert len(lines) == load_edge_list(graph_file).n
    assert all(len(l.split("\t")) == 1 + 8 for l in lines)
    with open(run / "trace.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 3

    assert main(["eval", str(run / "embeddings.tsv"), "--out", str(tmp_path / "ev")]) == 0
    m = json.loads((tmp_path / "ev" / "metrics.json").read_text())
    assert 0 <= m["auc_roc"] <= 1 and set(m["hits_at_k"]) == {"5", "10"}


def test_training_twice_is_bit_identical(graph_file, tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(tiny(graph_file)))
    main(["train", "--config", str(cfg_path), "--out", str(tmp_path / "a")])
    main(["train", "--config", str(cfg_path), "--out", str(tmp_path / "b")])
    a = next((tmp_path / "a").iterdir())
    b = next((tmp_path / "b").iterdir())
    assert (a / "embeddings.bin").read_bytes() == (b / "embeddings.bin").read_bytes()


def test_eval_empty_test_set(graph_file, tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(tiny(graph_file)))
    main(["train", "--config", str(cfg_path), "--out", str(tmp_path / "runs")])
    run = next((tmp_path / "runs").iterdir())
    (run / "split.test").write_text("")
    assert main(["eval", str(run / "embeddings.tsv"), "--out", str(tmp_path / "ev")]) == 2
    assert "empty test set" in capsys.readouterr().err


def test_guard_through_cli(graph_file, tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(tiny(graph_file, variant="II0")))
    assert main(["train", "--config", str(cfg_path), "--override", "train.epochs=50",
                 "--out", str(tmp_path)]) == 2
    assert "allow_long_attraction_only" in capsys.readouterr().err


# --- sweep ----------------------------------------------------------------------------------

def test_default_grid_sizes():
    grid = runs.SweepGrid()
    assert len(grid.lam) == 4 and len(grid.n_negative) == 3 and len(grid.eta) == 4
    stages = dict(runs.sweep_stages(RunConfig.from_dict({"method": "node2vec", "variant": "II"}), grid))
    assert list(stages) == ["eta", "walk", "regularizer"]
    assert len(stages["walk"]) == 25 and len(stages["regularizer"]) == 12
    assert list(dict(runs.sweep_stages(RunConfig.from_dict({"variant": "I"}), grid))) == ["eta"]


def test_single_point_sweep_equals_train_and_eval(graph_file, tmp_path):
    base = tiny(graph_file)
    base["grid"] = {"eta": [0.05], "n_negative": [10], "lambda": [1.0]}
    (tmp_path / "sweep.json").write_text(json.dumps(base))
    assert main(["sweep", "--config", str(tmp_path / "sweep.json"), "--out", str(tmp_path / "sw")]) == 0
    best = json.loads((tmp_path / "sw" / "best.json").read_text())

    cfg = tiny(graph_file)
    cfg["train"].update(eta=0.05, n_negative=10, **{"lambda": 1.0})
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    main(["train", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path / "runs")])
    run = next((tmp_path / "runs").iterdir())
    main(["eval", str(run / "embeddings.tsv"), "--out", str(tmp_path / "ev")])
    direct = json.loads((tmp_path / "ev" / "metrics.json").read_text())
    for key in ("auc_roc", "mrr", "hits_at_k"):
        assert best["test"][key] == direct[key]


def test_sweep_resumes_without_recomputing(graph_file, tmp_path, monkeypatch):
    base = tiny(graph_file)
    grid = runs.SweepGrid(eta=(0.01, 0.05), n_negative=(5,), lam=(0.1, 1.0))
    calls = []
    real = runs._evaluate_cell

    def counting(b, params, on_validation):
        calls.append(on_validation)
        return real(b, params, on_validation)

    monkeypatch.setattr(runs, "_evaluate_cell", counting)
    first = runs.run_sweep(base, grid, tmp_path / "s.csv")
    assert calls.count(True) == 4
    rows = list(csv.DictReader(open(tmp_path / "s.csv")))
    assert sum(int(r["best"]) for r in rows) == 1
    calls.clear()
    second = runs.run_sweep(base, grid, tmp_path / "s.csv")
    assert calls == [False]  # only the final test evaluation
    assert first == second
    assert len(list(csv.DictReader(open(tmp_path / "s.csv")))) == 4


# --- validate / generate / split ------------------------------------------------------------------

def test_validate_single_check(tmp_path, capsys):
    assert main(["validate", "frobenius", "--out", str(tmp_path), "--override", "count=20"]) == 0
    assert "PASS frobenius" in capsys.readouterr().out
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["frobenius"]["passed"] is True and summary["frobenius"]["cases"] == 20
    assert len((tmp_path / "frobenius.csv").read_text().splitlines()) == 21


def test_validate_failure_exit_code(tmp_path, capsys):
    # an impossible tolerance turns the check into a failure
    assert main(["validate", "centering", "--out", str(tmp_path), "--override", "atol=-1"]) == 1
    assert "FAIL centering" in capsys.readouterr().out


def test_validate_unknown_selector(capsys):
    with pytest.raises(SystemExit) as info:
        main(["validate", "nonsense"])
    assert info.value.code == 2


def test_split_command(graph_file, tmp_path):
    assert main(["split", str(graph_file), "--seed", "2", "--out", str(tmp_path / "sp")]) == 0
    s = EdgeSplit.load(tmp_path / "sp")
    g = load_edge_list(graph_file)
    assert len(s.train_edges) + len(s.validation_edges) + len(s.test_edges) == g.m
    assert len(s.negative_test_edges) == len(s.test_edges)
    assert not np.any(g.has_edges(s.negative_test_edges[:, 0], s.negative_test_edges[:, 1]))

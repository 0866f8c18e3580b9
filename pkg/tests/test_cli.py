import json

import click
import pytest
from mmreason.cli import USAGE_ERRORS, main, parse_overrides
from mmreason.data import LETTERS, Split, load_corpus, load_dataset
from mmreason.data.corpus import FEATURES_FILE
from mmreason.exceptions import ConfigError
from mmreason.model import load_checkpoint
from mmreason.settings import load_yaml
from mmreason.utils import read_json, read_jsonl, write_jsonl

CORPUS_FILES = ("train.jsonl", "val.jsonl", "test.jsonl", FEATURES_FILE)


@pytest.fixture
def config_file(tmp_path):
    values = {
        "model": {
            "d_model": 16, "enc_layers": 1, "dec_layers": 1, "heads": 2, "ffn": 32,
            "n_max": 64, "m": 4, "d_v": 8, "dropout": 0.0,
        },
        "optim": {
            "lr": 1e-3, "epochs": 1, "batch_size": 4, "patience": 2, "val_limit": 2,
        },
        "data": {
            "n_train": 12, "n_val": 4, "n_test": 4, "n_colors": 3, "n_distractors": 2,
        },
        "paths": {
            "data_dir": str(tmp_path / "data"), "run_dir": str(tmp_path / "runs"),
        },
        "seed": 3,
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(values), encoding="utf-8")
    return path


@pytest.fixture
def data_dir(config_file, tmp_path):
    args = ["gen-data", "--out", str(tmp_path / "data"), "--config", str(config_file)]
    assert main(args) == 0
    return tmp_path / "data"


def train(config_file, out_dir, stage, *extra):
    args = ["train", "--stage", stage, "--config", str(config_file)]
    return main(args + ["--out", str(out_dir), *extra])


@pytest.fixture
def checkpoints(config_file, data_dir, tmp_path):
    assert train(config_file, tmp_path / "rationale", "rationale") == 0
    assert train(config_file, tmp_path / "answer", "answer") == 0
    return (
        tmp_path / "rationale" / "rationale.mmck",
        tmp_path / "answer" / "answer.mmck",
    )


def test_parse_overrides():
    assert parse_overrides(["optim.lr=0.01", "seed=2", "paths.data_dir=/x"]) == {
        "optim": {"lr": 0.01},
        "seed": 2,
        "paths": {"data_dir": "/x"},
    }
    assert parse_overrides(None) == {}
    with pytest.raises(ConfigError):
        parse_overrides(["optim.lr"])


class TestGenData:
    def test_writes_corpus(self, data_dir):
        for name in CORPUS_FILES:
            assert (data_dir / name).is_file()
        corpus = load_corpus(data_dir)
        assert [len(corpus.train), len(corpus.val), len(corpus.test)] == [12, 4, 4]
        invocation = load_yaml(data_dir / "corpus.yaml")["invocation"]
        assert invocation["command"] == "gen-data"

    def test_same_seed_same_bytes(self, config_file, tmp_path):
        for name in ("a", "b"):
            args = ["gen-data", "--out", str(tmp_path / name)]
            assert main(args + ["--config", str(config_file), "--seed", "9"]) == 0
        for name in CORPUS_FILES:
            first = (tmp_path / "a" / name).read_bytes()
            assert first == (tmp_path / "b" / name).read_bytes()

    def test_options_override_config(self, config_file, tmp_path):
        args = ["gen-data", "--out", str(tmp_path / "d"), "--config", str(config_file)]
        assert main(args + ["--n-train", "5", "--set", "data.n_test=2"]) == 0
        corpus = load_corpus(tmp_path / "d")
        assert [len(corpus.train), len(corpus.test)] == [5, 2]

    def test_single_color_is_a_config_error(self, config_file, tmp_path):
        args = ["gen-data", "--out", str(tmp_path / "d"), "--config", str(config_file)]
        assert main(args + ["--n-colors", "1"]) == 1

    def test_malformed_override(self, tmp_path):
        args = ["gen-data", "--out", str(tmp_path / "d")]
        assert main(args + ["--set", "optim.lr"]) == 1

    def test_missing_option(self):
        assert main(["gen-data"]) == 1

    def test_unknown_option(self, tmp_path):
        assert main(["gen-data", "--out", str(tmp_path / "d"), "--colours", "3"]) == 1

    def test_unknown_command(self, capsys):
        assert main(["generate"]) == 1
        assert "Usage error" in capsys.readouterr().err


def test_usage_errors_cover_click():
    assert click.UsageError in USAGE_ERRORS
    assert all(issubclass(cls, Exception) for cls in USAGE_ERRORS)


class TestTrain:
    def test_writes_run_directory(self, config_file, data_dir, tmp_path):
        out = tmp_path / "run"
        assert train(config_file, out, "one:QCM_A") == 0
        ckpt = load_checkpoint(out / "one.mmck")
        assert ckpt.metadata["stage"] == "one:QCM_A"
        metrics = read_json(out / "metrics.json")
        assert "vocabulary" not in metrics
        assert metrics["epochs_run"] == 1
        assert len(read_jsonl(out / "train_log.jsonl")) == 1

        manifest = load_yaml(out / "manifest.yaml")
        assert manifest["seed"] == 3
        assert manifest["config"]["optim"]["epochs"] == 1
        assert manifest["invocation"]["command"] == "train"

    def test_no_vision_is_recorded(self, config_file, data_dir, tmp_path):
        assert train(config_file, tmp_path / "run", "rationale", "--no-vision") == 0
        manifest = load_yaml(tmp_path / "run" / "manifest.yaml")
        assert manifest["spec"] == {"stage": "rationale", "use_vision": False}
        ckpt = load_checkpoint(tmp_path / "run" / "rationale.mmck")
        assert ckpt.metadata["use_vision"] is False

    def test_unknown_stage(self, config_file, data_dir, tmp_path):
        assert train(config_file, tmp_path / "run", "bogus") == 1

    def test_missing_data(self, config_file, tmp_path):
        assert train(config_file, tmp_path / "run", "answer") == 1

    def test_rerun_reproduces(self, config_file, data_dir, tmp_path):
        out = tmp_path / "run"
        assert train(config_file, out, "answer", "--seed", "4") == 0
        first = (out / "answer.mmck").read_bytes(), (out / "metrics.json").read_bytes()
        assert main(["rerun", str(out / "manifest.yaml")]) == 0
        second = (out / "answer.mmck").read_bytes(), (out / "metrics.json").read_bytes()
        assert first == second
        assert load_yaml(out / "manifest.yaml")["invocation"]["params"]["seed"] == 4


class TestInferAndEval:
    def test_two_stage_roundtrip(self, checkpoints, data_dir, tmp_path):
        preds = tmp_path / "preds.jsonl"
        ckpt1, ckpt2 = checkpoints
        args = ["infer", "--ckpt1", str(ckpt1), "--ckpt2", str(ckpt2)]
        assert main(args + ["--data", str(data_dir), "--out", str(preds)]) == 0
        records = read_jsonl(preds)
        golds = load_dataset(data_dir / "test.jsonl", Split.TEST)
        assert [r["id"] for r in records] == [s.id for s in golds]
        assert all(set(r) == {"id", "rationale", "answer_letter"} for r in records)
        assert (tmp_path / "preds.manifest.yaml").is_file()

        metrics_path = tmp_path / "metrics.json"
        args = ["eval", "--pred", str(preds), "--gold", str(data_dir)]
        assert main(args + ["--n-colors", "3", "--out", str(metrics_path)]) == 0
        names = [m["name"] for m in read_json(metrics_path)]
        assert names == ["accuracy", "abstain_rate", "rougeL", "hallucination_rate"]

    def test_swapped_checkpoints(self, checkpoints, data_dir, tmp_path):
        ckpt1, ckpt2 = checkpoints
        args = ["infer", "--ckpt1", str(ckpt2), "--ckpt2", str(ckpt1)]
        args += ["--data", str(data_dir), "--out", str(tmp_path / "preds.jsonl")]
        assert main(args) == 1

    def test_incompatible_checkpoints(
        self, config_file, checkpoints, data_dir, tmp_path
    ):
        assert train(config_file, tmp_path / "blind", "answer", "--no-vision") == 0
        args = ["infer", "--ckpt1", str(checkpoints[0]), "--ckpt2"]
        args += [str(tmp_path / "blind" / "answer.mmck"), "--data", str(data_dir)]
        assert main(args + ["--out", str(tmp_path / "preds.jsonl")]) == 2

    def test_missing_checkpoint(self, data_dir, tmp_path):
        args = ["infer", "--ckpt1", str(tmp_path / "x.mmck")]
        args += ["--ckpt2", str(tmp_path / "y.mmck"), "--data", str(data_dir)]
        assert main(args + ["--out", str(tmp_path / "p.jsonl")]) == 1


class TestEval:
    def gold_predictions(self, data_dir, path):
        golds = load_dataset(data_dir / "test.jsonl", Split.TEST)
        records = [
            {
                "id": s.id,
                "rationale": s.rationale,
                "answer_letter": LETTERS[s.answer_index],
            }
            for s in golds
        ]
        return write_jsonl(records, path), records

    def test_perfect_predictions(self, data_dir, tmp_path, capsys):
        preds, _ = self.gold_predictions(data_dir, tmp_path / "gold.jsonl")
        out = tmp_path / "metrics.json"
        args = ["eval", "--pred", str(preds), "--gold", str(data_dir)]
        assert main(args + ["--n-colors", "3", "--out", str(out)]) == 0
        metrics = {m["name"]: m["value"] for m in read_json(out)}
        assert metrics == {
            "accuracy": 1.0,
            "abstain_rate": 0.0,
            "rougeL": 1.0,
            "hallucination_rate": 0.0,
        }
        assert "1.00" in capsys.readouterr().out

    def test_answers_only(self, data_dir, tmp_path):
        path = tmp_path / "answers.jsonl"
        golds = load_dataset(data_dir / "test.jsonl", Split.TEST)
        records = [
            {"id": s.id, "rationale": None, "answer_letter": None} for s in golds
        ]
        write_jsonl(records, path)
        out = tmp_path / "metrics.json"
        args = ["eval", "--pred", str(path), "--gold", str(data_dir)]
        assert main(args + ["--out", str(out)]) == 0
        metrics = {m["name"]: m["value"] for m in read_json(out)}
        assert metrics == {"accuracy": 0.0, "abstain_rate": 1.0}

    def test_missing_prediction(self, data_dir, tmp_path):
        preds, records = self.gold_predictions(data_dir, tmp_path / "gold.jsonl")
        write_jsonl(records[1:], preds)
        assert main(["eval", "--pred", str(preds), "--gold", str(data_dir)]) == 2

    def test_missing_file(self, data_dir, tmp_path):
        args = ["eval", "--pred", str(tmp_path / "none.jsonl"), "--gold", str(data_dir)]
        assert main(args) == 1

    def test_unwritable_output(self, data_dir, tmp_path, capsys):
        preds, _ = self.gold_predictions(data_dir, tmp_path / "gold.jsonl")
        blocker = tmp_path / "blocker"
        blocker.write_text("not a directory")
        args = ["eval", "--pred", str(preds), "--gold", str(data_dir)]
        args += ["--n-colors", "3", "--out", str(blocker / "metrics.json")]
        assert main(args) == 2
        assert "Error" in capsys.readouterr().err


def test_rerun_without_manifest(tmp_path):
    assert main(["rerun", str(tmp_path / "manifest.yaml")]) == 1
    (tmp_path / "manifest.yaml").write_text("seed: 1\n")
    assert main(["rerun", str(tmp_path / "manifest.yaml")]) == 1


def test_ablate_needs_seeds(config_file, data_dir):
    assert main(["ablate", "--seeds", "0", "--config", str(config_file)]) == 1


def test_ablate_filters(config_file, data_dir, tmp_path):
    out = tmp_path / "ablation"
    args = ["ablate", "--seeds", "1", "--config", str(config_file), "--out", str(out)]
    assert main(args + ["--variant", "one:QCM_A", "--vision", "off"]) == 0
    results = read_json(out / "results.json")
    assert [r["variant"] for r in results] == ["one:QCM_A (no-vision)"]
    assert (out / "one-qcm_a-no-vision" / "seed-3" / "metrics.json").is_file()
    rows = (out / "report.txt").read_text().splitlines()[2:]
    assert len(rows) == 1
    assert load_yaml(out / "manifest.yaml")["seeds"] == [3]
    assert load_yaml(out / "manifest.yaml")["invocation"]["params"]["vision"] == "off"


def test_ablate_keeps_vision_runs(config_file, data_dir, tmp_path):
    out = tmp_path / "ablation"
    args = ["ablate", "--seeds", "1", "--config", str(config_file), "--out", str(out)]
    assert main(args + ["--variant", "one:QCM_A", "--vision", "on"]) == 0
    results = read_json(out / "results.json")
    assert [r["variant"] for r in results] == ["one:QCM_A (vision)"]


def test_ablate_rejects_unknown_vision_choice(config_file, data_dir, tmp_path):
    args = ["ablate", "--seeds", "1", "--config", str(config_file)]
    assert main(args + ["--out", str(tmp_path / "a"), "--vision", "maybe"]) == 1

"""End-to-end training runs at desk scale. Slow; enable with --run-slow."""
from pathlib import Path

import numpy as np
import pytest
from mmreason.config import load_run_config
from mmreason.data import Corpus, Split, SyntheticConfig, generate_splits
from mmreason.eval import ablation_report, accuracy
from mmreason.model import load_checkpoint
from mmreason.pipeline import (
    Stage,
    StageSpec,
    TwoStagePredictor,
    ablation_grid,
    predict_all,
    run_ablation,
    train_stage,
    variant_slug,
)
from mmreason.utils import read_jsonl

DESK_CONFIG = Path(__file__).parents[1] / "configs" / "desk.json"
SEEDS = [0, 1, 2]


def desk_config(tmp_path, **overrides):
    paths = {"data_dir": str(tmp_path / "data"), "run_dir": str(tmp_path / "runs")}
    values = {"paths": paths}
    for key, value in overrides.items():
        values.setdefault(key, {}).update(value)
    return load_run_config(DESK_CONFIG, values)


def make_corpus(config, sizes):
    synth = SyntheticConfig(
        m=config.model.m,
        d_v=config.model.d_v,
        n_colors=config.data.n_colors,
        n_distractors=config.data.n_distractors,
        seed=config.seed,
        noise=config.data.noise,
        feature_style=config.data.feature_style,
    )
    splits, features = generate_splits(synth, sizes)
    return Corpus(
        train=splits.get(Split.TRAIN, []),
        val=splits.get(Split.VAL, []),
        test=splits.get(Split.TEST, []),
        features=features,
    )


def mean_accuracy(results, variant):
    values = [r.accuracy for r in results if r.variant == variant]
    assert len(values) == len(SEEDS)
    return float(np.mean(values))


@pytest.fixture(scope="module")
def overfit_run(tmp_path_factory):
    """Both stages trained on 64 samples and validated on the same samples."""
    tmp_path = tmp_path_factory.mktemp("overfit")
    config = desk_config(
        tmp_path,
        model={"dropout": 0.0},
        optim={"epochs": 500, "patience": 50, "val_limit": 64, "weight_decay": 0.0},
    )
    corpus = make_corpus(config, {Split.TRAIN: 64})
    train = corpus.train
    paths = {
        stage: train_stage(
            StageSpec.parse(stage),
            train,
            corpus.features,
            config,
            0,
            tmp_path / stage,
            train,
        )
        for stage in ("rationale", "answer")
    }
    return corpus, paths


@pytest.mark.slow
class TestOverfit:
    def test_rationales_are_memorized(self, overfit_run):
        _, paths = overfit_run
        assert load_checkpoint(paths["rationale"]).metadata["best_val_metric"] >= 0.99

    def test_answers_are_memorized(self, overfit_run):
        _, paths = overfit_run
        assert load_checkpoint(paths["answer"]).metadata["best_val_metric"] == 1.0

    def test_loss_decreases_early(self, overfit_run):
        _, paths = overfit_run
        for path in paths.values():
            log = read_jsonl(path.parent / "train_log.jsonl")
            losses = [entry["train_loss"] for entry in log[:10]]
            assert len(losses) == 10
            assert losses[-1] < losses[0]
            assert min(losses[5:]) < min(losses[:5])

    def test_two_stage_on_training_samples(self, overfit_run):
        corpus, paths = overfit_run
        predictor = TwoStagePredictor(paths["rationale"], paths["answer"])
        predictions = predict_all(predictor, corpus.train, corpus.features)
        golds = [s.answer_index for s in corpus.train]
        assert accuracy([p.answer_index for p in predictions], golds) >= 0.95


@pytest.fixture(scope="module")
def desk_run(tmp_path_factory):
    """Desk config and its vision-critical corpus: 2000 train, 250 val, 250 test."""
    tmp_path = tmp_path_factory.mktemp("desk")
    config = desk_config(tmp_path)
    data = config.data
    sizes = {Split.TRAIN: data.n_train, Split.VAL: data.n_val, Split.TEST: data.n_test}
    return config, make_corpus(config, sizes), tmp_path


@pytest.mark.slow
class TestDeskScale:
    def test_vision_helps_two_stage(self, desk_run):
        config, corpus, tmp_path = desk_run
        specs = [StageSpec.parse("answer", True), StageSpec.parse("answer", False)]
        results = run_ablation(specs, corpus, config, SEEDS, tmp_path / "two-stage")
        with_vision = mean_accuracy(results, specs[0].variant)
        without_vision = mean_accuracy(results, specs[1].variant)
        assert with_vision - without_vision >= 0.20

    def test_generated_rationales_hurt_without_vision(self, desk_run):
        config, corpus, tmp_path = desk_run
        specs = [
            StageSpec.parse("one:QCM_A", use_vision=False),
            StageSpec.parse("one:QCM_RA", use_vision=False),
        ]
        results = run_ablation(specs, corpus, config, SEEDS, tmp_path / "one-stage")
        answer_only = mean_accuracy(results, specs[0].variant)
        rationale_first = mean_accuracy(results, specs[1].variant)
        assert answer_only - rationale_first >= 0.05

    def test_gold_rationales_beat_generated(self, desk_run):
        config, corpus, tmp_path = desk_run
        out = tmp_path / "gold-vs-generated"
        paths = {
            stage: train_stage(
                StageSpec.parse(stage),
                corpus.train,
                corpus.features,
                config,
                0,
                out / stage,
                corpus.val,
            )
            for stage in ("rationale", "answer")
        }
        predictor = TwoStagePredictor(paths["rationale"], paths["answer"])
        golds = [s.answer_index for s in corpus.test]
        generated = predict_all(predictor, corpus.test, corpus.features)
        from_gold = [
            predictor.answer_with(s, corpus.features, s.rationale or "")
            for s in corpus.test
        ]
        gold_accuracy = accuracy([p.answer_index for p in from_gold], golds)
        generated_accuracy = accuracy([p.answer_index for p in generated], golds)
        assert gold_accuracy >= generated_accuracy


@pytest.mark.slow
def test_full_ablation_grid(tiny_corpus, tiny_config, tmp_path):
    specs = ablation_grid()
    results = run_ablation(specs, tiny_corpus, tiny_config, [0], tmp_path)
    assert [r.variant for r in results] == [s.variant for s in specs]
    for spec, result in zip(specs, results):
        assert result.accuracy is not None
        expects_rouge = spec.has_rationale or spec.stage == Stage.ANSWER
        assert (result.rougeL is not None) == expects_rouge
        assert result.epochs_run >= 1
        assert (tmp_path / variant_slug(spec) / "seed-0" / "metrics.json").is_file()

    count = len(tiny_corpus.test)
    report = ablation_report([(r.variant, r.records(count)) for r in results])
    assert len(report.splitlines()) == 2 + len(specs)
    for result in results:
        assert result.variant in report

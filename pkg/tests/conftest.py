import attrs
import numpy as np
import pytest
from mmreason.config import DataConfig, ModelConfig, OptimConfig, PathsConfig, RunConfig
from mmreason.data import Corpus, Split, SyntheticConfig, generate_splits
from mmreason.tensor import default_dtype


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="Also run the harness tests that train models end to end.",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def float64():
    """Create tensors in 64 bit inside the test."""
    with default_dtype(np.float64):
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def synth_config():
    return SyntheticConfig(
        n_samples=40, m=4, d_v=8, n_colors=3, n_distractors=2, seed=7
    )


@pytest.fixture
def tiny_corpus(synth_config):
    sizes = {Split.TRAIN: 12, Split.VAL: 4, Split.TEST: 4}
    splits, features = generate_splits(synth_config, sizes)
    return Corpus(
        train=splits[Split.TRAIN],
        val=splits[Split.VAL],
        test=splits[Split.TEST],
        features=features,
    )


@pytest.fixture
def tiny_config(tmp_path):
    return RunConfig(
        model=ModelConfig(
            d_model=16,
            enc_layers=1,
            dec_layers=1,
            heads=2,
            ffn=32,
            n_max=64,
            m=4,
            d_v=8,
            dropout=0.0,
        ),
        optim=OptimConfig(lr=1e-3, epochs=2, batch_size=4, patience=2, val_limit=2),
        data=DataConfig(n_train=12, n_val=4, n_test=4, n_colors=3, n_distractors=2),
        paths=PathsConfig(
            data_dir=str(tmp_path / "data"), run_dir=str(tmp_path / "runs")
        ),
        seed=3,
    )


@pytest.fixture
def tiny_model_config(tiny_config):
    """Model config without a vocabulary size; tests fill it in."""
    return attrs.evolve(tiny_config.model)

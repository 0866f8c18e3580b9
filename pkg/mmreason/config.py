"""
Configuration of runs.

A run is configured by a single JSON file. Values are layered: built-in
defaults, then the file, then command line overrides, with later layers
taking precedence.
"""
import json
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Type, TypeVar

import attrs
from immutabledict import immutabledict
from platformdirs import user_state_path

from .exceptions import ConfigError
from .settings import merge_settings

T = TypeVar("T")


def search_run_dir_upwards() -> Optional[Path]:
    """
    Search for a '.mmreason' directory upwards.
    """
    cur_dir = Path.cwd()

    while True:
        if (cur_dir / ".mmreason").exists():
            return cur_dir / ".mmreason"
        if cur_dir.parent == cur_dir:
            return None
        else:
            cur_dir = cur_dir.parent


def default_run_dir() -> Path:
    """
    Function to set the default run directory.

    The rule for finding the default directory is as follows:
        - Whatever MMREASON_RUN_DIR is set to, if it is set
        - any '.mmreason' directory in the current or any parent directory
        - a 'mmreason' directory in 'XDG_STATE_HOME' or `~/.local/state/mmreason'
    """
    if (run_dir_str := os.environ.get("MMREASON_RUN_DIR", "")) != "":
        return Path(run_dir_str)
    elif (run_dir := search_run_dir_upwards()) is not None:
        return run_dir
    else:
        return user_state_path("mmreason")


def _positive(instance, attribute, value):
    if value <= 0:
        raise ConfigError(f"{attribute.name} must be positive, got {value}")


def _non_negative(instance, attribute, value):
    if value < 0:
        raise ConfigError(f"{attribute.name} must be non-negative, got {value}")


def _unit_interval(instance, attribute, value):
    if not 0.0 <= value < 1.0:
        raise ConfigError(f"{attribute.name} must lie in [0, 1), got {value}")


def _one_of(*choices):
    def check(instance, attribute, value):
        if value not in choices:
            raise ConfigError(
                f"{attribute.name} must be one of {choices}, got {value!r}"
            )

    return check


@attrs.frozen()
class ModelConfig:
    """
    Architecture of the encoder-decoder model.

    Args:
        vocab_size (int): Size of the vocabulary. 0 means "take it from the corpus".
        d_model (int): Width of the hidden states.
        enc_layers (int): Number of encoder blocks.
        dec_layers (int): Number of decoder blocks.
        heads (int): Attention heads of the transformer self/cross attention.
        ffn (int): Width of the feed-forward sublayers.
        n_max (int): Maximum language input length; also the decoder length limit.
        m (int): Number of vision patches.
        d_v (int): Width of the raw vision features.
        dropout (float): Dropout rate in training mode.
        gate_bias (bool): Add a learned bias inside the fusion gate.
    """

    vocab_size: int = attrs.field(default=0, validator=_non_negative)
    d_model: int = attrs.field(default=128, validator=_positive)
    enc_layers: int = attrs.field(default=2, validator=_positive)
    dec_layers: int = attrs.field(default=2, validator=_positive)
    heads: int = attrs.field(default=4, validator=_positive)
    ffn: int = attrs.field(default=512, validator=_positive)
    n_max: int = attrs.field(default=128, validator=_positive)
    m: int = attrs.field(default=16, validator=_positive)
    d_v: int = attrs.field(default=32, validator=_positive)
    dropout: float = attrs.field(default=0.1, validator=_unit_interval)
    gate_bias: bool = False

    def __attrs_post_init__(self):
        if self.d_model % self.heads != 0:
            raise ConfigError(
                f"d_model={self.d_model} is not divisible by heads={self.heads}"
            )


def _betas(instance, attribute, value):
    if len(value) != 2 or not all(0.0 <= b < 1.0 for b in value):
        raise ConfigError(f"betas must be two values in [0, 1), got {value}")


@attrs.frozen()
class OptimConfig:
    """Optimizer and training-loop settings."""

    lr: float = attrs.field(default=5e-5, validator=_non_negative)
    betas: Tuple[float, float] = attrs.field(
        default=(0.9, 0.999), converter=tuple, validator=_betas
    )
    eps: float = attrs.field(default=1e-8, validator=_positive)
    weight_decay: float = attrs.field(default=0.01, validator=_non_negative)
    epochs: int = attrs.field(default=20, validator=_positive)
    batch_size: int = attrs.field(default=16, validator=_positive)
    patience: int = attrs.field(default=5, validator=_positive)
    val_limit: int = attrs.field(default=64, validator=_non_negative)


@attrs.frozen()
class DataConfig:
    """Sizes and difficulty of the synthetic corpus."""

    n_train: int = attrs.field(default=2000, validator=_positive)
    n_val: int = attrs.field(default=250, validator=_non_negative)
    n_test: int = attrs.field(default=250, validator=_non_negative)
    n_colors: int = attrs.field(default=4, validator=_positive)
    n_distractors: int = attrs.field(default=3, validator=_positive)
    noise: float = attrs.field(default=0.1, validator=_non_negative)
    feature_style: str = attrs.field(
        default="patch", validator=_one_of("patch", "pooled")
    )


@attrs.frozen()
class PathsConfig:
    """Where data and runs live. A missing run_dir uses `default_run_dir`."""

    data_dir: str = "data"
    run_dir: Optional[str] = None

    @property
    def data_path(self) -> Path:
        return Path(self.data_dir)

    @property
    def run_path(self) -> Path:
        return Path(self.run_dir) if self.run_dir is not None else default_run_dir()


@attrs.frozen()
class RunConfig:
    """Everything a command needs to run reproducibly."""

    model: ModelConfig = attrs.field(factory=ModelConfig)
    optim: OptimConfig = attrs.field(factory=OptimConfig)
    data: DataConfig = attrs.field(factory=DataConfig)
    paths: PathsConfig = attrs.field(factory=PathsConfig)
    seed: int = attrs.field(default=0, validator=_non_negative)

    def to_dict(self) -> Dict[str, Any]:
        return attrs.asdict(self)

    def validate_paths(self, need_data: bool = True) -> None:
        """
        Check the configured paths before any work starts.

        Args:
            need_data (bool): Whether the data directory has to contain a corpus.
        """
        data = self.paths.data_path
        if need_data:
            for name in ("train.jsonl", "val.jsonl", "test.jsonl", "features.mmvf"):
                if not (data / name).is_file():
                    raise ConfigError(f"Data file {data / name} does not exist.")
        run_path = self.paths.run_path
        if run_path.exists() and not run_path.is_dir():
            raise ConfigError(f"Run directory {run_path} is not a directory.")


default_config: Any = immutabledict(RunConfig().to_dict())


def structure(cls: Type[T], values: Mapping[str, Any], prefix: str = "") -> T:
    """
    Build a (nested) attrs config class from a dictionary.

    Unknown keys are rejected with their dotted name.

    Args:
        cls (Type[T]): The attrs class to build.
        values (Mapping[str, Any]): Plain values as read from JSON.
        prefix (str): Dotted prefix used in error messages.

    Returns:
        T: The config instance.
    """
    if not isinstance(values, Mapping):
        raise ConfigError(f"'{prefix or 'config'}' must be an object")
    fields = {f.name: f for f in attrs.fields(cls)}
    unknown = sorted(set(values) - set(fields))
    if len(unknown) > 0:
        raise ConfigError(
            "Unknown config keys: " + ", ".join(f"{prefix}{key}" for key in unknown)
        )

    kwargs = {}
    for name, value in values.items():
        field_type = fields[name].type
        if isinstance(field_type, type) and attrs.has(field_type):
            kwargs[name] = structure(field_type, value, prefix=f"{prefix}{name}.")
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid values in '{prefix or 'config'}': {e}") from e


def load_run_config(
    path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    """
    Load a run configuration.

    Precedence is overrides > file > defaults.

    Args:
        path (Optional[Path]): JSON config file; None uses defaults only.
        overrides (Optional[Mapping[str, Any]]): Nested dict of values that take
            precedence over the file, e.g. from the command line.

    Returns:
        RunConfig: The validated configuration.
    """
    layered: Dict[str, Any] = dict(default_config)
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file {path} does not exist.")
        try:
            file_values = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
        layered = merge_settings(layered, file_values)
    if overrides:
        layered = merge_settings(layered, overrides)

    return structure(RunConfig, layered)

"""The encoder-decoder model, its building blocks and checkpoints."""

from .checkpoint import (
    Checkpoint,
    checkpoint_from_model,
    config_diff,
    load_checkpoint,
    model_from_checkpoint,
    save_checkpoint,
)
from .model import Example, Generation, ModelSummary, ReasoningModel

__all__ = [
    "Checkpoint",
    "checkpoint_from_model",
    "config_diff",
    "load_checkpoint",
    "model_from_checkpoint",
    "save_checkpoint",
    "Example",
    "Generation",
    "ModelSummary",
    "ReasoningModel",
]

"""A from-scratch two-stage (rationale, then answer) multimodal reasoning model."""

from .config import RunConfig, load_run_config
from .eval import MetricRecord, ablation_report, accuracy, rouge_l
from .fusion import FusionParams, fuse
from .model import Checkpoint, ReasoningModel, load_checkpoint, save_checkpoint
from .pipeline import (
    StageSpec,
    TwoStagePredictor,
    extract_answer,
    infer_two_stage,
    run_variant,
    train_stage,
)

__all__ = [
    "RunConfig",
    "load_run_config",
    "MetricRecord",
    "ablation_report",
    "accuracy",
    "rouge_l",
    "FusionParams",
    "fuse",
    "Checkpoint",
    "ReasoningModel",
    "load_checkpoint",
    "save_checkpoint",
    "StageSpec",
    "TwoStagePredictor",
    "extract_answer",
    "infer_two_stage",
    "run_variant",
    "train_stage",
]

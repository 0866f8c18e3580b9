"""
All Exception classes that we are using in the package.
"""
from typing import Any, Dict, Optional


class MMReasonError(Exception):
    """Base class of all errors raised by the package."""

    pass


class ShapeMismatchError(MMReasonError):
    """Shapes of tensors do not fit the operation."""

    pass


class NumericDomainError(MMReasonError):
    """A value is outside the numeric domain of an operation (e.g. NaN)."""

    pass


class UnsupportedOperationError(MMReasonError, ValueError):
    """An operation was asked for by a name it does not know."""

    pass


class GradientContractError(MMReasonError):
    """Backward was called in a way that violates its contract."""

    pass


class VocabularyIndexError(MMReasonError, IndexError):
    """A token id is outside the vocabulary."""

    pass


class DatasetFormatError(MMReasonError):
    """A dataset file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SampleValidationError(MMReasonError):
    """A sample violates its invariants."""

    def __init__(self, message: str, sample_id: Optional[str] = None):
        super().__init__(
            message if sample_id is None else f"sample '{sample_id}': {message}"
        )
        self.sample_id = sample_id


class RenderError(MMReasonError):
    """A sample could not be rendered in the requested format."""

    pass


class FeatureFormatError(MMReasonError):
    """A vision feature file is malformed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"byte offset {offset}: {message}")
        self.offset = offset


class CheckpointFormatError(MMReasonError):
    """A checkpoint file is malformed."""

    pass


class ConfigError(MMReasonError):
    """The configuration is invalid or infeasible."""

    pass


class IncompatibleCheckpointError(MMReasonError):
    """Two checkpoints cannot be used together."""

    def __init__(self, diff: Dict[str, Any]):
        lines = [
            f"  {key}: {left!r} != {right!r}" for key, (left, right) in diff.items()
        ]
        super().__init__("Checkpoint configs differ:\n" + "\n".join(lines))
        self.diff = diff


class TargetTooLongError(MMReasonError):
    """A decoder target exceeds the configured length limit."""

    pass


class NonFiniteLossError(MMReasonError):
    """Training produced a non-finite loss."""

    pass


class StageSpecError(MMReasonError):
    """A stage specification violates its invariants."""

    pass


class LengthMismatchError(MMReasonError):
    """Two sequences that should have equal length do not."""

    pass

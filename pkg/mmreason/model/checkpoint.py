"""
Binary checkpoint format (MMCK).

Layout (little endian):

    magic "MMCK" | version u32 | config_len u32 | config block (utf-8)
    tensors until end of file:
        name_len u16 | name utf-8 | rank u8 | dims u32 x rank | float32 data, row-major

The config block holds one `key=<json value>` line per entry: all fields of
the model config first, then the metadata (vocabulary, stage, ...).
Reading and writing again reproduces the file byte for byte.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

import attrs
import numpy as np

from ..config import ModelConfig
from ..data.vocab import Vocabulary
from ..exceptions import CheckpointFormatError
from ..utils import U8, U16, U32, ByteReader
from .model import ReasoningModel

logger = logging.getLogger(__name__)

MAGIC = b"MMCK"
VERSION = 1

MODEL_FIELDS = tuple(f.name for f in attrs.fields(ModelConfig))


def _format_error(message: str, offset: int) -> CheckpointFormatError:
    return CheckpointFormatError(f"byte offset {offset}: {message}")


@attrs.frozen(eq=False)
class Checkpoint:
    """
    Content of a checkpoint file.

    Args:
        config (ModelConfig): The architecture.
        metadata (Dict[str, Any]): JSON-serializable entries such as the
            vocabulary, stage and training statistics.
        tensors (Dict[str, np.ndarray]): Parameters by name, in file order.
    """

    config: ModelConfig
    metadata: Dict[str, Any] = attrs.field(factory=dict)
    tensors: Dict[str, np.ndarray] = attrs.field(factory=dict)

    @property
    def vocabulary(self) -> Vocabulary:
        if "vocabulary" not in self.metadata:
            raise CheckpointFormatError("checkpoint has no vocabulary")
        return Vocabulary(self.metadata["vocabulary"])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Checkpoint)
            and self.config == other.config
            and self.metadata == other.metadata
            and list(self.tensors) == list(other.tensors)
            and all(
                np.array_equal(self.tensors[k], other.tensors[k]) for k in self.tensors
            )
        )


def _config_block(config: ModelConfig, metadata: Mapping[str, Any]) -> bytes:
    lines = []
    entries = list(attrs.asdict(config).items()) + list(metadata.items())
    for key, value in entries:
        if "=" in key or "\n" in key or key == "":
            raise CheckpointFormatError(f"invalid config key {key!r}")
        lines.append(f"{key}={json.dumps(value, ensure_ascii=False, sort_keys=True)}\n")
    return "".join(lines).encode("utf-8")


def write_checkpoint(ckpt: Checkpoint) -> bytes:
    """Serialize a checkpoint to MMCK bytes."""
    block = _config_block(ckpt.config, ckpt.metadata)
    parts = [MAGIC, U32.pack(VERSION), U32.pack(len(block)), block]
    for name, array in ckpt.tensors.items():
        name_bytes = name.encode("utf-8")
        if array.ndim > 255:
            raise CheckpointFormatError(f"tensor '{name}' has too many dimensions")
        parts += [U16.pack(len(name_bytes)), name_bytes, U8.pack(array.ndim)]
        parts += [U32.pack(dim) for dim in array.shape]
        parts.append(np.ascontiguousarray(array, dtype="<f4").tobytes())
    return b"".join(parts)


def _parse_config_block(text: str, offset: int) -> Tuple[ModelConfig, Dict[str, Any]]:
    entries: Dict[str, Any] = {}
    for line in text.split("\n"):
        if line == "":
            continue
        key, sep, value = line.partition("=")
        if sep == "":
            raise _format_error(f"config line without '=': {line[:40]!r}", offset)
        try:
            entries[key] = json.loads(value)
        except json.JSONDecodeError:
            raise _format_error(f"config value of '{key}' is not JSON", offset)

    missing = [name for name in MODEL_FIELDS if name not in entries]
    if missing:
        raise _format_error(f"config block misses model fields {missing}", offset)
    try:
        config = ModelConfig(**{name: entries.pop(name) for name in MODEL_FIELDS})
    except Exception as e:
        raise _format_error(f"invalid model config: {e}", offset) from e
    return config, entries


def read_checkpoint(buffer: bytes) -> Checkpoint:
    """Parse MMCK bytes."""
    reader = ByteReader(buffer, _format_error)
    magic = reader.take(len(MAGIC), "magic")
    if magic != MAGIC:
        raise reader.fail(f"bad magic {magic!r}", 0)
    version = reader.unpack(U32, "version")
    if version != VERSION:
        raise reader.fail(f"unsupported version {version}", len(MAGIC))
    block_len = reader.unpack(U32, "config length")
    block_offset = reader.offset
    try:
        text = reader.take(block_len, "config block").decode("utf-8")
    except UnicodeDecodeError:
        raise reader.fail("config block is not valid UTF-8", block_offset)
    config, metadata = _parse_config_block(text, block_offset)

    tensors: Dict[str, np.ndarray] = {}
    while not reader.at_end:
        record_offset = reader.offset
        name_len = reader.unpack(U16, "name length")
        name = reader.take(name_len, "name").decode("utf-8", errors="replace")
        if name in tensors:
            raise reader.fail(f"duplicate tensor '{name}'", record_offset)
        rank = reader.unpack(U8, "rank")
        shape = tuple(reader.unpack(U32, "dimension") for _ in range(rank))
        count = int(np.prod(shape, dtype=np.int64))
        tensors[name] = reader.float32(count, f"data of '{name}'").reshape(shape)
    return Checkpoint(config=config, metadata=metadata, tensors=tensors)


def save_checkpoint(ckpt: Checkpoint, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(write_checkpoint(ckpt))
    logger.debug(f"Saved checkpoint with {len(ckpt.tensors)} tensors to {path}")
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointFormatError(f"checkpoint {path} does not exist")
    return read_checkpoint(path.read_bytes())


def checkpoint_from_model(
    model: ReasoningModel, metadata: Optional[Mapping[str, Any]] = None
) -> Checkpoint:
    """
    Snapshot a model.

    The vocabulary is stored in the metadata under 'vocabulary', ahead of the
    other entries.
    """
    meta: Dict[str, Any] = {"vocabulary": model.vocab.tokens}
    meta.update(metadata or {})
    tensors = {
        name: np.array(data, dtype=np.float32)
        for name, data in model.state_dict().items()
    }
    return Checkpoint(config=model.config, metadata=meta, tensors=tensors)


def model_from_checkpoint(ckpt: Checkpoint) -> ReasoningModel:
    """Rebuild a model in eval mode from a checkpoint."""
    model = ReasoningModel(ckpt.config, ckpt.vocabulary, np.random.default_rng(0))
    model.load_state_dict(ckpt.tensors)
    return model.eval()


def config_diff(
    left: Checkpoint,
    right: Checkpoint,
    keys: Iterable[str] = ("vocabulary", "use_vision"),
) -> Dict[str, Tuple[Any, Any]]:
    """
    Differences that keep two checkpoints from working together.

    All model config fields are compared, plus the given metadata keys.

    Returns:
        Dict[str, Tuple[Any, Any]]: (left, right) values by differing key.
    """
    diff: Dict[str, Tuple[Any, Any]] = {}
    left_cfg, right_cfg = attrs.asdict(left.config), attrs.asdict(right.config)
    for name in MODEL_FIELDS:
        if left_cfg[name] != right_cfg[name]:
            diff[name] = (left_cfg[name], right_cfg[name])
    for key in keys:
        if left.metadata.get(key) != right.metadata.get(key):
            left_value, right_value = left.metadata.get(key), right.metadata.get(key)
            if key == "vocabulary":
                left_value = f"<{len(left_value or [])} tokens>"
                right_value = f"<{len(right_value or [])} tokens>"
            diff[key] = (left_value, right_value)
    return diff

import json
import struct
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional

import numpy as np

SEED_STREAMS = ("data", "init", "shuffle", "dropout")


def seed_streams(seed: int) -> Dict[str, np.random.Generator]:
    """
    Split a master seed into independent random generators.

    Each purpose gets its own stream so that e.g. changing the number of
    shuffles does not change the initialization.

    Args:
        seed (int): The master seed.

    Returns:
        Dict[str, np.random.Generator]: One generator per name in `SEED_STREAMS`.
    """
    children = np.random.SeedSequence(seed).spawn(len(SEED_STREAMS))
    return {
        name: np.random.default_rng(child)
        for name, child in zip(SEED_STREAMS, children)
    }


def dump_json(obj: Any) -> str:
    """Serialize to JSON deterministically (sorted keys, fixed separators)."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def write_json(obj: Any, path: Path) -> Path:
    """
    Write an object as JSON.

    Args:
        obj (Any): JSON-serializable object.
        path (Path): Target file; parent directories are created.

    Returns:
        Path: The path written to.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(obj), encoding="utf-8")
    return path


def read_json(path: Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_jsonl(records: Iterable[Dict[str, Any]], path: Path) -> Path:
    """Write one compact JSON object per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path


def read_jsonl(path: Path) -> List[Dict[str, Any]]:
    with Path(path).open("r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip() != ""]


U8 = struct.Struct("<B")
U16 = struct.Struct("<H")
U32 = struct.Struct("<I")


class ByteReader:
    """
    Sequential reader over a bytes buffer that knows its offset.

    Args:
        buffer (bytes): The data to read.
        error (Callable[[str, int], Exception]): Builds the exception raised
            on truncation from a message and the byte offset.
    """

    def __init__(self, buffer: bytes, error: Callable[[str, int], Exception]):
        self.buffer = buffer
        self.offset = 0
        self._error = error

    @property
    def at_end(self) -> bool:
        return self.offset >= len(self.buffer)

    def fail(self, message: str, offset: Optional[int] = None) -> Exception:
        return self._error(message, self.offset if offset is None else offset)

    def take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self.buffer):
            raise self.fail(
                f"truncated {what}: need {n} bytes, "
                f"{len(self.buffer) - self.offset} left"
            )
        chunk = self.buffer[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: struct.Struct, what: str) -> int:
        return fmt.unpack(self.take(fmt.size, what))[0]

    def float32(self, count: int, what: str) -> np.ndarray:
        """Read `count` little-endian 32-bit floats as a new (writable) array."""
        return np.frombuffer(self.take(4 * count, what), dtype="<f4").astype(np.float32)

"""
Precomputed vision features and the MMVF file format.

Layout (little endian):

    magic "MMVF" | version u32 | count u32
    count x ( id_len u16 | id utf-8 | m u32 | d_v u32 | m*d_v float32, row-major )
"""
import logging
from pathlib import Path
from typing import Dict, Mapping

import attrs
import numpy as np

from ..exceptions import FeatureFormatError
from ..utils import U16, U32, ByteReader

logger = logging.getLogger(__name__)

MAGIC = b"MMVF"
VERSION = 1


def _as_patch_matrix(value) -> np.ndarray:
    patches = np.array(value, dtype=np.float32)
    if patches.ndim != 2 or patches.shape[0] < 1 or patches.shape[1] < 1:
        raise ValueError(
            f"vision features need shape (m >= 1, d_v >= 1), got {patches.shape}"
        )
    if not np.isfinite(patches).all():
        raise ValueError("vision features must be finite")
    return patches


@attrs.frozen(eq=False)
class VisionFeatures:
    """
    Patch features of one image.

    Args:
        patches (np.ndarray): m x d_v matrix of 32-bit floats.
    """

    patches: np.ndarray = attrs.field(converter=_as_patch_matrix)

    @property
    def m(self) -> int:
        return self.patches.shape[0]

    @property
    def d_v(self) -> int:
        return self.patches.shape[1]

    @property
    def shape(self):
        return self.patches.shape

    def __eq__(self, other) -> bool:
        return isinstance(other, VisionFeatures) and np.array_equal(
            self.patches, other.patches
        )


def zero_features(m: int, d_v: int) -> VisionFeatures:
    """All-zero features; used for samples without an image or without vision."""
    return VisionFeatures(np.zeros((m, d_v), dtype=np.float32))


def repeat_pooled(features: VisionFeatures, m: int) -> VisionFeatures:
    """
    Average the patches to one row and repeat it `m` times.

    This imitates globally pooled features broadcast to patch shape: what is
    true on average survives, per-patch information does not.
    """
    pooled = features.patches.mean(axis=0, keepdims=True, dtype=np.float64)
    return VisionFeatures(np.repeat(pooled, m, axis=0).astype(np.float32))


def write_vision_features(features: Mapping[str, VisionFeatures]) -> bytes:
    """Serialize features to MMVF bytes, records in mapping order."""
    parts = [MAGIC, U32.pack(VERSION), U32.pack(len(features))]
    for image_id, feat in features.items():
        id_bytes = image_id.encode("utf-8")
        if len(id_bytes) > 0xFFFF:
            raise ValueError(f"image id too long: {image_id[:40]}...")
        parts += [
            U16.pack(len(id_bytes)),
            id_bytes,
            U32.pack(feat.m),
            U32.pack(feat.d_v),
            feat.patches.astype("<f4").tobytes(order="C"),
        ]
    return b"".join(parts)


def read_vision_features(buffer: bytes) -> Dict[str, VisionFeatures]:
    """
    Parse MMVF bytes.

    Args:
        buffer (bytes): The file content.

    Returns:
        Dict[str, VisionFeatures]: Features by image id, in file order.
    """
    reader = ByteReader(buffer, FeatureFormatError)
    magic = reader.take(len(MAGIC), "magic")
    if magic != MAGIC:
        raise reader.fail(f"bad magic {magic!r}", 0)
    version = reader.unpack(U32, "version")
    if version != VERSION:
        raise reader.fail(f"unsupported version {version}", len(MAGIC))
    count = reader.unpack(U32, "record count")

    features: Dict[str, VisionFeatures] = {}
    for _ in range(count):
        record_offset = reader.offset
        id_len = reader.unpack(U16, "id length")
        try:
            image_id = reader.take(id_len, "id").decode("utf-8")
        except UnicodeDecodeError:
            raise reader.fail("id is not valid UTF-8", record_offset)
        if image_id in features:
            raise reader.fail(f"duplicate id '{image_id}'", record_offset)
        m = reader.unpack(U32, "m")
        d_v = reader.unpack(U32, "d_v")
        if m < 1 or d_v < 1:
            raise reader.fail(
                f"record '{image_id}' has empty shape ({m}, {d_v})", record_offset
            )
        data_offset = reader.offset
        values = reader.float32(m * d_v, f"data of '{image_id}'")
        if not np.isfinite(values).all():
            bad = int(np.argmin(np.isfinite(values)))
            raise reader.fail(
                f"non-finite value in '{image_id}'", data_offset + 4 * bad
            )
        features[image_id] = VisionFeatures(values.reshape(m, d_v))

    if not reader.at_end:
        trailing = len(buffer) - reader.offset
        raise reader.fail(f"{trailing} trailing bytes after {count} records")
    return features


def load_vision_features(path: Path) -> Dict[str, VisionFeatures]:
    """
    Load an MMVF feature file.

    Args:
        path (Path): The file.

    Returns:
        Dict[str, VisionFeatures]: Features by image id.
    """
    path = Path(path)
    if not path.is_file():
        raise FeatureFormatError(f"feature file {path} does not exist", 0)
    features = read_vision_features(path.read_bytes())
    logger.debug(f"Loaded vision features of {len(features)} images from {path}")
    return features


def save_vision_features(features: Mapping[str, VisionFeatures], path: Path) -> Path:
    """Write an MMVF feature file; byte-stable for equal input."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(write_vision_features(features))
    return path


def feature_shape(features: Mapping[str, VisionFeatures]):
    """The common (m, d_v) of all features, or None if there are none."""
    shapes = {feat.shape for feat in features.values()}
    if len(shapes) > 1:
        raise FeatureFormatError(f"mixed feature shapes {sorted(shapes)}", 0)
    return shapes.pop() if shapes else None

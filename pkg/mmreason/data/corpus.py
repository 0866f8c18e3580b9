"""A corpus on disk: three JSONL splits and one MMVF feature file."""
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import attrs
import numpy as np

from ..exceptions import SampleValidationError
from ..settings import ManifestFile
from .features import (
    VisionFeatures,
    feature_shape,
    load_vision_features,
    save_vision_features,
)
from .sample import Sample, Split, load_dataset, save_dataset

logger = logging.getLogger(__name__)

FEATURES_FILE = "features.mmvf"
MANIFEST_FILE = "corpus.yaml"


def split_file(split: Split) -> str:
    return f"{Split(split).value}.jsonl"


@attrs.frozen()
class Corpus:
    """
    The splits of a dataset and the vision features they refer to.

    Args:
        train (List[Sample]): Training samples.
        val (List[Sample]): Validation samples.
        test (List[Sample]): Test samples.
        features (Dict[str, VisionFeatures]): Features by image id.
    """

    train: List[Sample]
    val: List[Sample]
    test: List[Sample]
    features: Dict[str, VisionFeatures]

    def split(self, split: Split) -> List[Sample]:
        return getattr(self, Split(split).value)

    @property
    def feature_shape(self) -> Optional[Tuple[int, int]]:
        return feature_shape(self.features)

    def check_images(self) -> None:
        """Every referenced image id must have features."""
        for split in Split:
            for sample in self.split(split):
                if sample.has_image and sample.image_id not in self.features:
                    raise SampleValidationError(
                        f"image '{sample.image_id}' missing from the feature file",
                        sample.id,
                    )


def sample_features(
    sample: Sample,
    features: Mapping[str, VisionFeatures],
    shape: Tuple[int, int],
    use_vision: bool = True,
) -> np.ndarray:
    """
    The feature matrix a model sees for a sample.

    Samples without an image, and every sample when vision is switched off,
    get an all-zero matrix of the given shape.
    """
    if not use_vision or not sample.has_image:
        return np.zeros(shape, dtype=np.float32)
    if sample.image_id not in features:
        raise SampleValidationError(
            f"image '{sample.image_id}' missing from the feature file", sample.id
        )
    return features[sample.image_id].patches


def save_corpus(
    corpus: Corpus, out_dir: Path, manifest: Optional[Mapping[str, Any]] = None
) -> Path:
    """
    Write all splits, the features and a manifest into a directory.

    Args:
        corpus (Corpus): The corpus.
        out_dir (Path): Target directory, created if needed.
        manifest (Optional[Mapping[str, Any]]): Entries for `corpus.yaml`,
            e.g. the generator settings and seed.

    Returns:
        Path: The directory.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for split in Split:
        save_dataset(corpus.split(split), out_dir / split_file(split))
    save_vision_features(corpus.features, out_dir / FEATURES_FILE)

    files: Dict[str, Any] = {split.value: split_file(split) for split in Split}
    files["features"] = FEATURES_FILE
    (out_dir / MANIFEST_FILE).unlink(missing_ok=True)
    corpus_manifest = ManifestFile(out_dir / MANIFEST_FILE)
    corpus_manifest.merge(
        {
            **dict(manifest or {}),
            "files": files,
            "sizes": {split.value: len(corpus.split(split)) for split in Split},
        }
    )
    logger.info(f"Wrote corpus to {out_dir}")
    return out_dir


def load_corpus(data_dir: Path) -> Corpus:
    """Load the splits and features written by `save_corpus`."""
    data_dir = Path(data_dir)
    corpus = Corpus(
        train=load_dataset(data_dir / split_file(Split.TRAIN), Split.TRAIN),
        val=load_dataset(data_dir / split_file(Split.VAL), Split.VAL),
        test=load_dataset(data_dir / split_file(Split.TEST), Split.TEST),
        features=load_vision_features(data_dir / FEATURES_FILE),
    )
    corpus.check_images()
    return corpus

"""QA samples and their JSON Lines storage."""
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

import attrs

from ..exceptions import DatasetFormatError, SampleValidationError

logger = logging.getLogger(__name__)

MAX_OPTIONS = 5
REQUIRED_FIELDS = ("id", "question", "context", "options", "rationale", "answer_index")
OPTIONAL_FIELDS = ("image_id",)


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class InputFormat(str, Enum):
    """
    How a sample is rendered into model input and target.

    The letters name the parts: Question, Context, Multiple options,
    Rationale and Answer. Left of the underscore is the input, right of it
    the target.
    """

    QCM_A = "QCM_A"
    QCM_RA = "QCM_RA"
    QCM_AR = "QCM_AR"
    QCM_R = "QCM_R"
    QCMR_A = "QCMR_A"


@attrs.frozen()
class Sample:
    """
    One multiple-choice question with its gold reasoning.

    Args:
        id (str): Unique id within the corpus.
        question (str): The question text.
        context (str): Additional text context; may be empty.
        options (Tuple[str, ...]): Between 2 and 5 answer texts.
        rationale (str): Gold chain of reasoning leading to the answer.
        answer_index (int): Index of the correct option.
        image_id (Optional[str]): Key into a vision feature file, if the
            sample has an image.
    """

    id: str
    question: str
    context: str
    options: Tuple[str, ...] = attrs.field(converter=tuple)
    rationale: str
    answer_index: int
    image_id: Optional[str] = None

    @property
    def has_image(self) -> bool:
        return self.image_id is not None

    @property
    def n_options(self) -> int:
        return len(self.options)

    def validate(self, split: Split = Split.TRAIN) -> "Sample":
        """
        Check the invariants of the sample.

        Args:
            split (Split): Training samples additionally need a rationale.

        Returns:
            Sample: The sample itself.
        """
        if not 2 <= len(self.options) <= MAX_OPTIONS:
            raise SampleValidationError(
                f"needs 2 to {MAX_OPTIONS} options, has {len(self.options)}", self.id
            )
        if not 0 <= self.answer_index < len(self.options):
            raise SampleValidationError(
                f"answer_index {self.answer_index} outside of "
                f"{len(self.options)} options",
                self.id,
            )
        if Split(split) == Split.TRAIN and self.rationale.strip() == "":
            raise SampleValidationError("training samples need a rationale", self.id)
        if self.image_id is not None and self.image_id == "":
            raise SampleValidationError("image_id must not be empty", self.id)
        return self

    def to_record(self) -> Dict[str, Any]:
        """The JSON record of the sample, keys in canonical order."""
        record: Dict[str, Any] = dict(
            id=self.id,
            question=self.question,
            context=self.context,
            options=list(self.options),
            rationale=self.rationale,
            answer_index=self.answer_index,
        )
        if self.image_id is not None:
            record["image_id"] = self.image_id
        return record


def _sample_from_record(record: Any, line: int) -> Sample:
    if not isinstance(record, dict):
        raise DatasetFormatError("record is not a JSON object", line)
    missing = [key for key in REQUIRED_FIELDS if key not in record]
    extra = sorted(set(record) - set(REQUIRED_FIELDS) - set(OPTIONAL_FIELDS))
    if missing:
        raise DatasetFormatError(f"missing fields {missing}", line)
    if extra:
        raise DatasetFormatError(f"unknown fields {extra}", line)

    for key in ("id", "question", "context", "rationale"):
        if not isinstance(record[key], str):
            raise DatasetFormatError(f"field '{key}' must be a string", line)
    options = record["options"]
    if not isinstance(options, list) or not all(isinstance(o, str) for o in options):
        raise DatasetFormatError("field 'options' must be a list of strings", line)
    answer_index = record["answer_index"]
    if isinstance(answer_index, bool) or not isinstance(answer_index, int):
        raise DatasetFormatError("field 'answer_index' must be an integer", line)
    image_id = record.get("image_id")
    if image_id is not None and not isinstance(image_id, str):
        raise DatasetFormatError("field 'image_id' must be a string", line)

    return Sample(
        id=record["id"],
        question=record["question"],
        context=record["context"],
        options=options,
        rationale=record["rationale"],
        answer_index=answer_index,
        image_id=image_id,
    )


def load_dataset(path: Path, split: Split = Split.TRAIN) -> List[Sample]:
    """
    Load samples from a JSON Lines file.

    Args:
        path (Path): The file, UTF-8, one record per line. Blank lines are skipped.
        split (Split): Which split the file holds; decides the validation rules.

    Returns:
        List[Sample]: The samples in file order.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetFormatError(f"Dataset file {path} does not exist.")
    samples: List[Sample] = []
    seen_ids = set()
    with path.open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if line.strip() == "":
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetFormatError(f"invalid JSON ({e.msg})", line_no) from e
            sample = _sample_from_record(record, line_no).validate(split)
            if sample.id in seen_ids:
                raise SampleValidationError("duplicate id", sample.id)
            seen_ids.add(sample.id)
            samples.append(sample)

    logger.debug(f"Loaded {len(samples)} {Split(split).value} samples from {path}")
    return samples


def save_dataset(samples: Iterable[Sample], path: Path) -> Path:
    """
    Write samples as JSON Lines.

    The output is byte-stable: same samples, same bytes.

    Args:
        samples (Iterable[Sample]): Samples to write.
        path (Path): Target file; parent directories are created.

    Returns:
        Path: The written file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for sample in samples:
            f.write(json.dumps(sample.to_record(), ensure_ascii=False) + "\n")
    return path

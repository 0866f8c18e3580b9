"""
Synthetic multiple-choice questions about colored image patches.

Every "image" is a set of m patches, each of one color. A patch is encoded
as a one-hot vector of its color (in the first `n_colors` of d_v columns)
plus Gaussian noise. Questions ask either for the most frequent color or for
the count of one color, so the answer is only recoverable from the patch
features; the question and options alone carry no information about it.
"""
import logging
import re
from typing import Dict, List, Mapping, Optional, Tuple

import attrs
import numpy as np

from ..exceptions import ConfigError
from ..utils import seed_streams
from .features import VisionFeatures, repeat_pooled
from .sample import Sample, Split

logger = logging.getLogger(__name__)

COLORS = (
    "red",
    "green",
    "blue",
    "yellow",
    "purple",
    "orange",
    "pink",
    "brown",
    "gray",
    "white",
)
CONTEXTS = ("", "Look at the picture.")
COLOR_QUESTION = "Which color appears most often?"
COUNT_QUESTION = "How many {color} patches are there?"

_COUNT_FACT_RE = re.compile(r"There are (\d+) (\w+) patches", re.IGNORECASE)
_MODE_FACT_RE = re.compile(r"most frequent color is (\w+)", re.IGNORECASE)


@attrs.frozen()
class SyntheticConfig:
    """
    Settings of the generator.

    Args:
        n_samples (int): Number of samples.
        m (int): Patches per image.
        d_v (int): Width of a patch feature.
        n_colors (int): Number of colors in use; the first ones of `COLORS`.
        n_distractors (int): Wrong options per question.
        seed (int): Master seed; the generator uses its 'data' stream.
        noise (float): Standard deviation of the Gaussian noise on patch codes.
        feature_style (str): 'patch' for per-patch codes, 'pooled' for the
            patch average repeated m times.
    """

    n_samples: int = 100
    m: int = 16
    d_v: int = 32
    n_colors: int = 4
    n_distractors: int = 3
    seed: int = 0
    noise: float = 0.1
    feature_style: str = "patch"

    def __attrs_post_init__(self):
        checks = [
            (self.n_samples >= 1, f"n_samples must be positive, got {self.n_samples}"),
            (self.n_colors >= 2, f"n_colors must be at least 2, got {self.n_colors}"),
            (
                self.n_colors <= len(COLORS),
                f"n_colors must be at most {len(COLORS)}, got {self.n_colors}",
            ),
            (
                self.m >= self.n_colors,
                f"m={self.m} must be at least n_colors={self.n_colors}",
            ),
            (
                self.d_v >= self.n_colors,
                f"d_v={self.d_v} must be at least n_colors={self.n_colors}",
            ),
            (self.n_distractors >= 1, "n_distractors must be at least 1"),
            (
                self.n_distractors < self.n_colors,
                f"n_distractors={self.n_distractors} "
                f"must be below n_colors={self.n_colors}",
            ),
            (self.n_distractors + 1 <= 5, "at most 5 options are supported"),
            (self.noise >= 0.0, f"noise must be non-negative, got {self.noise}"),
            (
                self.feature_style in ("patch", "pooled"),
                "feature_style must be 'patch' or 'pooled', "
                f"got {self.feature_style!r}",
            ),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)


def count_rationale(count: int, color: str) -> str:
    return f"There are {count} {color} patches."


def color_rationale(count: int, color: str) -> str:
    return f"There are {count} {color} patches. The most frequent color is {color}."


def encode_patches(
    colors: np.ndarray, config: SyntheticConfig, rng: np.random.Generator
) -> np.ndarray:
    """One-hot color codes plus noise, shape (m, d_v)."""
    patches = np.zeros((len(colors), config.d_v))
    patches[np.arange(len(colors)), colors] = 1.0
    patches += rng.normal(0.0, config.noise, size=patches.shape)
    return patches.astype(np.float32)


def decode_color_counts(features: VisionFeatures, n_colors: int) -> np.ndarray:
    """Count patches per color by the largest of the first `n_colors` columns."""
    colors = features.patches[:, :n_colors].argmax(axis=1)
    return np.bincount(colors, minlength=n_colors)


def _with_answer(
    truth: str, distractors: List[str], rng: np.random.Generator
) -> Tuple[List[str], int]:
    options = [distractors[i] for i in rng.permutation(len(distractors))]
    answer_index = int(rng.integers(len(options) + 1))
    options.insert(answer_index, truth)
    return options, answer_index


def _color_question(config: SyntheticConfig, rng: np.random.Generator):
    # resample until the most frequent color is unique
    while True:
        colors = rng.integers(config.n_colors, size=config.m)
        counts = np.bincount(colors, minlength=config.n_colors)
        if (counts == counts.max()).sum() == 1:
            break
    mode = int(counts.argmax())
    others = [c for c in range(config.n_colors) if c != mode]
    chosen = rng.choice(others, size=config.n_distractors, replace=False)
    options, answer_index = _with_answer(
        COLORS[mode], [COLORS[int(c)] for c in chosen], rng
    )
    rationale = color_rationale(int(counts[mode]), COLORS[mode])
    return colors, COLOR_QUESTION, options, answer_index, rationale


def _count_question(config: SyntheticConfig, rng: np.random.Generator):
    asked = int(rng.integers(config.n_colors))
    count = int(rng.integers(1, config.m + 1))
    others = [c for c in range(config.n_colors) if c != asked]
    colors = np.concatenate(
        [np.full(count, asked), rng.choice(others, size=config.m - count)]
    ).astype(np.int64)
    colors = colors[rng.permutation(config.m)]
    wrong = [k for k in range(1, config.m + 1) if k != count]
    chosen = rng.choice(wrong, size=config.n_distractors, replace=False)
    options, answer_index = _with_answer(str(count), [str(int(k)) for k in chosen], rng)
    question = COUNT_QUESTION.format(color=COLORS[asked])
    rationale = count_rationale(count, COLORS[asked])
    return colors, question, options, answer_index, rationale


def generate_synthetic(
    config: SyntheticConfig, id_prefix: str = "s"
) -> Tuple[List[Sample], Dict[str, VisionFeatures]]:
    """
    Generate a corpus of vision-dependent questions.

    Half of the questions (in expectation) ask for the most frequent color,
    the others for the count of one color. The correct option sits at a
    uniformly random position.

    Args:
        config (SyntheticConfig): The generator settings.
        id_prefix (str): Prefix of sample ids; image ids add 'img-'.

    Returns:
        Tuple[List[Sample], Dict[str, VisionFeatures]]: The samples and their
            features by image id.
    """
    rng = seed_streams(config.seed)["data"]
    samples: List[Sample] = []
    features: Dict[str, VisionFeatures] = {}
    width = max(5, len(str(config.n_samples)))

    for i in range(config.n_samples):
        make_question = _color_question if rng.random() < 0.5 else _count_question
        colors, question, options, answer_index, rationale = make_question(config, rng)
        context = CONTEXTS[int(rng.integers(len(CONTEXTS)))]
        sample_id = f"{id_prefix}{i:0{width}d}"
        image_id = f"img-{sample_id}"

        feat = VisionFeatures(encode_patches(colors, config, rng))
        if config.feature_style == "pooled":
            feat = repeat_pooled(feat, config.m)
        features[image_id] = feat
        samples.append(
            Sample(
                id=sample_id,
                question=question,
                context=context,
                options=options,
                rationale=rationale,
                answer_index=answer_index,
                image_id=image_id,
            )
        )

    logger.debug(f"Generated {len(samples)} synthetic samples with seed {config.seed}")
    return samples, features


def generate_splits(
    config: SyntheticConfig, sizes: Mapping[Split, int]
) -> Tuple[Dict[Split, List[Sample]], Dict[str, VisionFeatures]]:
    """
    Generate one corpus and cut it into consecutive splits.

    Args:
        config (SyntheticConfig): Generator settings; `n_samples` is replaced
            by the total of `sizes`.
        sizes (Mapping[Split, int]): Number of samples per split, in split order.

    Returns:
        Tuple[Dict[Split, List[Sample]], Dict[str, VisionFeatures]]: Samples
            per split and the features of all of them.
    """
    total = sum(sizes.values())
    samples, features = generate_synthetic(attrs.evolve(config, n_samples=total))
    splits: Dict[Split, List[Sample]] = {}
    start = 0
    for split, size in sizes.items():
        splits[Split(split)] = samples[start : start + size]
        start += size
    return splits, features


def audit_rationale(
    text: str, sample: Sample, features: Optional[VisionFeatures], n_colors: int
) -> bool:
    """
    Check the facts a rationale states against the patch features.

    Statements of the form 'There are K C patches' and 'The most frequent
    color is C' are checked. A rationale without any such statement, or
    mentioning an unknown color, does not pass.

    Args:
        text (str): The rationale, generated or gold.
        sample (Sample): The sample the rationale is about.
        features (Optional[VisionFeatures]): Its patch features; None for
            samples without an image, where no fact can be true.
        n_colors (int): Number of colors of the corpus.

    Returns:
        bool: True if every stated fact holds, False for a hallucination.
    """
    counts_facts = _COUNT_FACT_RE.findall(text)
    mode_facts = _MODE_FACT_RE.findall(text)
    if features is None or not sample.has_image:
        return False
    if len(counts_facts) == 0 and len(mode_facts) == 0:
        return False
    palette = {name: i for i, name in enumerate(COLORS[:n_colors])}
    counts = decode_color_counts(features, n_colors)

    for count, color in counts_facts:
        if color.lower() not in palette or counts[palette[color.lower()]] != int(count):
            return False
    for color in mode_facts:
        if color.lower() not in palette:
            return False
        index = palette[color.lower()]
        if (counts == counts.max()).sum() != 1 or counts.argmax() != index:
            return False
    return True

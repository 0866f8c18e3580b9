"""Samples, rendering, tokenization, vision features and the synthetic corpus."""

from .corpus import Corpus, load_corpus, sample_features, save_corpus
from .features import (
    VisionFeatures,
    load_vision_features,
    repeat_pooled,
    save_vision_features,
    zero_features,
)
from .render import LETTERS, answer_sentence, render_input, render_target
from .sample import InputFormat, Sample, Split, load_dataset, save_dataset
from .synthetic import (
    SyntheticConfig,
    audit_rationale,
    generate_splits,
    generate_synthetic,
)
from .vocab import (
    BOS,
    EOS,
    PAD,
    UNK,
    Vocabulary,
    build_corpus_vocabulary,
    detokenize,
    normalize,
    tokenize,
)

__all__ = [
    "Corpus",
    "load_corpus",
    "sample_features",
    "save_corpus",
    "VisionFeatures",
    "load_vision_features",
    "repeat_pooled",
    "save_vision_features",
    "zero_features",
    "LETTERS",
    "answer_sentence",
    "render_input",
    "render_target",
    "InputFormat",
    "Sample",
    "Split",
    "load_dataset",
    "save_dataset",
    "SyntheticConfig",
    "audit_rationale",
    "generate_splits",
    "generate_synthetic",
    "BOS",
    "EOS",
    "PAD",
    "UNK",
    "Vocabulary",
    "build_corpus_vocabulary",
    "detokenize",
    "normalize",
    "tokenize",
]

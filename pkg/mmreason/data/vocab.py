"""Word-level vocabulary and tokenizer."""
import logging
import re
from typing import Dict, Iterable, List, Sequence

from more_itertools import unique_everseen

from ..exceptions import VocabularyIndexError
from .render import LETTERS, answer_sentence, render_input, render_target
from .sample import InputFormat, Sample

logger = logging.getLogger(__name__)

PAD, BOS, EOS, UNK = 0, 1, 2, 3
RESERVED_TOKENS = ("<pad>", "<bos>", "<eos>", "<unk>")

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def split_words(text: str) -> List[str]:
    """Split text into words and single punctuation characters."""
    return _TOKEN_RE.findall(text)


class Vocabulary:
    """
    Bijective map between tokens and ids.

    Ids 0 to 3 are reserved for padding, begin and end of sequence and
    unknown tokens.

    Args:
        tokens (Iterable[str]): Regular tokens, in id order. Duplicates and
            reserved tokens are dropped.
    """

    def __init__(self, tokens: Iterable[str]):
        regular = [t for t in unique_everseen(tokens) if t not in RESERVED_TOKENS]
        self.id_to_token: List[str] = list(RESERVED_TOKENS) + regular
        self.token_to_id: Dict[str, int] = {
            t: i for i, t in enumerate(self.id_to_token)
        }

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.id_to_token == other.id_to_token

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)})"

    @property
    def tokens(self) -> List[str]:
        """The regular tokens, without the reserved ones."""
        return self.id_to_token[len(RESERVED_TOKENS) :]

    def lookup(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.id_to_token):
            raise VocabularyIndexError(
                f"token id {token_id} outside vocabulary of size {len(self)}"
            )
        return self.id_to_token[token_id]


def build_vocabulary(texts: Iterable[str]) -> Vocabulary:
    """Vocabulary of all words in the texts, sorted for stability."""
    words = set()
    for text in texts:
        words.update(split_words(text))
    return Vocabulary(sorted(words))


def corpus_texts(samples: Iterable[Sample]) -> Iterable[str]:
    """Every text a model can read or write for the given samples."""
    for sample in samples:
        for format in InputFormat:
            rationale = sample.rationale if format == InputFormat.QCMR_A else None
            yield render_input(sample, format, rationale)
            yield render_target(sample, format)
    for index in range(len(LETTERS)):
        yield answer_sentence(index)


def build_corpus_vocabulary(train_samples: Sequence[Sample]) -> Vocabulary:
    """
    Build the vocabulary from the training split.

    Args:
        train_samples (Sequence[Sample]): The training samples.

    Returns:
        Vocabulary: Covers every rendered input and target of the samples,
            plus all answer sentences.
    """
    vocab = build_vocabulary(corpus_texts(train_samples))
    logger.debug(
        f"Built vocabulary of {len(vocab)} tokens from {len(train_samples)} samples"
    )
    return vocab


def tokenize(text: str, vocab: Vocabulary) -> List[int]:
    """Token ids of the words of `text`; unknown words map to `UNK`."""
    return [vocab.token_to_id.get(word, UNK) for word in split_words(text)]


def detokenize(ids: Iterable[int], vocab: Vocabulary) -> str:
    """
    Join tokens with single spaces.

    Padding, begin and end markers are skipped.
    """
    return " ".join(vocab.lookup(int(i)) for i in ids if int(i) not in (PAD, BOS, EOS))


def normalize(text: str) -> str:
    """Canonical spacing: words and punctuation separated by single spaces."""
    return " ".join(split_words(text))

"""
Encoder-decoder model with gated vision fusion.

The encoder reads the rendered language input. Its last-layer states are
fused with the projected vision features and the fused states are the only
memory the decoder cross-attends to.
"""
import logging
from typing import Dict, List, NamedTuple, Optional, Sequence, Set, Tuple

import attrs
import numpy as np

from ..config import ModelConfig
from ..data.features import VisionFeatures
from ..data.vocab import BOS, EOS, PAD, Vocabulary, detokenize
from ..exceptions import CheckpointFormatError, ShapeMismatchError, TargetTooLongError
from ..fusion import FusionParams, FusionTrace, fuse
from ..tensor import Tensor, cross_entropy_loss, embedding, log_softmax_rows, no_grad
from .layers import (
    DecoderBlock,
    Dropout,
    EncoderBlock,
    Layer,
    LayerNorm,
    Linear,
    causal_mask,
    normal_param,
    padding_mask,
)

logger = logging.getLogger(__name__)

IGNORE_INDEX = -100


class Generation(NamedTuple):
    """Result of greedy decoding."""

    text: str
    total_logprob: float
    token_ids: List[int]


class Example(NamedTuple):
    """One training or scoring example in token ids."""

    input_ids: Sequence[int]
    features: np.ndarray
    target_ids: Sequence[int]


class ReasoningModel(Layer):
    """
    The full model.

    Args:
        config (ModelConfig): Architecture; `vocab_size` must equal `len(vocab)`.
        vocab (Vocabulary): Used to turn generated ids into text.
        rng (np.random.Generator): Initialization stream.
        dropout_rng (Optional[np.random.Generator]): Stream for dropout masks;
            defaults to a generator derived from `rng`.
    """

    def __init__(
        self,
        config: ModelConfig,
        vocab: Vocabulary,
        rng: np.random.Generator,
        dropout_rng: Optional[np.random.Generator] = None,
    ):
        if config.vocab_size != len(vocab):
            raise ShapeMismatchError(
                f"config vocab_size {config.vocab_size} "
                f"but vocabulary has {len(vocab)} tokens"
            )
        self.config = config
        self.vocab = vocab
        self._truncated: Set[Tuple[int, ...]] = set()
        d = config.d_model
        if dropout_rng is None:
            dropout_rng = rng.spawn(1)[0]
        drop = Dropout(config.dropout, dropout_rng)

        self.token_embedding = normal_param(rng, (config.vocab_size, d))
        self.encoder_positions = normal_param(rng, (config.n_max, d))
        self.decoder_positions = normal_param(rng, (config.n_max, d))
        self.encoder = [
            EncoderBlock(d, config.heads, config.ffn, rng, drop)
            for _ in range(config.enc_layers)
        ]
        self.encoder_norm = LayerNorm(d)
        self.fusion = FusionParams.init(config.d_v, d, rng, gate_bias=config.gate_bias)
        self.decoder = [
            DecoderBlock(d, config.heads, config.ffn, rng, drop)
            for _ in range(config.dec_layers)
        ]
        self.decoder_norm = LayerNorm(d)
        self.output = Linear(d, config.vocab_size, rng, bias=False)
        self.drop = drop

    # parameters
    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: param.data for name, param in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """Copy parameter values in; names and shapes must match exactly."""
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if missing or unexpected:
            raise CheckpointFormatError(
                f"checkpoint tensors do not match the model: missing {missing}, "
                f"unexpected {unexpected}"
            )
        for name, param in params.items():
            if state[name].shape != param.shape:
                raise CheckpointFormatError(
                    f"tensor '{name}' has shape {state[name].shape}, "
                    f"model expects {param.shape}"
                )
            param.data = np.array(state[name], dtype=param.dtype)

    def all_finite(self) -> bool:
        return all(np.isfinite(p.data).all() for _, p in self.named_parameters())

    # encoding
    @property
    def truncated_inputs(self) -> int:
        """Number of distinct inputs cut to n_max so far."""
        return len(self._truncated)

    def _truncate(self, token_ids: Sequence[int]) -> List[int]:
        ids = list(token_ids)
        if len(ids) > self.config.n_max:
            # each input is counted and reported once, however often it is encoded
            key = tuple(ids)
            if key not in self._truncated:
                self._truncated.add(key)
                logger.warning(
                    f"Input of {len(ids)} tokens truncated to {self.config.n_max} "
                    f"({self.truncated_inputs} truncated so far)"
                )
            ids = ids[: self.config.n_max]
        if len(ids) == 0:
            raise ShapeMismatchError("empty language input")
        return ids

    def _check_features(self, features: np.ndarray) -> np.ndarray:
        feats = np.asarray(features)
        if feats.shape[-2:] != (self.config.m, self.config.d_v):
            raise ShapeMismatchError(
                f"vision features of shape {feats.shape[-2:]}, model expects "
                f"({self.config.m}, {self.config.d_v})"
            )
        return feats

    def _encode(self, batch_ids: List[List[int]]) -> Tuple[Tensor, np.ndarray]:
        lengths = [len(ids) for ids in batch_ids]
        width = max(lengths)
        ids = np.full((len(batch_ids), width), PAD, dtype=np.int64)
        for row, seq in enumerate(batch_ids):
            ids[row, : len(seq)] = seq
        mask = padding_mask(lengths, width)

        x = embedding(self.token_embedding, ids) + embedding(
            self.encoder_positions, np.arange(width)
        )
        x = self.drop(x)
        for block in self.encoder:
            x = block(x, mask)
        return self.encoder_norm(x), mask

    def encode_language(self, token_ids: Sequence[int]) -> Tensor:
        """
        Encode one token sequence.

        Args:
            token_ids (Sequence[int]): Ids below the vocabulary size; sequences
                longer than `n_max` lose their tail with a warning.

        Returns:
            Tensor: [n, d] last-layer encoder states.
        """
        ids = self._truncate(token_ids)
        h, _ = self._encode([ids])
        return h.reshape(len(ids), self.config.d_model)

    def encode_multimodal(self, token_ids: Sequence[int], features) -> FusionTrace:
        """
        Encode one token sequence and fuse it with vision features.

        Args:
            token_ids (Sequence[int]): Language input ids.
            features: (m, d_v) patch features, `VisionFeatures` or array.

        Returns:
            FusionTrace: All intermediate states, without batch axis.
        """
        feats = features.patches if isinstance(features, VisionFeatures) else features
        return fuse(
            self.encode_language(token_ids), self._check_features(feats), self.fusion
        )

    def _encode_fused(
        self, batch_ids: List[List[int]], batch_features: np.ndarray
    ) -> Tuple[Tensor, np.ndarray]:
        h_language, mask = self._encode(batch_ids)
        trace = fuse(h_language, self._check_features(batch_features), self.fusion)
        return trace.h_fuse, mask

    # decoding
    def _decode(
        self, decoder_ids: np.ndarray, memory: Tensor, memory_mask: np.ndarray
    ) -> Tensor:
        """Logits [B, t, V] for decoder inputs [B, t]."""
        width = decoder_ids.shape[1]
        if width > self.config.n_max:
            raise TargetTooLongError(
                f"decoder input of {width} tokens exceeds n_max={self.config.n_max}"
            )
        x = embedding(self.token_embedding, decoder_ids) + embedding(
            self.decoder_positions, np.arange(width)
        )
        x = self.drop(x)
        self_mask = causal_mask(width)
        for block in self.decoder:
            x = block(x, memory, self_mask, memory_mask)
        return self.output(self.decoder_norm(x))

    def batch_logits(self, examples: Sequence[Example]) -> Tuple[Tensor, np.ndarray]:
        """
        Teacher-forced logits of a batch.

        Returns:
            Tuple[Tensor, np.ndarray]: Logits [B, t, V] and the padded targets
                [B, t] with `IGNORE_INDEX` past each target's end.
        """
        batch_ids = [self._truncate(ex.input_ids) for ex in examples]
        features = np.stack([self._check_features(ex.features) for ex in examples])
        memory, memory_mask = self._encode_fused(batch_ids, features)

        width = max(len(ex.target_ids) for ex in examples)
        if width == 0:
            raise TargetTooLongError("empty target sequence")
        decoder_ids = np.full((len(examples), width), PAD, dtype=np.int64)
        targets = np.full((len(examples), width), IGNORE_INDEX, dtype=np.int64)
        for row, ex in enumerate(examples):
            seq = list(ex.target_ids)
            decoder_ids[row, : len(seq)] = [BOS] + seq[:-1]
            targets[row, : len(seq)] = seq
        return self._decode(decoder_ids, memory, memory_mask), targets

    def batch_loss(self, examples: Sequence[Example]) -> Tensor:
        """Mean negative log-likelihood over all target tokens of the batch."""
        logits, targets = self.batch_logits(examples)
        b, t, v = logits.shape
        return cross_entropy_loss(
            logits.reshape(b * t, v), targets.reshape(-1), IGNORE_INDEX
        )

    def forward_teacher_forced(
        self, input_ids: Sequence[int], features, target_ids: Sequence[int]
    ) -> Tuple[Tensor, np.ndarray]:
        """
        Score a target sequence given the inputs.

        The decoder reads BOS followed by all but the last target token.

        Args:
            input_ids (Sequence[int]): Language input ids.
            features: (m, d_v) patch features.
            target_ids (Sequence[int]): Target ids, normally ending in EOS.

        Returns:
            Tuple[Tensor, np.ndarray]: The mean negative log-likelihood and the
                log-probability of every target token.
        """
        feats = features.patches if isinstance(features, VisionFeatures) else features
        logits, targets = self.batch_logits([Example(input_ids, feats, target_ids)])
        _, t, v = logits.shape
        flat = logits.reshape(t, v)
        loss = cross_entropy_loss(flat, targets.reshape(-1), IGNORE_INDEX)
        logp = log_softmax_rows(flat.data.astype(np.float64))
        token_logprobs = logp[np.arange(t), targets.reshape(-1)]
        return loss, token_logprobs

    def generate_greedy(
        self, input_ids: Sequence[int], features, max_new_tokens: int
    ) -> Generation:
        """
        Decode greedily until EOS or the token budget is used.

        Ties between equally likely tokens go to the lowest id. The budget is
        capped at `n_max`, the decoder length limit.

        Args:
            input_ids (Sequence[int]): Language input ids.
            features: (m, d_v) patch features.
            max_new_tokens (int): At least 1.

        Returns:
            Generation: Text without special tokens, the summed log-probability
                of the chosen tokens (EOS included) and the chosen ids.
        """
        if max_new_tokens < 1:
            raise ValueError(f"max_new_tokens must be at least 1, got {max_new_tokens}")
        budget = min(max_new_tokens, self.config.n_max)
        feats = features.patches if isinstance(features, VisionFeatures) else features
        was_training = self.training
        self.eval()
        try:
            with no_grad():
                ids = self._truncate(input_ids)
                memory, memory_mask = self._encode_fused(
                    [ids], self._check_features(feats)[None]
                )
                generated: List[int] = []
                total = 0.0
                while len(generated) < budget:
                    decoder_ids = np.array([[BOS] + generated], dtype=np.int64)
                    logits = self._decode(decoder_ids, memory, memory_mask)
                    logp = log_softmax_rows(logits.data[0, -1].astype(np.float64))
                    token = int(np.argmax(logp))
                    generated.append(token)
                    total += float(logp[token])
                    if token == EOS:
                        break
        finally:
            self.train(was_training)
        return Generation(detokenize(generated, self.vocab), total, generated)


@attrs.frozen()
class ModelSummary:
    """Parameter count of a model, for logs and manifests."""

    n_parameters: int
    n_tensors: int

    @classmethod
    def of(cls, model: ReasoningModel) -> "ModelSummary":
        params = list(model.named_parameters())
        return cls(
            n_parameters=int(sum(p.data.size for _, p in params)), n_tensors=len(params)
        )

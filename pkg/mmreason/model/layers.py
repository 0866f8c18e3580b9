"""Transformer building blocks on top of the tensor engine."""
import math
from typing import Iterator, List, Optional, Tuple

import numpy as np

from ..fusion import FusionParams
from ..tensor import Tensor, dropout, layer_norm, matmul, relu, softmax_rows

INIT_STD = 0.02
NEG_INF = -1e9


class Layer:
    """
    Base class of everything with parameters.

    Parameters are the attributes holding tensors that require gradients,
    found recursively through sub-layers, lists of sub-layers and fusion
    weights. Their names are dotted attribute paths, in definition order.
    """

    training: bool = True

    def named_parameters(self) -> Iterator[Tuple[str, Tensor]]:
        for name, value in vars(self).items():
            if isinstance(value, Tensor):
                if value.requires_grad:
                    yield name, value
            elif isinstance(value, (Layer, FusionParams)):
                for sub_name, param in value.named_parameters():
                    yield f"{name}.{sub_name}", param
            elif isinstance(value, list) and all(isinstance(v, Layer) for v in value):
                for i, layer in enumerate(value):
                    for sub_name, param in layer.named_parameters():
                        yield f"{name}.{i}.{sub_name}", param

    def sublayers(self) -> Iterator["Layer"]:
        for value in vars(self).values():
            if isinstance(value, Layer):
                yield value
            elif isinstance(value, list):
                yield from (v for v in value if isinstance(v, Layer))

    def train(self, mode: bool = True) -> "Layer":
        """Switch training mode (dropout active) on or off, recursively."""
        self.training = mode
        for layer in self.sublayers():
            layer.train(mode)
        return self

    def eval(self) -> "Layer":
        return self.train(False)

    def zero_grad(self) -> None:
        for _, param in self.named_parameters():
            param.zero_grad()


def normal_param(rng: np.random.Generator, shape, std: float = INIT_STD) -> Tensor:
    return Tensor(rng.normal(0.0, std, shape), requires_grad=True)


class Dropout(Layer):
    """Inverted dropout drawing its masks from a shared generator."""

    def __init__(self, rate: float, rng: np.random.Generator):
        self.rate = rate
        self.rng = rng

    def __call__(self, x: Tensor) -> Tensor:
        if not self.training or self.rate == 0.0:
            return x
        return dropout(x, self.rate, self.rng)


class Linear(Layer):
    def __init__(
        self, d_in: int, d_out: int, rng: np.random.Generator, bias: bool = True
    ):
        self.weight = normal_param(rng, (d_in, d_out))
        self.bias = Tensor(np.zeros(d_out), requires_grad=True) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        out = matmul(x, self.weight)
        return out + self.bias if self.bias is not None else out


class LayerNorm(Layer):
    def __init__(self, d: int, eps: float = 1e-5):
        self.gain = Tensor(np.ones(d), requires_grad=True)
        self.bias = Tensor(np.zeros(d), requires_grad=True)
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gain, self.bias, self.eps)


class MultiHeadAttention(Layer):
    """
    Scaled dot-product attention with learned projections and several heads.

    Args:
        d (int): Model width.
        heads (int): Number of heads; must divide `d`.
        rng (np.random.Generator): Initialization stream.
        drop (Dropout): Dropout applied to the attention output.
    """

    def __init__(self, d: int, heads: int, rng: np.random.Generator, drop: Dropout):
        self.heads = heads
        self.q = Linear(d, d, rng)
        self.k = Linear(d, d, rng)
        self.v = Linear(d, d, rng)
        self.o = Linear(d, d, rng)
        self.drop = drop

    def _split(self, x: Tensor) -> Tensor:
        b, n, d = x.shape
        return x.reshape(b, n, self.heads, d // self.heads).transpose(0, 2, 1, 3)

    def __call__(
        self, x: Tensor, memory: Tensor, mask: Optional[np.ndarray] = None
    ) -> Tensor:
        """
        Attend from `x` [B, n, d] over `memory` [B, m, d].

        Args:
            x (Tensor): Queries.
            memory (Tensor): Keys and values.
            mask (Optional[np.ndarray]): Additive mask broadcastable to
                [B, heads, n, m]; blocked positions hold a large negative value.
        """
        b, n, d = x.shape
        q = self._split(self.q(x))
        k = self._split(self.k(memory))
        v = self._split(self.v(memory))
        scores = matmul(q, k.T) * (1.0 / math.sqrt(d // self.heads))
        if mask is not None:
            scores = scores + Tensor(mask, dtype=scores.dtype)
        context = matmul(softmax_rows(scores), v)
        merged = context.transpose(0, 2, 1, 3).reshape(b, n, d)
        return self.drop(self.o(merged))


class FeedForward(Layer):
    def __init__(self, d: int, ffn: int, rng: np.random.Generator, drop: Dropout):
        self.inner = Linear(d, ffn, rng)
        self.outer = Linear(ffn, d, rng)
        self.drop = drop

    def __call__(self, x: Tensor) -> Tensor:
        return self.drop(self.outer(relu(self.inner(x))))


class EncoderBlock(Layer):
    """Pre-norm self-attention and feed-forward, each with a residual."""

    def __init__(
        self, d: int, heads: int, ffn: int, rng: np.random.Generator, drop: Dropout
    ):
        self.norm_attn = LayerNorm(d)
        self.self_attn = MultiHeadAttention(d, heads, rng, drop)
        self.norm_ffn = LayerNorm(d)
        self.ffn = FeedForward(d, ffn, rng, drop)

    def __call__(self, x: Tensor, mask: Optional[np.ndarray]) -> Tensor:
        h = self.norm_attn(x)
        x = x + self.self_attn(h, h, mask)
        return x + self.ffn(self.norm_ffn(x))


class DecoderBlock(Layer):
    """Pre-norm causal self-attention, cross-attention and feed-forward."""

    def __init__(
        self, d: int, heads: int, ffn: int, rng: np.random.Generator, drop: Dropout
    ):
        self.norm_self = LayerNorm(d)
        self.self_attn = MultiHeadAttention(d, heads, rng, drop)
        self.norm_cross = LayerNorm(d)
        self.cross_attn = MultiHeadAttention(d, heads, rng, drop)
        self.norm_ffn = LayerNorm(d)
        self.ffn = FeedForward(d, ffn, rng, drop)

    def __call__(
        self,
        x: Tensor,
        memory: Tensor,
        self_mask: Optional[np.ndarray],
        memory_mask: Optional[np.ndarray],
    ) -> Tensor:
        h = self.norm_self(x)
        x = x + self.self_attn(h, h, self_mask)
        x = x + self.cross_attn(self.norm_cross(x), memory, memory_mask)
        return x + self.ffn(self.norm_ffn(x))


def padding_mask(lengths: List[int], width: int) -> np.ndarray:
    """Additive [B, 1, 1, width] mask blocking key positions past each length."""
    positions = np.arange(width)[None, :]
    blocked = positions >= np.asarray(lengths)[:, None]
    return np.where(blocked, NEG_INF, 0.0)[:, None, None, :]


def causal_mask(width: int) -> np.ndarray:
    """Additive [1, 1, width, width] mask blocking attention to later positions."""
    return np.triu(np.full((width, width), NEG_INF), k=1)[None, None, :, :]

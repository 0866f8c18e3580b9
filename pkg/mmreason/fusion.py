"""
Injection of vision features into language states.

The language states attend to the projected patch features with a single
head whose query, key and value are the states themselves (no learned
projections), and a sigmoid gate blends the attended vision into the
language states elementwise.

All functions accept leading batch axes: language states are [..., n, d],
patch features [..., m, d_v].
"""
import logging
import math
from typing import Dict, Iterator, Optional, Tuple

import attrs
import numpy as np

from .exceptions import ShapeMismatchError
from .tensor import Tensor, matmul, sigmoid, softmax_rows

logger = logging.getLogger(__name__)


@attrs.mutable()
class FusionParams:
    """
    Learnable weights of the fusion.

    Args:
        w_h (Tensor): d_v x d projection of the patch features.
        w_l (Tensor): d x d gate weight applied to the language states.
        w_v (Tensor): d x d gate weight applied to the attended vision.
        gate_bias (Optional[Tensor]): Optional bias of width d inside the gate.
    """

    w_h: Tensor
    w_l: Tensor
    w_v: Tensor
    gate_bias: Optional[Tensor] = None

    def __attrs_post_init__(self):
        d_v, d = self.w_h.shape
        if self.w_l.shape != (d, d) or self.w_v.shape != (d, d):
            raise ShapeMismatchError(
                f"fusion weights W_h {self.w_h.shape}, W_l {self.w_l.shape}, "
                f"W_v {self.w_v.shape} do not agree"
            )
        if self.gate_bias is not None and self.gate_bias.shape != (d,):
            raise ShapeMismatchError(f"gate bias {self.gate_bias.shape} for width {d}")

    @classmethod
    def init(
        cls,
        d_v: int,
        d: int,
        rng: np.random.Generator,
        gate_bias: bool = False,
        std=0.02,
    ) -> "FusionParams":
        """Normal initialization with standard deviation `std`; bias at zero."""
        return cls(
            w_h=Tensor(rng.normal(0.0, std, (d_v, d)), requires_grad=True),
            w_l=Tensor(rng.normal(0.0, std, (d, d)), requires_grad=True),
            w_v=Tensor(rng.normal(0.0, std, (d, d)), requires_grad=True),
            gate_bias=Tensor(np.zeros(d), requires_grad=True) if gate_bias else None,
        )

    def named_parameters(self) -> Iterator[Tuple[str, Tensor]]:
        yield "w_h", self.w_h
        yield "w_l", self.w_l
        yield "w_v", self.w_v
        if self.gate_bias is not None:
            yield "gate_bias", self.gate_bias

    def all_finite(self) -> bool:
        return all(np.isfinite(p.data).all() for _, p in self.named_parameters())


@attrs.frozen()
class FusionTrace:
    """
    Intermediate states of one fusion.

    Args:
        h_language (Tensor): [..., n, d] encoder states.
        h_vision (Tensor): [..., m, d] projected patches.
        h_attn (Tensor): [..., n, d] attended vision per token.
        gate (Tensor): [..., n, d] gate values in (0, 1).
        h_fuse (Tensor): [..., n, d] fused states fed to the decoder.
    """

    h_language: Tensor
    h_vision: Tensor
    h_attn: Tensor
    gate: Tensor
    h_fuse: Tensor

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {f.name: getattr(self, f.name).shape for f in attrs.fields(FusionTrace)}


def project_vision(features, w_h: Tensor) -> Tensor:
    """
    Project patch features to the model width.

    Args:
        features: [..., m, d_v] patch features, array-like or Tensor. They are
            treated as constants, no gradient flows into them.
        w_h (Tensor): d_v x d projection.

    Returns:
        Tensor: [..., m, d]
    """
    feats = features.data if isinstance(features, Tensor) else np.asarray(features)
    if feats.ndim < 2 or feats.shape[-1] != w_h.shape[0]:
        raise ShapeMismatchError(
            f"features of shape {feats.shape} do not fit W_h of shape {w_h.shape}"
        )
    return matmul(Tensor(feats, dtype=w_h.dtype), w_h)


def cross_attention(h_language: Tensor, h_vision: Tensor) -> Tensor:
    """
    Single-head attention of language states over projected patches.

    softmax(H_language H_vision^T / sqrt(d)) H_vision, without learned
    query, key or value projections.

    Args:
        h_language (Tensor): [..., n, d]
        h_vision (Tensor): [..., m, d]

    Returns:
        Tensor: [..., n, d]; every row is a convex combination of patch rows.
    """
    if h_language.shape[-1] != h_vision.shape[-1]:
        raise ShapeMismatchError(
            f"cross_attention: language width {h_language.shape} and vision "
            f"width {h_vision.shape} differ"
        )
    d = h_language.shape[-1]
    scores = matmul(h_language, h_vision.T) * (1.0 / math.sqrt(d))
    return matmul(softmax_rows(scores), h_vision)


def gated_fusion(
    h_language: Tensor,
    h_attn: Tensor,
    w_l: Tensor,
    w_v: Tensor,
    bias: Optional[Tensor] = None,
) -> Tuple[Tensor, Tensor]:
    """
    Blend language states and attended vision with a sigmoid gate.

    gate = sigmoid(H_language W_l + H_attn W_v [+ bias]);
    H_fuse = (1 - gate) * H_language + gate * H_attn

    Args:
        h_language (Tensor): [..., n, d]
        h_attn (Tensor): [..., n, d]
        w_l (Tensor): d x d
        w_v (Tensor): d x d
        bias (Optional[Tensor]): Optional gate bias of width d.

    Returns:
        Tuple[Tensor, Tensor]: The gate and the fused states, both [..., n, d].
    """
    if h_language.shape != h_attn.shape:
        raise ShapeMismatchError(
            f"gated_fusion: language {h_language.shape} and attended vision "
            f"{h_attn.shape} differ"
        )
    pre = matmul(h_language, w_l) + matmul(h_attn, w_v)
    if bias is not None:
        pre = pre + bias
    gate = sigmoid(pre)
    h_fuse = (1.0 - gate) * h_language + gate * h_attn
    return gate, h_fuse


def fuse(h_language: Tensor, features, params: FusionParams) -> FusionTrace:
    """Run projection, attention and gating and keep every intermediate."""
    h_vision = project_vision(features, params.w_h)
    h_attn = cross_attention(h_language, h_vision)
    gate, h_fuse = gated_fusion(
        h_language, h_attn, params.w_l, params.w_v, params.gate_bias
    )
    return FusionTrace(
        h_language=h_language,
        h_vision=h_vision,
        h_attn=h_attn,
        gate=gate,
        h_fuse=h_fuse,
    )

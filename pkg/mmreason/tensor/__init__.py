"""Minimal dense tensors with reverse-mode autodiff and AdamW."""

from .gradcheck import finite_diff_check
from .ops import (
    cross_entropy_loss,
    dropout,
    elementwise,
    embedding,
    layer_norm,
    log_softmax_rows,
    matmul,
    relu,
    sigmoid,
    softmax_rows,
)
from .optim import AdamW, OptimizerState, adamw_step
from .tensor import (
    Node,
    Tensor,
    backward,
    default_dtype,
    get_default_dtype,
    graph_nodes,
    is_grad_enabled,
    no_grad,
)

__all__ = [
    "finite_diff_check",
    "cross_entropy_loss",
    "dropout",
    "elementwise",
    "embedding",
    "layer_norm",
    "log_softmax_rows",
    "matmul",
    "relu",
    "sigmoid",
    "softmax_rows",
    "AdamW",
    "OptimizerState",
    "adamw_step",
    "Node",
    "Tensor",
    "backward",
    "default_dtype",
    "get_default_dtype",
    "graph_nodes",
    "is_grad_enabled",
    "no_grad",
]

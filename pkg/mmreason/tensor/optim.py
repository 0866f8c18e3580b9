"""AdamW with decoupled weight decay."""
import logging
from typing import Dict, Mapping, Tuple

import attrs
import numpy as np

from ..exceptions import ShapeMismatchError
from .tensor import Tensor

logger = logging.getLogger(__name__)


@attrs.mutable()
class OptimizerState:
    """
    Moment buffers and hyper-parameters of AdamW.

    Args:
        lr (float): Learning rate.
        betas (Tuple[float, float]): Decay rates of the first and second moments.
        eps (float): Added to the denominator.
        weight_decay (float): Decoupled weight-decay coefficient.
        step (int): Number of updates applied so far.
        m (Dict[str, np.ndarray]): First moments, keyed like the parameters.
        v (Dict[str, np.ndarray]): Second moments, keyed like the parameters.
    """

    lr: float = 5e-5
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.0
    step: int = 0
    m: Dict[str, np.ndarray] = attrs.field(factory=dict)
    v: Dict[str, np.ndarray] = attrs.field(factory=dict)


def adamw_step(
    params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray], state: OptimizerState
) -> None:
    """
    Apply one AdamW update in place.

    m = b1*m + (1-b1)*g; v = b2*v + (1-b2)*g^2; both are bias corrected by the
    step count, then p <- p*(1 - lr*wd) - lr * m_hat / (sqrt(v_hat) + eps).

    Args:
        params (Mapping[str, Tensor]): Parameters by name.
        grads (Mapping[str, np.ndarray]): Gradients by the same names.
        state (OptimizerState): Updated in place.
    """
    if set(grads) != set(params):
        raise ShapeMismatchError(
            f"gradients for {sorted(set(grads) ^ set(params))} "
            "do not match the parameters"
        )
    state.step += 1
    beta1, beta2 = state.betas
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step

    for name, param in params.items():
        grad = grads[name]
        if grad.shape != param.shape:
            raise ShapeMismatchError(
                f"gradient of '{name}' has shape {grad.shape}, parameter {param.shape}"
            )
        m = state.m.setdefault(name, np.zeros_like(param.data))
        v = state.v.setdefault(name, np.zeros_like(param.data))
        if m.shape != param.shape or v.shape != param.shape:
            raise ShapeMismatchError(f"optimizer state of '{name}' is misaligned")

        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad

        update = (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        if state.weight_decay != 0.0:
            param.data *= 1.0 - state.lr * state.weight_decay
        param.data -= (state.lr * update).astype(param.dtype)


class AdamW:
    """
    Optimizer over a fixed, named set of parameters.

    Args:
        params (Mapping[str, Tensor]): Parameters to update.
        lr (float): Learning rate.
        betas (Tuple[float, float]): Moment decay rates.
        eps (float): Denominator epsilon.
        weight_decay (float): Decoupled weight decay.
    """

    def __init__(
        self,
        params: Mapping[str, Tensor],
        lr: float = 5e-5,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.0,
    ):
        self.params = dict(params)
        self.state = OptimizerState(
            lr=lr, betas=tuple(betas), eps=eps, weight_decay=weight_decay
        )

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()

    def step(self) -> None:
        """Update with the current gradients; missing gradients count as zero."""
        grads = {
            name: p.grad if p.grad is not None else np.zeros_like(p.data)
            for name, p in self.params.items()
        }
        adamw_step(self.params, grads, self.state)

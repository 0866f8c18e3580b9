"""Gradient checking of the tape against central finite differences."""
import logging
from typing import Callable, Sequence

import numpy as np

from ..exceptions import NumericDomainError
from .tensor import Tensor, backward, no_grad

logger = logging.getLogger(__name__)


def finite_diff_check(
    f: Callable[..., Tensor], inputs: Sequence[Tensor], eps: float = 1e-5
) -> float:
    """
    Compare analytic gradients with central differences.

    Args:
        f (Callable[..., Tensor]): Called as `f(*inputs)`, returns a scalar tensor.
        inputs (Sequence[Tensor]): Tensors to differentiate with respect to. Their
            `requires_grad` is switched on and their gradients are overwritten.
        eps (float): Step of the central difference, in [1e-7, 1e-3].

    Returns:
        float: max over all coordinates of
            |analytic - numeric| / max(1, |analytic|, |numeric|).
    """
    if not 1e-7 <= eps <= 1e-3:
        raise NumericDomainError(f"eps must lie in [1e-7, 1e-3], got {eps}")
    if any(t.dtype != np.float64 for t in inputs):
        logger.warning("finite_diff_check on non-64-bit inputs; expect loose agreement")

    for t in inputs:
        t.requires_grad = True
        t.grad = None
    backward(f(*inputs))
    analytic = [
        t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in inputs
    ]

    max_err = 0.0
    with no_grad():
        for t, grad in zip(inputs, analytic):
            for i in range(t.data.size):
                orig = t.data.flat[i]
                t.data.flat[i] = orig + eps
                f_plus = f(*inputs).item()
                t.data.flat[i] = orig - eps
                f_minus = f(*inputs).item()
                t.data.flat[i] = orig
                numeric = (f_plus - f_minus) / (2 * eps)
                a = float(grad.flat[i])
                err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
                max_err = max(max_err, err)
    return max_err

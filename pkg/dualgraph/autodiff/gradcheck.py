from typing import Callable

import numpy as np

from dualgraph.autodiff.tape import Tape, backward, no_grad
from dualgraph.autodiff.tensor import Tensor


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """
    max |a - b| scaled by the larger of the two max magnitudes.
    """
    scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a - b))) / scale


def finite_difference_gradients(
    fn: Callable[[], Tensor], params: dict[str, Tensor], h: float = 1e-6
) -> dict[str, np.ndarray]:
    """
    Central differences of the scalar `fn()` with respect to every entry of every
    parameter.
    """
    grads = {}
    with no_grad():
        for name, param in params.items():
            grad = np.zeros_like(param.value)
            flat = param.value.reshape(-1)
            out = grad.reshape(-1)
            for i in range(flat.size):
                original = flat[i]
                flat[i] = original + h
                plus = fn().item()
                flat[i] = original - h
                minus = fn().item()
                flat[i] = original
                out[i] = (plus - minus) / (2.0 * h)
            grads[name] = grad
    return grads


def check_gradients(
    fn: Callable[[], Tensor], params: dict[str, Tensor], h: float = 1e-6
) -> dict[str, float]:
    """
    Compares tape gradients with central differences.

    Returns:
        relative error per parameter name
    """
    with Tape() as tape:
        loss = fn()
    analytic = backward(tape, loss, params)
    numeric = finite_difference_gradients(fn, params, h)
    return {name: relative_error(analytic[name], numeric[name]) for name in params}

import math
from dataclasses import dataclass, field

import bittensor as bt
import numpy as np

from dualgraph.autodiff.tensor import Tensor
from dualgraph.exceptions import DivergenceError


@dataclass
class OptimizerState:
    """
    Adam moments plus the plateau scheduler bookkeeping.
    """

    lr: float
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    best_val_loss: float = math.inf
    plateau_count: int = 0
    patience: int = 3
    factor: float = 0.5
    threshold: float = 1e-4
    lr_reductions: int = 0


def init_optimizer_state(params: dict[str, Tensor], lr: float = 3e-3, **kwargs) -> OptimizerState:
    state = OptimizerState(lr=lr, **kwargs)
    for name, param in params.items():
        state.m[name] = np.zeros_like(param.value)
        state.v[name] = np.zeros_like(param.value)
    return state


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_global_norm(
    grads: dict[str, np.ndarray], max_norm: float = 0.5
) -> tuple[dict[str, np.ndarray], float]:
    """
    Rescales all gradients together when their joint L2 norm exceeds `max_norm`.

    Returns:
        (possibly rescaled gradients, norm before clipping)
    """
    norm = global_norm(grads)
    if not math.isfinite(norm):
        bad = [name for name, g in grads.items() if not np.all(np.isfinite(g))]
        raise DivergenceError(f"non-finite gradients in {bad[:5]}")
    if norm <= max_norm:
        return grads, norm
    factor = max_norm / norm
    return {name: g * factor for name, g in grads.items()}, norm


def adam_step(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    lr: float = None,
) -> dict[str, Tensor]:
    lr = state.lr if lr is None else lr
    state.step += 1
    bias1 = 1.0 - state.beta1**state.step
    bias2 = 1.0 - state.beta2**state.step

    updates = {}
    for name, param in params.items():
        g = grads[name]
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * g * g
        m_hat = state.m[name] / bias1
        v_hat = state.v[name] / bias2
        update = lr * m_hat / (np.sqrt(v_hat) + state.eps)
        if not np.all(np.isfinite(update)):
            raise DivergenceError(f"non-finite Adam update for '{name}'")
        updates[name] = update

    for name, param in params.items():
        param.value = param.value - updates[name]
    return params


def plateau_step(state: OptimizerState, val_loss: float) -> float:
    """
    ReduceLROnPlateau in "min" mode with a relative threshold: more than
    `patience` evaluations without improvement halve the learning rate.
    """
    if val_loss < state.best_val_loss * (1.0 - state.threshold):
        state.best_val_loss = val_loss
        state.plateau_count = 0
    else:
        state.plateau_count += 1

    if state.plateau_count > state.patience:
        state.lr *= state.factor
        state.plateau_count = 0
        state.lr_reductions += 1
        bt.logging.info(f"Validation loss plateaued, learning rate reduced to {state.lr:.3e}")
    return state.lr

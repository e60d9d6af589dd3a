import threading
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from dualgraph.autodiff.tensor import Tensor
from dualgraph.exceptions import NonScalarLossError, ShapeError

# per-thread stack, innermost entry wins; None marks a no-grad region
_local = threading.local()


def _active() -> list:
    if not hasattr(_local, "stack"):
        _local.stack = []
    return _local.stack


Adjoint = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class TapeNode:
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    adjoint: Adjoint


class Tape:
    """
    Append-only record of differentiable operations. Nodes are appended as they
    execute, so list order is a topological order.

    Usage:
        with Tape() as tape:
            loss = model_loss(...)
        grads = backward(tape, loss, params)
    """

    def __init__(self):
        self.nodes: list[TapeNode] = []

    def __enter__(self) -> "Tape":
        _active().append(self)
        return self

    def __exit__(self, *exc):
        _active().pop()
        return False

    def __len__(self) -> int:
        return len(self.nodes)

    def ops(self) -> list[str]:
        return [node.op for node in self.nodes]


class no_grad:
    """Suspends recording inside an enclosing tape."""

    def __enter__(self):
        _active().append(None)
        return self

    def __exit__(self, *exc):
        _active().pop()
        return False


def active_tape() -> Optional[Tape]:
    stack = _active()
    return stack[-1] if stack else None


def record(op: str, inputs: Sequence[Tensor], value: np.ndarray, adjoint: Adjoint) -> Tensor:
    out = Tensor(value)
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.node = len(tape.nodes)
        tape.nodes.append(TapeNode(op, tuple(inputs), out, adjoint))
    return out


def backward(
    tape: Tape, loss: Tensor, params: Optional[dict[str, Tensor]] = None
) -> dict[str, np.ndarray]:
    """
    Reverse sweep from a scalar loss.

    Args:
        tape: tape the loss was recorded on
        loss: scalar tensor
        params: named leaves to collect gradients for

    Returns:
        gradient per parameter name; parameters the loss does not reach get zeros
    """
    if loss.size != 1:
        raise NonScalarLossError(f"loss must be scalar, got shape {loss.shape}")

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.output), None)
        if g is None:
            continue
        for tensor, g_in in zip(node.inputs, node.adjoint(g)):
            if g_in is None or not tensor.requires_grad:
                continue
            if g_in.shape != tensor.shape:
                raise ShapeError(
                    f"adjoint of '{node.op}' produced {g_in.shape} for input {tensor.shape}"
                )
            key = id(tensor)
            grads[key] = grads[key] + g_in if key in grads else g_in

    result = {}
    for name, param in (params or {}).items():
        grad = grads.get(id(param))
        param.grad = np.zeros_like(param.value) if grad is None else grad
        result[name] = param.grad
    return result

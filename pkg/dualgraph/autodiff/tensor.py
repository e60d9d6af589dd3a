from typing import Optional

import numpy as np


class Tensor:
    """
    Dense float64 value with an optional gradient and its position on the active
    tape (`node` is None for leaves and untracked values).
    """

    __slots__ = ("value", "grad", "requires_grad", "node", "name")

    def __init__(self, value, requires_grad: bool = False, name: Optional[str] = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.node: Optional[int] = None
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return self.value.size

    def item(self) -> float:
        return float(self.value.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def numpy(self) -> np.ndarray:
        return self.value

    def __add__(self, other):
        from dualgraph.autodiff import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from dualgraph.autodiff import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from dualgraph.autodiff import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from dualgraph.autodiff import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        from dualgraph.autodiff import ops

        return ops.matmul(self, other)

    def __repr__(self):
        label = f" '{self.name}'" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from dualgraph.autodiff import ops
from dualgraph.autodiff.tensor import Tensor
from dualgraph.exceptions import DivergenceError
from dualgraph.model.params import ParamStore

GATES = ("z", "r", "h")


@dataclass
class GConvGRUCell:
    """
    Graph-convolutional GRU with order-K Chebyshev filters:

        z  = sigmoid(Cheb_z(X, H))
        r  = sigmoid(Cheb_r(X, H))
        h~ = tanh(Cheb_h(X, r * H))
        H' = z * H + (1 - z) * h~
    """

    prefix: str
    n_inputs: int
    hidden: int
    order: int

    @classmethod
    def create(cls, params: ParamStore, prefix: str, n_inputs: int, hidden: int, order: int):
        k = order + 1
        for gate in GATES:
            params.glorot(f"{prefix}.x{gate}", (k, n_inputs, hidden), k * n_inputs, hidden)
            params.glorot(f"{prefix}.h{gate}", (k, hidden, hidden), k * hidden, hidden)
            params.zeros(f"{prefix}.b{gate}", (1, hidden))
        return cls(prefix, n_inputs, hidden, order)

    def _filter(self, params, gate, matrix, x, h) -> Tensor:
        p = self.prefix
        return ops.add(
            ops.add(
                ops.cheb_conv(matrix, x, params[f"{p}.x{gate}"]),
                ops.cheb_conv(matrix, h, params[f"{p}.h{gate}"]),
            ),
            params[f"{p}.b{gate}"],
        )

    def step(self, params: ParamStore, matrix: sp.spmatrix, x, h_prev) -> Tensor:
        z = ops.sigmoid(self._filter(params, "z", matrix, x, h_prev))
        r = ops.sigmoid(self._filter(params, "r", matrix, x, h_prev))
        h_tilde = ops.tanh(self._filter(params, "h", matrix, x, ops.mul(r, h_prev)))
        h = ops.add(h_tilde, ops.mul(z, ops.sub(h_prev, h_tilde)))
        if not np.all(np.isfinite(h.value)):
            raise DivergenceError(f"non-finite hidden state in '{self.prefix}'")
        return h


def gconv_gru_step(params: ParamStore, cell: GConvGRUCell, matrix, x, h_prev) -> Tensor:
    return cell.step(params, matrix, x, h_prev)


@dataclass
class MLP:
    """Two-layer tanh decoder applied row-wise."""

    prefix: str

    @classmethod
    def create(cls, params: ParamStore, prefix: str, n_inputs: int, hidden: int, n_outputs: int):
        params.glorot(f"{prefix}.w0", (n_inputs, hidden), n_inputs, hidden)
        params.zeros(f"{prefix}.b0", (1, hidden))
        params.glorot(f"{prefix}.w1", (hidden, n_outputs), hidden, n_outputs)
        params.zeros(f"{prefix}.b1", (1, n_outputs))
        return cls(prefix)

    def __call__(self, params: ParamStore, x) -> Tensor:
        p = self.prefix
        hidden = ops.tanh(ops.linear(x, params[f"{p}.w0"], params[f"{p}.b0"]))
        return ops.linear(hidden, params[f"{p}.w1"], params[f"{p}.b1"])

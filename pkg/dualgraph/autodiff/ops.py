"""
Differentiable primitives. Each computes its forward value with numpy/scipy and
records the adjoint rule on the active tape.
"""

from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from dualgraph.autodiff.tape import record
from dualgraph.autodiff.tensor import Tensor
from dualgraph.exceptions import InvalidInputError, ShapeError


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> tuple:
    try:
        shape = np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} are incompatible")
    if shape != a.shape and shape != b.shape:
        raise ShapeError(
            f"{op}: unsupported broadcast of {a.shape} with {b.shape}"
        )
    return shape


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    lead = g.ndim - len(shape)
    if lead:
        g = g.sum(axis=tuple(range(lead)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def adjoint(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record("add", (a, b), a.value + b.value, adjoint)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def adjoint(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return record("sub", (a, b), a.value - b.value, adjoint)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def adjoint(g):
        return _unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)

    return record("mul", (a, b), a.value * b.value, adjoint)


def scale(x, c: float) -> Tensor:
    x = as_tensor(x)
    c = float(c)
    return record("scale", (x,), c * x.value, lambda g: (c * g,))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def adjoint(g):
        return g @ b.value.T, a.value.T @ g

    return record("matmul", (a, b), a.value @ b.value, adjoint)


def sparse_dense_matmul(matrix: sp.spmatrix, x) -> Tensor:
    """
    Constant sparse matrix times a dense tensor. The adjoint applies the
    transpose, which equals the matrix itself for the symmetric Laplacians.
    """
    x = as_tensor(x)
    if x.ndim != 2 or matrix.shape[1] != x.shape[0]:
        raise ShapeError(
            f"sparse_dense_matmul: cannot multiply {matrix.shape} by {x.shape}"
        )
    transpose = matrix.T

    def adjoint(g):
        return (np.asarray(transpose @ g),)

    return record("sparse_dense_matmul", (x,), np.asarray(matrix @ x.value), adjoint)


def linear(x, w, b) -> Tensor:
    return add(matmul(x, w), b)


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    out = expit(x.value)
    return record("sigmoid", (x,), out, lambda g: (g * out * (1.0 - out),))


def tanh(x) -> Tensor:
    x = as_tensor(x)
    out = np.tanh(x.value)
    return record("tanh", (x,), out, lambda g: (g * (1.0 - out * out),))


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.value > 0
    return record("relu", (x,), np.where(mask, x.value, 0.0), lambda g: (g * mask,))


def softplus(x) -> Tensor:
    x = as_tensor(x)
    return record(
        "softplus",
        (x,),
        np.logaddexp(0.0, x.value),
        lambda g: (g * expit(x.value),),
    )


def concat_columns(tensors: Sequence) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat_columns: nothing to concatenate")
    rows = tensors[0].shape[0]
    if any(t.ndim != 2 or t.shape[0] != rows for t in tensors):
        raise ShapeError(
            f"concat_columns: row counts differ {[t.shape for t in tensors]}"
        )
    splits = np.cumsum([t.shape[1] for t in tensors])[:-1]

    def adjoint(g):
        return tuple(np.split(g, splits, axis=1))

    return record(
        "concat_columns",
        tensors,
        np.concatenate([t.value for t in tensors], axis=1),
        adjoint,
    )


def row_gather(x, index) -> Tensor:
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= x.shape[0]):
        raise ShapeError(f"row_gather: index out of range for {x.shape[0]} rows")

    def adjoint(g):
        out = np.zeros_like(x.value)
        np.add.at(out, index, g)
        return (out,)

    return record("row_gather", (x,), x.value[index], adjoint)


def scatter_mean(x, segment, n_segments: int) -> Tensor:
    """
    Row means per segment id: out[s] = mean of x[i] with segment[i] == s.
    """
    x = as_tensor(x)
    segment = np.asarray(segment, dtype=np.int64)
    if x.ndim != 2 or segment.shape != (x.shape[0],):
        raise ShapeError(
            f"scatter_mean: segment ids {segment.shape} do not match rows of {x.shape}"
        )
    counts = np.bincount(segment, minlength=n_segments)
    if counts.shape[0] != n_segments or np.any(counts == 0):
        raise InvalidInputError("scatter_mean: every segment needs at least one row")

    out = np.zeros((n_segments, x.shape[1]))
    np.add.at(out, segment, x.value)
    out /= counts[:, None]

    def adjoint(g):
        return (g[segment] / counts[segment][:, None],)

    return record("scatter_mean", (x,), out, adjoint)


def mean_all(x) -> Tensor:
    x = as_tensor(x)
    n = x.size
    return record(
        "mean_all",
        (x,),
        np.asarray(x.value.mean()),
        lambda g: (np.full(x.shape, float(g) / n),),
    )


def sum_all(x) -> Tensor:
    x = as_tensor(x)
    return record(
        "sum_all", (x,), np.asarray(x.value.sum()), lambda g: (np.full(x.shape, float(g)),)
    )


def mse(x, y) -> Tensor:
    x, y = as_tensor(x), as_tensor(y)
    if x.shape != y.shape:
        raise ShapeError(f"mse: shapes differ {x.shape} vs {y.shape}")
    diff = x.value - y.value
    n = diff.size

    def adjoint(g):
        gx = (2.0 * float(g) / n) * diff
        return gx, -gx

    return record("mse", (x, y), np.asarray(np.mean(diff * diff)), adjoint)


def weighted_sse(x, y, row_weights) -> Tensor:
    """
    sum_i w_i * sum_j (x_ij - y_ij)^2, used for case-weighted means over merged
    batches.
    """
    x, y = as_tensor(x), as_tensor(y)
    if x.shape != y.shape:
        raise ShapeError(f"weighted_sse: shapes differ {x.shape} vs {y.shape}")
    w = np.asarray(row_weights, dtype=np.float64)
    if w.shape != (x.shape[0],):
        raise ShapeError(f"weighted_sse: {w.shape[0]} weights for {x.shape[0]} rows")
    diff = x.value - y.value
    w_col = w.reshape((-1,) + (1,) * (x.ndim - 1))

    def adjoint(g):
        gx = 2.0 * float(g) * w_col * diff
        return gx, -gx

    return record(
        "weighted_sse", (x, y), np.asarray(np.sum(w_col * diff * diff)), adjoint
    )


def _chebyshev_terms(matrix, x: np.ndarray, order: int):
    t_prev = x
    yield t_prev
    if order >= 1:
        t_curr = np.asarray(matrix @ x)
        yield t_curr
        for _ in range(2, order + 1):
            t_next = 2.0 * np.asarray(matrix @ t_curr) - t_prev
            yield t_next
            t_prev, t_curr = t_curr, t_next


def cheb_conv(matrix: sp.spmatrix, x, weights) -> Tensor:
    """
    sum_k T_k(L~) x W_k with the Chebyshev recurrence T_0 = I, T_1 = L~,
    T_k = 2 L~ T_{k-1} - T_{k-2}. `weights` is [(K+1) x F x D]. The basis terms
    are recomputed in the adjoint instead of being stored.
    """
    x, weights = as_tensor(x), as_tensor(weights)
    if weights.ndim != 3 or x.ndim != 2 or weights.shape[1] != x.shape[1]:
        raise ShapeError(f"cheb_conv: input {x.shape} vs weights {weights.shape}")
    if matrix.shape != (x.shape[0], x.shape[0]):
        raise ShapeError(f"cheb_conv: operator {matrix.shape} vs input {x.shape}")
    order = weights.shape[0] - 1

    out = np.zeros((x.shape[0], weights.shape[2]))
    for k, term in enumerate(_chebyshev_terms(matrix, x.value, order)):
        out += term @ weights.value[k]

    transpose = matrix.T

    def adjoint(g):
        g_w = np.stack(
            [term.T @ g for term in _chebyshev_terms(matrix, x.value, order)]
        )
        if not x.requires_grad:
            return None, g_w
        # Clenshaw summation of sum_k T_k(L~)^T (g W_k^T)
        y = [g @ weights.value[k].T for k in range(order + 1)]
        b_next = np.zeros_like(x.value)
        b_next2 = np.zeros_like(x.value)
        for k in range(order, 0, -1):
            b_k = y[k] + 2.0 * np.asarray(transpose @ b_next) - b_next2
            b_next, b_next2 = b_k, b_next
        g_x = y[0] + np.asarray(transpose @ b_next) - b_next2
        return g_x, g_w

    return record("cheb_conv", (x, weights), out, adjoint)

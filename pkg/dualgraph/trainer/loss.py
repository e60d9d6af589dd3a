import numpy as np
import scipy.sparse as sp

from dualgraph.autodiff import ops
from dualgraph.autodiff.tensor import Tensor
from dualgraph.exceptions import ShapeError
from dualgraph.model.batch import Batch
from dualgraph.model.types import RolloutTrace
from dualgraph.trainer.types import LossWeights


def laplacian_energy(u: np.ndarray, rw_laplacian: sp.spmatrix) -> float:
    """
    Unnormalized sum_i |u_i - mean of u over the neighbours of i|^2 for one frame.
    """
    residual = np.asarray(rw_laplacian @ np.asarray(u, dtype=np.float64))
    return float(np.sum(residual * residual))


def laplacian_reg(u_frames: list, rw_laplacian: sp.spmatrix, row_weights=None) -> Tensor:
    """
    Smoothness penalty summed over frames. Without `row_weights` the sum is
    divided by T * N.
    """
    if not u_frames:
        raise ShapeError("laplacian_reg needs at least one frame")
    n = rw_laplacian.shape[0]
    if row_weights is None:
        row_weights = np.full(n, 1.0 / (len(u_frames) * n))
    total = None
    for u in u_frames:
        residual = ops.sparse_dense_matmul(rw_laplacian, u)
        term = ops.weighted_sse(residual, np.zeros(residual.shape), row_weights)
        total = term if total is None else ops.add(total, term)
    return total


def _row_weights(counts: np.ndarray, frames: int, columns: int) -> np.ndarray:
    """1 / (C * T * rows_c * columns), repeated over each case's rows."""
    c = counts.shape[0]
    return np.repeat(1.0 / (c * frames * counts * columns), counts)


def _frame_sum(pred: list, target: np.ndarray, weights: np.ndarray) -> Tensor:
    total = None
    for t, p in enumerate(pred):
        if p.shape != target[t].shape:
            raise ShapeError(f"prediction {p.shape} vs target {target[t].shape} at frame {t}")
        term = ops.weighted_sse(p, target[t], weights)
        total = term if total is None else ops.add(total, term)
    return total


def multitask_loss(
    trace: RolloutTrace, batch: Batch, weights: LossWeights
) -> tuple[Tensor, dict[str, float]]:
    """
    L = MSE(u) + l_s MSE(s) + l_rf2 MSE(rf2) + l_p MSE(peeq) + l_lap L_lap(u).

    Each term is a mean per case, averaged over the cases of the batch, so a merged
    batch gives the mean of the per-case losses.

    Returns:
        (scalar loss tensor, value of every unweighted term)
    """
    frames = batch.n_frames
    if trace.n_frames != frames:
        raise ShapeError(f"rollout has {trace.n_frames} frames, targets {frames}")
    graph = batch.graph
    node_w = _row_weights(graph.node_counts, frames, 3)
    elem_w = _row_weights(graph.elem_counts, frames, 1)
    case_w = _row_weights(np.ones(batch.n_cases, dtype=np.int64), frames, 1)

    terms = {
        "u": _frame_sum(trace.u, batch.u, node_w),
        "s": _frame_sum(trace.s, batch.s, elem_w),
        "rf2": _frame_sum(trace.rf2, batch.rf2, case_w),
        "peeq": _frame_sum(trace.peeq, batch.peeq, elem_w),
    }
    if weights.laplacian > 0:
        terms["laplacian"] = laplacian_reg(
            trace.u, graph.node_rw_laplacian, _row_weights(graph.node_counts, frames, 1)
        )

    loss = terms["u"]
    for name, weight in (
        ("s", weights.stress),
        ("rf2", weights.rf2),
        ("peeq", weights.peeq),
        ("laplacian", weights.laplacian),
    ):
        if name in terms and weight > 0:
            loss = ops.add(loss, ops.scale(terms[name], weight))
    return loss, {name: term.item() for name, term in terms.items()}

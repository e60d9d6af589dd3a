import numpy as np

from dualgraph.autodiff import ops
from dualgraph.autodiff.tensor import Tensor
from dualgraph.exceptions import OrphanNodeError, ShapeError
from dualgraph.mesh.types import Incidence
from dualgraph.projection.types import AttenuationReport


def _as_columns(values, rows: int, what: str) -> tuple[np.ndarray, bool]:
    f = np.asarray(values, dtype=np.float64)
    vector = f.ndim == 1
    if vector:
        f = f[:, None]
    if f.ndim != 2 or f.shape[0] != rows:
        raise ShapeError(f"{what} field must have {rows} rows, got shape {np.shape(values)}")
    if not np.all(np.isfinite(f)):
        raise ShapeError(f"{what} field contains non-finite values")
    return f, vector


def element_to_node(f_e, inc: Incidence) -> np.ndarray:
    """
    Node value = mean of the values of its incident elements, per channel.
    Accepts [E] or [E x C] and returns the same rank.
    """
    counts = inc.node_counts
    if np.any(counts == 0):
        raise OrphanNodeError(
            f"{int(np.sum(counts == 0))} nodes belong to no element, their mean is undefined"
        )
    f, vector = _as_columns(f_e, inc.n_elems, "element")
    out = inc.element_to_node_matrix @ f
    return out[:, 0] if vector else out


def node_to_element(f_n, inc: Incidence) -> np.ndarray:
    """
    Element value = 1/8 of the sum over its corner nodes, per channel.
    """
    f, vector = _as_columns(f_n, inc.n_nodes, "node")
    out = inc.node_to_element_matrix @ f
    return out[:, 0] if vector else out


def aggregate_node_hidden(h_n, inc: Incidence) -> Tensor:
    """
    Differentiable corner-node averaging of hidden states, [N x D] -> [E x D].
    Each node receives 1/8 of the output gradient of every incident element.
    """
    h_n = ops.as_tensor(h_n)
    if h_n.ndim != 2 or h_n.shape[0] != inc.n_nodes:
        raise ShapeError(
            f"hidden states must be [{inc.n_nodes} x D], got {h_n.shape}"
        )
    return ops.sparse_dense_matmul(inc.node_to_element_matrix, h_n)


def project_roundtrip(f_e, inc: Incidence) -> np.ndarray:
    return node_to_element(element_to_node(f_e, inc), inc)


def attenuation_report(f_e, inc: Incidence, unit: str = "") -> AttenuationReport:
    """
    Smoothing introduced by routing an element field through the nodes.

    Args:
        f_e: [E] ground-truth element field
        inc: mesh incidence
        unit: unit tag carried into the report

    Returns:
        AttenuationReport with the largest magnitude before and after the round trip
    """
    f = np.asarray(f_e, dtype=np.float64).ravel()
    projected = project_roundtrip(f, inc)

    # peaks are magnitudes so mixed-sign fields stay within [0, 100]
    original_index = int(np.argmax(np.abs(f)))
    projected_index = int(np.argmax(np.abs(projected)))
    original_peak = float(abs(f[original_index]))
    # convex averaging never exceeds the input magnitude; clip rounding noise
    projected_peak = min(float(abs(projected[projected_index])), original_peak)

    zero_peak = original_peak == 0.0
    reduction = 0.0 if zero_peak else (1.0 - projected_peak / original_peak) * 100.0

    return AttenuationReport(
        original_peak=original_peak,
        projected_peak=projected_peak,
        reduction_pct=max(reduction, 0.0),
        original_peak_index=original_index,
        projected_peak_index=projected_index,
        zero_peak=zero_peak,
        unit=unit,
        abs_diff=np.abs(f - projected),
    )

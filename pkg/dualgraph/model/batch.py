from dataclasses import dataclass

import numpy as np

from dualgraph.data.case_store import apply_norm, compute_alpha
from dualgraph.data.types import CaseTrajectory, NormStats
from dualgraph.exceptions import InvalidInputError, ShapeError
from dualgraph.mesh.graph import build_dual_graph, merge_batch
from dualgraph.mesh.types import BatchedGraph, DualGraph


@dataclass
class PreparedCase:
    """
    A case with its graphs and normalized static inputs and targets.
    """

    case: CaseTrajectory
    graph: DualGraph
    coords: np.ndarray  # [N x 3]
    indicator: np.ndarray  # [N x 1]
    alpha: np.ndarray  # [T]
    u: np.ndarray  # [T x N x 3]
    s: np.ndarray  # [T x E]
    peeq: np.ndarray  # [T x E]
    rf2: np.ndarray  # [T]

    @property
    def n_frames(self) -> int:
        return int(self.alpha.shape[0])


@dataclass
class Batch:
    """
    Several prepared cases merged into one block-diagonal graph. Node and element
    rows follow case order; rf2 has one column per case.
    """

    cases: list[PreparedCase]
    graph: BatchedGraph
    coords: np.ndarray  # [N x 3]
    indicator: np.ndarray  # [N x 1]
    alpha: np.ndarray  # [T x N x 1]
    u: np.ndarray  # [T x N x 3]
    s: np.ndarray  # [T x E x 1]
    peeq: np.ndarray  # [T x E x 1]
    rf2: np.ndarray  # [T x C x 1]

    @property
    def n_cases(self) -> int:
        return len(self.cases)

    @property
    def n_frames(self) -> int:
        return int(self.alpha.shape[0])

    @property
    def case_ids(self) -> list[str]:
        return [p.case.case_id for p in self.cases]


def prepare_case(
    case: CaseTrajectory, stats: NormStats, lambda_max_mode: str = "fixed"
) -> PreparedCase:
    indicator = np.zeros((case.n_nodes, 1))
    indicator[np.asarray(case.load_nodes, dtype=np.int64), 0] = 1.0
    return PreparedCase(
        case=case,
        graph=build_dual_graph(case.connectivity, case.n_nodes, lambda_max_mode),
        coords=apply_norm(case.coords, stats, "coords"),
        indicator=indicator,
        alpha=compute_alpha(case.frame_times),
        u=apply_norm(case.u, stats, "u"),
        s=apply_norm(case.s, stats, "s"),
        peeq=apply_norm(case.peeq, stats, "peeq"),
        rf2=apply_norm(case.rf2, stats, "rf2"),
    )


def make_batch(prepared: list[PreparedCase]) -> Batch:
    if not prepared:
        raise InvalidInputError("cannot batch zero cases")
    frames = {p.n_frames for p in prepared}
    if len(frames) != 1:
        raise ShapeError(f"cases in one batch must share the frame count, got {sorted(frames)}")

    graph = merge_batch([p.graph for p in prepared])
    alpha = np.concatenate(
        [np.repeat(p.alpha[:, None], p.case.n_nodes, axis=1) for p in prepared], axis=1
    )
    return Batch(
        cases=list(prepared),
        graph=graph,
        coords=np.concatenate([p.coords for p in prepared]),
        indicator=np.concatenate([p.indicator for p in prepared]),
        alpha=alpha[:, :, None],
        u=np.concatenate([p.u for p in prepared], axis=1),
        s=np.concatenate([p.s for p in prepared], axis=1)[:, :, None],
        peeq=np.concatenate([p.peeq for p in prepared], axis=1)[:, :, None],
        rf2=np.stack([p.rf2 for p in prepared], axis=1)[:, :, None],
    )


def iterate_batches(prepared: list[PreparedCase], batch_size: int, order=None):
    """Yields consecutive batches; the last one may be smaller."""
    order = np.arange(len(prepared)) if order is None else np.asarray(order)
    for start in range(0, len(order), batch_size):
        yield make_batch([prepared[i] for i in order[start : start + batch_size]])

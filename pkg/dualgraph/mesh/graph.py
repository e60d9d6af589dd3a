from collections import Counter
from typing import Optional

import bittensor as bt
import numpy as np
import scipy.sparse as sp

from dualgraph.exceptions import (
    ConnectivityRangeError,
    InvalidInputError,
    IsolatedNodeError,
    NonManifoldError,
    RepeatedNodeError,
    ShapeError,
)
from dualgraph.mesh.hexahedron import HEX_EDGES, HEX_FACES
from dualgraph.mesh.types import (
    BatchedGraph,
    DualGraph,
    ElementGraph,
    Incidence,
    NodeGraph,
    ScaledLaplacian,
)

LAMBDA_MAX_MODES = ("fixed", "power")
POWER_ITERATIONS = 200


def validate_connectivity(connectivity, n_nodes: Optional[int] = None) -> tuple[np.ndarray, int]:
    conn = np.asarray(connectivity)
    if conn.ndim != 2 or conn.shape[1] != 8:
        raise ShapeError(f"connectivity must be [E x 8], got {conn.shape}")
    if conn.shape[0] == 0:
        raise InvalidInputError("connectivity holds no elements")
    if not np.issubdtype(conn.dtype, np.integer):
        raise ShapeError(f"connectivity must be integer, got {conn.dtype}")
    conn = conn.astype(np.int64)

    if conn.min() < 0:
        raise ConnectivityRangeError("negative node index in connectivity")
    if n_nodes is None:
        n_nodes = int(conn.max()) + 1
    elif conn.max() >= n_nodes:
        raise ConnectivityRangeError(
            f"node index {conn.max()} out of range for {n_nodes} nodes"
        )

    sorted_rows = np.sort(conn, axis=1)
    repeated = np.any(sorted_rows[:, 1:] == sorted_rows[:, :-1], axis=1)
    if np.any(repeated):
        raise RepeatedNodeError(
            f"element {int(np.argmax(repeated))} repeats a corner node"
        )
    return conn, n_nodes


def _symmetric_edges(undirected: np.ndarray) -> np.ndarray:
    """Stores both directions, sorted by (row, col)."""
    directed = np.concatenate([undirected, undirected[:, ::-1]], axis=0)
    order = np.lexsort((directed[:, 1], directed[:, 0]))
    return np.ascontiguousarray(directed[order])


def build_node_graph(connectivity, n_nodes: Optional[int] = None) -> NodeGraph:
    conn, n_nodes = validate_connectivity(connectivity, n_nodes)

    pairs = np.sort(conn[:, HEX_EDGES].reshape(-1, 2), axis=1)
    undirected = np.unique(pairs, axis=0).reshape(-1, 2)
    edges = _symmetric_edges(undirected)
    degree = np.bincount(edges[:, 0], minlength=n_nodes).astype(np.int64)
    return NodeGraph(edges=edges, degree=degree, n_nodes=n_nodes)


def build_element_graph(connectivity) -> ElementGraph:
    conn, _ = validate_connectivity(connectivity)
    n_elems = conn.shape[0]

    # each face keyed by its sorted node quadruple
    faces = np.sort(conn[:, HEX_FACES], axis=2).reshape(-1, 4)
    owners = np.repeat(np.arange(n_elems), 6)
    _, inverse, counts = np.unique(
        faces, axis=0, return_inverse=True, return_counts=True
    )
    inverse = inverse.reshape(-1)
    if np.any(counts > 2):
        raise NonManifoldError(
            f"{int(np.sum(counts > 2))} faces are shared by more than two elements"
        )

    order = np.argsort(inverse, kind="stable")
    keys = inverse[order]
    shared = np.nonzero(keys[1:] == keys[:-1])[0]
    pairs = np.stack([owners[order[shared]], owners[order[shared + 1]]], axis=1)
    pairs = np.sort(pairs, axis=1)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]

    if pairs.shape[0]:
        undirected = np.unique(pairs, axis=0).reshape(-1, 2)
    else:
        undirected = np.zeros((0, 2), dtype=np.int64)
    edges = _symmetric_edges(undirected)
    degree = np.bincount(edges[:, 0], minlength=n_elems).astype(np.int64)
    return ElementGraph(edges=edges, degree=degree, n_elems=n_elems)


def build_incidence(connectivity, n_nodes: Optional[int] = None) -> Incidence:
    conn, n_nodes = validate_connectivity(connectivity, n_nodes)

    nodes = conn.ravel()
    elems = np.repeat(np.arange(conn.shape[0]), 8)
    order = np.lexsort((elems, nodes))
    counts = np.bincount(nodes, minlength=n_nodes)
    node_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return Incidence(
        connectivity=conn,
        node_ptr=node_ptr,
        node_elems=elems[order].astype(np.int64),
        n_nodes=n_nodes,
    )


def _graph_size(graph) -> int:
    return graph.n_nodes if isinstance(graph, NodeGraph) else graph.n_elems


def _csr_from_entries(rows, cols, values, size) -> sp.csr_matrix:
    """
    Builds a CSR matrix keeping explicit zeros, so the stored pattern is exactly
    the given (row, col) set.
    """
    order = np.lexsort((cols, rows))
    rows, cols, values = rows[order], cols[order], values[order]
    indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=size))])
    return sp.csr_matrix(
        (values.astype(np.float64), cols.astype(np.int64), indptr.astype(np.int64)),
        shape=(size, size),
    )


def _normalized_edge_weights(graph) -> np.ndarray:
    d = graph.degree.astype(np.float64)
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    return 1.0 / np.sqrt(d[i] * d[j])


def estimate_lambda_max(graph, iterations: int = POWER_ITERATIONS) -> float:
    """
    Power iteration on I - D^-1/2 A D^-1/2 from a fixed start vector.
    """
    size = _graph_size(graph)
    diag = np.arange(size)
    laplacian = _csr_from_entries(
        np.concatenate([graph.edges[:, 0], diag]),
        np.concatenate([graph.edges[:, 1], diag]),
        np.concatenate([-_normalized_edge_weights(graph), np.ones(size)]),
        size,
    )

    x = np.random.default_rng(0).standard_normal(size)
    x /= np.linalg.norm(x)
    estimate = 1.0
    for _ in range(iterations):
        y = laplacian @ x
        norm = np.linalg.norm(y)
        if norm == 0:
            break
        estimate = float(x @ y)
        x = y / norm
    return max(estimate, 1e-12)


def scaled_laplacian(graph, lambda_max_mode: str = "fixed") -> ScaledLaplacian:
    """
    L~ = 2L/lambda_max - I with L = I - D^-1/2 A D^-1/2. Isolated rows of L are
    identity rows. The stored pattern is adjacency plus the full diagonal.
    """
    if lambda_max_mode not in LAMBDA_MAX_MODES:
        raise InvalidInputError(
            f"lambda_max_mode must be one of {LAMBDA_MAX_MODES}, got '{lambda_max_mode}'"
        )
    size = _graph_size(graph)
    if size == 0:
        raise InvalidInputError("graph is empty")

    lambda_max = 2.0 if lambda_max_mode == "fixed" else estimate_lambda_max(graph)
    scale = 2.0 / lambda_max

    diag = np.arange(size)
    matrix = _csr_from_entries(
        np.concatenate([graph.edges[:, 0], diag]),
        np.concatenate([graph.edges[:, 1], diag]),
        np.concatenate(
            [-scale * _normalized_edge_weights(graph), np.full(size, scale - 1.0)]
        ),
        size,
    )
    return ScaledLaplacian(matrix=matrix, lambda_max=lambda_max)


def random_walk_laplacian(node_graph: NodeGraph) -> sp.csr_matrix:
    """
    I - D^-1 A: row i maps a field to u_i minus the mean over its neighbours.
    """
    if np.any(node_graph.degree == 0):
        raise IsolatedNodeError(
            f"{int(np.sum(node_graph.degree == 0))} nodes have no graph neighbours"
        )
    size = node_graph.n_nodes
    rows, cols = node_graph.edges[:, 0], node_graph.edges[:, 1]
    diag = np.arange(size)
    return _csr_from_entries(
        np.concatenate([rows, diag]),
        np.concatenate([cols, diag]),
        np.concatenate([-1.0 / node_graph.degree[rows], np.ones(size)]),
        size,
    )


def build_dual_graph(
    connectivity, n_nodes: Optional[int] = None, lambda_max_mode: str = "fixed"
) -> DualGraph:
    conn, n_nodes = validate_connectivity(connectivity, n_nodes)
    node_graph = build_node_graph(conn, n_nodes)
    element_graph = build_element_graph(conn)
    dual = DualGraph(
        node_graph=node_graph,
        element_graph=element_graph,
        incidence=build_incidence(conn, n_nodes),
        node_laplacian=scaled_laplacian(node_graph, lambda_max_mode),
        element_laplacian=scaled_laplacian(element_graph, lambda_max_mode),
        node_rw_laplacian=random_walk_laplacian(node_graph),
    )
    bt.logging.trace(
        f"Built dual graph: {n_nodes} nodes / {node_graph.n_undirected_edges} edges, "
        f"{element_graph.n_elems} elements / {element_graph.n_undirected_edges} faces"
    )
    return dual


def merge_batch(graphs: list[DualGraph]) -> BatchedGraph:
    """
    Merges cases into one block-diagonal graph. Node and element indices of case i
    are shifted by the node/element counts of cases 0..i-1.
    """
    if not graphs:
        raise InvalidInputError("cannot merge an empty list of graphs")

    node_offsets = np.concatenate(
        [[0], np.cumsum([g.n_nodes for g in graphs])]
    ).astype(np.int64)
    elem_offsets = np.concatenate(
        [[0], np.cumsum([g.n_elems for g in graphs])]
    ).astype(np.int64)
    n_nodes, n_elems = int(node_offsets[-1]), int(elem_offsets[-1])

    node_graph = NodeGraph(
        edges=np.concatenate(
            [g.node_graph.edges + off for g, off in zip(graphs, node_offsets)]
        ),
        degree=np.concatenate([g.node_graph.degree for g in graphs]),
        n_nodes=n_nodes,
    )
    element_graph = ElementGraph(
        edges=np.concatenate(
            [g.element_graph.edges + off for g, off in zip(graphs, elem_offsets)]
        ),
        degree=np.concatenate([g.element_graph.degree for g in graphs]),
        n_elems=n_elems,
    )
    incidence = Incidence(
        connectivity=np.concatenate(
            [g.incidence.connectivity + off for g, off in zip(graphs, node_offsets)]
        ),
        node_ptr=np.concatenate(
            [[0]]
            + [g.incidence.node_ptr[1:] + 8 * off for g, off in zip(graphs, elem_offsets)]
        ).astype(np.int64),
        node_elems=np.concatenate(
            [g.incidence.node_elems + off for g, off in zip(graphs, elem_offsets)]
        ),
        n_nodes=n_nodes,
    )

    def block(matrices):
        return sp.block_diag(matrices, format="csr")

    return BatchedGraph(
        node_graph=node_graph,
        element_graph=element_graph,
        incidence=incidence,
        node_laplacian=ScaledLaplacian(
            matrix=block([g.node_laplacian.matrix for g in graphs]),
            lambda_max=max(g.node_laplacian.lambda_max for g in graphs),
        ),
        element_laplacian=ScaledLaplacian(
            matrix=block([g.element_laplacian.matrix for g in graphs]),
            lambda_max=max(g.element_laplacian.lambda_max for g in graphs),
        ),
        node_rw_laplacian=block([g.node_rw_laplacian for g in graphs]),
        node_offsets=node_offsets,
        elem_offsets=elem_offsets,
    )


def extract_case(batch: BatchedGraph, index: int) -> DualGraph:
    """
    Recovers case `index` from a merged graph.
    """
    if not 0 <= index < batch.n_cases:
        raise InvalidInputError(f"case {index} not in batch of {batch.n_cases}")
    n0, n1 = int(batch.node_offsets[index]), int(batch.node_offsets[index + 1])
    e0, e1 = int(batch.elem_offsets[index]), int(batch.elem_offsets[index + 1])

    def edges_in(edges, lo, hi):
        mask = (edges[:, 0] >= lo) & (edges[:, 0] < hi)
        return edges[mask] - lo

    node_graph = NodeGraph(
        edges=edges_in(batch.node_graph.edges, n0, n1),
        degree=batch.node_graph.degree[n0:n1],
        n_nodes=n1 - n0,
    )
    element_graph = ElementGraph(
        edges=edges_in(batch.element_graph.edges, e0, e1),
        degree=batch.element_graph.degree[e0:e1],
        n_elems=e1 - e0,
    )
    connectivity = batch.incidence.connectivity[e0:e1] - n0
    return DualGraph(
        node_graph=node_graph,
        element_graph=element_graph,
        incidence=build_incidence(connectivity, n1 - n0),
        node_laplacian=ScaledLaplacian(
            matrix=batch.node_laplacian.matrix[n0:n1, n0:n1].tocsr(),
            lambda_max=batch.node_laplacian.lambda_max,
        ),
        element_laplacian=ScaledLaplacian(
            matrix=batch.element_laplacian.matrix[e0:e1, e0:e1].tocsr(),
            lambda_max=batch.element_laplacian.lambda_max,
        ),
        node_rw_laplacian=batch.node_rw_laplacian[n0:n1, n0:n1].tocsr(),
    )


def graph_stats(dual: DualGraph) -> dict:
    """
    Sizes and degree histograms for the `graph-stats` report.
    """

    def histogram(values) -> dict[str, int]:
        return {str(k): int(v) for k, v in sorted(Counter(values.tolist()).items())}

    return {
        "n_nodes": dual.n_nodes,
        "n_elems": dual.n_elems,
        "node_edges": dual.node_graph.n_undirected_edges,
        "element_edges": dual.element_graph.n_undirected_edges,
        "node_degree_histogram": histogram(dual.node_graph.degree),
        "element_degree_histogram": histogram(dual.element_graph.degree),
        "incidence_histogram": histogram(dual.incidence.node_counts),
        "node_lambda_max": dual.node_laplacian.lambda_max,
        "element_lambda_max": dual.element_laplacian.lambda_max,
    }

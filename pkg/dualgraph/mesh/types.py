from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp


def _adjacency(edges: np.ndarray, size: int) -> sp.csr_matrix:
    return sp.csr_matrix(
        (np.ones(edges.shape[0]), (edges[:, 0], edges[:, 1])), shape=(size, size)
    )


@dataclass(frozen=True)
class NodeGraph:
    """
    Undirected mesh-edge graph. `edges` stores both directions, sorted row-major.
    """

    edges: np.ndarray
    degree: np.ndarray
    n_nodes: int

    @property
    def n_undirected_edges(self) -> int:
        return int(self.edges.shape[0] // 2)

    def adjacency(self) -> sp.csr_matrix:
        return _adjacency(self.edges, self.n_nodes)

    def undirected(self) -> np.ndarray:
        return self.edges[self.edges[:, 0] < self.edges[:, 1]]


@dataclass(frozen=True)
class ElementGraph:
    """
    Face-adjacency graph over elements, same storage convention as NodeGraph.
    """

    edges: np.ndarray
    degree: np.ndarray
    n_elems: int

    @property
    def n_undirected_edges(self) -> int:
        return int(self.edges.shape[0] // 2)

    def adjacency(self) -> sp.csr_matrix:
        return _adjacency(self.edges, self.n_elems)

    def undirected(self) -> np.ndarray:
        return self.edges[self.edges[:, 0] < self.edges[:, 1]]


@dataclass(frozen=True)
class Incidence:
    """
    V(e) is `connectivity`; E(n) is stored CSR-style in (`node_ptr`, `node_elems`).
    """

    connectivity: np.ndarray
    node_ptr: np.ndarray
    node_elems: np.ndarray
    n_nodes: int

    @property
    def n_elems(self) -> int:
        return int(self.connectivity.shape[0])

    @property
    def node_counts(self) -> np.ndarray:
        return np.diff(self.node_ptr)

    def elements_of(self, node: int) -> np.ndarray:
        return self.node_elems[self.node_ptr[node] : self.node_ptr[node + 1]]

    @cached_property
    def node_to_element_matrix(self) -> sp.csr_matrix:
        """[E x N] operator with weight 1/8 on every corner node."""
        e = self.n_elems
        rows = np.repeat(np.arange(e), 8)
        return sp.csr_matrix(
            (np.full(8 * e, 1.0 / 8.0), (rows, self.connectivity.ravel())),
            shape=(e, self.n_nodes),
        )

    @cached_property
    def element_to_node_matrix(self) -> sp.csr_matrix:
        """[N x E] operator averaging over incident elements; orphan rows stay empty."""
        counts = self.node_counts
        rows = np.repeat(np.arange(self.n_nodes), counts)
        weights = 1.0 / counts[rows]
        return sp.csr_matrix(
            (weights, (rows, self.node_elems)), shape=(self.n_nodes, self.n_elems)
        )


@dataclass(frozen=True)
class ScaledLaplacian:
    matrix: sp.csr_matrix
    lambda_max: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True)
class DualGraph:
    node_graph: NodeGraph
    element_graph: ElementGraph
    incidence: Incidence
    node_laplacian: ScaledLaplacian
    element_laplacian: ScaledLaplacian
    # I - D^-1 A on the node graph, drives the smoothness regularizer
    node_rw_laplacian: sp.csr_matrix

    @property
    def n_nodes(self) -> int:
        return self.node_graph.n_nodes

    @property
    def n_elems(self) -> int:
        return self.element_graph.n_elems


@dataclass(frozen=True)
class BatchedGraph:
    """
    Block-diagonal merge of several DualGraphs. Offsets have n_cases + 1 entries.
    """

    node_graph: NodeGraph
    element_graph: ElementGraph
    incidence: Incidence
    node_laplacian: ScaledLaplacian
    element_laplacian: ScaledLaplacian
    node_rw_laplacian: sp.csr_matrix
    node_offsets: np.ndarray
    elem_offsets: np.ndarray
    lambda_max_mode: str = field(default="fixed")

    @property
    def n_cases(self) -> int:
        return int(self.node_offsets.shape[0] - 1)

    @property
    def n_nodes(self) -> int:
        return self.node_graph.n_nodes

    @property
    def n_elems(self) -> int:
        return self.element_graph.n_elems

    @property
    def node_counts(self) -> np.ndarray:
        return np.diff(self.node_offsets)

    @property
    def elem_counts(self) -> np.ndarray:
        return np.diff(self.elem_offsets)

    @cached_property
    def node_case(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_cases), self.node_counts)

    @cached_property
    def elem_case(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_cases), self.elem_counts)

from .hexahedron import HEX_EDGES, HEX_FACES, structured_hex_grid, nearest_node, centre_node
from .types import NodeGraph, ElementGraph, Incidence, ScaledLaplacian, DualGraph, BatchedGraph
from .graph import (
    validate_connectivity,
    build_node_graph,
    build_element_graph,
    build_incidence,
    scaled_laplacian,
    random_walk_laplacian,
    build_dual_graph,
    merge_batch,
    extract_case,
    graph_stats,
)

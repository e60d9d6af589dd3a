import numpy as np

# corner pairs of an 8-node hexahedron, bottom face 0-1-2-3, top face 4-5-6-7
HEX_EDGES = np.array(
    [
        (0, 1), (1, 2), (2, 3), (3, 0),
        (4, 5), (5, 6), (6, 7), (7, 4),
        (0, 4), (1, 5), (2, 6), (3, 7),
    ],
    dtype=np.int64,
)

HEX_FACES = np.array(
    [
        (0, 1, 2, 3),
        (4, 5, 6, 7),
        (0, 1, 5, 4),
        (1, 2, 6, 5),
        (2, 3, 7, 6),
        (3, 0, 4, 7),
    ],
    dtype=np.int64,
)


def grid_node_index(i, j, k, nx: int, ny: int):
    return i + (nx + 1) * (j + (ny + 1) * k)


def structured_hex_grid(
    nx: int,
    ny: int,
    nz: int,
    dx: float = 1.0,
    dy: float = 1.0,
    dz: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Builds a structured brick mesh with nx x ny x nz elements. x runs fastest in
    both node and element numbering. The corner convention puts the lower-y face
    first, so the second axis is the vertical one.

    Returns:
        coords [N x 3] float64, connectivity [E x 8] int64
    """
    if min(nx, ny, nz) < 1:
        raise ValueError(f"grid needs at least one element per axis, got {(nx, ny, nz)}")

    k, j, i = (a.ravel() for a in np.indices((nz + 1, ny + 1, nx + 1)))
    coords = np.stack([i * dx, j * dy, k * dz], axis=1).astype(np.float64)

    k, j, i = (a.ravel() for a in np.indices((nz, ny, nx)))
    corner_offsets = [
        (0, 0, 0),
        (1, 0, 0),
        (1, 0, 1),
        (0, 0, 1),
        (0, 1, 0),
        (1, 1, 0),
        (1, 1, 1),
        (0, 1, 1),
    ]
    connectivity = np.stack(
        [grid_node_index(i + di, j + dj, k + dk, nx, ny) for di, dj, dk in corner_offsets],
        axis=1,
    ).astype(np.int64)
    return coords, connectivity


def nearest_node(coords: np.ndarray, point) -> int:
    d = np.sum((coords - np.asarray(point, dtype=np.float64)) ** 2, axis=1)
    return int(np.argmin(d))


def centre_node(coords: np.ndarray) -> int:
    """Node closest to the centre of the mesh bounding box."""
    return nearest_node(coords, 0.5 * (coords.min(axis=0) + coords.max(axis=0)))

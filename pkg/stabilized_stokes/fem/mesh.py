"""
Structured triangular meshes of the rectangular channel (0, L) x (0, H).

Square cells split along the bottom-left -> top-right diagonal; boundary
edges carry their owning triangle, outward unit normal and side group.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict

import numpy as np

from stabilized_stokes.constants import ToleranceConstants
from stabilized_stokes.fem.quadrature import p1_gradients_batch

logger = logging.getLogger(__name__)


class BoundaryGroup(str, Enum):
    """Side of the channel a boundary edge lies on."""
    LEFT = "left"
    RIGHT = "right"
    BOTTOM = "bottom"
    TOP = "top"


@dataclass(frozen=True)
class BoundaryEdges:
    """Boundary edges as parallel arrays."""
    nodes: np.ndarray      # (m, 2) node indices, counter-clockwise w.r.t. the owning triangle
    triangles: np.ndarray  # (m,) owning triangle
    normals: np.ndarray    # (m, 2) outward unit normals
    groups: Dict[BoundaryGroup, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.triangles)


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Immutable triangulation with connectivity, boundary metadata and size statistics.

    Attributes:
        nodes: (N, 2) coordinates
        triangles: (M, 3) node indices, counter-clockwise
        boundary_edges: edges on the channel walls
        level: refinement index
        length, height: channel dimensions
    """
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: BoundaryEdges
    level: int
    length: float
    height: float

    def __post_init__(self):
        for arr in (self.nodes, self.triangles, self.boundary_edges.nodes,
                    self.boundary_edges.triangles, self.boundary_edges.normals):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def element_coords(self) -> np.ndarray:
        """(M, 3, 2) vertex coordinates per triangle."""
        return self.nodes[self.triangles]

    @cached_property
    def gradients_and_areas(self) -> tuple[np.ndarray, np.ndarray]:
        return p1_gradients_batch(self.element_coords)

    @property
    def areas(self) -> np.ndarray:
        return self.gradients_and_areas[1]

    @property
    def gradients(self) -> np.ndarray:
        return self.gradients_and_areas[0]

    @cached_property
    def element_sizes(self) -> np.ndarray:
        """h_e per element: longest edge."""
        c = self.element_coords
        edges = np.linalg.norm(c - np.roll(c, 1, axis=1), axis=2)
        return edges.max(axis=1)

    @property
    def h(self) -> float:
        return float(self.element_sizes.max())

    @property
    def Q(self) -> float:
        """Quasi-uniformity ratio h / min(h_e)."""
        return float(self.h / self.element_sizes.min())

    @cached_property
    def edges(self) -> np.ndarray:
        """(E, 2) unique undirected edges, sorted node pairs."""
        t = self.triangles
        all_edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(all_edges, axis=1), axis=0)

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_edges.nodes)

    @cached_property
    def nodal_weights(self) -> np.ndarray:
        """Integral of each P1 basis function over the domain."""
        w = np.zeros(self.n_nodes)
        np.add.at(w, self.triangles, np.repeat(self.areas[:, None] / 3.0, 3, axis=1))
        return w

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())


def element_size(triangle: np.ndarray) -> float:
    """
    Size h_e of one triangle: its longest edge.

    Raises:
        ValueError: degenerate (zero-area) triangle
    """
    coords = np.asarray(triangle, dtype=float)
    p1_gradients_batch(coords[None])
    return float(np.linalg.norm(coords - np.roll(coords, 1, axis=0), axis=1).max())


def generate_structured(length: float, height: float, level: int) -> Mesh:
    """
    Structured mesh of (0, length) x (0, height).

    n_y = 2 * 2**level rows and n_x = (length / height) * n_y columns of
    square cells, each split into two triangles along its rising diagonal.

    Args:
        length: channel length L > 0
        height: channel height H > 0
        level: refinement index >= 0

    Returns:
        Mesh

    Raises:
        ValueError: non-positive dimensions, negative level, or L/H giving a
            non-integer column count
    """
    if length <= 0 or height <= 0:
        raise ValueError(f"Channel dimensions must be positive, got L={length}, H={height}")
    if level < 0:
        raise ValueError(f"Refinement level must be non-negative, got {level}")

    n_y = 2 * 2**level
    n_x_float = length / height * n_y
    n_x = round(n_x_float)
    if n_x < 1 or abs(n_x_float - n_x) > ToleranceConstants.ASPECT_RATIO_TOL * max(1, n_x):
        raise ValueError(
            f"Aspect ratio L/H = {length / height} does not give an integer number of square "
            f"columns for n_y = {n_y}"
        )

    xs = np.linspace(0.0, length, n_x + 1)
    ys = np.linspace(0.0, height, n_y + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def node_id(i, j):
        return j * (n_x + 1) + i

    I, J = np.meshgrid(np.arange(n_x), np.arange(n_y))
    I, J = I.ravel(), J.ravel()
    n0, n1, n2, n3 = node_id(I, J), node_id(I + 1, J), node_id(I + 1, J + 1), node_id(I, J + 1)

    # Cell c = j * n_x + i owns triangles 2c (lower) and 2c + 1 (upper)
    triangles = np.empty((2 * n_x * n_y, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([n0, n1, n2])
    triangles[1::2] = np.column_stack([n0, n2, n3])

    i = np.arange(n_x)
    j = np.arange(n_y)
    bottom = (np.column_stack([node_id(i, 0), node_id(i + 1, 0)]), 2 * i, (0.0, -1.0))
    top = (np.column_stack([node_id(i + 1, n_y), node_id(i, n_y)]), 2 * ((n_y - 1) * n_x + i) + 1, (0.0, 1.0))
    left = (np.column_stack([node_id(0, j + 1), node_id(0, j)]), 2 * (j * n_x) + 1, (-1.0, 0.0))
    right = (np.column_stack([node_id(n_x, j), node_id(n_x, j + 1)]), 2 * (j * n_x + n_x - 1), (1.0, 0.0))

    edge_nodes, edge_tris, edge_normals, groups = [], [], [], {}
    offset = 0
    for group, (pairs, tris, normal) in zip(
        (BoundaryGroup.BOTTOM, BoundaryGroup.RIGHT, BoundaryGroup.TOP, BoundaryGroup.LEFT),
        (bottom, right, top, left),
    ):
        edge_nodes.append(pairs)
        edge_tris.append(tris)
        edge_normals.append(np.tile(normal, (len(tris), 1)))
        groups[group] = np.arange(offset, offset + len(tris))
        offset += len(tris)

    boundary = BoundaryEdges(
        nodes=np.concatenate(edge_nodes).astype(np.int64),
        triangles=np.concatenate(edge_tris).astype(np.int64),
        normals=np.concatenate(edge_normals),
        groups=groups,
    )
    mesh = Mesh(nodes=nodes, triangles=triangles, boundary_edges=boundary,
                level=level, length=float(length), height=float(height))
    logger.debug(f"Generated level-{level} mesh: {mesh.n_nodes} nodes, {mesh.n_triangles} triangles")
    return mesh

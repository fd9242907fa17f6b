"""
Legacy ASCII VTK export of a solved field on the triangulation.
"""

import logging
from pathlib import Path

import numpy as np

from stabilized_stokes.fem.assembly import SolutionField
from stabilized_stokes.fem.mesh import Mesh

logger = logging.getLogger(__name__)

VTK_TRIANGLE = 5


def write_vtk(path: Path, mesh: Mesh, solution: SolutionField, title: str = "stabilized stokes solution") -> Path:
    """
    Write nodal velocity and pressure as an unstructured grid.

    Args:
        path: destination file
        mesh: triangulation the solution lives on
        solution: nodal fields
        title: header line (no newlines)

    Returns:
        The written path
    """
    if len(solution.pressure) != mesh.n_nodes:
        raise ValueError(f"Solution has {len(solution.pressure)} nodes, mesh has {mesh.n_nodes}")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n, m = mesh.n_nodes, mesh.n_triangles
    points = np.column_stack([mesh.nodes, np.zeros(n)])
    cells = np.column_stack([np.full(m, 3), mesh.triangles])
    velocity = np.column_stack([solution.velocity, np.zeros(n)])

    with open(path, "w", encoding="utf-8") as f:
        f.write("# vtk DataFile Version 2.0\n")
        f.write(f"{title.splitlines()[0] if title else 'solution'}\n")
        f.write("ASCII\n")
        f.write("DATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {n} double\n")
        np.savetxt(f, points, fmt="%.16e")
        f.write(f"CELLS {m} {4 * m}\n")
        np.savetxt(f, cells, fmt="%d")
        f.write(f"CELL_TYPES {m}\n")
        np.savetxt(f, np.full(m, VTK_TRIANGLE), fmt="%d")
        f.write(f"POINT_DATA {n}\n")
        f.write("VECTORS velocity double\n")
        np.savetxt(f, velocity, fmt="%.16e")
        f.write("SCALARS pressure double 1\n")
        f.write("LOOKUP_TABLE default\n")
        np.savetxt(f, solution.pressure, fmt="%.16e")

    logger.debug(f"Wrote VTK file {path}")
    return path

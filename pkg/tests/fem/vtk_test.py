import numpy as np
import pytest

from stabilized_stokes.fem.assembly import SolutionField
from stabilized_stokes.fem.vtk import write_vtk


def test_vtk_layout(tmp_path, unit_triangle_mesh):
    solution = SolutionField(
        velocity=np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]),
        pressure=np.array([0.5, -0.25, 0.0]),
    )
    path = write_vtk(tmp_path / "out" / "solution.vtk", unit_triangle_mesh, solution, title="unit")
    lines = path.read_text(encoding="utf-8").splitlines()

    assert lines[:5] == [
        "# vtk DataFile Version 2.0",
        "unit",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        "POINTS 3 double",
    ]
    assert lines[lines.index("CELLS 1 4") + 1] == "3 0 1 2"
    assert lines[lines.index("CELL_TYPES 1") + 1] == "5"
    assert "POINT_DATA 3" in lines

    start = lines.index("VECTORS velocity double") + 1
    vectors = np.array([[float(v) for v in line.split()] for line in lines[start:start + 3]])
    np.testing.assert_array_equal(vectors, [[1.0, 2.0, 0.0], [3.0, 4.0, 0.0], [5.0, 6.0, 0.0]])

    start = lines.index("LOOKUP_TABLE default") + 1
    np.testing.assert_array_equal([float(v) for v in lines[start:start + 3]], solution.pressure)


def test_vtk_multiline_title_truncated(tmp_path, unit_triangle_mesh):
    solution = SolutionField(velocity=np.zeros((3, 2)), pressure=np.zeros(3))
    path = write_vtk(tmp_path / "solution.vtk", unit_triangle_mesh, solution, title="first\nsecond")
    assert path.read_text(encoding="utf-8").splitlines()[1] == "first"


def test_vtk_rejects_mismatched_solution(tmp_path, channel_mesh):
    solution = SolutionField(velocity=np.zeros((3, 2)), pressure=np.zeros(3))
    with pytest.raises(ValueError, match="Solution has 3 nodes"):
        write_vtk(tmp_path / "solution.vtk", channel_mesh, solution)

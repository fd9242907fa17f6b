import os
from unittest import mock

import numpy as np
import pytest

from stabilized_stokes.fem.mesh import BoundaryEdges, BoundaryGroup, Mesh, generate_structured
from stabilized_stokes.problems.benchmarks import exp1_case, exp2_case


@pytest.fixture(autouse=True)
def clean_stokes_environment():
    env = {key: value for key, value in os.environ.items() if not key.startswith("STOKES_")}
    with mock.patch.dict(os.environ, env, clear=True):
        yield


def make_unit_triangle_mesh(edges=(0, 1, 2)) -> Mesh:
    """Mesh of the single triangle (0,0), (1,0), (0,1) keeping the selected boundary edges."""
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    all_pairs = np.array([[0, 1], [1, 2], [2, 0]])
    all_normals = np.array([[0.0, -1.0], [1.0, 1.0], [-1.0, 0.0]])
    all_normals /= np.linalg.norm(all_normals, axis=1)[:, None]
    selected = list(edges)
    boundary = BoundaryEdges(
        nodes=all_pairs[selected].copy(),
        triangles=np.zeros(len(selected), dtype=np.int64),
        normals=all_normals[selected].copy(),
        groups={BoundaryGroup.BOTTOM: np.arange(len(selected))},
    )
    return Mesh(
        nodes=nodes,
        triangles=np.array([[0, 1, 2]]),
        boundary_edges=boundary,
        level=0,
        length=1.0,
        height=1.0,
    )


@pytest.fixture
def unit_triangle_mesh():
    return make_unit_triangle_mesh()


@pytest.fixture
def triangle_mesh_factory():
    return make_unit_triangle_mesh


@pytest.fixture
def channel_mesh():
    """Level-2 mesh of the (0, 5) x (0, 1) channel."""
    return generate_structured(5.0, 1.0, 2)


@pytest.fixture
def exp1():
    return exp1_case()


@pytest.fixture
def exp2():
    return exp2_case()


@pytest.fixture(params=["exp1", "exp2"])
def benchmark(request):
    return exp1_case() if request.param == "exp1" else exp2_case()

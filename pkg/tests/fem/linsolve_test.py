import logging
from dataclasses import replace
from unittest import mock

import numpy as np
import pytest
from scipy.sparse import csr_matrix, diags, identity

from stabilized_stokes.fem.assembly import build_system
from stabilized_stokes.fem.linsolve import SolverError, solve, solve_linear
from stabilized_stokes.fem.mesh import generate_structured
from stabilized_stokes.problems.benchmarks import uniform_case
from stabilized_stokes.problems.stabilization import compute_delta
from stabilized_stokes.problems.viscosity import LinearViscosity, QuadraticViscosity
from stabilized_stokes.schemas import Method, MomentumForm, StabilizationConfig


def _bvs_system(case, level):
    mesh = generate_structured(case.length, case.height, level)
    config = StabilizationConfig(method=Method.BVS)
    return mesh, build_system(mesh, case.data, config, compute_delta(config, mesh.h, case.data))


def test_identity_system():
    b = np.arange(5, dtype=float)
    x, report = solve_linear(identity(5, format="csr"), b)
    np.testing.assert_array_equal(x, b)
    assert report.method == "splu"
    assert report.relative_residual == 0.0
    assert report.n_unknowns == 5


def test_singular_matrix_raises():
    matrix = csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(SolverError, match="Sparse factorisation failed"):
        solve_linear(matrix, np.ones(2))


def test_system_without_multiplier_rejected(exp1):
    mesh = generate_structured(5.0, 1.0, 0)
    system = build_system(mesh, exp1.data, StabilizationConfig(), 0.01)
    n = 3 * mesh.n_nodes
    truncated = replace(
        system,
        matrix=system.matrix[:n, :n].tocsr(),
        rhs=system.rhs[:n],
        dirichlet_mask=system.dirichlet_mask[:n],
        dirichlet_values=system.dirichlet_values[:n],
    )
    with pytest.raises(SolverError, match="mean-pressure"):
        solve(truncated)


def test_repeated_solves_are_bitwise_identical(exp1):
    _, system = _bvs_system(exp1, 1)
    first, _ = solve(system)
    second, _ = solve(system)
    np.testing.assert_array_equal(first.velocity, second.velocity)
    np.testing.assert_array_equal(first.pressure, second.pressure)


def test_solution_invariant_under_permutation(exp1):
    _, system = _bvs_system(exp1, 1)
    x, _ = solve_linear(system.matrix, system.rhs)

    perm = np.random.default_rng(7).permutation(system.n_unknowns)
    permuted = system.matrix[perm][:, perm].tocsr()
    x_perm, _ = solve_linear(permuted, system.rhs[perm])
    np.testing.assert_allclose(x_perm, x[perm], rtol=1e-9, atol=1e-10)


def test_gmres_fallback_on_memory_error(caplog):
    n = 50
    laplacian = diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")
    b = np.ones(n)
    with mock.patch("stabilized_stokes.fem.linsolve.splu", side_effect=MemoryError):
        with caplog.at_level(logging.WARNING, logger="stabilized_stokes.fem.linsolve"):
            x, report = solve_linear(laplacian, b)
    assert report.method == "gmres"
    assert report.relative_residual <= 1e-10
    np.testing.assert_allclose(laplacian @ x, b, atol=1e-8)
    assert "falling back to GMRES" in caplog.text


def test_gmres_failure_raises():
    n = 50
    laplacian = diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")
    with mock.patch("stabilized_stokes.fem.linsolve.splu", side_effect=MemoryError), \
            mock.patch("stabilized_stokes.fem.linsolve.gmres", return_value=(np.zeros(n), 5)):
        with pytest.raises(SolverError, match="GMRES did not converge") as exc_info:
            solve_linear(laplacian, np.ones(n))
    assert exc_info.value.relative_residual == pytest.approx(1.0)


@pytest.mark.parametrize("method", [Method.PSPG, Method.BVS])
@pytest.mark.parametrize("form", [MomentumForm.SD, MomentumForm.GL])
@pytest.mark.parametrize("viscosity", [
    LinearViscosity(a=1.0, b=1.0, height=1.0),
    QuadraticViscosity(b=1.0, height=1.0),
], ids=["linear", "quadratic"])
def test_uniform_flow_reproduced_exactly(method, form, viscosity):
    case = uniform_case(viscosity, c=0.75, sigma=1.5)
    mesh = generate_structured(case.length, case.height, 2)
    config = StabilizationConfig(method=method, form=form)
    system = build_system(mesh, case.data, config, compute_delta(config, mesh.h, case.data))
    solution, report = solve(system)

    np.testing.assert_allclose(solution.velocity[:, 0], 0.75, atol=1e-9)
    np.testing.assert_allclose(solution.velocity[:, 1], 0.0, atol=1e-9)
    np.testing.assert_allclose(solution.pressure, 0.0, atol=1e-9)
    assert abs(mesh.nodal_weights @ solution.pressure) < 1e-10
    assert report.relative_residual <= 1e-10


def test_exp1_level_three_meets_residual_tolerance(exp1):
    _, system = _bvs_system(exp1, 3)
    _, report = solve(system)
    assert report.relative_residual <= 1e-10
    assert report.nnz == system.matrix.nnz


# ============================================================================
# Scaling
# ============================================================================

@pytest.mark.parametrize("method", [Method.PSPG, Method.BVS])
def test_factor_fill_stays_bounded(exp2, method):
    mesh = generate_structured(exp2.length, exp2.height, 4)
    config = StabilizationConfig(method=method)
    system = build_system(mesh, exp2.data, config, compute_delta(config, mesh.h, exp2.data))
    _, report = solve(system)
    assert report.method == "splu"
    assert 0 < report.factor_nnz <= 20 * report.nnz


def test_large_systems_skip_factorisation(caplog):
    n = 50
    laplacian = diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")
    with mock.patch("stabilized_stokes.fem.linsolve.splu", side_effect=AssertionError("splu called")):
        with caplog.at_level(logging.INFO, logger="stabilized_stokes.fem.linsolve"):
            x, report = solve_linear(laplacian, np.ones(n), max_direct_unknowns=n - 1)
    assert report.method == "gmres"
    assert report.factor_nnz == 0
    np.testing.assert_allclose(laplacian @ x, np.ones(n), atol=1e-8)
    assert "exceed the direct-solver limit" in caplog.text


@pytest.mark.slow
def test_level_six_direct_solve(exp2):
    mesh, system = _bvs_system(exp2, 6)
    solution, report = solve(system)
    assert report.method == "splu"
    assert report.n_unknowns == 3 * mesh.n_nodes + 1
    assert report.relative_residual <= 1e-10
    assert abs(mesh.nodal_weights @ solution.pressure) < 1e-10

from dataclasses import replace
from unittest import mock

import numpy as np
import pytest

from stabilized_stokes.fem.assembly import (
    SolutionField,
    apply_dirichlet,
    apply_zero_mean_pressure,
    assemble_bvs,
    assemble_contributions,
    assemble_galerkin_gl,
    assemble_galerkin_sd,
    assemble_pspg,
    assemble_system,
    build_system,
    element_data,
)
from stabilized_stokes.fem.linsolve import solve
from stabilized_stokes.fem.mesh import generate_structured
from stabilized_stokes.problems.benchmarks import ProblemData
from stabilized_stokes.problems.stabilization import compute_delta
from stabilized_stokes.problems.viscosity import ConstantViscosity, LinearViscosity
from stabilized_stokes.schemas import DeltaFormula, Method, MomentumForm, StabilizationConfig


def zero_vector(x, y):
    return np.zeros(np.broadcast(x, y).shape + (2,))


def problem(viscosity=None, sigma=0.0, force=zero_vector, dirichlet=zero_vector):
    return ProblemData(
        sigma=sigma,
        viscosity=viscosity or ConstantViscosity(1.0),
        force=force,
        dirichlet=dirichlet,
    )


def blocks(matrix, n_nodes):
    """Split a dense 3N matrix into velocity/pressure blocks."""
    dense = matrix.toarray()
    v, p = slice(0, 2 * n_nodes), slice(2 * n_nodes, 3 * n_nodes)
    return {"vv": dense[v, v], "vp": dense[v, p], "pv": dense[p, v], "pp": dense[p, p]}


# ============================================================================
# Galerkin blocks
# ============================================================================

def test_sd_viscous_block_symmetric_with_translation_kernel(unit_triangle_mesh):
    K = blocks(assemble_galerkin_sd(unit_triangle_mesh, problem()).to_csr(), 3)["vv"]
    np.testing.assert_allclose(K, K.T, atol=1e-13)
    assert np.linalg.eigvalsh(K).min() > -1e-12
    np.testing.assert_allclose(K @ np.tile([1.0, 0.0], 3), 0.0, atol=1e-14)
    np.testing.assert_allclose(K @ np.tile([0.0, 1.0], 3), 0.0, atol=1e-14)


def test_sd_pure_shear_energy(unit_triangle_mesh):
    K = blocks(assemble_galerkin_sd(unit_triangle_mesh, problem(ConstantViscosity(1.5))).to_csr(), 3)["vv"]
    # u = (y, x) at (0,0), (1,0), (0,1)
    u = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 0.0])
    assert u @ K @ u == pytest.approx(2.0 * 1.5)


def test_mass_block_row_sums(unit_triangle_mesh):
    with_mass = assemble_galerkin_sd(unit_triangle_mesh, problem(sigma=2.0)).to_csr()
    without = assemble_galerkin_sd(unit_triangle_mesh, problem(sigma=0.0)).to_csr()
    mass = blocks(with_mass - without, 3)["vv"]
    # x-component rows against x-component columns
    np.testing.assert_allclose(mass[0::2, 0::2].sum(axis=1), 2.0 * 0.5 / 3.0)
    np.testing.assert_allclose(mass[0::2, 1::2], 0.0)


def test_gl_transpose_term_vanishes_for_constant_viscosity(unit_triangle_mesh):
    K = blocks(assemble_galerkin_gl(unit_triangle_mesh, problem()).to_csr(), 3)["vv"]
    np.testing.assert_allclose(K, K.T, atol=1e-14)


def test_gl_block_nonsymmetric_for_variable_viscosity(channel_mesh):
    data = problem(LinearViscosity(a=1.0, b=1.0, height=1.0))
    gl = blocks(assemble_galerkin_gl(channel_mesh, data).to_csr(), channel_mesh.n_nodes)["vv"]
    sd = blocks(assemble_galerkin_sd(channel_mesh, data).to_csr(), channel_mesh.n_nodes)["vv"]
    assert np.abs(gl - gl.T).max() > 1e-6
    assert np.abs(sd - sd.T).max() < 1e-13


def test_gl_constant_velocity_in_kernel(channel_mesh):
    data = problem(LinearViscosity(a=1.0, b=1.0, height=1.0))
    K = blocks(assemble_galerkin_gl(channel_mesh, data).to_csr(), channel_mesh.n_nodes)["vv"]
    np.testing.assert_allclose(K @ np.tile([1.0, 0.0], channel_mesh.n_nodes), 0.0, atol=1e-13)


def test_divergence_block_reproduces_boundary_flux(channel_mesh):
    B = blocks(assemble_galerkin_sd(channel_mesh, problem()).to_csr(), channel_mesh.n_nodes)["pv"]
    constant = np.tile([1.0, 0.0], channel_mesh.n_nodes)
    np.testing.assert_allclose(B @ constant, 0.0, atol=1e-14)
    # u = (x, 0): integral of div u equals the outflow flux L * H
    stretch = np.column_stack([channel_mesh.nodes[:, 0], np.zeros(channel_mesh.n_nodes)]).ravel()
    assert (B @ stretch).sum() == pytest.approx(5.0)


def test_galerkin_load_vector(unit_triangle_mesh):
    def force(x, y):
        return np.stack([np.ones_like(x), 2.0 * np.ones_like(x)], axis=-1)

    rhs = assemble_galerkin_sd(unit_triangle_mesh, problem(force=force)).rhs
    np.testing.assert_allclose(rhs[:6], np.tile([1.0, 2.0], 3) * 0.5 / 3.0)
    np.testing.assert_allclose(rhs[6:], 0.0)


# ============================================================================
# Stabilisation blocks
# ============================================================================

def test_pspg_reduces_to_pressure_laplacian(unit_triangle_mesh):
    delta = 0.3
    b = blocks(assemble_pspg(unit_triangle_mesh, problem(), delta).to_csr(), 3)
    stiffness = 0.5 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    np.testing.assert_allclose(b["pp"], delta * stiffness)
    np.testing.assert_allclose(b["pv"], 0.0)
    np.testing.assert_allclose(b["vv"], 0.0)


def test_pspg_viscosity_gradient_term(unit_triangle_mesh):
    delta = 0.2
    data = problem(LinearViscosity(a=1.0, b=1.0, height=1.0))
    pv = blocks(assemble_pspg(unit_triangle_mesh, data, delta).to_csr(), 3)["pv"]
    # u = (y, 0): 2 sym(grad u) grad nu = (1, 0), so row a is -delta * d_x phi_a * area
    u = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    np.testing.assert_allclose(pv @ u, [0.5 * delta, -0.5 * delta, 0.0], atol=1e-14)


def test_pspg_viscous_residual_switch(unit_triangle_mesh):
    data = problem(LinearViscosity(a=1.0, b=1.0, height=1.0))
    pv = blocks(assemble_pspg(unit_triangle_mesh, data, 0.2, include_viscous_residual=False).to_csr(), 3)["pv"]
    np.testing.assert_allclose(pv, 0.0)


def test_pspg_reaction_coupling(unit_triangle_mesh):
    delta, sigma = 0.1, 4.0
    pv = blocks(assemble_pspg(unit_triangle_mesh, problem(sigma=sigma), delta).to_csr(), 3)["pv"]
    # u = (1, 0): delta * sigma * (grad q, u) = delta * sigma * area * d_x phi_a
    np.testing.assert_allclose(pv @ np.tile([1.0, 0.0], 3), delta * sigma * 0.5 * np.array([-1.0, 1.0, 0.0]))


def test_bvs_constant_test_function_sees_nothing(channel_mesh):
    data = problem(LinearViscosity(a=1.0, b=1.0, height=1.0))
    matrix = assemble_bvs(channel_mesh, data, 0.5).to_csr()
    p_rows = blocks(matrix, channel_mesh.n_nodes)
    np.testing.assert_allclose(np.ones(channel_mesh.n_nodes) @ p_rows["pv"], 0.0, atol=1e-12)
    np.testing.assert_allclose(np.ones(channel_mesh.n_nodes) @ p_rows["pp"], 0.0, atol=1e-12)


def test_bvs_boundary_term_vanishes_for_curl_free_velocity(channel_mesh):
    pv = blocks(assemble_bvs(channel_mesh, problem(ConstantViscosity(2.0)), 0.5).to_csr(), channel_mesh.n_nodes)["pv"]
    gradient_field = channel_mesh.nodes.ravel()  # u = grad((x^2 + y^2) / 2) = (x, y)
    np.testing.assert_allclose(pv @ gradient_field, 0.0, atol=1e-13)


def test_bvs_single_edge_vorticity_term(triangle_mesh_factory):
    mesh = triangle_mesh_factory(edges=(0,))  # bottom edge only, n = (0, -1)
    delta = 0.25
    pv = blocks(assemble_bvs(mesh, problem(ConstantViscosity(2.0)), delta).to_csr(), 3)["pv"]
    q = np.array([0.0, 1.0, 0.0])                          # q = x, grad q = (1, 0)
    u = np.array([0.0, 0.0, 0.0, 3.0, 0.0, 0.0])           # u = (0, 3x), curl u = 3
    assert q @ pv @ u == pytest.approx(-6.0 * delta)


def test_bvs_reaction_moves_to_boundary_forcing(channel_mesh):
    sigma, delta = 2.0, 0.1

    def inflow(x, y):
        return np.stack([np.ones_like(x), np.zeros_like(x)], axis=-1)

    data = problem(sigma=sigma, dirichlet=inflow)
    dropped = assemble_bvs(channel_mesh, data, delta, reaction_in_residual=False)
    kept = assemble_bvs(channel_mesh, data, delta, reaction_in_residual=True)

    # net flux of g = (1, 0) through the boundary is zero
    assert dropped.rhs.sum() == pytest.approx(0.0, abs=1e-12)
    left = np.isclose(channel_mesh.nodes[:, 0], 0.0)
    p_rhs = dropped.rhs[2 * channel_mesh.n_nodes:]
    # inflow side: -delta * sigma * (q, g . n) with g . n = -1 > 0
    assert np.all(p_rhs[left] > 0)

    # lifting (grad q, sigma u) by parts gives the same functional for u = g
    u = np.tile([1.0, 0.0], channel_mesh.n_nodes)
    pv_kept = blocks(kept.to_csr(), channel_mesh.n_nodes)["pv"]
    pv_dropped = blocks(dropped.to_csr(), channel_mesh.n_nodes)["pv"]
    np.testing.assert_allclose((pv_kept - pv_dropped) @ u, -p_rhs, atol=1e-12)


def test_pspg_and_bvs_share_interior_blocks():
    mesh = generate_structured(2.0, 1.0, 0)
    data = problem(LinearViscosity(a=1.0, b=1.0, height=1.0))
    n = mesh.n_nodes
    pspg = blocks(assemble_pspg(mesh, data, 0.1, reaction_in_residual=False).to_csr(), n)
    bvs = blocks(assemble_bvs(mesh, data, 0.1, reaction_in_residual=True).to_csr(), n)
    np.testing.assert_allclose(pspg["pp"], bvs["pp"], atol=1e-14)
    np.testing.assert_allclose(pspg["vv"], 0.0)
    np.testing.assert_allclose(bvs["vv"], 0.0)
    assert np.abs(pspg["pv"] - bvs["pv"]).max() > 1e-6


@pytest.mark.parametrize("method", [Method.PSPG, Method.BVS])
def test_element_data_computed_once_per_system(exp2, channel_mesh, method):
    config = StabilizationConfig(method=method, form=MomentumForm.GL)
    with mock.patch(
        "stabilized_stokes.fem.assembly.element_data", wraps=element_data
    ) as computed:
        contrib = assemble_contributions(channel_mesh, exp2.data, config, 0.05)
    assert computed.call_count == 1

    separate = assemble_galerkin_gl(channel_mesh, exp2.data)
    if method == Method.PSPG:
        separate = separate.merge(assemble_pspg(channel_mesh, exp2.data, 0.05))
    else:
        separate = separate.merge(assemble_bvs(channel_mesh, exp2.data, 0.05))
    np.testing.assert_allclose(contrib.to_csr().toarray(), separate.to_csr().toarray(), atol=1e-13)
    np.testing.assert_allclose(contrib.rhs, separate.rhs, atol=1e-13)


def test_stabilisation_rejects_non_positive_delta(unit_triangle_mesh):
    with pytest.raises(ValueError, match="delta must be positive"):
        assemble_pspg(unit_triangle_mesh, problem(), 0.0)
    with pytest.raises(ValueError, match="delta must be positive"):
        assemble_bvs(unit_triangle_mesh, problem(), -1.0)


# ============================================================================
# Boundary conditions and the mean constraint
# ============================================================================

@pytest.fixture
def raw_exp1_system(exp1):
    mesh = generate_structured(5.0, 1.0, 0)
    config = StabilizationConfig(method=Method.BVS)
    delta = compute_delta(config, mesh.h, exp1.data)
    return mesh, assemble_system(mesh, exp1.data, config, delta)


def test_dirichlet_rows_become_identity(raw_exp1_system, exp1):
    mesh, system = raw_exp1_system
    constrained = apply_dirichlet(system, mesh, exp1.data.dirichlet)
    dofs = np.flatnonzero(constrained.dirichlet_mask)
    assert len(dofs) == 2 * len(mesh.boundary_nodes)
    dense = constrained.matrix.toarray()
    np.testing.assert_array_equal(dense[dofs][:, dofs], np.eye(len(dofs)))
    assert np.count_nonzero(dense[dofs]) == len(dofs)
    assert np.count_nonzero(dense[:, dofs]) == len(dofs)
    np.testing.assert_array_equal(constrained.rhs[dofs], constrained.dirichlet_values[dofs])


def test_exp1_dirichlet_values(raw_exp1_system, exp1):
    mesh, system = raw_exp1_system
    constrained = apply_dirichlet(system, mesh, exp1.data.dirichlet)
    values = constrained.dirichlet_values[: 2 * mesh.n_nodes].reshape(-1, 2)
    top = np.isclose(mesh.nodes[:, 1], 1.0)
    np.testing.assert_allclose(values[top], 0.0, atol=1e-15)
    origin = np.flatnonzero(np.all(np.isclose(mesh.nodes, 0.0), axis=1))[0]
    assert values[origin, 0] == pytest.approx(0.4 * (1.0 + np.log(0.5)), rel=1e-12)


def test_homogeneous_dirichlet_keeps_rhs(unit_triangle_mesh):
    config = StabilizationConfig(method=Method.PSPG)
    system = assemble_system(unit_triangle_mesh, problem(), config, 0.1)
    constrained = apply_dirichlet(system, unit_triangle_mesh, zero_vector)
    np.testing.assert_array_equal(constrained.rhs, system.rhs)


def test_missing_dirichlet_data_rejected(raw_exp1_system):
    mesh, system = raw_exp1_system

    def partial(x, y):
        values = zero_vector(x, y)
        values[x > 4.0] = np.nan
        return values

    with pytest.raises(ValueError, match="Missing Dirichlet data"):
        apply_dirichlet(system, mesh, partial)
    with pytest.raises(ValueError, match="Dirichlet data is required"):
        apply_dirichlet(system, mesh, None)


def test_zero_mean_constraint_borders_system(raw_exp1_system):
    mesh, system = raw_exp1_system
    bordered = apply_zero_mean_pressure(system, mesh)
    n = 3 * mesh.n_nodes
    assert bordered.matrix.shape == (n + 1, n + 1)
    row = bordered.matrix.toarray()[n]
    assert row.sum() == pytest.approx(5.0)
    np.testing.assert_allclose(row[: 2 * mesh.n_nodes], 0.0)
    with pytest.raises(ValueError, match="already has"):
        apply_zero_mean_pressure(bordered, mesh)


def test_solved_pressure_has_zero_mean(exp1, channel_mesh):
    config = StabilizationConfig(method=Method.BVS)
    system = build_system(channel_mesh, exp1.data, config, compute_delta(config, channel_mesh.h, exp1.data))
    solution, report = solve(system)
    assert abs(channel_mesh.nodal_weights @ solution.pressure) < 1e-10
    assert report.relative_residual <= 1e-10
    # Dirichlet nodes carry exactly the interpolated data
    boundary = channel_mesh.boundary_nodes
    x, y = channel_mesh.nodes[boundary].T
    np.testing.assert_allclose(solution.velocity[boundary], exp1.exact_velocity(x, y), rtol=1e-12, atol=1e-14)


def test_constant_pressure_load_absorbed_by_multiplier(exp1, channel_mesh):
    config = StabilizationConfig(method=Method.BVS)
    system = build_system(channel_mesh, exp1.data, config, compute_delta(config, channel_mesh.h, exp1.data))
    base, _ = solve(system)

    shifted_rhs = system.rhs.copy()
    n = channel_mesh.n_nodes
    shifted_rhs[2 * n: 3 * n] += 0.7 * channel_mesh.nodal_weights
    shifted, _ = solve(replace(system, rhs=shifted_rhs))
    np.testing.assert_allclose(shifted.pressure, base.pressure, atol=1e-10)
    assert shifted.multiplier == pytest.approx(base.multiplier + 0.7, abs=1e-10)


# ============================================================================
# Coercivity
# ============================================================================

def _norm_squares(mesh, v, q):
    """||v||^2, ||grad v||^2 and ||grad q||^2 of discrete fields."""
    grads, areas = mesh.gradients, mesh.areas
    v_nodes = v.reshape(-1, 2)[mesh.triangles]
    grad_v = np.einsum("mai,maj->mij", v_nodes, grads)
    grad_q = np.einsum("ma,maj->mj", q[mesh.triangles], grads)
    local_mass = (np.ones((3, 3)) + np.eye(3)) / 12.0
    l2 = np.einsum("m,ab,mai,mbi->", areas, local_mass, v_nodes, v_nodes)
    h1 = np.einsum("m,mij,mij->", areas, grad_v, grad_v)
    p1 = np.einsum("m,mj,mj->", areas, grad_q, grad_q)
    return l2, h1, p1


@pytest.mark.parametrize("formula,gamma,factor", [(DeltaFormula.LEMMA_SD, 0.1, 0.5), (DeltaFormula.EXPERIMENT, 1.0, 0.0)])
def test_sd_bvs_coercivity(benchmark, channel_mesh, formula, gamma, factor):
    config = StabilizationConfig(
        method=Method.BVS, form=MomentumForm.SD, gamma=gamma, delta_formula=formula, C=1.0,
        reaction_in_residual=False,
    )
    data = benchmark.data
    delta = compute_delta(config, channel_mesh.h, data)
    A = assemble_contributions(channel_mesh, data, config, delta).to_csr()

    rng = np.random.default_rng(2024)
    boundary = np.zeros(channel_mesh.n_nodes, dtype=bool)
    boundary[channel_mesh.boundary_nodes] = True
    for _ in range(100):
        v = rng.standard_normal((channel_mesh.n_nodes, 2))
        v[boundary] = 0.0
        q = rng.standard_normal(channel_mesh.n_nodes)
        x = np.concatenate([v.ravel(), q])
        l2, h1, p1 = _norm_squares(channel_mesh, v.ravel(), q)
        triple = data.sigma * l2 + data.viscosity.nu_min * h1 + delta * p1
        energy = x @ (A @ x)
        assert energy > factor * triple
        assert energy > 0


def test_solution_field_vector_round_trip(channel_mesh, exp1):
    field = SolutionField.interpolate(channel_mesh, exp1.exact_velocity, exp1.exact_pressure)
    vector = field.to_vector(with_multiplier=True)
    assert len(vector) == 3 * channel_mesh.n_nodes + 1
    restored = SolutionField.from_vector(vector, channel_mesh.n_nodes)
    np.testing.assert_array_equal(restored.velocity, field.velocity)
    np.testing.assert_array_equal(restored.pressure, field.pressure)

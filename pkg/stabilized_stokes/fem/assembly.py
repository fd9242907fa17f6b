"""
Global saddle-point assembly for the PSPG/BVS x SD/GL combinations.

Unknown ordering: (u_x, u_y) interleaved per node at 2i, 2i + 1, then the
nodal pressures at 2N + i, then (after apply_zero_mean_pressure) a single
mean-pressure multiplier at 3N.

Every assemble_* function returns Contributions (COO triplets plus a
right-hand side) so blocks can be inspected and combined before the CSR
matrix is formed. Local element blocks are built for all triangles at once;
index layout of the local tensors:

    velocity-velocity  [m, a, d, b, c]  row node a comp d, column node b comp c
    velocity-pressure  [m, a, d, b]
    pressure-velocity  [m, a, b, c]
    pressure-pressure  [m, a, b]
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from scipy.sparse import bmat, coo_matrix, csr_matrix, diags

from stabilized_stokes.constants import QuadratureConstants
from stabilized_stokes.fem.mesh import Mesh
from stabilized_stokes.fem.quadrature import map_to_segments, map_to_triangles, segment_rule, triangle_rule
from stabilized_stokes.problems.benchmarks import ProblemData, VectorField
from stabilized_stokes.schemas import Method, MomentumForm, StabilizationConfig

logger = logging.getLogger(__name__)

_EYE2 = np.eye(2)


# ============================================================================
# Containers
# ============================================================================

@dataclass
class Contributions:
    """Unsummed COO triplets and a dense right-hand side over 3N unknowns."""
    n_dofs: int
    rows: List[np.ndarray] = field(default_factory=list)
    cols: List[np.ndarray] = field(default_factory=list)
    vals: List[np.ndarray] = field(default_factory=list)
    rhs: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.rhs is None:
            self.rhs = np.zeros(self.n_dofs)

    def add_block(self, row_dofs: np.ndarray, col_dofs: np.ndarray, local: np.ndarray) -> None:
        """
        Scatter per-element local blocks.

        Args:
            row_dofs: (m, *r) global row indices
            col_dofs: (m, *c) global column indices
            local: (m, *r, *c) values
        """
        m = row_dofs.shape[0]
        R = row_dofs.reshape(m, -1)
        C = col_dofs.reshape(m, -1)
        L = np.broadcast_to(local, row_dofs.shape + col_dofs.shape[1:]).reshape(m, R.shape[1], C.shape[1])
        self.rows.append(np.broadcast_to(R[:, :, None], L.shape).ravel())
        self.cols.append(np.broadcast_to(C[:, None, :], L.shape).ravel())
        self.vals.append(np.ascontiguousarray(L).ravel())

    def add_rhs(self, dofs: np.ndarray, values: np.ndarray) -> None:
        np.add.at(self.rhs, dofs.ravel(), np.broadcast_to(values, dofs.shape).ravel())

    def merge(self, other: "Contributions") -> "Contributions":
        if other.n_dofs != self.n_dofs:
            raise ValueError(f"Cannot merge contributions over {other.n_dofs} and {self.n_dofs} unknowns")
        return Contributions(
            n_dofs=self.n_dofs,
            rows=self.rows + other.rows,
            cols=self.cols + other.cols,
            vals=self.vals + other.vals,
            rhs=self.rhs + other.rhs,
        )

    def to_csr(self) -> csr_matrix:
        """Sum duplicates in insertion order; identical input gives a bitwise-identical matrix."""
        if not self.vals:
            return csr_matrix((self.n_dofs, self.n_dofs))
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        vals = np.concatenate(self.vals)
        matrix = coo_matrix((vals, (rows, cols)), shape=(self.n_dofs, self.n_dofs)).tocsr()
        matrix.sum_duplicates()
        return matrix


@dataclass(frozen=True)
class SparseSystem:
    """
    Assembled linear system.

    Attributes:
        matrix: (n, n) CSR matrix, n = 3N or 3N + 1 with the multiplier
        rhs: (n,) right-hand side
        n_nodes: N
        dirichlet_mask: (n,) True on eliminated velocity unknowns
        dirichlet_values: (n,) imposed values (zero elsewhere)
    """
    matrix: csr_matrix
    rhs: np.ndarray
    n_nodes: int
    dirichlet_mask: np.ndarray
    dirichlet_values: np.ndarray

    @property
    def n_unknowns(self) -> int:
        return self.matrix.shape[0]

    @property
    def has_multiplier(self) -> bool:
        return self.n_unknowns == 3 * self.n_nodes + 1


@dataclass(frozen=True)
class SolutionField:
    """Nodal velocity (N, 2), nodal pressure (N,) and the mean-pressure multiplier."""
    velocity: np.ndarray
    pressure: np.ndarray
    multiplier: float = 0.0

    @classmethod
    def from_vector(cls, x: np.ndarray, n_nodes: int) -> "SolutionField":
        velocity = x[: 2 * n_nodes].reshape(n_nodes, 2).copy()
        pressure = x[2 * n_nodes: 3 * n_nodes].copy()
        multiplier = float(x[3 * n_nodes]) if len(x) > 3 * n_nodes else 0.0
        return cls(velocity=velocity, pressure=pressure, multiplier=multiplier)

    @classmethod
    def interpolate(cls, mesh: Mesh, velocity: VectorField, pressure) -> "SolutionField":
        """Nodal interpolant of continuous fields."""
        x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
        return cls(velocity=np.asarray(velocity(x, y), dtype=float), pressure=np.asarray(pressure(x, y), dtype=float))

    def to_vector(self, with_multiplier: bool = False) -> np.ndarray:
        parts = [self.velocity.ravel(), self.pressure]
        if with_multiplier:
            parts.append(np.array([self.multiplier]))
        return np.concatenate(parts)


# ============================================================================
# Element Data
# ============================================================================

@dataclass(frozen=True)
class ElementData:
    """Per-element geometry and quadrature integrals shared by the Galerkin and stabilisation assemblers."""

    grads: np.ndarray        # (M, 3, 2)
    areas: np.ndarray        # (M,)
    gg: np.ndarray           # (M, 3, 3) g_a . g_b
    lam: np.ndarray          # (nq, 3) shape values at quadrature points
    weights: np.ndarray      # (M, nq)
    nu_bar: np.ndarray       # (M,) integral of nu
    grad_nu_bar: np.ndarray  # (M, 2) integral of grad nu
    phi_grad_nu: np.ndarray  # (M, 3, 2) integral of phi_a * grad nu
    phi_force: np.ndarray    # (M, 3, 2) integral of phi_a * f
    force_bar: np.ndarray    # (M, 2) integral of f
    vel_dofs: np.ndarray     # (M, 3, 2)
    pres_dofs: np.ndarray    # (M, 3)


def velocity_dofs(nodes: np.ndarray) -> np.ndarray:
    """Global indices (..., 2) of the velocity unknowns at `nodes`."""
    return 2 * nodes[..., None] + np.arange(2)


def pressure_dofs(nodes: np.ndarray, n_nodes: int) -> np.ndarray:
    return 2 * n_nodes + nodes


def element_data(mesh: Mesh, data: ProblemData) -> ElementData:
    rule = triangle_rule(QuadratureConstants.ASSEMBLY_TRIANGLE_DEGREE)
    points, weights = map_to_triangles(mesh.element_coords, rule)
    px, py = points[..., 0], points[..., 1]
    lam = rule.barycentric

    nu_q = data.viscosity.value(px, py)
    grad_nu_q = data.viscosity.gradient(px, py)
    force_q = data.force(px, py)

    grads = mesh.gradients
    return ElementData(
        grads=grads,
        areas=np.abs(mesh.areas),
        gg=np.einsum("mak,mbk->mab", grads, grads),
        lam=lam,
        weights=weights,
        nu_bar=np.einsum("mq,mq->m", weights, nu_q),
        grad_nu_bar=np.einsum("mq,mqk->mk", weights, grad_nu_q),
        phi_grad_nu=np.einsum("mq,qa,mqk->mak", weights, lam, grad_nu_q),
        phi_force=np.einsum("mq,qa,mqk->mak", weights, lam, force_q),
        force_bar=np.einsum("mq,mqk->mk", weights, force_q),
        vel_dofs=velocity_dofs(mesh.triangles),
        pres_dofs=pressure_dofs(mesh.triangles, mesh.n_nodes),
    )


# ============================================================================
# Galerkin Forms
# ============================================================================

def _galerkin_common(mesh: Mesh, data: ProblemData, ed: ElementData) -> Contributions:
    """sigma (u, v) - (p, div v) + (q, div u) and the load (f, v)."""
    contrib = Contributions(n_dofs=3 * mesh.n_nodes)
    A = ed.areas

    if data.sigma != 0:
        mass = A[:, None, None] * (np.ones((3, 3)) + np.eye(3)) / 12.0
        vv = data.sigma * mass[:, :, None, :, None] * _EYE2[None, None, :, None, :]
        contrib.add_block(ed.vel_dofs, ed.vel_dofs, vv)

    # integral of phi_b is A / 3 for every b
    third = (A / 3.0)[:, None, None, None]
    vp = -third * np.broadcast_to(ed.grads[:, :, :, None], ed.grads.shape + (3,))
    pv = third * np.broadcast_to(ed.grads[:, None, :, :], (len(A), 3, 3, 2))
    contrib.add_block(ed.vel_dofs, ed.pres_dofs, vp)
    contrib.add_block(ed.pres_dofs, ed.vel_dofs, pv)

    contrib.add_rhs(ed.vel_dofs, ed.phi_force)
    return contrib


def assemble_galerkin_sd(mesh: Mesh, data: ProblemData, ed: Optional[ElementData] = None) -> Contributions:
    """
    Galerkin blocks of the stress-divergence form:
    sigma (u, v) + (2 nu sym(grad u), sym(grad v)) - (p, div v) + (q, div u), load (f, v).
    """
    ed = ed if ed is not None else element_data(mesh, data)
    contrib = _galerkin_common(mesh, data, ed)
    viscous = ed.nu_bar[:, None, None, None, None] * (
        ed.gg[:, :, None, :, None] * _EYE2[None, None, :, None, :]
        + np.einsum("mac,mbd->madbc", ed.grads, ed.grads)
    )
    contrib.add_block(ed.vel_dofs, ed.vel_dofs, viscous)
    return contrib


def assemble_galerkin_gl(mesh: Mesh, data: ProblemData, ed: Optional[ElementData] = None) -> Contributions:
    """
    Galerkin blocks of the generalised-Laplacian form:
    sigma (u, v) + (nu grad u, grad v) - (grad(u)^T grad(nu), v) - (p, div v) + (q, div u).

    The pseudo-traction boundary term is omitted; all boundaries are Dirichlet.
    """
    ed = ed if ed is not None else element_data(mesh, data)
    contrib = _galerkin_common(mesh, data, ed)
    viscous = ed.nu_bar[:, None, None, None, None] * ed.gg[:, :, None, :, None] * _EYE2[None, None, :, None, :]
    # (grad(u)^T grad(nu))_d = sum_c d_d u_c d_c nu
    transpose_term = -np.einsum("mbd,mac->madbc", ed.grads, ed.phi_grad_nu)
    contrib.add_block(ed.vel_dofs, ed.vel_dofs, viscous + transpose_term)
    return contrib


# ============================================================================
# Stabilisation
# ============================================================================

def _pressure_laplacian(contrib: Contributions, ed: ElementData, delta: float) -> None:
    contrib.add_block(ed.pres_dofs, ed.pres_dofs, delta * ed.areas[:, None, None] * ed.gg)


def _reaction_coupling(contrib: Contributions, ed: ElementData, delta: float, sigma: float) -> None:
    """delta (grad q, sigma u)."""
    pv = delta * sigma * (ed.areas / 3.0)[:, None, None, None] * ed.grads[:, :, None, :]
    contrib.add_block(ed.pres_dofs, ed.vel_dofs, np.broadcast_to(pv, (len(ed.areas), 3, 3, 2)))


def assemble_pspg(
    mesh: Mesh,
    data: ProblemData,
    delta: float,
    reaction_in_residual: bool = True,
    include_viscous_residual: bool = True,
    ed: Optional[ElementData] = None,
) -> Contributions:
    """
    Element-wise residual stabilisation
    sum_e delta (grad q, grad p + sigma u - 2 sym(grad u) grad nu - f)_e.

    For P1 velocities div(2 nu sym(grad u)) reduces to 2 sym(grad u) grad nu
    on each element.

    Args:
        mesh: triangulation
        data: problem data
        delta: stabilisation parameter > 0
        reaction_in_residual: keep sigma u in the residual
        include_viscous_residual: keep the 2 sym(grad u) grad nu term
        ed: element data of (mesh, data), computed here when omitted

    Returns:
        Contributions on the pressure rows
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    ed = ed if ed is not None else element_data(mesh, data)
    contrib = Contributions(n_dofs=3 * mesh.n_nodes)
    _pressure_laplacian(contrib, ed, delta)

    if reaction_in_residual and data.sigma != 0:
        _reaction_coupling(contrib, ed, delta, data.sigma)

    if include_viscous_residual and not data.viscosity.is_constant:
        g_dot_G = np.einsum("mbk,mk->mb", ed.grads, ed.grad_nu_bar)
        pv = np.einsum("mac,mb->mabc", ed.grads, g_dot_G) + ed.gg[:, :, :, None] * ed.grad_nu_bar[:, None, None, :]
        contrib.add_block(ed.pres_dofs, ed.vel_dofs, -delta * pv)

    contrib.add_rhs(ed.pres_dofs, delta * np.einsum("mak,mk->ma", ed.grads, ed.force_bar))
    return contrib


def _boundary_vorticity(mesh: Mesh, data: ProblemData, delta: float) -> Contributions:
    """delta (grad q x n, nu curl u) over the boundary edges, each with its owning triangle."""
    contrib = Contributions(n_dofs=3 * mesh.n_nodes)
    edges = mesh.boundary_edges
    start = mesh.nodes[edges.nodes[:, 0]]
    end = mesh.nodes[edges.nodes[:, 1]]
    points, weights = map_to_segments(start, end, segment_rule(QuadratureConstants.ASSEMBLY_SEGMENT_DEGREE))
    nu_edge = np.einsum("eq,eq->e", weights, data.viscosity.value(points[..., 0], points[..., 1]))

    g = mesh.gradients[edges.triangles]
    n = edges.normals
    cross = g[..., 0] * n[:, None, 1] - g[..., 1] * n[:, None, 0]
    # curl of phi_b e_c: c = 0 gives -d_y phi_b, c = 1 gives d_x phi_b
    curl = np.stack([-g[..., 1], g[..., 0]], axis=-1)

    local = delta * nu_edge[:, None, None, None] * cross[:, :, None, None] * curl[:, None, :, :]
    tri_nodes = mesh.triangles[edges.triangles]
    contrib.add_block(pressure_dofs(tri_nodes, mesh.n_nodes), velocity_dofs(tri_nodes), local)
    return contrib


def _boundary_reaction_forcing(mesh: Mesh, data: ProblemData, delta: float) -> np.ndarray:
    """Right-hand side -delta sigma (q, g . n) on the boundary."""
    rhs = np.zeros(3 * mesh.n_nodes)
    if data.sigma == 0:
        return rhs
    edges = mesh.boundary_edges
    rule = segment_rule(QuadratureConstants.ASSEMBLY_SEGMENT_DEGREE)
    start = mesh.nodes[edges.nodes[:, 0]]
    end = mesh.nodes[edges.nodes[:, 1]]
    points, weights = map_to_segments(start, end, rule)
    g = data.dirichlet(points[..., 0], points[..., 1])
    gn = np.einsum("eqk,ek->eq", g, edges.normals)
    t = rule.points
    # phi_start = 1 - t, phi_end = t along the edge
    values = np.stack(
        [np.einsum("eq,q,eq->e", weights, 1.0 - t, gn), np.einsum("eq,q,eq->e", weights, t, gn)], axis=1
    )
    np.add.at(rhs, pressure_dofs(edges.nodes, mesh.n_nodes).ravel(), (-delta * data.sigma * values).ravel())
    return rhs


def assemble_bvs(
    mesh: Mesh,
    data: ProblemData,
    delta: float,
    reaction_in_residual: bool = False,
    ed: Optional[ElementData] = None,
) -> Contributions:
    """
    Boundary vorticity stabilisation:
    delta (grad q, grad p) - delta (grad q, 2 grad(u)^T grad nu) + delta (grad q x n, nu curl u)_boundary
    with load delta (grad q, f).

    With reaction_in_residual the term delta (grad q, sigma u) joins the
    left-hand side; otherwise it is integrated by parts against the
    Dirichlet data and enters as -delta sigma (q, g . n)_boundary.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    ed = ed if ed is not None else element_data(mesh, data)
    contrib = Contributions(n_dofs=3 * mesh.n_nodes)
    _pressure_laplacian(contrib, ed, delta)

    if not data.viscosity.is_constant:
        pv = -2.0 * delta * ed.gg[:, :, :, None] * ed.grad_nu_bar[:, None, None, :]
        contrib.add_block(ed.pres_dofs, ed.vel_dofs, pv)

    if reaction_in_residual:
        if data.sigma != 0:
            _reaction_coupling(contrib, ed, delta, data.sigma)
    else:
        contrib.rhs += _boundary_reaction_forcing(mesh, data, delta)

    contrib.add_rhs(ed.pres_dofs, delta * np.einsum("mak,mk->ma", ed.grads, ed.force_bar))
    return contrib.merge(_boundary_vorticity(mesh, data, delta))


# ============================================================================
# Global System
# ============================================================================

def assemble_contributions(mesh: Mesh, data: ProblemData, config: StabilizationConfig, delta: float) -> Contributions:
    """Galerkin form plus stabilisation for the configured method and momentum form."""
    ed = element_data(mesh, data)
    if config.form == MomentumForm.SD:
        contrib = assemble_galerkin_sd(mesh, data, ed=ed)
    else:
        contrib = assemble_galerkin_gl(mesh, data, ed=ed)

    if config.method == Method.PSPG:
        stab = assemble_pspg(
            mesh, data, delta,
            reaction_in_residual=config.reaction_in_residual,
            include_viscous_residual=config.include_viscous_residual,
            ed=ed,
        )
    else:
        stab = assemble_bvs(mesh, data, delta, reaction_in_residual=config.reaction_in_residual, ed=ed)
    return contrib.merge(stab)


def assemble_system(mesh: Mesh, data: ProblemData, config: StabilizationConfig, delta: float) -> SparseSystem:
    """Raw 3N system before boundary conditions and the mean constraint."""
    contrib = assemble_contributions(mesh, data, config, delta)
    n = contrib.n_dofs
    matrix = contrib.to_csr()
    logger.debug(
        f"Assembled {config.method.value}-{config.form.value} system: {n} unknowns, {matrix.nnz} non-zeros"
    )
    return SparseSystem(
        matrix=matrix,
        rhs=contrib.rhs,
        n_nodes=mesh.n_nodes,
        dirichlet_mask=np.zeros(n, dtype=bool),
        dirichlet_values=np.zeros(n),
    )


def apply_dirichlet(system: SparseSystem, mesh: Mesh, g: Optional[VectorField]) -> SparseSystem:
    """
    Impose the nodal interpolant of g on every boundary node.

    Eliminated columns move to the right-hand side and eliminated rows become
    identity rows.

    Raises:
        ValueError: no Dirichlet data, or g undefined (non-finite) at a boundary node
    """
    if g is None:
        raise ValueError("Dirichlet data is required on every boundary node")
    nodes = mesh.boundary_nodes
    values = np.asarray(g(mesh.nodes[nodes, 0], mesh.nodes[nodes, 1]), dtype=float)
    if values.shape != (len(nodes), 2):
        raise ValueError(f"Dirichlet data must have shape ({len(nodes)}, 2), got {values.shape}")
    missing = ~np.all(np.isfinite(values), axis=1)
    if np.any(missing):
        raise ValueError(f"Missing Dirichlet data at boundary nodes {nodes[missing][:10].tolist()}")

    n = system.n_unknowns
    dofs = velocity_dofs(nodes).ravel()
    imposed = np.zeros(n)
    imposed[dofs] = values.ravel()

    rhs = system.rhs - system.matrix @ imposed
    rhs[dofs] = values.ravel()

    keep = np.ones(n)
    keep[dofs] = 0.0
    K = diags(keep)
    matrix = (K @ system.matrix @ K + diags(1.0 - keep)).tocsr()
    matrix.eliminate_zeros()

    mask = system.dirichlet_mask.copy()
    mask[dofs] = True
    dirichlet_values = system.dirichlet_values.copy()
    dirichlet_values[dofs] = values.ravel()
    return replace(system, matrix=matrix, rhs=rhs, dirichlet_mask=mask, dirichlet_values=dirichlet_values)


def mean_constraint_weights(mesh: Mesh) -> np.ndarray:
    """(3N,) row of the constraint: integral of each pressure basis function, zero on velocities."""
    c = np.zeros(3 * mesh.n_nodes)
    c[2 * mesh.n_nodes:] = mesh.nodal_weights
    return c


def apply_zero_mean_pressure(system: SparseSystem, mesh: Mesh) -> SparseSystem:
    """
    Border the system with a Lagrange multiplier enforcing a zero-mean pressure.

    Raises:
        ValueError: the system already carries the multiplier
    """
    if system.has_multiplier:
        raise ValueError("System already has the mean-pressure multiplier")
    c = mean_constraint_weights(mesh)
    column = csr_matrix(c[:, None])
    matrix = bmat([[system.matrix, column], [column.T, None]], format="csr")
    return replace(
        system,
        matrix=matrix,
        rhs=np.append(system.rhs, 0.0),
        dirichlet_mask=np.append(system.dirichlet_mask, False),
        dirichlet_values=np.append(system.dirichlet_values, 0.0),
    )


def build_system(mesh: Mesh, data: ProblemData, config: StabilizationConfig, delta: float) -> SparseSystem:
    """Assemble, impose the Dirichlet data and add the mean-pressure constraint."""
    system = assemble_system(mesh, data, config, delta)
    system = apply_dirichlet(system, mesh, data.dirichlet)
    return apply_zero_mean_pressure(system, mesh)

"""
Analysis Service - Error norms, convergence rates and consistency checks.

All integrals of exact fields use high-order quadrature rules; the discrete
fields are evaluated exactly on each triangle.
"""

import logging
import math
from typing import List, Optional

import numpy as np

from stabilized_stokes.constants import ExperimentConstants, QuadratureConstants, ToleranceConstants
from stabilized_stokes.fem.assembly import SolutionField, pressure_dofs, velocity_dofs
from stabilized_stokes.fem.mesh import Mesh
from stabilized_stokes.fem.quadrature import map_to_segments, map_to_triangles, segment_rule, triangle_rule
from stabilized_stokes.problems.benchmarks import BenchmarkCase
from stabilized_stokes.schemas import (
    CentrelinePoint,
    ErrorReport,
    Method,
    MomentumForm,
    StabilizationConfig,
)

logger = logging.getLogger(__name__)


def convergence_rate(coarse_error: float, fine_error: float) -> Optional[float]:
    """
    Observed order log2(e_coarse / e_fine) between two uniform refinements.

    Returns:
        The rate, or None when either error is zero
    """
    if coarse_error <= 0 or fine_error <= 0:
        return None
    return math.log2(coarse_error / fine_error)


def triple_norm(sigma: float, nu_min: float, delta: float, u_l2: float, u_h1: float, p_h1: float) -> float:
    """(sigma |u|^2 + nu_min |grad u|^2 + delta |grad p|^2)^(1/2) from its component norms."""
    return math.sqrt(sigma * u_l2**2 + nu_min * u_h1**2 + delta * p_h1**2)


class AnalysisService:
    """
    Service for post-processing solved fields against exact solutions.

    Provides error norms, centreline extraction, the boundary-layer metric
    and the consistency functional of each stabilised method.
    """

    def __init__(
        self,
        triangle_degree: int = QuadratureConstants.ORACLE_TRIANGLE_DEGREE,
        segment_degree: int = QuadratureConstants.ORACLE_SEGMENT_DEGREE,
    ):
        self.triangle_rule = triangle_rule(triangle_degree)
        self.segment_rule = segment_rule(segment_degree)

    # ========================================================================
    # Error Norms
    # ========================================================================

    def error_norms(self, solution: SolutionField, case: BenchmarkCase, mesh: Mesh) -> dict:
        """L2 and H1-seminorm errors of velocity and pressure."""
        points, weights = map_to_triangles(mesh.element_coords, self.triangle_rule)
        x, y = points[..., 0], points[..., 1]
        lam = self.triangle_rule.barycentric
        grads = mesh.gradients

        u_nodes = solution.velocity[mesh.triangles]   # (M, 3, 2)
        p_nodes = solution.pressure[mesh.triangles]   # (M, 3)

        u_h = np.einsum("qa,mak->mqk", lam, u_nodes)
        grad_u_h = np.einsum("mai,maj->mij", u_nodes, grads)
        p_h = np.einsum("qa,ma->mq", lam, p_nodes)
        grad_p_h = np.einsum("ma,maj->mj", p_nodes, grads)

        e_u = u_h - case.exact_velocity(x, y)
        e_grad_u = grad_u_h[:, None] - case.exact_velocity_gradient(x, y)
        e_p = p_h - case.exact_pressure(x, y)
        e_grad_p = grad_p_h[:, None] - case.exact_pressure_gradient(x, y)

        return {
            "err_u_l2": math.sqrt(float(np.einsum("mq,mqk,mqk->", weights, e_u, e_u))),
            "err_u_h1": math.sqrt(float(np.einsum("mq,mqij,mqij->", weights, e_grad_u, e_grad_u))),
            "err_p_l2": math.sqrt(float(np.einsum("mq,mq,mq->", weights, e_p, e_p))),
            "err_p_h1": math.sqrt(float(np.einsum("mq,mqk,mqk->", weights, e_grad_p, e_grad_p))),
        }

    def compute_errors(
        self,
        solution: SolutionField,
        case: BenchmarkCase,
        mesh: Mesh,
        delta: float = 0.0,
        relative_residual: Optional[float] = None,
    ) -> ErrorReport:
        """
        Errors, triple norm and centreline diagnostics of one solve.

        Args:
            solution: nodal fields on `mesh`
            case: benchmark with exact fields
            mesh: triangulation
            delta: stabilisation parameter entering the triple norm
            relative_residual: algebraic residual reported by the solver

        Returns:
            ErrorReport without rates
        """
        norms = self.error_norms(solution, case, mesh)
        triple = triple_norm(
            case.data.sigma, case.data.viscosity.nu_min, delta,
            norms["err_u_l2"], norms["err_u_h1"], norms["err_p_h1"],
        )
        centreline = self.centreline_pressure(solution, case, mesh)
        return ErrorReport(
            level=mesh.level,
            h=mesh.h,
            ndof=3 * mesh.n_nodes,
            delta=delta,
            err_triple=triple,
            boundary_layer_error=self._window_error(centreline, mesh, inside=True),
            midchannel_error=self._window_error(centreline, mesh, inside=False),
            mean_pressure=self.mean_pressure(solution, mesh),
            relative_residual=relative_residual,
            centreline=centreline,
            **norms,
        )

    @staticmethod
    def mean_pressure(solution: SolutionField, mesh: Mesh) -> float:
        """Integral of the discrete pressure over the domain."""
        return float(mesh.nodal_weights @ solution.pressure)

    @staticmethod
    def with_rates(reports: List[ErrorReport]) -> List[ErrorReport]:
        """Attach rates between consecutive refinement levels, sorted by level."""
        ordered = sorted(reports, key=lambda r: r.level if r.level is not None else -1)
        result = [ordered[0]] if ordered else []
        for coarse, fine in zip(ordered, ordered[1:]):
            if coarse.level is None or fine.level != coarse.level + 1:
                result.append(fine)
                continue
            result.append(fine.model_copy(update={
                "rate_u_l2": convergence_rate(coarse.err_u_l2, fine.err_u_l2),
                "rate_u_h1": convergence_rate(coarse.err_u_h1, fine.err_u_h1),
                "rate_p_l2": convergence_rate(coarse.err_p_l2, fine.err_p_l2),
            }))
        return result

    # ========================================================================
    # Centreline And Boundary Layer
    # ========================================================================

    @staticmethod
    def centreline_nodes(mesh: Mesh) -> np.ndarray:
        """
        Nodes on y = H/2 sorted by x.

        Raises:
            ValueError: no node lies on the centreline
        """
        tol = ToleranceConstants.GEOMETRY_TOL * max(1.0, mesh.height)
        on_line = np.flatnonzero(np.abs(mesh.nodes[:, 1] - 0.5 * mesh.height) < tol)
        if len(on_line) == 0:
            raise ValueError("Mesh has no nodes on the centreline y = H/2")
        return on_line[np.argsort(mesh.nodes[on_line, 0], kind="stable")]

    def centreline_pressure(self, solution: SolutionField, case: BenchmarkCase, mesh: Mesh) -> List[CentrelinePoint]:
        """Table of (x, p_h, p_exact) along y = H/2, sorted by x."""
        nodes = self.centreline_nodes(mesh)
        x = mesh.nodes[nodes, 0]
        p_exact = case.exact_pressure(x, mesh.nodes[nodes, 1])
        return [
            CentrelinePoint(x=float(xi), p_h=float(ph), p_exact=float(pe))
            for xi, ph, pe in zip(x, solution.pressure[nodes], p_exact)
        ]

    @staticmethod
    def _window_error(centreline: List[CentrelinePoint], mesh: Mesh, inside: bool) -> float:
        width = ExperimentConstants.BOUNDARY_LAYER_WINDOW * mesh.h
        tol = ToleranceConstants.GEOMETRY_TOL * max(1.0, mesh.length)
        errors = [
            abs(point.p_h - point.p_exact)
            for point in centreline
            if (point.x <= width + tol or point.x >= mesh.length - width - tol) == inside
        ]
        return max(errors, default=0.0)

    def boundary_layer_error(self, solution: SolutionField, case: BenchmarkCase, mesh: Mesh) -> float:
        """max |p_h - p| over centreline nodes within 2h of the inflow or outflow."""
        return self._window_error(self.centreline_pressure(solution, case, mesh), mesh, inside=True)

    def midchannel_error(self, solution: SolutionField, case: BenchmarkCase, mesh: Mesh) -> float:
        """max |p_h - p| over the centreline nodes outside the boundary-layer windows."""
        return self._window_error(self.centreline_pressure(solution, case, mesh), mesh, inside=False)

    # ========================================================================
    # Consistency
    # ========================================================================

    def consistency_residual(
        self,
        case: BenchmarkCase,
        mesh: Mesh,
        config: StabilizationConfig,
        delta: float,
    ) -> np.ndarray:
        """
        A((u, p), (v, q)) - F(v, q) for every basis test function, exact (u, p) injected.

        Velocity entries are kept at interior nodes only (boundary test
        functions are eliminated by the Dirichlet conditions); pressure entries
        are kept at all nodes.

        Returns:
            (3N,) residual vector in the global unknown ordering
        """
        data = case.data
        n_nodes = mesh.n_nodes
        residual = np.zeros(3 * n_nodes)

        points, weights = map_to_triangles(mesh.element_coords, self.triangle_rule)
        x, y = points[..., 0], points[..., 1]
        lam = self.triangle_rule.barycentric
        g = mesh.gradients

        u = case.exact_velocity(x, y)
        G = case.exact_velocity_gradient(x, y)
        p = case.exact_pressure(x, y)
        grad_p = case.exact_pressure_gradient(x, y)
        f = data.force(x, y)
        nu = data.viscosity.value(x, y)
        grad_nu = data.viscosity.gradient(x, y)
        div_u = np.einsum("mqii->mq", G)

        # Momentum rows
        if config.form == MomentumForm.SD:
            stress = nu[..., None, None] * (G + np.swapaxes(G, -1, -2))
            vel = np.einsum("mq,mqdj,maj->mad", weights, stress, g)
        else:
            vel = np.einsum("mq,mq,mqdj,maj->mad", weights, nu, G, g)
            transpose_term = np.einsum("mqjd,mqj->mqd", G, grad_nu)
            vel -= np.einsum("mq,qa,mqd->mad", weights, lam, transpose_term)
        vel += np.einsum("mq,qa,mqd->mad", weights, lam, data.sigma * u - f)
        vel -= np.einsum("mq,mq,mad->mad", weights, p, g)

        # Continuity rows
        pres = np.einsum("mq,qa,mq->ma", weights, lam, div_u)

        # Stabilisation rows
        strong = grad_p - f
        if config.reaction_in_residual:
            strong = strong + data.sigma * u
        if config.method == Method.PSPG:
            if config.include_viscous_residual:
                strong = strong - np.einsum("mqij,mqj->mqi", G + np.swapaxes(G, -1, -2), grad_nu)
        else:
            strong = strong - 2.0 * np.einsum("mqji,mqj->mqi", G, grad_nu)
        pres += delta * np.einsum("mq,mqk,mak->ma", weights, strong, g)

        np.add.at(residual, velocity_dofs(mesh.triangles).ravel(), vel.ravel())
        np.add.at(residual, pressure_dofs(mesh.triangles, n_nodes).ravel(), pres.ravel())

        if config.method == Method.BVS:
            self._add_boundary_consistency(residual, case, mesh, delta, config.reaction_in_residual)

        residual[velocity_dofs(mesh.boundary_nodes).ravel()] = 0.0
        return residual

    def _add_boundary_consistency(
        self,
        residual: np.ndarray,
        case: BenchmarkCase,
        mesh: Mesh,
        delta: float,
        reaction_in_residual: bool,
    ) -> None:
        data = case.data
        edges = mesh.boundary_edges
        start = mesh.nodes[edges.nodes[:, 0]]
        end = mesh.nodes[edges.nodes[:, 1]]
        points, weights = map_to_segments(start, end, self.segment_rule)
        x, y = points[..., 0], points[..., 1]

        G = case.exact_velocity_gradient(x, y)
        curl = G[..., 1, 0] - G[..., 0, 1]
        nu_curl = np.einsum("eq,eq,eq->e", weights, data.viscosity.value(x, y), curl)

        g = mesh.gradients[edges.triangles]
        n = edges.normals
        cross = g[..., 0] * n[:, None, 1] - g[..., 1] * n[:, None, 0]
        tri_nodes = mesh.triangles[edges.triangles]
        np.add.at(residual, pressure_dofs(tri_nodes, mesh.n_nodes).ravel(),
                  (delta * cross * nu_curl[:, None]).ravel())

        if not reaction_in_residual and data.sigma != 0:
            t = self.segment_rule.points
            gn = np.einsum("eqk,ek->eq", data.dirichlet(x, y), n)
            values = np.stack(
                [np.einsum("eq,q,eq->e", weights, 1.0 - t, gn), np.einsum("eq,q,eq->e", weights, t, gn)], axis=1
            )
            np.add.at(residual, pressure_dofs(edges.nodes, mesh.n_nodes).ravel(),
                      (delta * data.sigma * values).ravel())

    def consistency_check(
        self,
        case: BenchmarkCase,
        mesh: Mesh,
        config: StabilizationConfig,
        delta: float,
    ) -> float:
        """Max-norm of the consistency residual."""
        value = float(np.max(np.abs(self.consistency_residual(case, mesh, config, delta))))
        logger.debug(f"{config.method.value}-{config.form.value} consistency residual on level {mesh.level}: {value:.3e}")
        return value

from stabilized_stokes.fem.assembly import (
    Contributions,
    SolutionField,
    SparseSystem,
    apply_dirichlet,
    apply_zero_mean_pressure,
    assemble_bvs,
    assemble_contributions,
    assemble_galerkin_gl,
    assemble_galerkin_sd,
    assemble_pspg,
    assemble_system,
    build_system,
)
from stabilized_stokes.fem.linsolve import SolverError, solve, solve_linear
from stabilized_stokes.fem.mesh import BoundaryEdges, BoundaryGroup, Mesh, element_size, generate_structured
from stabilized_stokes.fem.quadrature import (
    P1Element,
    QuadratureRule,
    p1_element,
    p1_gradients,
    segment_rule,
    triangle_rule,
)
from stabilized_stokes.fem.vtk import write_vtk

__all__ = [
    "Contributions",
    "SolutionField",
    "SparseSystem",
    "apply_dirichlet",
    "apply_zero_mean_pressure",
    "assemble_bvs",
    "assemble_contributions",
    "assemble_galerkin_gl",
    "assemble_galerkin_sd",
    "assemble_pspg",
    "assemble_system",
    "build_system",
    "SolverError",
    "solve",
    "solve_linear",
    "BoundaryEdges",
    "BoundaryGroup",
    "Mesh",
    "element_size",
    "generate_structured",
    "P1Element",
    "QuadratureRule",
    "p1_element",
    "p1_gradients",
    "segment_rule",
    "triangle_rule",
    "write_vtk",
]

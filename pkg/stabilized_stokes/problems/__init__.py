from stabilized_stokes.problems.benchmarks import (
    BenchmarkCase,
    ProblemData,
    build_case,
    case_parameter_names,
    couette_case,
    exact_solution_exp1,
    exact_solution_exp2,
    exp1_case,
    exp2_beta,
    exp2_case,
    polynomial_case,
    strong_residual,
    uniform_case,
)
from stabilized_stokes.problems.stabilization import compute_delta, gl_restriction
from stabilized_stokes.problems.viscosity import (
    ConstantViscosity,
    LinearViscosity,
    QuadraticViscosity,
    ViscosityField,
)

__all__ = [
    "BenchmarkCase",
    "ProblemData",
    "build_case",
    "case_parameter_names",
    "couette_case",
    "exact_solution_exp1",
    "exact_solution_exp2",
    "exp1_case",
    "exp2_beta",
    "exp2_case",
    "polynomial_case",
    "strong_residual",
    "uniform_case",
    "compute_delta",
    "gl_restriction",
    "ConstantViscosity",
    "LinearViscosity",
    "QuadraticViscosity",
    "ViscosityField",
]

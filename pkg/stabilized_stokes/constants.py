"""
Application-wide constants for the stabilised Stokes solver.

Defines quadrature defaults, tolerances, level caps and output file names
used across the fem, problems and services layers.
"""


class QuadratureConstants:
    """Quadrature degrees used by assembly and by the error/consistency oracles."""

    # Assembly: quadratic viscosity times P1 products stays within degree 4
    ASSEMBLY_TRIANGLE_DEGREE = 4
    ASSEMBLY_SEGMENT_DEGREE = 5

    # Oracle rules for the analytic (logarithmic, rational) exact solutions
    ORACLE_TRIANGLE_DEGREE = 8
    ORACLE_SEGMENT_DEGREE = 9

    TRIANGLE_DEGREES = (1, 2, 4, 8)
    SEGMENT_DEGREES = (1, 3, 5, 9)


class ToleranceConstants:
    """Geometric and algebraic tolerances."""

    GEOMETRY_TOL = 1e-12
    DEGENERATE_AREA_TOL = 1e-14
    ASPECT_RATIO_TOL = 1e-9

    SOLVER_RELATIVE_RESIDUAL = 1e-10
    MAX_REFINEMENT_STEPS = 3
    GMRES_MAX_ITERATIONS = 2000

    # Level 6 (about 0.25M unknowns) factorises in roughly 2 GB; larger systems go to GMRES
    DIRECT_MAX_UNKNOWNS = 400_000


class ExperimentConstants:
    """Shipped benchmark parameters and sweep limits."""

    CHANNEL_LENGTH = 5.0
    CHANNEL_HEIGHT = 1.0

    EXP1_A = 1.0
    EXP1_B = 1.0
    EXP1_KAPPA = 0.4
    EXP1_SIGMA = 0.0

    EXP2_B = 1.0
    EXP2_KAPPA = 0.4
    EXP2_SIGMA = 2.0

    MIN_LEVEL = 0
    # Level 7 is roughly 1M unknowns on the (0,5)x(0,1) channel
    MAX_LEVEL = 7

    # Centreline window width in multiples of h
    BOUNDARY_LAYER_WINDOW = 2.0


class FileConstants:
    """Output file names written by the report service."""

    CONVERGENCE_CSV_NAME = "convergence.csv"
    CONVERGENCE_JSON_NAME = "convergence.json"
    CENTRELINE_CSV_TEMPLATE = "centreline_level{level}.csv"
    SINGLE_JSON_NAME = "run.json"
    COMPARE_JSON_NAME = "compare.json"
    COMPARE_CENTRELINE_TEMPLATE = "centreline_level{level}_{method}.csv"
    SWEEP_JSON_NAME = "sweep.json"
    SWEEP_DIR_TEMPLATE = "gamma_{gamma:g}"
    VTK_TEMPLATE = "solution_level{level}.vtk"

    CSV_FLOAT_FORMAT = "%.16e"

    CONVERGENCE_COLUMNS = (
        "level",
        "h",
        "ndof",
        "err_u_l2",
        "err_u_h1",
        "err_p_l2",
        "err_triple",
        "rate_u_l2",
        "rate_u_h1",
        "rate_p_l2",
        "boundary_layer_error",
    )
    CENTRELINE_COLUMNS = ("x", "p_h", "p_exact")


class ExitCodes:
    """Process exit codes of the command-line driver."""

    SUCCESS = 0
    CONFIG_ERROR = 2
    SOLVER_FAILURE = 3

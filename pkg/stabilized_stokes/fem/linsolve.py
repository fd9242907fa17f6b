"""
Direct solve of the bordered saddle-point system.

Sparse LU with a symmetric minimum-degree ordering on A + A^T, refined
iteratively when the first solve misses the tolerance. Systems above
DIRECT_MAX_UNKNOWNS, or factorisations that run out of memory, go to GMRES
with an incomplete-LU preconditioner.
"""

import logging
import time
from typing import Optional, Tuple

import numpy as np
from scipy.sparse import csc_matrix, csr_matrix
from scipy.sparse.linalg import LinearOperator, gmres, spilu, splu

from stabilized_stokes.constants import ToleranceConstants
from stabilized_stokes.fem.assembly import SolutionField, SparseSystem
from stabilized_stokes.schemas import SolveReport

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Linear solve failed; carries the relative residual achieved, if any."""

    def __init__(self, message: str, relative_residual: Optional[float] = None):
        super().__init__(message)
        self.relative_residual = relative_residual


def relative_residual(matrix: csr_matrix, x: np.ndarray, b: np.ndarray) -> float:
    """||A x - b|| / ||b||, or the absolute residual when b = 0."""
    r = float(np.linalg.norm(matrix @ x - b))
    nb = float(np.linalg.norm(b))
    return r / nb if nb > 0 else r


def factorize(matrix: csr_matrix):
    """
    LU factors of a structurally symmetric matrix.

    The ordering is computed on A + A^T and diagonal pivots are preferred;
    SuperLU still pivots off a zero diagonal such as the multiplier row.
    """
    return splu(
        csc_matrix(matrix),
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options=dict(SymmetricMode=True),
    )


def _direct(matrix: csr_matrix, b: np.ndarray, tol: float) -> Tuple[np.ndarray, int, int]:
    lu = factorize(matrix)
    x = lu.solve(b)
    steps = 0
    while steps < ToleranceConstants.MAX_REFINEMENT_STEPS and relative_residual(matrix, x, b) > tol:
        x = x + lu.solve(b - matrix @ x)
        steps += 1
    return x, steps, int(lu.L.nnz + lu.U.nnz)


def _iterative(matrix: csr_matrix, b: np.ndarray, tol: float) -> Tuple[np.ndarray, int]:
    ilu = spilu(csc_matrix(matrix), drop_tol=1e-5, fill_factor=20, permc_spec="MMD_AT_PLUS_A")
    preconditioner = LinearOperator(matrix.shape, matvec=ilu.solve)
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    x, info = gmres(
        matrix, b, rtol=tol, restart=200, maxiter=ToleranceConstants.GMRES_MAX_ITERATIONS,
        M=preconditioner, callback=count, callback_type="pr_norm",
    )
    if info != 0:
        res = relative_residual(matrix, x, b)
        raise SolverError(f"GMRES did not converge (info={info}), relative residual {res:.3e}", res)
    return x, iterations


def solve_linear(
    matrix: csr_matrix,
    rhs: np.ndarray,
    tol: float = ToleranceConstants.SOLVER_RELATIVE_RESIDUAL,
    max_direct_unknowns: int = ToleranceConstants.DIRECT_MAX_UNKNOWNS,
) -> Tuple[np.ndarray, SolveReport]:
    """
    Solve A x = b to a relative residual of `tol`.

    Args:
        matrix: square system matrix
        rhs: right-hand side
        tol: relative residual to reach
        max_direct_unknowns: larger systems skip the LU factorisation

    Raises:
        SolverError: singular matrix, or the residual stays above `tol`
    """
    start = time.perf_counter()
    n = matrix.shape[0]
    refinement_steps, iterations, factor_nnz = 0, 0, 0
    if n > max_direct_unknowns:
        logger.info(f"{n} unknowns exceed the direct-solver limit {max_direct_unknowns}, using GMRES")
        x, iterations = _iterative(matrix, rhs, tol)
        method = "gmres"
    else:
        try:
            x, refinement_steps, factor_nnz = _direct(matrix, rhs, tol)
            method = "splu"
        except MemoryError:
            logger.warning(f"LU factorisation of {n} unknowns ran out of memory, falling back to GMRES")
            x, iterations = _iterative(matrix, rhs, tol)
            method = "gmres"
        except RuntimeError as e:
            raise SolverError(f"Sparse factorisation failed: {e}") from e

    if not np.all(np.isfinite(x)):
        raise SolverError("Solution contains non-finite values")
    res = relative_residual(matrix, x, rhs)
    if res > tol:
        raise SolverError(f"Relative residual {res:.3e} exceeds tolerance {tol:.1e}", res)

    report = SolveReport(
        relative_residual=res,
        method=method,
        refinement_steps=refinement_steps,
        iterations=iterations,
        nnz=int(matrix.nnz),
        factor_nnz=factor_nnz,
        n_unknowns=int(n),
        wall_time=time.perf_counter() - start,
    )
    return x, report


def solve(system: SparseSystem) -> Tuple[SolutionField, SolveReport]:
    """
    Solve an assembled system and unpack the nodal fields.

    Raises:
        SolverError: missing mean-pressure constraint, or see solve_linear
    """
    if not system.has_multiplier:
        raise SolverError("System lacks the mean-pressure constraint; the pressure is only fixed up to a constant")
    x, report = solve_linear(system.matrix, system.rhs)
    logger.debug(
        f"Solved {report.n_unknowns} unknowns with {report.method} in {report.wall_time:.2f}s, "
        f"relative residual {report.relative_residual:.2e}, {report.factor_nnz} factor nonzeros"
    )
    return SolutionField.from_vector(x, system.n_nodes), report

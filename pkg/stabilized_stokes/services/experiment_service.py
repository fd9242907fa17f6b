"""
Experiment Service - Orchestrates mesh, assembly, solve and analysis.

Handles single solves, refinement sweeps, gamma sweeps and the twin
PSPG/BVS comparison, writing every report through ReportService.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from stabilized_stokes.constants import FileConstants
from stabilized_stokes.fem.assembly import SolutionField, build_system
from stabilized_stokes.fem.linsolve import SolverError, solve
from stabilized_stokes.fem.mesh import Mesh, generate_structured
from stabilized_stokes.problems.benchmarks import BenchmarkCase, build_case
from stabilized_stokes.problems.stabilization import compute_delta, gl_restriction
from stabilized_stokes.schemas import (
    ComparisonReport,
    ConvergenceTable,
    ErrorReport,
    GLRestriction,
    Method,
    MomentumForm,
    RunConfig,
    SolveReport,
    StabilizationConfig,
    SweepReport,
)
from stabilized_stokes.services.analysis_service import AnalysisService
from stabilized_stokes.services.report_service import ReportService

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LevelResult:
    """Everything produced by one solve."""
    mesh: Mesh
    solution: SolutionField
    report: ErrorReport
    solve_report: SolveReport


class ExperimentService:
    """
    Service for running the benchmark experiments.

    Provides the single, convergence, comparison and gamma-sweep workflows.
    """

    def __init__(self, analysis: Optional[AnalysisService] = None):
        self.analysis = analysis or AnalysisService()

    # ========================================================================
    # Building Blocks
    # ========================================================================

    @staticmethod
    def load_case(config: RunConfig) -> BenchmarkCase:
        """
        Construct the configured benchmark case.

        Raises:
            ValueError: invalid case parameters
        """
        return build_case(config.experiment, **config.case_parameters)

    @staticmethod
    def check_gl_restriction(case: BenchmarkCase, stabilization: StabilizationConfig) -> Optional[GLRestriction]:
        """Evaluate the GL reaction restriction; logs a warning when the GL form violates it."""
        if stabilization.form != MomentumForm.GL:
            return None
        restriction = gl_restriction(case.data)
        if not restriction.satisfied:
            logger.warning(
                f"⚠️ GL form coercivity restriction violated for {case.name.value}: "
                f"sigma = {restriction.sigma:g} < 3 |grad nu|^2 / nu_min = {restriction.threshold:g}"
            )
        return restriction

    def solve_level(self, case: BenchmarkCase, stabilization: StabilizationConfig, level: int) -> LevelResult:
        """
        Mesh, assemble, solve and analyse one refinement level.

        Raises:
            SolverError: linear solve failed (message names the level)
            ValueError: invalid mesh or stabilisation data
        """
        mesh = generate_structured(case.length, case.height, level)
        delta = compute_delta(stabilization, mesh.h, case.data)
        logger.info(
            f"🚀 {case.name.value} {stabilization.method.value}-{stabilization.form.value} level {level}: "
            f"{3 * mesh.n_nodes} unknowns, h = {mesh.h:.4e}, delta = {delta:.4e}"
        )
        system = build_system(mesh, case.data, stabilization, delta)
        try:
            solution, solve_report = solve(system)
        except SolverError as e:
            logger.error(f"Solve failed for {case.name.value} level {level}: {e}", exc_info=True)
            raise SolverError(f"Level {level} of {case.name.value}: {e}", e.relative_residual) from e

        report = self.analysis.compute_errors(
            solution, case, mesh, delta=delta, relative_residual=solve_report.relative_residual
        )
        logger.info(
            f"Level {level} done in {solve_report.wall_time:.2f}s: err_u_h1 = {report.err_u_h1:.4e}, "
            f"err_p_l2 = {report.err_p_l2:.4e}, boundary layer = {report.boundary_layer_error:.4e}"
        )
        return LevelResult(mesh=mesh, solution=solution, report=report, solve_report=solve_report)

    def solve_levels(
        self,
        case: BenchmarkCase,
        stabilization: StabilizationConfig,
        levels: Sequence[int],
        workers: int = 1,
    ) -> List[LevelResult]:
        """Solve several levels, concurrently when workers > 1; results ordered as `levels`."""
        if workers <= 1 or len(levels) <= 1:
            return [self.solve_level(case, stabilization, level) for level in levels]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda level: self.solve_level(case, stabilization, level), levels))

    # ========================================================================
    # Workflows
    # ========================================================================

    def run_single(self, config: RunConfig) -> ErrorReport:
        """
        Solve the finest configured level and write run.json, the centreline
        table and optionally the VTK field.
        """
        case = self.load_case(config)
        stabilization = config.stabilization
        restriction = self.check_gl_restriction(case, stabilization)
        result = self.solve_level(case, stabilization, config.level_max)
        report = result.report.model_copy(update={"gl_restriction": restriction})

        reports = ReportService(config.output_dir)
        reports.write_run(report)
        reports.write_centreline_csv(report.centreline, result.mesh.level)
        if config.vtk:
            reports.write_solution_vtk(result.mesh, result.solution)
        return report

    def convergence_table(self, config: RunConfig) -> Tuple[ConvergenceTable, List[LevelResult]]:
        """Per-level errors and rates without writing anything."""
        case = self.load_case(config)
        stabilization = config.stabilization
        restriction = self.check_gl_restriction(case, stabilization)
        results = self.solve_levels(case, stabilization, config.levels, config.workers)
        table = ConvergenceTable(
            experiment=case.name.value,
            method=stabilization.method,
            form=stabilization.form,
            gamma=stabilization.gamma,
            rows=AnalysisService.with_rates([result.report for result in results]),
            gl_restriction=restriction,
        )
        return table, results

    def run_convergence(self, config: RunConfig) -> ConvergenceTable:
        """
        Refinement sweep over config.levels; writes convergence.csv,
        convergence.json and one centreline table per level.
        """
        table, results = self.convergence_table(config)
        self._write_table(ReportService(config.output_dir), table, results, config.vtk)
        summary = table.summary()
        logger.info(
            f"Convergence {table.experiment} {table.method.value}-{table.form.value}: "
            f"min rates u_l2 = {summary.min_rate_u_l2}, u_h1 = {summary.min_rate_u_h1}, p_l2 = {summary.min_rate_p_l2}"
        )
        return table

    def run_gamma_sweep(self, config: RunConfig, gammas: Sequence[float]) -> SweepReport:
        """One refinement sweep per gamma, each written to its own subdirectory."""
        if not gammas:
            raise ValueError("At least one gamma is required for a sweep")
        summaries = []
        for gamma in gammas:
            gamma_config = RunConfig.model_validate({
                **config.model_dump(),
                "gamma": gamma,
                "output_dir": config.output_dir / FileConstants.SWEEP_DIR_TEMPLATE.format(gamma=gamma),
            })
            table = self.run_convergence(gamma_config)
            summaries.append(table.summary())
        report = SweepReport(
            experiment=summaries[0].experiment, method=config.method, form=config.form, summaries=summaries
        )
        ReportService(config.output_dir).write_sweep(report)
        return report

    def run_compare(self, config: RunConfig) -> ComparisonReport:
        """
        Twin BVS and PSPG solves at the finest configured level, identical in
        everything but the method; writes compare.json and paired centreline tables.
        """
        case = self.load_case(config)
        results = {}
        for method in (Method.BVS, Method.PSPG):
            stabilization = config.model_copy(update={"method": method}).stabilization
            self.check_gl_restriction(case, stabilization)
            results[method] = self.solve_level(case, stabilization, config.level_max)

        bvs, pspg = results[Method.BVS].report, results[Method.PSPG].report
        ratio = None
        if bvs.boundary_layer_error and pspg.boundary_layer_error is not None:
            ratio = pspg.boundary_layer_error / bvs.boundary_layer_error
        report = ComparisonReport(
            experiment=case.name.value, gamma=config.gamma, level=config.level_max, bvs=bvs, pspg=pspg,
            boundary_layer_ratio=ratio,
        )

        reports = ReportService(config.output_dir)
        reports.write_comparison(report)
        for method, result in results.items():
            reports.write_centreline_csv(result.report.centreline, config.level_max, method=method.value)
        logger.info(f"Boundary-layer ratio PSPG/BVS at gamma = {config.gamma:g}: {ratio}")
        return report

    @staticmethod
    def _write_table(reports: ReportService, table: ConvergenceTable, results: List[LevelResult], vtk: bool) -> None:
        reports.write_convergence_csv(table)
        reports.write_convergence_summary(table)
        for row, result in zip(table.rows, results):
            reports.write_centreline_csv(row.centreline, result.mesh.level)
            if vtk:
                reports.write_solution_vtk(result.mesh, result.solution)

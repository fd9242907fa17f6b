"""
Report Service - Writes convergence tables, centreline tables and summaries.

CSV floats use a fixed 17-significant-digit scientific format so repeated
runs produce byte-identical files; undefined values are empty cells.
"""

import logging
from pathlib import Path
from typing import List, Optional

import pandas as pd

from stabilized_stokes.constants import FileConstants
from stabilized_stokes.fem.assembly import SolutionField
from stabilized_stokes.fem.mesh import Mesh
from stabilized_stokes.fem.vtk import write_vtk
from stabilized_stokes.schemas import (
    CentrelinePoint,
    ComparisonReport,
    ConvergenceTable,
    ErrorReport,
    SweepReport,
)

logger = logging.getLogger(__name__)


class ReportService:
    """
    Service for persisting run results under one output directory.
    """

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)

    def _path(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name

    @staticmethod
    def _write_csv(path: Path, frame: pd.DataFrame) -> Path:
        frame.to_csv(path, index=False, float_format=FileConstants.CSV_FLOAT_FORMAT, na_rep="", lineterminator="\n")
        return path

    # ========================================================================
    # CSV
    # ========================================================================

    def write_convergence_csv(self, table: ConvergenceTable) -> Path:
        """One row per level with the fixed convergence columns."""
        records = [row.model_dump(include=set(FileConstants.CONVERGENCE_COLUMNS)) for row in table.rows]
        frame = pd.DataFrame.from_records(records, columns=list(FileConstants.CONVERGENCE_COLUMNS))
        for column in FileConstants.CONVERGENCE_COLUMNS:
            if column not in ("level", "ndof"):
                frame[column] = frame[column].astype(float)
        path = self._write_csv(self._path(FileConstants.CONVERGENCE_CSV_NAME), frame)
        logger.info(f"Wrote convergence table to {path}")
        return path

    def write_centreline_csv(self, points: List[CentrelinePoint], level: int, method: Optional[str] = None) -> Path:
        """(x, p_h, p_exact) rows sorted by x."""
        if method is None:
            name = FileConstants.CENTRELINE_CSV_TEMPLATE.format(level=level)
        else:
            name = FileConstants.COMPARE_CENTRELINE_TEMPLATE.format(level=level, method=method.lower())
        frame = pd.DataFrame.from_records(
            [point.model_dump() for point in points], columns=list(FileConstants.CENTRELINE_COLUMNS)
        ).astype(float)
        path = self._write_csv(self._path(name), frame)
        logger.info(f"Wrote centreline pressure to {path}")
        return path

    @staticmethod
    def read_csv(path: Path) -> pd.DataFrame:
        """Read back a table written by this service; empty cells become NaN."""
        return pd.read_csv(path, float_precision="round_trip")

    # ========================================================================
    # JSON
    # ========================================================================

    def _write_json(self, name: str, model) -> Path:
        path = self._path(name)
        path.write_text(model.model_dump_json(indent=2), encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path

    def write_run(self, report: ErrorReport) -> Path:
        return self._write_json(FileConstants.SINGLE_JSON_NAME, report)

    def write_convergence_summary(self, table: ConvergenceTable) -> Path:
        return self._write_json(FileConstants.CONVERGENCE_JSON_NAME, table.summary())

    def write_comparison(self, report: ComparisonReport) -> Path:
        return self._write_json(FileConstants.COMPARE_JSON_NAME, report)

    def write_sweep(self, report: SweepReport) -> Path:
        return self._write_json(FileConstants.SWEEP_JSON_NAME, report)

    # ========================================================================
    # Fields
    # ========================================================================

    def write_solution_vtk(self, mesh: Mesh, solution: SolutionField) -> Path:
        path = write_vtk(self._path(FileConstants.VTK_TEMPLATE.format(level=mesh.level)), mesh, solution)
        logger.info(f"Wrote solution field to {path}")
        return path

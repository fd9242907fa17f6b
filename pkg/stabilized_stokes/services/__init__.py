from stabilized_stokes.services.analysis_service import AnalysisService, convergence_rate, triple_norm
from stabilized_stokes.services.experiment_service import ExperimentService, LevelResult
from stabilized_stokes.services.report_service import ReportService

__all__ = [
    "AnalysisService",
    "convergence_rate",
    "triple_norm",
    "ExperimentService",
    "LevelResult",
    "ReportService",
]

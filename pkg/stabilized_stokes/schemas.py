"""
Pydantic schemas for the stabilised Stokes solver.

Configuration models validated on construction, plus the report models the
services layer produces and serialises.
"""

from enum import Enum
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator

from stabilized_stokes.constants import ExperimentConstants


# ============================================================================
# Enums
# ============================================================================

class Method(str, Enum):
    """Pressure stabilisation method."""
    PSPG = "PSPG"
    BVS = "BVS"


class MomentumForm(str, Enum):
    """Form of the viscous term in the momentum equation."""
    SD = "SD"  # stress divergence
    GL = "GL"  # generalised Laplacian


class DeltaFormula(str, Enum):
    """Which bound the stabilisation parameter is computed from."""
    EXPERIMENT = "experiment"
    LEMMA_SD = "lemma_sd"
    LEMMA_GL = "lemma_gl"


class ExperimentName(str, Enum):
    """Benchmark cases shipped with the solver."""
    EXP1 = "exp1"
    EXP2 = "exp2"
    COUETTE = "couette"
    POLYNOMIAL = "polynomial"
    UNIFORM = "uniform"


# ============================================================================
# Configuration Models
# ============================================================================

class StabilizationConfig(BaseModel):
    """Stabilisation method, momentum form and parameter choice."""
    model_config = ConfigDict(frozen=True)

    method: Method = Method.BVS
    form: MomentumForm = MomentumForm.SD
    gamma: float = Field(1.0, gt=0, description="Scaling of the stabilisation parameter")
    delta_formula: DeltaFormula = DeltaFormula.EXPERIMENT
    C: float = Field(1.0, gt=0, description="Trace-constant surrogate in the lemma bounds")
    reaction_in_residual: Optional[bool] = Field(None, validate_default=True)
    include_viscous_residual: bool = Field(
        True, description="PSPG only: keep the surviving 2 sym(grad u) grad(nu) term"
    )

    @field_validator("reaction_in_residual")
    @classmethod
    def default_reaction_handling(cls, v: Optional[bool], info: ValidationInfo) -> bool:
        """PSPG keeps sigma*u in the residual, BVS moves it to a boundary forcing."""
        if v is not None:
            return v
        return info.data.get("method") == Method.PSPG


class RunConfig(BaseModel):
    """One experiment invocation of the command-line driver."""
    experiment: ExperimentName = ExperimentName.EXP1
    custom_file: Optional[Path] = None
    method: Method = Method.BVS
    form: MomentumForm = MomentumForm.SD
    gamma: float = Field(1.0, gt=0)
    delta_formula: DeltaFormula = DeltaFormula.EXPERIMENT
    C: float = Field(1.0, gt=0)
    reaction_in_residual: Optional[bool] = None
    include_viscous_residual: bool = True
    level_min: int = Field(3, ge=ExperimentConstants.MIN_LEVEL, le=ExperimentConstants.MAX_LEVEL)
    level_max: int = Field(3, ge=ExperimentConstants.MIN_LEVEL, le=ExperimentConstants.MAX_LEVEL)
    output_dir: Path = Path("results")
    vtk: bool = False
    workers: int = Field(1, ge=1)
    case_parameters: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_level_range(self) -> "RunConfig":
        """Ensure the level range is not inverted."""
        if self.level_min > self.level_max:
            raise ValueError(f"level_min ({self.level_min}) exceeds level_max ({self.level_max})")
        return self

    @property
    def levels(self) -> List[int]:
        return list(range(self.level_min, self.level_max + 1))

    @property
    def stabilization(self) -> StabilizationConfig:
        return StabilizationConfig(
            method=self.method,
            form=self.form,
            gamma=self.gamma,
            delta_formula=self.delta_formula,
            C=self.C,
            reaction_in_residual=self.reaction_in_residual,
            include_viscous_residual=self.include_viscous_residual,
        )


# ============================================================================
# Report Models
# ============================================================================

class SolveReport(BaseModel):
    """Outcome of a linear solve."""
    relative_residual: float = Field(..., ge=0)
    method: str
    refinement_steps: int = 0
    iterations: int = 0
    nnz: int
    factor_nnz: int = 0
    n_unknowns: int
    wall_time: float


class CentrelinePoint(BaseModel):
    """Nodal pressure on y = H/2."""
    x: float
    p_h: float
    p_exact: float


class GLRestriction(BaseModel):
    """Outcome of the reaction-coefficient check for the GL form."""
    satisfied: bool
    sigma: float
    threshold: float


class ErrorReport(BaseModel):
    """Discretisation errors and diagnostics for one solve."""
    level: Optional[int] = None
    h: float
    ndof: int
    delta: float = 0.0
    err_u_l2: float = Field(..., ge=0)
    err_u_h1: float = Field(..., ge=0)
    err_p_l2: float = Field(..., ge=0)
    err_p_h1: float = Field(..., ge=0)
    err_triple: float = Field(..., ge=0)
    rate_u_l2: Optional[float] = None
    rate_u_h1: Optional[float] = None
    rate_p_l2: Optional[float] = None
    boundary_layer_error: Optional[float] = None
    midchannel_error: Optional[float] = None
    mean_pressure: Optional[float] = None
    relative_residual: Optional[float] = None
    gl_restriction: Optional[GLRestriction] = None
    centreline: List[CentrelinePoint] = Field(default_factory=list)


class ConvergenceSummary(BaseModel):
    """Minimum observed rates of a refinement sweep."""
    experiment: str
    method: Method
    form: MomentumForm
    gamma: float
    levels: List[int]
    min_rate_u_l2: Optional[float] = None
    min_rate_u_h1: Optional[float] = None
    min_rate_p_l2: Optional[float] = None
    gl_restriction: Optional[GLRestriction] = None


class ConvergenceTable(BaseModel):
    """Per-level error rows of a refinement sweep."""
    experiment: str
    method: Method
    form: MomentumForm
    gamma: float
    rows: List[ErrorReport]
    gl_restriction: Optional[GLRestriction] = None

    def min_rate(self, field: str) -> Optional[float]:
        """Smallest observed rate of `field` (e.g. "rate_u_h1"), None if no rate is defined."""
        rates = [getattr(row, field) for row in self.rows if getattr(row, field) is not None]
        return min(rates) if rates else None

    def summary(self) -> ConvergenceSummary:
        return ConvergenceSummary(
            experiment=self.experiment,
            method=self.method,
            form=self.form,
            gamma=self.gamma,
            levels=[row.level for row in self.rows if row.level is not None],
            min_rate_u_l2=self.min_rate("rate_u_l2"),
            min_rate_u_h1=self.min_rate("rate_u_h1"),
            min_rate_p_l2=self.min_rate("rate_p_l2"),
            gl_restriction=self.gl_restriction,
        )


class SweepReport(BaseModel):
    """One convergence summary per stabilisation scaling gamma."""
    experiment: str
    method: Method
    form: MomentumForm
    summaries: List[ConvergenceSummary]


class ComparisonReport(BaseModel):
    """Twin BVS/PSPG runs differing only in the stabilisation method."""
    experiment: str
    gamma: float
    level: int
    bvs: ErrorReport
    pspg: ErrorReport
    boundary_layer_ratio: Optional[float] = None

"""
Stabilisation parameter and the reaction restriction of the GL form.
"""

import logging
import math

from stabilized_stokes.problems.benchmarks import ProblemData
from stabilized_stokes.schemas import DeltaFormula, GLRestriction, StabilizationConfig

logger = logging.getLogger(__name__)


def _nonreactive_bound(h: float, data: ProblemData, C: float) -> float:
    nu = data.viscosity
    return (nu.nu_min * h**2 / 12.0) / (h**2 * nu.grad_inf**2 + C * nu.nu_max**2)


def compute_delta(config: StabilizationConfig, h: float, data: ProblemData) -> float:
    """
    Compute delta from the selected formula.

    experiment: gamma * (nu_min h^2 / 12) / (h^2 |grad nu|^2 + nu_max^2)
    lemma_sd:   gamma * min(1 / (3 sigma), nonreactive bound with C), the
                reaction branch only when sigma * u stays in the residual
    lemma_gl:   gamma * nonreactive bound with C

    Args:
        config: stabilisation settings
        h: mesh size (largest element size)
        data: problem data carrying the viscosity bounds and sigma

    Returns:
        delta > 0

    Raises:
        ValueError: h <= 0, or lemma_sd with the reaction branch requested and sigma = 0
    """
    if not h > 0:
        raise ValueError(f"Mesh size must be positive, got {h}")

    if config.delta_formula == DeltaFormula.EXPERIMENT:
        delta = config.gamma * _nonreactive_bound(h, data, 1.0)
    elif config.delta_formula == DeltaFormula.LEMMA_SD:
        bound = _nonreactive_bound(h, data, config.C)
        if config.reaction_in_residual:
            if data.sigma == 0:
                raise ValueError(
                    "lemma_sd reaction branch 1/(3 sigma) is undefined for sigma = 0; "
                    "set reaction_in_residual = false to drop the reaction term from the residual"
                )
            bound = min(1.0 / (3.0 * data.sigma), bound)
        delta = config.gamma * bound
    else:
        delta = config.gamma * _nonreactive_bound(h, data, config.C)

    if not (math.isfinite(delta) and delta > 0):
        raise ValueError(f"Stabilisation parameter is not positive and finite: {delta}")
    logger.debug(f"delta = {delta:.6e} ({config.delta_formula.value}, h = {h:.4e}, gamma = {config.gamma})")
    return delta


def gl_restriction(data: ProblemData) -> GLRestriction:
    """Check sigma >= 3 |grad nu|^2 / nu_min, required for coercivity of the GL form."""
    nu = data.viscosity
    threshold = 3.0 * nu.grad_inf**2 / nu.nu_min
    return GLRestriction(satisfied=data.sigma >= threshold, sigma=data.sigma, threshold=threshold)

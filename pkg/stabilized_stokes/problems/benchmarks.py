"""
Continuous problem data and the analytic benchmark cases.

Each case carries its exact velocity, pressure and their derivatives so the
strong residual, the error norms and the consistency oracle can be evaluated
at arbitrary points. Derivative conventions: velocity gradient G[i, j] =
d u_i / d x_j, velocity Hessian H[i, j, k] = d^2 u_i / (d x_j d x_k).
"""

import inspect
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np

from stabilized_stokes.constants import ExperimentConstants
from stabilized_stokes.problems.viscosity import (
    ConstantViscosity,
    LinearViscosity,
    QuadraticViscosity,
    ViscosityField,
)
from stabilized_stokes.schemas import ExperimentName

logger = logging.getLogger(__name__)

VectorField = Callable[[np.ndarray, np.ndarray], np.ndarray]
ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProblemData:
    """Reaction coefficient, viscosity, body force and Dirichlet data."""
    sigma: float
    viscosity: ViscosityField
    force: VectorField
    dirichlet: VectorField

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"Reaction coefficient must be non-negative, got {self.sigma}")


@dataclass(frozen=True)
class BenchmarkCase:
    """A problem on (0, length) x (0, height) with a known exact solution."""
    name: ExperimentName
    length: float
    height: float
    data: ProblemData
    exact_velocity: VectorField
    exact_velocity_gradient: Callable[[np.ndarray, np.ndarray], np.ndarray]
    exact_velocity_hessian: Callable[[np.ndarray, np.ndarray], np.ndarray]
    exact_pressure: ScalarField
    exact_pressure_gradient: VectorField
    parameters: Dict[str, float] = field(default_factory=dict)


# ============================================================================
# Shear-flow Helpers
# ============================================================================

def _shear_velocity(profile: Callable) -> VectorField:
    def velocity(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.stack([profile(y), np.zeros_like(y)], axis=-1)
    return velocity


def _shear_gradient(derivative: Callable) -> Callable:
    def gradient(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        G = np.zeros(y.shape + (2, 2))
        G[..., 0, 1] = derivative(y)
        return G
    return gradient


def _shear_hessian(second_derivative: Callable) -> Callable:
    def hessian(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        H = np.zeros(y.shape + (2, 2, 2))
        H[..., 0, 1, 1] = second_derivative(y)
        return H
    return hessian


def _linear_pressure(kappa: float, length: float) -> Tuple[ScalarField, VectorField]:
    def pressure(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return kappa * (0.5 * length - x)

    def pressure_gradient(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.stack([np.full(x.shape, -kappa), np.zeros(x.shape)], axis=-1)

    return pressure, pressure_gradient


def _zero_vector(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return np.zeros(x.shape + (2,))


def _zero_scalar(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return np.zeros(x.shape)


# ============================================================================
# Experiment 1: reaction-free channel, nu = a y + b
# ============================================================================

def _exp1_profile(a: float, b: float, kappa: float, height: float):
    c = b / a

    def check(y):
        if np.any(y + c <= 0):
            raise ValueError(f"Logarithmic profile undefined: y + b/a <= 0 for b/a = {c}")

    def u(y):
        check(y)
        return (kappa / a) * (height - y + c * np.log((y + c) / (height + c)))

    def du(y):
        check(y)
        return (kappa / a) * (-1.0 + c / (y + c))

    def d2u(y):
        check(y)
        return -(kappa / a) * c / (y + c) ** 2

    return u, du, d2u


def exact_solution_exp1(x, y, a: float, b: float, kappa: float, H: float, L: float):
    """
    Exact (u, p) of the reaction-free channel flow with nu = a y + b.

    Returns:
        velocity (..., 2) and pressure (...)

    Raises:
        ValueError: y + b/a <= 0
    """
    u, _, _ = _exp1_profile(a, b, kappa, H)
    pressure, _ = _linear_pressure(kappa, L)
    return _shear_velocity(u)(x, y), pressure(x, y)


def exp1_case(
    a: float = ExperimentConstants.EXP1_A,
    b: float = ExperimentConstants.EXP1_B,
    kappa: float = ExperimentConstants.EXP1_KAPPA,
    sigma: float = ExperimentConstants.EXP1_SIGMA,
    length: float = ExperimentConstants.CHANNEL_LENGTH,
    height: float = ExperimentConstants.CHANNEL_HEIGHT,
) -> BenchmarkCase:
    """
    The closed form solves the reaction-free equations with f = 0; a positive
    sigma is compensated by the manufactured force (sigma u_x, 0).
    """
    if a <= 0 or b <= 0 or kappa <= 0:
        raise ValueError(f"exp1 needs a, b, kappa > 0, got a={a}, b={b}, kappa={kappa}")
    u, du, d2u = _exp1_profile(a, b, kappa, height)
    velocity = _shear_velocity(u)

    def force(x, y):
        return sigma * velocity(x, y)

    pressure, pressure_gradient = _linear_pressure(kappa, length)
    data = ProblemData(
        sigma=sigma,
        viscosity=LinearViscosity(a=a, b=b, height=height),
        force=force if sigma != 0 else _zero_vector,
        dirichlet=velocity,
    )
    return BenchmarkCase(
        name=ExperimentName.EXP1,
        length=length,
        height=height,
        data=data,
        exact_velocity=velocity,
        exact_velocity_gradient=_shear_gradient(du),
        exact_velocity_hessian=_shear_hessian(d2u),
        exact_pressure=pressure,
        exact_pressure_gradient=pressure_gradient,
        parameters={"a": a, "b": b, "kappa": kappa, "sigma": sigma},
    )


# ============================================================================
# Experiment 2: generalised Stokes channel, nu = (y + b)^2
# ============================================================================

def exp2_beta(b: float, height: float) -> float:
    return 2.0 * (height + b) / b**3 + 1.0 / (height + b) ** 2


def _exp2_profile(b: float, kappa: float, height: float):
    beta = exp2_beta(b, height)

    def u(y):
        s = y + b
        return 0.5 * kappa * (1.0 - 2.0 * s / (beta * b**3) - 1.0 / (beta * s**2))

    def du(y):
        s = y + b
        return 0.5 * kappa * (-2.0 / (beta * b**3) + 2.0 / (beta * s**3))

    def d2u(y):
        s = y + b
        return -3.0 * kappa / (beta * s**4)

    return u, du, d2u


def exact_solution_exp2(x, y, b: float, kappa: float, H: float, L: float):
    """Exact (u, p) of the generalised Stokes channel flow with nu = (y + b)^2, sigma = 2."""
    u, _, _ = _exp2_profile(b, kappa, H)
    pressure, _ = _linear_pressure(kappa, L)
    return _shear_velocity(u)(x, y), pressure(x, y)


def exp2_case(
    b: float = ExperimentConstants.EXP2_B,
    kappa: float = ExperimentConstants.EXP2_KAPPA,
    sigma: float = ExperimentConstants.EXP2_SIGMA,
    length: float = ExperimentConstants.CHANNEL_LENGTH,
    height: float = ExperimentConstants.CHANNEL_HEIGHT,
) -> BenchmarkCase:
    """
    The closed form solves the equations with f = 0 for sigma = 2; any other
    sigma is compensated by the manufactured force ((sigma - 2) u_x, 0).
    """
    u, du, d2u = _exp2_profile(b, kappa, height)
    velocity = _shear_velocity(u)

    def force(x, y):
        return (sigma - ExperimentConstants.EXP2_SIGMA) * velocity(x, y)

    pressure, pressure_gradient = _linear_pressure(kappa, length)
    data = ProblemData(
        sigma=sigma,
        viscosity=QuadraticViscosity(b=b, height=height),
        force=force,
        dirichlet=velocity,
    )
    return BenchmarkCase(
        name=ExperimentName.EXP2,
        length=length,
        height=height,
        data=data,
        exact_velocity=velocity,
        exact_velocity_gradient=_shear_gradient(du),
        exact_velocity_hessian=_shear_hessian(d2u),
        exact_pressure=pressure,
        exact_pressure_gradient=pressure_gradient,
        parameters={"b": b, "kappa": kappa, "sigma": sigma, "beta": exp2_beta(b, height)},
    )


# ============================================================================
# Auxiliary Cases
# ============================================================================

def couette_case(nu: float = 1.0, length: float = 1.0, height: float = 1.0) -> BenchmarkCase:
    """u = (y, 0), p = 0 with constant viscosity; lies in the P1 space."""
    velocity = _shear_velocity(lambda y: y)
    data = ProblemData(sigma=0.0, viscosity=ConstantViscosity(nu), force=_zero_vector, dirichlet=velocity)
    return BenchmarkCase(
        name=ExperimentName.COUETTE,
        length=length,
        height=height,
        data=data,
        exact_velocity=velocity,
        exact_velocity_gradient=_shear_gradient(np.ones_like),
        exact_velocity_hessian=_shear_hessian(np.zeros_like),
        exact_pressure=_zero_scalar,
        exact_pressure_gradient=_zero_vector,
        parameters={"nu": nu, "sigma": 0.0},
    )


def polynomial_case(nu: float = 1.0, sigma: float = 1.0, length: float = 1.0, height: float = 1.0) -> BenchmarkCase:
    """Manufactured u = (y^2, x^2), p = (x - L/2)(y - H/2) with matching body force."""

    def velocity(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.stack([y**2, x**2], axis=-1)

    def gradient(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        G = np.zeros(x.shape + (2, 2))
        G[..., 0, 1] = 2.0 * y
        G[..., 1, 0] = 2.0 * x
        return G

    def hessian(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        H = np.zeros(x.shape + (2, 2, 2))
        H[..., 0, 1, 1] = 2.0
        H[..., 1, 0, 0] = 2.0
        return H

    def pressure(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return (x - 0.5 * length) * (y - 0.5 * height)

    def pressure_gradient(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.stack([y - 0.5 * height, x - 0.5 * length], axis=-1)

    def force(x, y):
        # sigma u - nu lap(u) + grad p, with lap(u) = (2, 2)
        return sigma * velocity(x, y) - 2.0 * nu + pressure_gradient(x, y)

    data = ProblemData(sigma=sigma, viscosity=ConstantViscosity(nu), force=force, dirichlet=velocity)
    return BenchmarkCase(
        name=ExperimentName.POLYNOMIAL,
        length=length,
        height=height,
        data=data,
        exact_velocity=velocity,
        exact_velocity_gradient=gradient,
        exact_velocity_hessian=hessian,
        exact_pressure=pressure,
        exact_pressure_gradient=pressure_gradient,
        parameters={"nu": nu, "sigma": sigma},
    )


def uniform_case(
    viscosity: ViscosityField,
    c: float = 1.0,
    sigma: float = 0.0,
    length: float = ExperimentConstants.CHANNEL_LENGTH,
    height: float = ExperimentConstants.CHANNEL_HEIGHT,
) -> BenchmarkCase:
    """Patch test: u = (c, 0), p = 0 for any viscosity, f = (sigma c, 0)."""
    velocity = _shear_velocity(lambda y: np.full(np.shape(y), float(c)))

    def force(x, y):
        return sigma * velocity(x, y)

    data = ProblemData(sigma=sigma, viscosity=viscosity, force=force, dirichlet=velocity)
    return BenchmarkCase(
        name=ExperimentName.UNIFORM,
        length=length,
        height=height,
        data=data,
        exact_velocity=velocity,
        exact_velocity_gradient=_shear_gradient(np.zeros_like),
        exact_velocity_hessian=_shear_hessian(np.zeros_like),
        exact_pressure=_zero_scalar,
        exact_pressure_gradient=_zero_vector,
        parameters={"c": c, "sigma": sigma},
    )


_CASE_FACTORIES = {
    ExperimentName.EXP1: exp1_case,
    ExperimentName.EXP2: exp2_case,
    ExperimentName.COUETTE: couette_case,
    ExperimentName.POLYNOMIAL: polynomial_case,
    ExperimentName.UNIFORM: uniform_case,
}


def case_parameter_names(name: ExperimentName) -> Tuple[str, ...]:
    """Keyword parameters accepted by build_case for the named case."""
    names = tuple(inspect.signature(_CASE_FACTORIES[ExperimentName(name)]).parameters)
    if ExperimentName(name) == ExperimentName.UNIFORM:
        # the viscosity object is chosen by profile number
        return ("profile",) + tuple(n for n in names if n != "viscosity")
    return names


def build_case(name: ExperimentName, **parameters: float) -> BenchmarkCase:
    """
    Construct a shipped case, overriding its default parameters.

    Raises:
        ValueError: unknown parameter for the case
    """
    name = ExperimentName(name)
    try:
        if name == ExperimentName.EXP1:
            return exp1_case(**parameters)
        if name == ExperimentName.EXP2:
            return exp2_case(**parameters)
        if name == ExperimentName.COUETTE:
            return couette_case(**parameters)
        if name == ExperimentName.POLYNOMIAL:
            return polynomial_case(**parameters)
        # profile 1 borrows the exp1 viscosity, profile 2 the exp2 one
        parameters = dict(parameters)
        profile = int(parameters.pop("profile", 1))
        height = parameters.get("height", ExperimentConstants.CHANNEL_HEIGHT)
        if profile == 1:
            viscosity = LinearViscosity(a=ExperimentConstants.EXP1_A, b=ExperimentConstants.EXP1_B, height=height)
        elif profile == 2:
            viscosity = QuadraticViscosity(b=ExperimentConstants.EXP2_B, height=height)
        else:
            raise ValueError(f"Unknown viscosity profile {profile} for the uniform case; choose 1 or 2")
        return uniform_case(viscosity, **parameters)
    except TypeError as e:
        raise ValueError(f"Invalid parameters for case '{name.value}': {e}") from e


# ============================================================================
# Strong Residual
# ============================================================================

def strong_residual(case: BenchmarkCase, x, y) -> Tuple[np.ndarray, np.ndarray]:
    """
    Residuals of the strong equations at points (x, y).

    Returns:
        momentum residual sigma u - div(2 nu sym(grad u)) + grad p - f, shape (..., 2),
        and div u, shape (...)
    """
    data = case.data
    u = case.exact_velocity(x, y)
    G = case.exact_velocity_gradient(x, y)
    H = case.exact_velocity_hessian(x, y)
    nu = data.viscosity.value(x, y)
    grad_nu = data.viscosity.gradient(x, y)

    # div(2 nu sym(grad u)) = 2 sym(grad u) grad nu + nu (lap u + grad div u)
    sym2 = G + np.swapaxes(G, -1, -2)
    laplacian = np.einsum("...ijj->...i", H)
    grad_div = np.einsum("...jji->...i", H)
    stress_div = np.einsum("...ij,...j->...i", sym2, grad_nu) + nu[..., None] * (laplacian + grad_div)

    momentum = data.sigma * u - stress_div + case.exact_pressure_gradient(x, y) - data.force(x, y)
    divergence = np.einsum("...ii->...", G)
    return momentum, divergence

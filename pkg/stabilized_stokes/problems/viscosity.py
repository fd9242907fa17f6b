"""
Analytic viscosity fields with certified bounds over the channel.

Bounds are supplied in closed form per field (not sampled): they feed the
stabilisation parameter and the triple norm directly.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np


class ViscosityField(ABC):
    """nu(x, y) with gradient and bounds nu_min <= nu <= nu_max, |grad nu| <= grad_inf."""

    nu_min: float
    nu_max: float
    grad_inf: float

    @abstractmethod
    def value(self, x, y) -> np.ndarray:
        ...

    @abstractmethod
    def gradient(self, x, y) -> np.ndarray:
        """Gradient with a trailing axis of length 2."""

    @property
    def is_constant(self) -> bool:
        return self.grad_inf == 0.0


@dataclass(frozen=True)
class ConstantViscosity(ViscosityField):
    nu: float

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError(f"Viscosity must be positive, got {self.nu}")

    @property
    def nu_min(self) -> float:
        return self.nu

    @property
    def nu_max(self) -> float:
        return self.nu

    @property
    def grad_inf(self) -> float:
        return 0.0

    def value(self, x, y):
        return np.full(np.broadcast(x, y).shape, self.nu)

    def gradient(self, x, y):
        return np.zeros(np.broadcast(x, y).shape + (2,))


@dataclass(frozen=True)
class LinearViscosity(ViscosityField):
    """nu = a * y + b on 0 <= y <= height."""
    a: float
    b: float
    height: float

    def __post_init__(self):
        if min(self.b, self.a * self.height + self.b) <= 0:
            raise ValueError(f"nu = {self.a} y + {self.b} is not positive on [0, {self.height}]")

    @property
    def nu_min(self) -> float:
        return min(self.b, self.a * self.height + self.b)

    @property
    def nu_max(self) -> float:
        return max(self.b, self.a * self.height + self.b)

    @property
    def grad_inf(self) -> float:
        return abs(self.a)

    def value(self, x, y):
        x, y = np.broadcast_arrays(x, y)
        return self.a * y + self.b

    def gradient(self, x, y):
        x, y = np.broadcast_arrays(x, y)
        return np.stack([np.zeros_like(y, dtype=float), np.full(y.shape, float(self.a))], axis=-1)


@dataclass(frozen=True)
class QuadraticViscosity(ViscosityField):
    """nu = (y + b)^2 on 0 <= y <= height, b > 0."""
    b: float
    height: float

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError(f"Quadratic viscosity needs b > 0, got {self.b}")

    @property
    def nu_min(self) -> float:
        return self.b**2

    @property
    def nu_max(self) -> float:
        return (self.height + self.b) ** 2

    @property
    def grad_inf(self) -> float:
        return 2.0 * (self.height + self.b)

    def value(self, x, y):
        x, y = np.broadcast_arrays(x, y)
        return (y + self.b) ** 2

    def gradient(self, x, y):
        x, y = np.broadcast_arrays(x, y)
        return np.stack([np.zeros_like(y, dtype=float), 2.0 * (y + self.b)], axis=-1)

"""
P1 shape functions and Gaussian quadrature on triangles and segments.

Triangle rules live on the reference triangle (0,0), (1,0), (0,1) with
coordinates (xi, eta); barycentric coordinates are (1 - xi - eta, xi, eta)
and weights include the reference area 1/2. Segment rules live on [0, 1].
"""

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from stabilized_stokes.constants import QuadratureConstants, ToleranceConstants

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureRule:
    """Points, positive weights and the polynomial degree integrated exactly."""
    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def n_points(self) -> int:
        return len(self.weights)

    @property
    def barycentric(self) -> np.ndarray:
        """Barycentric coordinates (n, 3) of triangle points; P1 shape values at the points."""
        xi, eta = self.points[:, 0], self.points[:, 1]
        return np.column_stack([1.0 - xi - eta, xi, eta])


@dataclass(frozen=True)
class P1Element:
    """Geometry of a single linear triangle."""
    coords: np.ndarray
    gradients: np.ndarray
    area: float


def _gauss_legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule mapped to [0, 1]."""
    s, w = leggauss(n)
    return 0.5 * (s + 1.0), 0.5 * w


def _collapsed_triangle_rule(degree: int) -> QuadratureRule:
    """
    Conical product rule: Gauss-Legendre on the square collapsed onto the triangle.

    xi = s, eta = (1 - s) t with Jacobian (1 - s); a degree-d polynomial becomes
    degree d + 1 in s, so ceil((d + 2) / 2) points per direction are exact.
    """
    n = (degree + 3) // 2
    s, ws = _gauss_legendre_unit(n)
    t, wt = _gauss_legendre_unit(n)
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(ws * (1.0 - s), wt)
    points = np.column_stack([S.ravel(), ((1.0 - S) * T).ravel()])
    return QuadratureRule(points=points, weights=W.ravel(), degree=degree)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """
    Quadrature rule on the reference triangle.

    Args:
        degree: One of 1, 2, 4, 8

    Returns:
        Rule integrating polynomials up to `degree` exactly

    Raises:
        ValueError: unsupported degree
    """
    if degree not in QuadratureConstants.TRIANGLE_DEGREES:
        raise ValueError(
            f"Unsupported triangle rule degree {degree}; "
            f"choose one of {QuadratureConstants.TRIANGLE_DEGREES}"
        )
    if degree == 1:
        return QuadratureRule(points=np.array([[1.0 / 3.0, 1.0 / 3.0]]), weights=np.array([0.5]), degree=1)
    if degree == 2:
        # Edge-midpoint-adjacent 3-point rule
        points = np.array([[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]])
        return QuadratureRule(points=points, weights=np.full(3, 1.0 / 6.0), degree=2)
    return _collapsed_triangle_rule(degree)


@lru_cache(maxsize=None)
def segment_rule(degree: int) -> QuadratureRule:
    """
    Gauss-Legendre rule on [0, 1].

    Args:
        degree: One of 1, 3, 5, 9

    Raises:
        ValueError: unsupported degree
    """
    if degree not in QuadratureConstants.SEGMENT_DEGREES:
        raise ValueError(
            f"Unsupported segment rule degree {degree}; "
            f"choose one of {QuadratureConstants.SEGMENT_DEGREES}"
        )
    points, weights = _gauss_legendre_unit((degree + 1) // 2)
    return QuadratureRule(points=points, weights=weights, degree=degree)


def p1_gradients_batch(coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Constant gradients of the barycentric coordinates for many triangles.

    Args:
        coords: (m, 3, 2) vertex coordinates

    Returns:
        gradients (m, 3, 2) and signed areas (m,)

    Raises:
        ValueError: any triangle with (numerically) zero area
    """
    x = coords[..., 0]
    y = coords[..., 1]
    twice_area = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])

    edge_sq = np.max(np.sum((coords - np.roll(coords, 1, axis=1)) ** 2, axis=2), axis=1)
    degenerate = np.abs(twice_area) <= ToleranceConstants.DEGENERATE_AREA_TOL * edge_sq
    if np.any(degenerate):
        raise ValueError(f"Degenerate triangle(s) with zero area: indices {np.flatnonzero(degenerate)[:10].tolist()}")

    grads = np.empty(coords.shape)
    grads[:, 0, 0] = y[:, 1] - y[:, 2]
    grads[:, 0, 1] = x[:, 2] - x[:, 1]
    grads[:, 1, 0] = y[:, 2] - y[:, 0]
    grads[:, 1, 1] = x[:, 0] - x[:, 2]
    grads[:, 2, 0] = y[:, 0] - y[:, 1]
    grads[:, 2, 1] = x[:, 1] - x[:, 0]
    grads /= twice_area[:, None, None]
    return grads, 0.5 * twice_area


def p1_gradients(triangle: np.ndarray) -> np.ndarray:
    """Gradients (3, 2) of the three P1 shape functions on one triangle (3, 2)."""
    grads, _ = p1_gradients_batch(np.asarray(triangle, dtype=float)[None])
    return grads[0]


def p1_element(triangle: np.ndarray) -> P1Element:
    coords = np.asarray(triangle, dtype=float)
    grads, area = p1_gradients_batch(coords[None])
    return P1Element(coords=coords, gradients=grads[0], area=float(area[0]))


def map_to_triangles(coords: np.ndarray, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
    """
    Physical quadrature points and weights on many triangles.

    Args:
        coords: (m, 3, 2) vertex coordinates
        rule: reference triangle rule

    Returns:
        points (m, nq, 2) and weights (m, nq); weights carry the Jacobian 2 * area
    """
    lam = rule.barycentric
    points = np.einsum("qa,mak->mqk", lam, coords)
    x, y = coords[..., 0], coords[..., 1]
    jac = np.abs((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    return points, jac[:, None] * rule.weights[None, :]


def map_to_segments(start: np.ndarray, end: np.ndarray, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
    """
    Physical points (m, nq, 2) and weights (m, nq) on segments start -> end.

    Weights carry the edge length.
    """
    t = rule.points
    points = start[:, None, :] * (1.0 - t)[None, :, None] + end[:, None, :] * t[None, :, None]
    length = np.linalg.norm(end - start, axis=1)
    return points, length[:, None] * rule.weights[None, :]

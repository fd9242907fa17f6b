import numpy as np
import pytest

from stabilized_stokes.problems.viscosity import ConstantViscosity, LinearViscosity, QuadraticViscosity


@pytest.fixture(params=["constant", "linear", "quadratic"])
def viscosity(request):
    if request.param == "constant":
        return ConstantViscosity(0.7)
    if request.param == "linear":
        return LinearViscosity(a=1.0, b=1.0, height=1.0)
    return QuadraticViscosity(b=1.0, height=1.0)


@pytest.fixture
def points():
    rng = np.random.default_rng(11)
    return rng.uniform(0.0, 5.0, 100), rng.uniform(0.0, 1.0, 100)


def test_bounds_hold_on_channel(viscosity, points):
    x, y = points
    nu = viscosity.value(x, y)
    grad = viscosity.gradient(x, y)
    assert np.all(nu >= viscosity.nu_min - 1e-14)
    assert np.all(nu <= viscosity.nu_max + 1e-14)
    assert np.all(np.linalg.norm(grad, axis=-1) <= viscosity.grad_inf + 1e-14)


def test_gradient_matches_finite_differences(viscosity, points):
    x, y = points
    step = 1e-6
    fd = np.stack([
        (viscosity.value(x + step, y) - viscosity.value(x - step, y)) / (2 * step),
        (viscosity.value(x, y + step) - viscosity.value(x, y - step)) / (2 * step),
    ], axis=-1)
    np.testing.assert_allclose(viscosity.gradient(x, y), fd, rtol=1e-5, atol=1e-8)


def test_shipped_field_bounds():
    linear = LinearViscosity(a=1.0, b=1.0, height=1.0)
    assert (linear.nu_min, linear.nu_max, linear.grad_inf) == (1.0, 2.0, 1.0)
    quadratic = QuadraticViscosity(b=1.0, height=1.0)
    assert (quadratic.nu_min, quadratic.nu_max, quadratic.grad_inf) == (1.0, 4.0, 4.0)
    assert ConstantViscosity(2.0).is_constant
    assert not linear.is_constant


def test_values_broadcast_scalars():
    assert QuadraticViscosity(b=1.0, height=1.0).value(0.3, np.array([0.0, 1.0])).tolist() == [1.0, 4.0]
    assert LinearViscosity(a=2.0, b=1.0, height=1.0).gradient(0.0, 0.5).shape == (2,)


@pytest.mark.parametrize("factory", [
    lambda: ConstantViscosity(0.0),
    lambda: LinearViscosity(a=-2.0, b=1.0, height=1.0),
    lambda: QuadraticViscosity(b=0.0, height=1.0),
])
def test_invalid_fields_rejected(factory):
    with pytest.raises(ValueError):
        factory()

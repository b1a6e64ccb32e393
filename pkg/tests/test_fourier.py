import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from stableheat.exponent import char_exponent
from stableheat.fields import SpaceTimeWindow
from stableheat.fourier import density_grid, density_point, spectral_derivative
from stableheat.kernels import KernelSpec, registry_examples

from conftest import cauchy

UNIT = KernelSpec(alpha=1.0, kappa0=2.0)


def test_unit_exponent_is_cauchy_symbol():
    xi = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(char_exponent(UNIT, 0.0, 1.0, xi, dim=1), -np.pi * np.abs(xi), atol=1e-12)


@pytest.mark.parametrize("name", ["constant", "time_modulated"])
def test_closed_symbol_matches_quadrature(name):
    spec = registry_examples(1.5)[name]
    xi = np.array([0.01, 0.3, 1.0, 4.0, -2.5])
    closed = char_exponent(spec, 0.0, 1.0, xi, dim=1)
    quad = char_exponent(spec, 0.0, 1.0, xi, dim=1, method="quadrature")
    np.testing.assert_allclose(closed, quad, rtol=1e-8, atol=1e-10)


def test_gaussian_limit_shape():
    # isotropic symbol is -c |xi|^alpha; check homogeneity
    spec = KernelSpec(alpha=1.5, kappa0=2.0)
    a = char_exponent(spec, 0.0, 1.0, np.array([1.0]), dim=1)
    b = char_exponent(spec, 0.0, 1.0, np.array([3.0]), dim=1)
    assert b / a == pytest.approx(3.0 ** 1.5, rel=1e-12)


def test_cauchy_grid_anchor():
    win = SpaceTimeWindow(0.0, 1.0, 1, 10.0, 0.05)
    fld = density_grid(UNIT, win)
    assert np.max(np.abs(fld.values - cauchy(win.axis))) < 1e-6
    assert fld.mass() == pytest.approx(1.0, abs=1e-6)


def test_cauchy_point_anchor():
    for x in (0.0, 1.3, 7.0):
        assert density_point(UNIT, 0.0, 1.0, x) == pytest.approx(cauchy(x), abs=1e-8)


def test_stable_law_against_scipy():
    # symmetric alpha-stable with symbol -c |xi|^alpha has scipy scale c^{1/alpha}
    spec = KernelSpec(alpha=1.5, kappa0=2.0)
    c = -char_exponent(spec, 0.0, 1.0, np.array([1.0]), dim=1).real.ravel()[0]
    win = SpaceTimeWindow(0.0, 1.0, 1, 8.0, 0.1)
    ref = stats.levy_stable.pdf(win.axis, 1.5, 0.0, scale=c ** (1 / 1.5))
    assert np.max(np.abs(density_grid(spec, win).values - ref)) < 1e-5


def test_derivatives_of_cauchy():
    win = SpaceTimeWindow(0.0, 1.0, 1, 10.0, 0.05)
    x = win.axis
    grad = spectral_derivative(UNIT, win, gradient=True)[0].values
    np.testing.assert_allclose(grad, -2 * x / (np.pi ** 2 + x ** 2) ** 2 , atol=1e-6)
    half = spectral_derivative(UNIT, win, theta=1.0).values
    np.testing.assert_allclose(half, (x ** 2 - np.pi ** 2) / (np.pi * (np.pi ** 2 + x ** 2) ** 2), atol=1e-6)


def test_two_dim_mass_and_radial_symmetry():
    spec = KernelSpec(alpha=1.5, kappa0=2.0)
    win = SpaceTimeWindow(0.0, 1.0, 2, 6.0, 0.25)
    fld = density_grid(spec, win)
    assert fld.mass() == pytest.approx(1.0, abs=1e-6)
    np.testing.assert_allclose(fld.values, fld.values.T, atol=1e-10)


def test_time_modulated_mass():
    spec = registry_examples(0.7)["time_modulated"]
    fld = density_grid(spec, SpaceTimeWindow(0.0, 0.1, 1, 4.0, 0.01))
    assert fld.mass() == pytest.approx(1.0, abs=1e-6)
    assert np.all(fld.values >= 0)


@given(alpha=st.sampled_from([0.7, 1.0, 1.3, 1.8]), tau=st.sampled_from([0.1, 1.0]))
def test_mass_across_alpha(alpha, tau):
    spec = KernelSpec(alpha=alpha, kappa0=2.0)
    from stableheat.validation import natural_window
    fld = density_grid(spec, natural_window(spec, 0.0, tau))
    assert fld.mass() == pytest.approx(1.0, abs=1e-6)


def test_quadrature_mass_oracle():
    spec = KernelSpec(alpha=1.2, kappa0=2.0)
    from stableheat.validation import natural_window
    win = natural_window(spec, 0.0, 1.0)
    fld = density_grid(spec, win)
    inner = integrate.simpson(fld.values, x=win.axis)
    assert inner < 1.0 and fld.mass() == pytest.approx(1.0, abs=1e-6)

import numpy as np
import pytest
from scipy import integrate

from stableheat.kernels import ConfigError, KernelSpec, registry_examples
from stableheat.operators import (carre_du_champ_identity, carre_du_champ_quadrature, generator_quadrature,
                                  spectral_generator)
from stableheat.subordination import (RouteDisagreement, TestFunction, compare_half_routes, half_generator,
                                      levy_constants, levy_density_slope, riesz_lattice, riesz_ratio,
                                      subordinate_levy_density)

UNIT = KernelSpec(alpha=1.0, kappa0=2.0)
GAUSS = TestFunction("gaussian")


def _fourier_oracle(symbol, x):
    # (1/2pi) int symbol(xi) fhat(xi) e^{i x xi} for f = exp(-x^2/2), even symbol
    def one(xv):
        g = lambda xi: symbol(xi) * np.sqrt(2 * np.pi) * np.exp(-xi ** 2 / 2) * np.cos(xv * xi)
        return integrate.quad(g, 0, 40, limit=400, epsabs=1e-13)[0] / np.pi
    return np.array([one(v) for v in x])


def test_generator_of_gaussian_against_fourier_oracle():
    x = np.array([0.0, 0.7, 2.0, 5.0])
    ref = _fourier_oracle(lambda xi: -np.pi * xi, x)
    np.testing.assert_allclose(generator_quadrature(UNIT, GAUSS, x), ref, atol=1e-7)


def test_spectral_generator_matches_quadrature():
    spec = registry_examples(1.5)["time_modulated"]
    lat = riesz_lattice(GAUSS, n=1 << 12)
    x = lat.points().ravel()
    spec_vals = spectral_generator(spec, GAUSS(x), lat)
    sel = np.abs(x) < 3
    quad = generator_quadrature(spec, GAUSS, x[sel][::40])
    # periodic images are negligible for this lattice
    np.testing.assert_allclose(spec_vals[sel][::40], quad, atol=5e-4)


def test_carre_du_champ_identity():
    spec = registry_examples(1.5)["time_modulated"]
    x = np.array([-1.0, 0.0, 0.5, 2.0])
    np.testing.assert_allclose(carre_du_champ_quadrature(spec, GAUSS, x),
                               carre_du_champ_identity(spec, GAUSS, x), rtol=1e-5, atol=1e-8)


def test_half_generator_unit_kernel_against_oracle():
    x = np.array([0.0, 1.0, 3.0])
    ref = _fourier_oracle(lambda xi: -np.sqrt(np.pi * xi), x)
    for route in ("time", "spectral"):
        _, vals = half_generator(UNIT, GAUSS, route=route, points=x)
        np.testing.assert_allclose(vals, ref, atol=1e-6)
    _, vals = half_generator(UNIT, GAUSS, route="levy", points=x)
    np.testing.assert_allclose(vals, ref, atol=1e-6)


@pytest.mark.parametrize("alpha", [0.7, 1.0, 1.5])
def test_half_routes_agree(alpha):
    spec = registry_examples(alpha)["constant"]
    assert compare_half_routes(spec, TestFunction("bump", width=2.0), tol=1e-3) < 1e-3


def test_route_disagreement_raises():
    with pytest.raises(RouteDisagreement):
        compare_half_routes(UNIT, GAUSS, tol=1e-30)


def test_unit_levy_constants_closed_form():
    # symbol -(pi |xi|)^{1/2}: symmetric, C = 1 / (2 sqrt 2)
    cp, cm = levy_constants(UNIT)
    assert cp == pytest.approx(1 / (2 * np.sqrt(2)), rel=1e-10)
    assert cm == pytest.approx(cp, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.7, 1.5])
def test_levy_routes_agree(alpha):
    spec = KernelSpec(alpha=alpha, kappa0=3.0, family="time_modulated", a=1.5, odd=0.4)
    z = np.array([-0.5, 3.0])
    sym = subordinate_levy_density(spec, z, route="symbol")
    for route in ("moment", "time"):
        np.testing.assert_allclose(subordinate_levy_density(spec, z, route=route), sym, rtol=1e-6)


@pytest.mark.parametrize("alpha", [0.7, 1.0, 1.5])
def test_levy_density_slope(alpha):
    slopes = np.asarray(levy_density_slope(registry_examples(alpha)["constant"]))
    assert np.all(np.abs(-slopes - (1 + alpha / 2)) < 0.05)


def test_riesz_p2_ratio_is_one_for_symmetric_kernel():
    assert riesz_ratio(UNIT, GAUSS, 2.0) == pytest.approx(1.0, rel=1e-4)


def test_riesz_below_threshold_raises():
    with pytest.raises(ValueError):
        riesz_ratio(UNIT, GAUSS, 0.9)


def test_subordination_needs_time_independent_kernel():
    with pytest.raises(ConfigError):
        levy_constants(registry_examples(1.0)["time_modulated"])
    with pytest.raises(ConfigError):
        half_generator(registry_examples(1.0)["holder"], GAUSS)

import numpy as np
import pytest

from stableheat._numerics import Lattice
from stableheat.fourier import periodic_density
from stableheat.kernels import ConfigError, registry_examples
from stableheat.perturbation import DriftField, duhamel_solve, kato_modulus, kato_modulus_bounded

LAT = Lattice(1, 256, 1 / 16)


@pytest.mark.parametrize("name", ["constant", "time_modulated"])
def test_zero_drift_is_exact(name):
    spec = registry_examples(1.5)[name]
    res = duhamel_solve(spec, DriftField("zero"), 0.0, 1.0, [0.0], LAT)
    ref = periodic_density(spec, 0.0, 1.0, LAT)
    assert np.max(np.abs(res.field.values[:-1] - ref)) < 1e-12


@pytest.mark.parametrize("name", ["constant", "time_modulated"])
def test_constant_drift_translates(name):
    spec = registry_examples(1.5)[name]
    res = duhamel_solve(spec, DriftField("constant", (0.5,)), 0.0, 1.0, [0.0], LAT)
    shifted = np.roll(periodic_density(spec, 0.0, 1.0, LAT), 8)  # 0.5 = 8 cells
    assert np.max(np.abs(res.field.values[:-1] - shifted)) < 1e-4


def test_smooth_drift_conserves_mass():
    spec = registry_examples(1.5)["constant"]
    lat = Lattice(1, 256, 4 * np.pi / 256)
    res = duhamel_solve(spec, DriftField("smooth", amp=1.0, freq=1.0), 0.0, 1.0, [0.3], lat)
    assert res.field.values[:-1].sum() * lat.h == pytest.approx(1.0, abs=1e-3)
    assert res.iterations < 60


def test_drift_period_must_divide_lattice():
    spec = registry_examples(1.5)["constant"]
    with pytest.raises(ConfigError):
        duhamel_solve(spec, DriftField("smooth", amp=1.0, freq=1.0), 0.0, 1.0, [0.0], LAT)


def test_drift_needs_alpha_above_one():
    spec = registry_examples(0.7)["constant"]
    with pytest.raises(ConfigError):
        duhamel_solve(spec, DriftField("constant", (0.5,)), 0.0, 1.0, [0.0], LAT)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
@pytest.mark.parametrize("eps", [1.0, 0.1, 0.01])
def test_kato_quadrature_matches_closed_form(alpha, eps):
    b = DriftField("constant", (1.0,))
    assert kato_modulus(b, alpha, eps) == pytest.approx(kato_modulus_bounded(alpha, eps), rel=1e-6)


def test_kato_modulus_decreases():
    b = DriftField("smooth", amp=1.0, freq=1.0)
    vals = [kato_modulus(b, 1.5, e) for e in (1.0, 0.1, 0.01, 0.001)]
    assert all(a > c for a, c in zip(vals, vals[1:]))
    assert kato_modulus(DriftField("zero"), 1.5, 0.1) == 0.0


def test_drift_config_errors():
    with pytest.raises(ConfigError):
        DriftField("spiral")
    with pytest.raises(ValueError):
        kato_modulus(DriftField("constant", (1.0,)), 0.8, 0.1)

import json

import numpy as np
import pytest

from stableheat.fields import DensityField, SpaceTimeWindow
from stableheat.kernels import KernelSpec, registry_examples
from stableheat.subordination import TestFunction
from stableheat.validation import (FieldError, bound_window, check_derivative, check_generator,
                                   check_scaling, check_two_sided, default_thetas, natural_window,
                                   run_validation, two_sided_constant)

UNIT = KernelSpec(alpha=1.0, kappa0=2.0)


@pytest.fixture(scope="module")
def unit_report():
    return run_validation(UNIT, 0.0, 1.0)


def test_unit_report_passes(unit_report):
    assert unit_report.passed, [c.name for c in unit_report.failures()]
    names = {c.name for c in unit_report.checks}
    assert {"two_sided", "conservative", "ck_equation", "frac_derivative", "grad_log", "holder_xy",
            "generator_residual"} <= names


def test_unit_two_sided_constant_is_pi_squared(unit_report):
    # p / rho = (1 + |x|)^2 / (pi^2 + x^2); its inverse peaks at x = 0
    x = np.linspace(0, 200, 2_000_001)
    ratio = (1 + x) ** 2 / (np.pi ** 2 + x ** 2)
    exact = max(ratio.max(), (1 / ratio).max())
    c = next(c for c in unit_report.checks if c.name == "two_sided")
    assert c.value == pytest.approx(exact, rel=1e-3)
    assert exact == pytest.approx(np.pi ** 2, rel=1e-9)


def test_report_is_deterministic(unit_report):
    again = run_validation(UNIT, 0.0, 1.0)
    assert again.to_json() == unit_report.to_json()
    json.loads(unit_report.to_json())


def test_negative_field_raises():
    w = SpaceTimeWindow(0.0, 1.0, 1, 2.0, 0.5)
    vals = np.ones(w.axis.size)
    vals[2] = -0.5
    with pytest.raises(FieldError):
        two_sided_constant(DensityField(window=w, values=vals, provenance="fourier", tolerance=1e-8), 1.0)


@pytest.mark.parametrize("lam", [2.0, 10.0])
@pytest.mark.parametrize("name", ["constant", "time_modulated"])
def test_scaling(lam, name):
    spec = registry_examples(1.5)[name]
    assert check_scaling(spec, SpaceTimeWindow(0.2, 1.0, 1, 8.0, 0.05), lam).passed


def test_two_sided_stable_under_refinement_and_enlargement():
    spec = registry_examples(0.7)["time_modulated"]
    from stableheat.fourier import density_grid
    from stableheat.validation import _widened
    w = bound_window(spec, 0.0, 1.0)
    chk = check_two_sided(density_grid(spec, w), 0.7, density_grid(spec, w.refined()),
                          density_grid(spec, _widened(w)))
    assert chk.passed, chk.details


def test_generator_residual():
    chk = check_generator(registry_examples(1.5)["time_modulated"], TestFunction("gaussian"), 0.0, 1.0)
    assert chk.passed and chk.value < 1e-4


def test_default_thetas_stay_at_or_above_alpha():
    for a in (0.7, 1.0, 1.2, 1.5):
        spec = KernelSpec(alpha=a, kappa0=2.0)
        th = default_thetas(spec)
        assert min(th) == a and max(th) < min(a + spec.beta, 2.0)


def test_low_order_derivative_fit_grows_with_window():
    # Delta^{theta/2} p ~ |x|^{-1-theta} while rho^0_{alpha-theta} ~ |x|^{-1-alpha}: the fit grows
    # like |x|^{alpha-theta}, so doubling the window multiplies it by about 2^{alpha-theta}.
    w = natural_window(UNIT, 0.0, 1.0)
    chk = check_derivative(UNIT, theta=0.5, window=w)
    assert not chk.passed
    assert chk.details["domain_drift"] > 2 ** 0.5 - 1 - 0.05
    assert check_derivative(UNIT, theta=1.0, window=w).passed

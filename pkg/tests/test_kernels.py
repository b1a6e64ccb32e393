import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stableheat.kernels import (ConfigError, KernelAdmissibilityError, KernelSpec, registry_examples, rho,
                                validate_kernel)


def test_unit_kernel_defaults():
    spec = KernelSpec(alpha=1.0, kappa0=2.0)
    assert spec.x_independent and spec.time_independent and spec.homogeneous
    assert spec(0.3, np.array([1.0]), np.array([2.0])) == pytest.approx(1.0)


@pytest.mark.parametrize("bad, field", [
    (dict(alpha=2.5, kappa0=2.0), "alpha"),
    (dict(alpha=0.0, kappa0=2.0), "alpha"),
    (dict(alpha=1.0, kappa0=0.5), "kappa0"),
    (dict(alpha=1.0, kappa0=2.0, beta=1.5), "beta"),
    (dict(alpha=1.0, kappa0=2.0, family="nope"), "family"),
])
def test_invalid_parameters_name_the_field(bad, field):
    with pytest.raises(ConfigError) as err:
        KernelSpec(**bad)
    assert err.value.field == field


def test_family_restricts_parameters():
    with pytest.raises(ConfigError):
        KernelSpec.from_dict({"family": "constant", "alpha": 1.0, "kappa0": 2.0, "params": {"odd": 0.1}})


def test_from_dict_missing_field():
    with pytest.raises(ConfigError) as err:
        KernelSpec.from_dict({"family": "constant", "alpha": 1.0})
    assert err.value.field == "kernel.kappa0"


@pytest.mark.parametrize("alpha", [0.7, 1.0, 1.5])
def test_registry_members_are_admissible(alpha):
    for name, spec in registry_examples(alpha).items():
        report = validate_kernel(spec, sample_budget=2000, seed=1)
        assert report.accepted, (name, report.messages)


def test_out_of_bounds_kernel_is_rejected_with_triple():
    spec = KernelSpec(alpha=1.0, kappa0=1.5, family="time_modulated", a=2.0)
    report = validate_kernel(spec, sample_budget=1000)
    assert not report.accepted
    assert report.worst_triple is not None
    with pytest.raises(KernelAdmissibilityError) as err:
        validate_kernel(spec, sample_budget=1000, strict=True)
    assert err.value.triple is not None


def test_holder_modulation_is_periodic():
    spec = registry_examples(1.0)["holder"]
    x = np.linspace(-3, 3, 41)[:, None]
    np.testing.assert_allclose(spec.modulation(x), spec.modulation(x + spec.x_period), atol=1e-12)


def test_rho_closed_form():
    # t = 1, |x| = 1, alpha = 1, d = 1: 1 / 2^2
    assert rho(0.0, 0.0, 1.0, 1.0, np.array([1.0])) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        rho(0.0, 0.0, 1.0, 0.0, np.array([1.0]))


@given(alpha=st.floats(0.3, 1.9), lam=st.floats(0.2, 5.0), x=st.floats(-20, 20), t=st.floats(0.05, 4.0))
def test_rho_scaling(alpha, lam, x, t):
    # rho_alpha(lam^alpha t, lam x) = lam^{-d} rho_alpha(t, x)
    lhs = rho(0.0, alpha, alpha, lam ** alpha * t, np.array([lam * x]))
    rhs = lam ** -1 * rho(0.0, alpha, alpha, t, np.array([x]))
    assert lhs == pytest.approx(rhs, rel=1e-10)


@given(alpha=st.floats(0.3, 1.9), a=st.floats(0.6, 1.5), odd=st.floats(-0.2, 0.2),
       amp=st.floats(0.0, 0.3), freq=st.floats(0.0, 3.0))
def test_spec_roundtrip(alpha, a, odd, amp, freq):
    spec = KernelSpec(alpha=alpha, kappa0=4.0, family="time_modulated", a=a, odd=odd, time_amp=amp,
                      time_freq=freq)
    assert KernelSpec.from_json(spec.to_json()) == spec
    assert KernelSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec

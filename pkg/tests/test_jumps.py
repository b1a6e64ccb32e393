import numpy as np
import pytest
from hypothesis import given, strategies as st

from stableheat.exponent import char_exponent
from stableheat.fields import SpaceTimeWindow
from stableheat.jumps import (JumpSampler, euler_frozen_path, histogram, sample_increment,
                              simulate_density)
from stableheat.kernels import KernelSpec, registry_examples

UNIT = KernelSpec(alpha=1.0, kappa0=2.0)


def test_same_seed_same_paths():
    a = sample_increment(JumpSampler(UNIT, seed=5), 0.0, 1.0, 5000)
    b = sample_increment(JumpSampler(UNIT, seed=5), 0.0, 1.0, 5000)
    c = sample_increment(JumpSampler(UNIT, seed=6), 0.0, 1.0, 5000)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_thread_count_invariance():
    spec = registry_examples(1.5)["time_modulated"]
    n = 70_000  # spans several blocks
    a = sample_increment(JumpSampler(spec, seed=2), 0.0, 1.0, n, threads=1)
    b = sample_increment(JumpSampler(spec, seed=2), 0.0, 1.0, n, threads=3)
    np.testing.assert_array_equal(a, b)


def test_cauchy_histogram_against_exact_bins():
    win = SpaceTimeWindow(0.0, 1.0, 1, 10.0, 0.1)
    emp = simulate_density(JumpSampler(UNIT, seed=3), 0.0, 1.0, win, 200_000)
    h, x = 0.1, win.axis
    exact = (np.arctan((x + h / 2) / np.pi) - np.arctan((x - h / 2) / np.pi)) / np.pi
    se = np.sqrt(exact * (1 - exact) / emp.n_paths)
    z = (emp.counts / emp.n_paths - exact) / se
    assert np.mean(np.abs(z) < 3) >= 0.99


@pytest.mark.parametrize("name", ["constant", "time_modulated"])
def test_empirical_characteristic_function(name):
    spec = registry_examples(1.5)[name]
    n = 100_000
    X = sample_increment(JumpSampler(spec, seed=1), 0.0, 1.0, n)[:, 0]
    xi = np.linspace(0.2, 3.0, 8)
    ecf = np.exp(1j * np.outer(xi, X)).mean(axis=1)
    cf = np.exp(char_exponent(spec, 0.0, 1.0, xi, dim=1))
    se = np.sqrt((1 - np.abs(cf) ** 2) / n) + 1e-12
    assert np.all(np.abs(ecf - cf) / se < 5)


def test_compensator_drift_closed_form_matches_quadrature():
    spec = registry_examples(1.5)["time_modulated"]
    s = JumpSampler(spec, seed=0)
    np.testing.assert_allclose(s.drift(0.1), s.drift_quadrature(0.1), rtol=1e-8, atol=1e-12)


def test_euler_reduces_to_increments_for_constant_kernel():
    ends = euler_frozen_path(UNIT, 0.0, 1.0, np.zeros(1), n_steps=16, n_paths=40_000, seed=4)
    med = np.median(np.abs(ends[:, 0]))
    assert med == pytest.approx(np.pi, rel=0.05)  # |Cauchy(pi)| has median pi


def test_minimum_paths_enforced():
    with pytest.raises(ValueError):
        simulate_density(JumpSampler(UNIT), 0.0, 1.0, SpaceTimeWindow(0.0, 1.0, 1, 5.0, 0.5), 100)
    with pytest.raises(ValueError):
        euler_frozen_path(UNIT, 0.0, 1.0, np.zeros(1), n_steps=4)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=200), st.floats(1.0, 4.0))
def test_histogram_counts_all_samples(values, period):
    axis = np.linspace(-2, 2, 9)
    counts, outside = histogram(np.array(values)[:, None], axis)
    assert counts.sum() + outside == len(values)
    wrapped, out = histogram(np.array(values)[:, None], axis, period=axis[-1] - axis[0] + 0.5)
    assert out == 0 and wrapped.sum() == len(values)

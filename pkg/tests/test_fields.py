import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from stableheat._numerics import Lattice
from stableheat.fields import DensityField, SpaceTimeWindow, config_hash
from stableheat.fourier import density_grid
from stableheat.kernels import ConfigError, KernelSpec


@pytest.mark.parametrize("kw, field", [
    (dict(t=-1.0, s=1.0), "window.t"),
    (dict(t=1.0, s=1.0), "window.s"),
    (dict(t=0.0, s=1.0, dim=4), "window.dim"),
    (dict(t=0.0, s=1.0, extent=1.0, spacing=0.3), "window.extent"),
])
def test_window_validation(kw, field):
    with pytest.raises(ConfigError) as err:
        SpaceTimeWindow(**kw)
    assert err.value.field == field


def test_window_axis_is_symmetric():
    w = SpaceTimeWindow(0.0, 1.0, 1, 2.0, 0.1)
    assert w.axis.size == 41
    np.testing.assert_array_equal(w.axis, -w.axis[::-1])
    assert w.refined().spacing == pytest.approx(0.05)


def test_field_roundtrip(tmp_path):
    w = SpaceTimeWindow(0.0, 1.0, 1, 4.0, 0.25)
    fld = density_grid(KernelSpec(alpha=1.0, kappa0=2.0), w)
    csv, side = fld.write(tmp_path / "p", config_hash="abc")
    back = DensityField.read(tmp_path / "p")
    np.testing.assert_allclose(back.values, fld.values, rtol=1e-12)
    assert back.provenance == "fourier"
    assert '"config_hash": "abc"' in side.read_text()


def test_field_writes_are_byte_identical(tmp_path):
    w = SpaceTimeWindow(0.0, 1.0, 1, 4.0, 0.25)
    spec = KernelSpec(alpha=1.3, kappa0=2.0)
    density_grid(spec, w).write(tmp_path / "a")
    density_grid(spec, w).write(tmp_path / "b")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_periodic_mass_counts_each_point_once():
    lat = Lattice(1, 64, 0.25)
    from stableheat.parametrix import _field_from_rows
    fld = _field_from_rows(lat, np.full(64, 1.0 / lat.period), 0.0, 1.0, 0.0, meta={"period": lat.period})
    assert fld.lattice_mass() == pytest.approx(1.0, abs=1e-14)


@given(arrays(np.float64, 32, elements=st.floats(-1e3, 1e3)))
def test_lattice_transform_roundtrip(values):
    lat = Lattice(1, 32, 0.3)
    np.testing.assert_allclose(lat.inverse(lat.forward(values)).real, values, atol=1e-9)


@given(st.dictionaries(st.text(min_size=1, max_size=5), st.floats(allow_nan=False), min_size=1, max_size=6))
def test_config_hash_ignores_key_order(d):
    rev = dict(reversed(list(d.items())))
    assert config_hash(d) == config_hash(rev)
    assert config_hash({"a": d}) != config_hash({"b": d})

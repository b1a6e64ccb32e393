import numpy as np
import pytest

from stableheat._numerics import Lattice
from stableheat.fourier import periodic_density
from stableheat.kernels import KernelSpec, registry_examples
from stableheat.parametrix import (Parametrix, assemble_density, assemble_fractional_derivative, q0_quadrature,
                                   torus_lattice)
from stableheat.validation import parametrix_row_mass


@pytest.fixture(scope="module")
def holder_solver():
    spec = registry_examples(1.5)["holder"]
    lat = torus_lattice(spec, 1, 2, 64)
    solver = Parametrix(spec, 0.0, 0.5, lat, n_time=12, n_cheb=12)
    return solver, solver.solve()


def test_q0_matches_pointwise_quadrature(holder_solver):
    solver, q = holder_solver
    pts = solver.points
    for col in (0, 21):
        for i in (3, 17, 40):
            ref = q0_quadrature(solver.spec, solver.times[0], solver.s, pts[i], pts[col], solver.lattice)
            assert q.levels[0][col, 0, i] == pytest.approx(ref, rel=1e-6, abs=1e-9)


def test_picard_levels_contract(holder_solver):
    _, q = holder_solver
    assert all(r < 0.5 for r in q.ratios)
    assert q.truncation_bound < 1e-5


def test_row_mass_conserved(holder_solver):
    solver, q = holder_solver
    matrix = solver.assemble(q)[:, 0, :]
    err, _ = parametrix_row_mass(matrix, solver.lattice)
    assert err < 1e-3


@pytest.mark.parametrize("name", ["constant", "time_modulated"])
def test_degenerates_to_frozen_density(name):
    spec = registry_examples(1.2)[name]
    lat = Lattice(1, 128, 0.125)
    solver = Parametrix(spec, 0.0, 1.0, lat, n_time=8)
    cols = [0, 50]
    q = solver.solve(cols=cols)
    assert np.max(np.abs(q.total)) == 0.0
    pd = periodic_density(spec, 0.0, 1.0, lat)
    x = solver.points[:, 0]
    p = solver.assemble(q)[:, 0]
    for k, c in enumerate(cols):
        # p(x, y) = p_X(y - x) wrapped on the torus
        j = np.mod(np.round((x[c] - x - lat.axis[0]) / lat.h).astype(int), lat.n)
        assert np.max(np.abs(p[k] - pd[j])) < 1e-8


def test_assemble_density_field(holder_solver):
    solver, q = holder_solver
    fld = assemble_density(solver, q, 0)
    assert fld.values.size == solver.lattice.n + 1
    assert fld.values[0] == fld.values[-1]
    assert fld.meta["picard_levels"] == q.n_levels


def test_fractional_theta_range(holder_solver):
    solver, q = holder_solver
    with pytest.raises(ValueError):
        assemble_fractional_derivative(solver, q, theta=2.5)

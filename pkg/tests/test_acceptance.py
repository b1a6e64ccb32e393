"""Acceptance criteria, each at its stated tolerance; one verdict line per criterion is printed at the end."""

import json

import numpy as np
import pytest

from stableheat._numerics import Lattice, cos_radial_constant, sphere_moment
from stableheat.cli import main
from stableheat.compare import bin_mass_periodic, compare_empirical
from stableheat.fields import SpaceTimeWindow
from stableheat.fourier import density_grid, periodic_density
from stableheat.jumps import simulate_euler_density
from stableheat.kernels import KernelSpec, registry_examples
from stableheat.parametrix import Parametrix, torus_lattice
from stableheat.perturbation import DriftField, duhamel_solve, kato_modulus, kato_modulus_bounded
from stableheat.subordination import (compare_half_routes, levy_density_slope, riesz_sweep,
                                      test_registry as functions)
from stableheat.validation import (_widened, bound_window, check_ck_fourier, check_ck_parametrix,
                                   check_conservative_matrix, check_derivative, check_scaling,
                                   check_two_sided, natural_scale, natural_torus, natural_window,
                                   parametrix_field, parametrix_matrices)

RESULTS = {}
ALPHAS = (0.7, 1.0, 1.5)


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    assert ok, detail


def sigma_of(spec, tau, dim=1):
    a = spec.alpha
    return (tau * spec.upper() * cos_radial_constant(a) * sphere_moment(a, dim)) ** (1.0 / a)


def x_independent(alpha):
    return {k: v for k, v in registry_examples(alpha).items() if v.x_independent}


@pytest.fixture(scope="module")
def holder_matrices():
    """All-column parametrix kernels of the Hoelder kernel at lags (tau/2, tau/2, tau)."""
    out = {}
    for a in ALPHAS:
        spec = registry_examples(a)["holder"]
        for tau in (0.1, 1.0):
            lat = natural_torus(spec, 1, sigma_of(spec, tau), 4.0, 8)
            mats = parametrix_matrices(spec, 0.0, tau, lat, (tau / 2, tau / 2, tau), n_time=16, n_cheb=12)
            out[a, tau] = (spec, lat, mats)
    return out


def test_criterion_01_cauchy_anchor():
    win = SpaceTimeWindow(0.0, 1.0, 1, 10.0, 0.05)
    x = win.axis
    exact = 1.0 / (np.pi ** 2 + x ** 2)
    err = float(np.max(np.abs(density_grid(KernelSpec(alpha=1.0, kappa0=2.0), win).values - exact) / exact))
    record(1, err <= 1e-6, f"sup relative error {err:.2e} on |x| <= 10 (tol 1e-6)")


def test_criterion_02_conservativeness(holder_matrices):
    worst_f, worst_p = 0.0, 0.0
    for a in ALPHAS:
        specs = registry_examples(a)
        for tau in (0.1, 1.0):
            # fourier: the x-independent members and the Hoelder kernel frozen at its largest modulation
            for spec in (specs["constant"], specs["time_modulated"], specs["holder"].frozen(h=1.0)):
                worst_f = max(worst_f, abs(density_grid(spec, natural_window(spec, 0.0, tau)).mass() - 1.0))
            # parametrix: all three members on the torus, mass over the forward variable
            for name in ("constant", "time_modulated"):
                spec = specs[name]
                lat = natural_torus(spec, 1, sigma_of(spec, tau), 4.0, 8)
                solver = Parametrix(spec, 0.0, tau, lat, n_time=8)
                m = solver.assemble(solver.solve())[:, 0, :]
                worst_p = max(worst_p, check_conservative_matrix(m, lat, solver.points, 1e-3).value)
            _, lat, (mats, solver, _) = holder_matrices[a, tau]
            worst_p = max(worst_p, check_conservative_matrix(mats[2], lat, solver.points, 1e-3).value)
    ok = worst_f <= 1e-6 and worst_p <= 1e-3
    record(2, ok, f"max |mass - 1|: fourier {worst_f:.2e} (tol 1e-6), parametrix {worst_p:.2e} (tol 1e-3); "
                  f"alpha in {ALPHAS}, s - t in {{0.1, 1}}")


def _two_sided(spec, dim):
    a = spec.alpha
    if dim == 1:
        tau = 1.0
    else:
        # unit length scale keeps the widened 2-d window within the lattice cap
        tau = natural_scale(spec, dim)
    if spec.x_independent:
        if dim == 1 or a >= 1.0:
            w = bound_window(spec, 0.0, tau, dim)
        else:
            w = natural_window(spec, 0.0, tau, dim, extent_scales=2.0)
        flds = [density_grid(spec, ww) for ww in (w, w.refined(), _widened(w))]
    else:
        if dim == 1:
            lat, kw = natural_torus(spec, 1, sigma_of(spec, tau)), dict(n_time=16, n_cheb=12)
        else:
            lat, kw = natural_torus(spec, 2, 1.0, 4.0, 8), dict(n_time=8, n_cheb=6)
        lats = (lat, Lattice(dim, 2 * lat.n, lat.h / 2), Lattice(dim, 2 * lat.n, lat.h))
        flds = [parametrix_field(spec, 0.0, tau, L, **kw) for L in lats]
    return check_two_sided(flds[0], a, flds[1], flds[2], tol=0.1)


def test_criterion_03_two_sided_bound():
    rows, ok = [], True
    for dim in (1, 2):
        for a in ALPHAS:
            for name, spec in registry_examples(a).items():
                c = _two_sided(spec, dim)
                ok = ok and c.passed
                drift = max(c.details["fine_drift"], c.details["wide_drift"])
                rows.append((drift, f"d={dim} a={a} {name} c0={c.value:.4g}"))
    worst = max(rows)
    record(3, ok, f"{len(rows)} cases, all c0 finite; max drift under 2x refinement or 2x window "
                  f"{worst[0]:.2e} at {worst[1]} (tol 0.1)")


def test_criterion_04_degeneration():
    worst_q, worst_p = 0.0, 0.0
    for a in ALPHAS:
        for spec in x_independent(a).values():
            for dim, lat in ((1, Lattice(1, 256, 0.0625)), (2, Lattice(2, 32, 0.25))):
                solver = Parametrix(spec, 0.0, 1.0, lat, n_time=8)
                cols = [0, lat.n ** dim // 3]
                q = solver.solve(cols=cols)
                worst_q = max([worst_q, float(np.max(np.abs(q.total)))]
                              + [float(np.max(np.abs(lv))) for lv in q.levels])
                p = solver.assemble(q)[:, 0]
                pd = periodic_density(spec, 0.0, 1.0, lat).reshape(-1)
                pts = solver.points
                lo = lat.axis[0]
                for k, c in enumerate(cols):
                    # p(x, y) = p_X(y - x) on the torus
                    idx = np.mod(np.round((pts[c] - pts - lo) / lat.h).astype(int), lat.n)
                    flat = np.ravel_multi_index(tuple(idx.T), lat.shape)
                    worst_p = max(worst_p, float(np.max(np.abs(p[k] - pd[flat]))))
    ok = worst_q == 0.0 and worst_p <= 1e-8
    record(4, ok, f"x-independent kernels: max |q^(n)| = {worst_q:.1e}, sup |parametrix - fourier| "
                  f"{worst_p:.2e} (tol 1e-8), d in {{1, 2}}")


def test_criterion_05_parametrix_vs_monte_carlo():
    spec = registry_examples(1.5)["holder"]
    lat = torus_lattice(spec, 1, 2, 128)
    solver = Parametrix(spec, 0.0, 1.0, lat)
    p = solver.assemble(solver.solve())[:, 0, :]  # [y, x]
    ix = 70
    x0 = solver.points[ix, 0]
    mass = bin_mass_periodic(p[:, ix], lat)  # bin masses of y -> p(x0, y)
    emp = simulate_euler_density(spec, 0.0, 1.0, x0, lat.axis, n_paths=1_000_000, n_steps=256, seed=7,
                                 period=lat.period)
    chk, _ = compare_empirical(mass, emp, sigmas=3.0, coverage=0.99)
    d = chk.details
    record(5, chk.passed, f"{d['within']}/{d['bins']} bins with >= 100 expected counts within 3 standard "
                          f"errors ({chk.value:.4f}, need 0.99); max |z| {d['max_abs_z']:.2f}; 1e6 paths")


def test_criterion_06_chapman_kolmogorov(holder_matrices):
    worst_f = 0.0
    for a in ALPHAS:
        for spec in x_independent(a).values():
            worst_f = max(worst_f, check_ck_fourier(spec, 0.0, 0.5, 1.0).value)
    worst_p = 0.0
    for a in ALPHAS:
        spec, lat, mats = holder_matrices[a, 1.0]
        worst_p = max(worst_p, check_ck_parametrix(spec, 0.0, 0.5, 1.0, lat, matrices=mats).value)
    ok = worst_f <= 1e-6 and worst_p <= 1e-3
    record(6, ok, f"(t, r, s) = (0, 0.5, 1): fourier {worst_f:.2e} (tol 1e-6), parametrix {worst_p:.2e} "
                  f"(tol 1e-3)")


def test_criterion_07_scaling():
    worst = 0.0
    for a in ALPHAS:
        for spec in x_independent(a).values():
            for lam in (2.0, 10.0):
                worst = max(worst, check_scaling(spec, SpaceTimeWindow(0.2, 1.0, 1, 8.0, 0.05), lam).value)
                worst = max(worst, check_scaling(spec, SpaceTimeWindow(0.2, 1.0, 2, 4.0, 0.25), lam).value)
    record(7, worst <= 1e-8, f"max relative residual {worst:.2e} for lambda in {{2, 10}}, d in {{1, 2}} "
                             f"(tol 1e-8)")


def test_criterion_08_derivative_estimates():
    failures, passed, total = [], 0, 0
    for a in (0.7, 1.0, 1.2):
        for name, spec in registry_examples(a).items():
            if spec.x_independent:
                kw = dict(window=bound_window(spec, 0.0, 1.0))
            else:
                kw = dict(window=SpaceTimeWindow(0.0, 1.0, 1, 1.0, 1.0),
                          lattice=natural_torus(spec, 1, sigma_of(spec, 1.0)), n_time=16, n_cheb=12)
            for theta in (0.5 * a, a, a + 0.5 * spec.beta, None):
                c = check_derivative(spec, theta, tol=0.1, **kw)
                total += 1
                if c.passed:
                    passed += 1
                else:
                    d = c.details
                    failures.append(f"a={a} {name} theta={theta:g}: window drift {d['domain_drift']:.2f}")
    detail = f"{passed}/{total} stable (grad log p and theta in {{a/2, a, a+b/2}})"
    if failures:
        detail += "; unstable under window doubling: " + ", ".join(failures)
    record(8, not failures, detail)


def test_criterion_09_drift_perturbation():
    lat = Lattice(1, 256, 1 / 16)
    lat_smooth = Lattice(1, 256, 4 * np.pi / 256)
    zero_err = shift_err = mass_err = 0.0
    for a in (1.2, 1.5, 1.8):
        for spec in x_independent(a).values():
            ref = periodic_density(spec, 0.0, 1.0, lat)
            res = duhamel_solve(spec, DriftField("zero"), 0.0, 1.0, [0.0], lat)
            zero_err = max(zero_err, float(np.max(np.abs(res.field.values[:-1] - ref))))
            res = duhamel_solve(spec, DriftField("constant", (0.5,)), 0.0, 1.0, [0.0], lat)
            shift_err = max(shift_err, float(np.max(np.abs(res.field.values[:-1] - np.roll(ref, 8)))))
            for b in (DriftField("smooth", amp=1.0, freq=1.0),
                      DriftField("time_modulated", amp=1.0, freq=1.0, time_freq=1.0)):
                res = duhamel_solve(spec, b, 0.0, 1.0, [0.3], lat_smooth)
                mass_err = max(mass_err, abs(res.field.values[:-1].sum() * lat_smooth.h - 1.0))
    ok = zero_err <= 1e-12 and shift_err <= 1e-4 and mass_err <= 1e-3
    record(9, ok, f"b = 0: {zero_err:.1e}; constant b translation {shift_err:.2e} (tol 1e-4); "
                  f"|mass - 1| {mass_err:.2e} (tol 1e-3)")


def test_criterion_10_kato_modulus():
    ladder = (1e-1, 1e-2, 1e-3)
    ok, rows = True, []
    for a in (1.2, 1.5, 1.8):
        for b in (DriftField("constant", (1.0,)), DriftField("smooth", amp=1.0, freq=1.0),
                  DriftField("time_modulated", amp=1.0, freq=1.0, time_freq=1.0)):
            k = [kato_modulus(b, a, e) for e in ladder]
            bound = [kato_modulus_bounded(a, e, bound=b.sup_norm) for e in ladder]
            ok = ok and all(x > y for x, y in zip(k, k[1:])) and all(x <= y * (1 + 1e-9) for x, y in zip(k, bound))
            rows.append(k[-1] / k[0])
    record(10, ok, f"strictly decreasing along {ladder} and below the closed-form bound "
                   f"C eps^(2-2/alpha) -> 0; K(1e-3)/K(1e-1) <= {max(rows):.3f}")


def test_criterion_11_subordination():
    slope_err = 0.0
    for a in ALPHAS:
        for spec in (registry_examples(a)["constant"],
                     KernelSpec(alpha=a, kappa0=3.0, family="time_modulated", a=1.5, odd=0.0 if a == 1 else 0.4)):
            slopes = np.asarray(levy_density_slope(spec))
            slope_err = max(slope_err, float(np.max(np.abs(-slopes - (1.0 + a / 2.0)))))
    route_err = 0.0
    for a in ALPHAS:
        for f in functions():
            route_err = max(route_err, compare_half_routes(registry_examples(a)["constant"], f, tol=1e-3))
    lo, hi = np.inf, 0.0
    for a in ALPHAS:
        for spec in (registry_examples(a)["constant"],
                     KernelSpec(alpha=a, kappa0=3.0, family="time_modulated", a=1.5, odd=0.0 if a == 1 else 0.4)):
            _, (l, h) = riesz_sweep(spec, p_values=(2.0, 4.0))
            lo, hi = min(lo, l), max(hi, h)
    C = max(hi, 1.0 / lo)
    ok = slope_err <= 0.05 and route_err <= 1e-3 and C < 20
    record(11, ok, f"slope error {slope_err:.2e} (tol 0.05); half-generator routes {route_err:.2e} (tol 1e-3); "
                   f"Riesz ratios in [{lo:.3f}, {hi:.3f}], C = {C:.3f} (< 20)")


def test_criterion_12_reproducibility(tmp_path):
    configs = {
        "unit": {"kernel": {"family": "constant", "alpha": 1.0, "kappa0": 2.0, "params": {"a": 1.0}},
                 "window": {"t": 0.0, "s": 1.0, "dim": 1}, "seed": 3},
        "holder": {"kernel": registry_examples(1.5)["holder"].to_dict(),
                   "window": {"t": 0.0, "s": 1.0, "dim": 1}, "seed": 3},
    }
    same = True
    for name, cfg in configs.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        outs = []
        for k in range(2):
            out = tmp_path / f"{name}_{k}"
            main(["validate", "--config", str(path), "--out", str(out)])
            outs.append([(out / f).read_bytes() for f in ("report.json", "report.csv")])
        same = same and outs[0] == outs[1]
    record(12, same, "two validate runs per config (fourier and parametrix routes) give byte-identical "
                     "report.json and report.csv")

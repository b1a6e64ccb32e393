"""Validation suites: residuals, fitted constants and verdicts.

Every check returns a :class:`Check`; a :class:`ValidationReport` collects
them with run metadata and serializes deterministically (JSON document plus
a CSV summary), so repeated runs with the same inputs are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .fields import DensityField, SpaceTimeWindow, _jsonable, write_csv
from .kernels import rho, rho_periodic

REPORT_CHECKS = ("two_sided", "ck_equation", "conservative", "frac_derivative", "grad_log",
                 "holder_xy", "kernel_continuity", "generator_residual")


class FieldError(ValueError):
    """A field violates the precondition of a check (e.g. negative values)."""


@dataclass
class Check:
    """Outcome of one check.

    ``kind`` is ``"ratio"`` (fitted constant, >= 1 where a two-sided ratio),
    ``"constant"`` (fitted constant >= 0) or ``"residual"`` (>= 0).
    """

    name: str
    kind: str
    value: float
    tolerance: float
    passed: bool
    point: list = None
    details: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return "pass" if self.passed else "fail"

    def to_dict(self):
        return {"name": self.name, "kind": self.kind, "value": self.value, "tolerance": self.tolerance,
                "verdict": self.verdict, "point": self.point, "details": _jsonable(self.details)}


@dataclass
class ValidationReport:
    """Named checks plus run metadata (spec, window, seeds, quadrature settings)."""

    checks: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, check):
        self.checks.append(check)
        return check

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_dict(self):
        return {"meta": _jsonable(self.meta), "checks": [c.to_dict() for c in self.checks],
                "verdict": "pass" if self.passed else "fail"}

    def to_json(self):
        return json.dumps(_round_floats(self.to_dict()), indent=2, sort_keys=True) + "\n"

    def write(self, path):
        """Write ``<path>.json`` and the summary ``<path>.csv`` (check, constant, verdict)."""
        path = Path(path)
        path.with_suffix(".json").write_text(self.to_json())
        rows = [[c.name, _fmt_num(c.value), c.verdict] for c in self.checks]
        write_csv(path.with_suffix(".csv"), ["check", "constant", "verdict"], rows)
        return path.with_suffix(".json"), path.with_suffix(".csv")


def _fmt_num(v):
    return format(float(v), ".10g")


def _round_floats(obj):
    """Round floats to 12 significant digits (stable text across BLAS paths)."""
    if isinstance(obj, float):
        return float(format(obj, ".12g")) if np.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
def _displacements(fld):
    return fld.points() - np.asarray(fld.base_point, dtype=float)


def _rho_on(fld, alpha, gamma, beta=0.0):
    """rho^beta_gamma(s - t, x - y) on the field lattice (periodized on a torus)."""
    w = _displacements(fld)
    tau = fld.window.duration
    period = fld.meta.get("period")
    if period is not None:
        w = (w + 0.5 * period) % period - 0.5 * period
        return rho_periodic(beta, gamma, alpha, tau, w, period, images=64)
    return rho(beta, gamma, alpha, tau, w)


def two_sided_constant(fld, alpha):
    """c0 = max(sup p / rho^0_alpha, sup rho^0_alpha / p) and the maximizing point."""
    p = np.asarray(fld.values, dtype=float)
    tol = max(float(fld.tolerance), 0.0)
    if np.any(p < -max(tol, 1e-300)):
        worst = np.unravel_index(np.argmin(p), p.shape)
        raise FieldError(f"negative field value {p[worst]:.3e} beyond tolerance {tol:.1e}")
    r = _rho_on(fld, alpha, alpha)
    # the recorded tolerance is a pessimistic a-priori bound; only roundoff-level values are dropped
    usable = p > 1e-9 * p.max()
    upper = np.where(usable, p / r, 0.0)
    lower = np.where(usable, r / np.where(usable, p, 1.0), 0.0)
    if upper.max() >= lower.max():
        idx, c0 = np.unravel_index(np.argmax(upper), p.shape), float(upper.max())
    else:
        idx, c0 = np.unravel_index(np.argmax(lower), p.shape), float(lower.max())
    point = fld.points()[idx].tolist()
    return c0, point, {"upper": float(upper.max()), "lower": float(lower.max()),
                       "excluded_points": int(np.sum(~usable))}


def _stability(name, kind, coarse, fine, point, tol, extra=None):
    """Pass iff both constants are finite and differ by less than ``tol`` (relative)."""
    drift = abs(fine - coarse) / max(abs(coarse), 1e-300)
    ok = bool(np.isfinite(coarse) and np.isfinite(fine) and drift < tol)
    details = {"coarse": coarse, "fine": fine, "drift": drift}
    details.update(extra or {})
    return Check(name, kind, fine, tol, ok, point, details)


def check_two_sided(fld, alpha, refined=None, wide=None, tol=0.1):
    """Two-sided bound: fitted c0, stable under refinement and enlargement when those fields are given."""
    c0, point, details = two_sided_constant(fld, alpha)
    if refined is None and wide is None:
        return Check("two_sided", "ratio", c0, tol, bool(np.isfinite(c0)), point, details)
    out = {"coarse": c0, "coarse_point": point, **details}
    ok, value, where = bool(np.isfinite(c0)), c0, point
    for label, other in (("fine", refined), ("wide", wide)):
        if other is None:
            continue
        c1, p1, _ = two_sided_constant(other, alpha)
        drift = abs(c1 - c0) / c0
        out[label], out[f"{label}_drift"] = c1, drift
        ok = ok and bool(np.isfinite(c1) and drift < tol)
        if label == "fine":
            value, where = c1, p1
    return Check("two_sided", "ratio", value, tol, ok, where, out)


def check_conservative(fld, tol):
    mass = fld.mass()
    err = abs(mass - 1.0)
    return Check("conservative", "residual", err, tol, bool(err <= tol), None,
                 {"mass": mass, "provenance": fld.provenance})


# ---------------------------------------------------------------------------
def derivative_constant(values, fld, alpha, order):
    """sup |values| / rho^0_{alpha - order} over the field lattice."""
    r = _rho_on(fld, alpha, alpha - order)
    ratio = np.abs(np.asarray(values)) / r
    idx = np.unravel_index(np.argmax(ratio), ratio.shape)
    return float(ratio[idx]), fld.points()[idx].tolist()


def grad_log_constant(fld, grad_values, alpha, floor=None):
    """sup (s - t)^{1/alpha} |grad log p| = sup (s-t)^{1/alpha} |grad p| / p where p is resolved."""
    p = np.asarray(fld.values, dtype=float)
    g = np.asarray(grad_values, dtype=float)
    if g.shape != p.shape:
        g = np.linalg.norm(g, axis=0)
    floor = 1e-9 * p.max() if floor is None else floor
    usable = p > floor
    ratio = np.where(usable, np.abs(g) / np.where(usable, p, 1.0), 0.0) * fld.window.duration ** (1.0 / alpha)
    idx = np.unravel_index(np.argmax(ratio), ratio.shape)
    return float(ratio[idx]), fld.points()[idx].tolist()


def scaled_kernel(spec, lam):
    """kappa~(r, z) = kappa(lam r, lam^{1/alpha} z) within the registry form."""
    s = lam ** (1.0 / spec.alpha)
    return replace(spec, nu=spec.nu * s, time_freq=spec.time_freq * lam, x_freq=spec.x_freq * s)


def check_scaling(spec, window, lam, tol=1e-8):
    """p^kappa_{lam t, lam s}(lam^{1/alpha} x) = lam^{-d/alpha} p^{kappa~}_{t,s}(x) on the fourier route."""
    from .fourier import density_grid
    d, s = window.dim, lam ** (1.0 / spec.alpha)
    big = SpaceTimeWindow(lam * window.t, lam * window.s, d, window.extent * s, window.spacing * s)
    lhs = density_grid(spec, big).values
    rhs = lam ** (-d / spec.alpha) * density_grid(scaled_kernel(spec, lam), window).values
    err = np.abs(lhs - rhs) / np.max(np.abs(rhs))
    idx = np.unravel_index(np.argmax(err), err.shape)
    return Check("scaling", "residual", float(err[idx]), tol, bool(err[idx] <= tol),
                 window.points()[idx].tolist(), {"lambda": lam})


def natural_window(spec, t, s, dim=1, extent_scales=None, cells_per_scale=None):
    """Window sized by the density's own length ``((s - t) kappa_max C)^{1/alpha}``.

    ``C`` is the symbol constant of ``|z|^{-d-alpha}``, so the window always
    holds the bulk of the distribution whatever the size of kappa.
    """
    from ._numerics import cos_radial_constant, sphere_moment
    cells = cells_per_scale or (16 if dim == 1 else 4)
    extent_scales = extent_scales or (8.0 if dim == 1 else 4.0)
    sigma = ((s - t) * spec.upper() * cos_radial_constant(spec.alpha)
             * sphere_moment(spec.alpha, dim)) ** (1.0 / spec.alpha)
    spacing = float(format(sigma / cells, ".2g"))
    half = int(np.ceil(extent_scales * sigma / spacing))
    return SpaceTimeWindow(t, s, dim, half * spacing, spacing)


def bound_window(spec, t, s, dim=1):
    """Window for fitted constants: the stable tail is reached slowly (relative
    corrections of order ``(sigma / |x|)^alpha``), so small alpha needs a wider window."""
    if dim == 1:
        return natural_window(spec, t, s, 1, extent_scales=64.0 if spec.alpha < 1.0 else 16.0)
    return natural_window(spec, t, s, dim)


def natural_scale(spec, dim=1):
    """Duration after which the density has unit length scale."""
    from ._numerics import cos_radial_constant, sphere_moment
    return 1.0 / (spec.upper() * cos_radial_constant(spec.alpha) * sphere_moment(spec.alpha, dim))


def natural_torus(spec, dim=1, sigma=1.0, scales=16.0, cells=16):
    """Torus lattice of at least ``scales * sigma`` resolving sigma and the x-modulation."""
    from ._numerics import Lattice
    h = sigma / cells
    if not spec.x_independent:
        per = spec.x_period
        h = per / (2 * int(np.ceil(per / min(h, per / 32) / 2)))
        period = per * int(np.ceil(scales * sigma / per))
    else:
        period = scales * sigma
    n = int(round(period / h))
    n += n % 2
    return Lattice(dim, n, h)


# ---------------------------------------------------------------------------
def _tail_amplitude(spec, t, s, z):
    """Leading far-field term (s - t) kbar(z) |z|^{-1-alpha} of the 1-d increment density."""
    e, odd, c = spec.coefficients(t, s)
    z = np.asarray(z, dtype=float)
    k = e + odd * np.sign(z) + c * np.cos(spec.nu * np.abs(z))
    return (s - t) * k * np.abs(z) ** (-1.0 - spec.alpha)


def _outside_conv(spec, t, r, s, x, reach, nodes=16):
    """Part of int p_{t,r}(z) p_{r,s}(x - z) dz with z or x - z beyond ``reach``, from far fields."""
    from ._numerics import gauss_legendre
    g, w = gauss_legendre(nodes)
    edges = reach * 1.25 ** np.arange(0, 80)
    a, b = edges[:-1, None], edges[1:, None]
    zs = (0.5 * (b - a) * (g + 1) + a).ravel()
    ws = (0.5 * (b - a) * w).ravel()
    out = np.zeros_like(x)
    for sign in (1.0, -1.0):
        z = sign * zs
        # |z| > reach: both factors are far out (|x| <= reach / 4)
        out += np.sum(ws * _tail_amplitude(spec, t, r, z) * _tail_amplitude(spec, r, s, x[:, None] - z), axis=1)
        # |z| <= reach but |x - z| > reach: substitute w = x - z
        wv = sign * zs
        inside = np.abs(x[:, None] - wv) <= reach
        out += np.sum(ws * inside * _tail_amplitude(spec, t, r, x[:, None] - wv)
                      * _tail_amplitude(spec, r, s, wv), axis=1)
    return out


def check_ck_fourier(spec, t, r, s, extent=None, spacing=None, tol=1e-6):
    """Chapman-Kolmogorov residual for an x-independent kernel in d = 1.

    The convolution is a Riemann sum on a wide window; the parts of the
    integral outside the window use the far-field expansion of both factors.
    The residual is the sup over ``|x| <= extent / 4``.
    """
    from scipy.signal import fftconvolve
    from .fourier import density_grid
    if r == t or r == s:
        return Check("ck_equation", "residual", 0.0, tol, True, None, {"degenerate": True})
    base = natural_window(spec, t, s, 1)
    short = natural_window(spec, t, t + min(r - t, s - r), 1)
    spacing = spacing or short.spacing / 2.0
    extent = extent or 20.0 * base.extent
    extent = spacing * np.ceil(extent / spacing)
    w1, w2, w = (SpaceTimeWindow(a, b, 1, extent, spacing) for a, b in ((t, r), (r, s), (t, s)))
    p1, p2, p = (density_grid(spec, ww).values for ww in (w1, w2, w))
    conv = fftconvolve(p1, p2)[p1.size // 2: p1.size // 2 + p1.size] * spacing
    x = w.axis
    inner = np.abs(x) <= extent / 4.0
    corr = _outside_conv(spec, t, r, s, x[inner], extent)
    resid = np.abs(conv[inner] + corr - p[inner])
    k = int(np.argmax(resid))
    return Check("ck_equation", "residual", float(resid[k]), tol, bool(resid[k] <= tol), [float(x[inner][k])],
                 {"route": "fourier", "times": [t, r, s], "extent": extent, "spacing": spacing,
                  "tail_correction": float(np.max(np.abs(corr)))})


def parametrix_matrices(spec, t, s, lattice, lags, **solver_kw):
    """Full kernel matrices ``M[y, x] = p_{0, lag}(x, y)`` for each lag, from one solve on (t, s).

    Needs a time-independent kernel: the solve on (t, s) yields
    ``p_{r_i, s}`` at every time node, i.e. every lag ``s - r_i``.
    """
    from .parametrix import Parametrix
    if not spec.time_independent:
        raise ValueError("lag matrices need a time-independent kernel")
    extra = tuple(s - lag for lag in lags if 0.0 < lag < s - t)
    solver = Parametrix(spec, t, s, lattice, extra_times=extra, **solver_kw)
    qfield = solver.solve()
    full = solver.assemble(qfield)  # (columns, times, points)
    out = []
    for lag in lags:
        k = int(np.argmin(np.abs(solver.times - (s - lag))))
        out.append(full[:, k, :].real)
    return out, solver, qfield


def check_ck_parametrix(spec, t, r, s, lattice, tol=1e-3, matrices=None, **solver_kw):
    """Chapman-Kolmogorov residual of the assembled kernel on the torus (all columns).

    Residual is relative to ``sup p_{t,s}``; ``matrices`` reuses the output of
    :func:`parametrix_matrices` for the lags ``(r - t, s - r, s - t)``.
    """
    if matrices is None:
        matrices = parametrix_matrices(spec, t, s, lattice, (r - t, s - r, s - t), **solver_kw)
    (m1, m2, m), solver, qfield = matrices
    h = lattice.cell_volume
    lhs = h * (m2 @ m1)  # sum_z p_{r,s}(z, y) p_{t,r}(x, z)
    resid = np.abs(lhs - m) / np.max(np.abs(m))
    y, x = np.unravel_index(np.argmax(resid), resid.shape)
    pts = solver.points
    return Check("ck_equation", "residual", float(resid[y, x]), tol, bool(resid[y, x] <= tol),
                 [pts[x].tolist(), pts[y].tolist()],
                 {"route": "parametrix", "times": [t, r, s], "period": lattice.period, "n": lattice.n,
                  "picard_levels": qfield.n_levels})


def check_conservative_matrix(matrix, lattice, points, tol):
    """Conservativeness of an all-column kernel ``matrix[y, x]``: sup_x |int p(x, y) dy - 1|."""
    err, k = parametrix_row_mass(matrix, lattice)
    return Check("conservative", "residual", err, tol, bool(err <= tol), np.asarray(points[k]).tolist(),
                 {"provenance": "parametrix", "mass": 1.0 + float(matrix[:, k].sum() * lattice.cell_volume - 1.0)})


def parametrix_row_mass(matrix, lattice):
    """max_x |int p(x, y) dy - 1| for ``matrix[y, x]``."""
    mass = matrix.sum(axis=0) * lattice.cell_volume
    k = int(np.argmax(np.abs(mass - 1.0)))
    return float(abs(mass[k] - 1.0)), k


# ---------------------------------------------------------------------------
def _far_generator(f, x, alpha, even, odd, cos, nu, nodes=8):
    """int f(y) k(y - x) |y - x|^{-1-alpha} dy for x at distance >= 2 from the support of f."""
    from ._numerics import gauss_legendre
    g, w = gauss_legendre(nodes)
    lo, hi = f.center - f.support_radius, f.center + f.support_radius
    edges = np.linspace(lo, hi, int(np.ceil((hi - lo) / (0.25 * f.scale))) + 1)
    a, b = edges[:-1, None], edges[1:, None]
    y = (0.5 * (b - a) * (g + 1) + a).ravel()
    wy = (0.5 * (b - a) * w).ravel() * f(y)
    out = np.empty(x.shape)
    for start in range(0, x.size, 2048):
        z = y[None, :] - x[start:start + 2048, None]
        k = even + odd * np.sign(z) + cos * np.cos(nu * np.abs(z))
        out[start:start + 2048] = (k * np.abs(z) ** (-1.0 - alpha)) @ wy
    return out


def periodized_generator_parts(spec, f, lattice, images=2):
    """Unit-coefficient parts (even, odd, cos) of L f, periodized on a 1-d torus.

    Points within distance 2 of the support use the singular quadrature;
    the others, and all periodic images, use the far-field integral. Images
    beyond ``images`` periods are summed by a Hurwitz zeta remainder.
    """
    from scipy.special import zeta
    from .operators import levy_integral
    x = lattice.points().ravel()
    P = lattice.period
    near = np.abs(x - f.center) <= f.support_radius + 2.0
    alpha, nu = spec.alpha, spec.nu
    units = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    mass = float(np.sum(f(x)) * lattice.h)
    parts = []
    for e, o, c in units:
        if (o and not spec.odd) or (c and not spec.radial):
            parts.append(np.zeros_like(x))
            continue
        val = np.empty_like(x)
        val[near] = levy_integral(f, x[near], alpha, e, o, c, nu)
        val[~near] = _far_generator(f, x[~near], alpha, e, o, c, nu)
        for k in range(1, images + 1):
            for sgn in (1.0, -1.0):
                val += _far_generator(f, x + sgn * k * P, alpha, e, o, c, nu)
        # remaining images: f's mass seen from distance ~ (k P -+ x)
        u = x - f.center
        q = 1.0 + alpha
        rest = (P ** -q) * (zeta(q, images + 1 - u / P) * (e + o) + zeta(q, images + 1 + u / P) * (e - o))
        parts.append(val + mass * rest)
    return parts


def generator_lattice(f, spec, n=1 << 15):
    """A wide lattice resolving ``f`` spectrally for generator checks.

    Bumps have Fourier transforms decaying only like ``exp(-sqrt(|xi| w))``
    and need a much finer spacing than Gaussians.
    """
    from ._numerics import Lattice
    h = f.width / 160.0 if "bump" in f.family else min(f.scale / 8.0, 0.05)
    return Lattice(1, n, h)


def check_generator(spec, f, t, s, lattice=None, n_time=8, samples=20, tol=1e-4):
    """Residual of ``P_{t,s} f - f = int_t^s P_{t,r} L_r f dr`` at sampled points (d = 1).

    ``P_{t,r}`` acts spectrally on a wide torus; ``L_r f`` comes from the
    singular quadrature (periodized), never from the symbol.
    """
    from ._numerics import gauss_legendre
    from .fourier import periodic_exponent
    if not spec.x_independent:
        raise ValueError("check_generator needs an x-independent kernel")
    lattice = lattice or generator_lattice(f, spec)
    x = lattice.points().ravel()
    fv = f(x)
    fh = lattice.forward(fv)
    lhs = lattice.inverse(np.exp(periodic_exponent(spec, t, s, lattice)) * fh).real - fv
    parts = [lattice.forward(p) for p in periodized_generator_parts(spec, f, lattice)]
    # high modes relax on the time scale |xi|^{-alpha}: panels graded geometrically toward t
    g, w = gauss_legendre(n_time)
    edges = t + (s - t) * np.concatenate([[0.0], np.geomspace(1e-7, 1.0, 22)])
    a, b = edges[:-1, None], edges[1:, None]
    rs = (0.5 * (b - a) * (g + 1.0) + a).ravel()
    ws = (0.5 * (b - a) * w).ravel()
    acc = np.zeros_like(fh)
    for r, wr in zip(rs, ws):
        gen = spec.time_term(r) * parts[0] + spec.odd * parts[1] + spec.radial * parts[2]
        acc += wr * np.exp(periodic_exponent(spec, t, r, lattice)) * gen
    rhs = lattice.inverse(acc).real
    idx = np.flatnonzero(np.abs(x - f.center) <= f.support_radius)
    idx = idx[np.linspace(0, idx.size - 1, samples).astype(int)]
    resid = np.abs(lhs[idx] - rhs[idx])
    k = int(np.argmax(resid))
    return Check("generator_residual", "residual", float(resid[k]), tol, bool(resid[k] <= tol),
                 [float(x[idx][k])], {"times": [t, s], "function": f.to_dict(), "n_time": n_time,
                                      "period": lattice.period})


def semigroup_continuity(spec, f, t, ladder=(1.0, 0.1, 0.01, 0.001), lattice=None):
    """sup |P_{t,t+tau} f - f| along a decreasing ladder of tau (spectral, d = 1)."""
    from .fourier import periodic_exponent
    lattice = lattice or generator_lattice(f, spec)
    fv = f(lattice.points().ravel())
    fh = lattice.forward(fv)
    out = []
    for tau in ladder:
        diff = lattice.inverse(np.exp(periodic_exponent(spec, t, t + tau, lattice)) * fh).real - fv
        out.append(float(np.max(np.abs(diff))))
    return out


# ---------------------------------------------------------------------------
def _ell(theta, z):
    z = np.abs(z)
    if theta > 1.0:
        return np.minimum(z ** 2, z)
    if theta == 1.0:
        return np.minimum(z ** 2, 1.0)
    return np.minimum(z, 1.0)


def _theta_comp(theta, z, cutoff):
    if theta > 1.0:
        return z
    if theta == 1.0:
        return np.where(np.abs(z) <= cutoff, z, 0.0)
    return np.zeros_like(z)


def _fit(name, ratio, points):
    """Fitted constant: sup of a ratio array with its maximizing point."""
    k = int(np.nanargmax(ratio))
    return {"constant": float(ratio[k]), "point": np.atleast_1d(points[k]).tolist()}


def delta_integral(p, grad, x_axis, theta, tau, alpha, index):
    """int |delta^{(theta)}_p(x; z)| |z|^{-1-theta} dz at lattice point ``index`` (d = 1).

    Lattice sum over z != 0 inside the window, the near-origin cell from the
    Taylor expansion, and beyond the window a power-law extension of p.
    """
    h = x_axis[1] - x_axis[0]
    n = x_axis.size
    k = np.arange(-index, n - index)
    k = k[k != 0]
    z = k * h
    d = p[index + k] - p[index] - _theta_comp(theta, z, tau ** (1.0 / alpha)) * grad[index]
    body = h * np.sum(np.abs(d) * np.abs(z) ** (-1.0 - theta))
    # |z| < h/2: delta ~ p'' z^2 / 2 (theta >= 1) or p' z (theta < 1)
    if theta >= 1.0:
        lo, hi = max(index - 1, 0), min(index + 1, n - 1)
        second = (p[hi] - 2 * p[index] + p[lo]) / h ** 2 if hi - lo == 2 else 0.0
        near = abs(second) * (h / 2) ** (2.0 - theta) / (2.0 - theta)
    else:
        near = 2.0 * abs(grad[index]) * (h / 2) ** (1.0 - theta) / (1.0 - theta)
    # beyond the window p is extended by its power-law tail c |y|^{-1-alpha}
    g, w = np.polynomial.legendre.leggauss(16)
    edges = x_axis[-1] + h / 2 + (x_axis[-1] + h / 2) * (np.geomspace(1e-3, 1e7, 41) - 1e-3)
    a, b = edges[:-1, None], edges[1:, None]
    y = (0.5 * (b - a) * (g + 1) + a).ravel()
    wy = (0.5 * (b - a) * w).ravel()
    far = 0.0
    for sign, edge_val in ((1.0, p[-1]), (-1.0, p[0])):
        amp = edge_val * x_axis[-1] ** (1.0 + alpha)
        z = sign * y - x_axis[index]
        dz = amp * y ** (-1.0 - alpha) - p[index] - _theta_comp(theta, z, tau ** (1.0 / alpha)) * grad[index]
        far += np.sum(wy * np.abs(dz) * np.abs(z) ** (-1.0 - theta))
    return body + near + far


def lemma_constants(spec, window, theta=None, pairs=2000, seed=0, K=0.1, sample_stride=4):
    """Fitted constants of the increment, gradient, delta and kappa-continuity bounds (d = 1).

    Returns a dict name -> {constant, point}.
    """
    from .fourier import density_grid, spectral_derivative
    if window.dim != 1:
        raise ValueError("lemma constants are computed in d = 1")
    alpha = spec.alpha
    theta = alpha if theta is None else theta
    tau = window.duration
    fld = density_grid(spec, window)
    p = fld.values
    grad = spectral_derivative(spec, window, gradient=True)[0].values
    x = window.axis
    r0 = rho(0.0, alpha, alpha, tau, x, d=1)
    rng = np.random.default_rng(np.random.Philox(key=[seed, 7]))
    i = rng.integers(0, x.size, pairs)
    j = np.concatenate([rng.integers(0, x.size, pairs // 2),
                        np.clip(i[pairs // 2:] + rng.integers(-3, 4, pairs - pairs // 2), 0, x.size - 1)])
    keep = i != j
    i, j = i[keep], j[keep]
    out = {}
    scale = np.minimum(np.abs(x[i] - x[j]) * tau ** (-1.0 / alpha), 1.0)
    out["holder_increment"] = _fit("holder_increment", np.abs(p[i] - p[j]) / (scale * (r0[i] + r0[j])),
                                   np.stack([x[i], x[j]], -1))
    out["gradient"] = _fit("gradient", np.abs(grad) / rho(0.0, alpha - 1.0, alpha, tau, x, d=1), x)
    # pointwise delta bound at random (x, z) with x + z on the window
    zi = np.clip(i + (j - i), 0, x.size - 1)
    z = x[zi] - x[i]
    nz = z != 0
    d = p[zi] - p[i] - _theta_comp(theta, z, tau ** (1.0 / alpha)) * grad[i]
    bound = _ell(theta, z * tau ** (-1.0 / alpha)) * (r0[zi] + r0[i])
    out["delta_pointwise"] = _fit("delta_pointwise", np.where(nz, np.abs(d) / np.where(nz, bound, 1.0), 0.0),
                                  np.stack([x[i], z], -1))
    # interior points only: the extension beyond the window is approximate
    idx = np.arange(0, x.size, sample_stride)
    idx = idx[np.abs(x[idx]) <= 0.5 * window.extent]
    integ = np.array([delta_integral(p, grad, x, theta, tau, alpha, k) for k in idx])
    out["delta_integral"] = _fit("delta_integral", integ / rho(0.0, alpha - theta, alpha, tau, x[idx], d=1), x[idx])
    other = replace(spec, a=spec.a + K, kappa0=spec.kappa0 + K)
    p2 = density_grid(other, window).values
    g2 = spectral_derivative(other, window, gradient=True)[0].values
    out["kappa_continuity_0"] = _fit("kappa_continuity_0", np.abs(p - p2) / (K * r0), x)
    out["kappa_continuity_1"] = _fit("kappa_continuity_1",
                                     np.abs(grad - g2) / (K * rho(0.0, alpha - 1.0, alpha, tau, x, d=1)), x)
    out["theta"] = theta
    return out


def check_lemma_bounds(spec, window, theta=None, tol=0.1, seed=0):
    """Lemma constants on a window, its refinement and its enlargement.

    A constant passes iff it is finite and changes by less than ``tol``
    (relative) under both 2x lattice refinement and 2x window enlargement.
    """
    base = lemma_constants(spec, window, theta, seed=seed)
    fine = lemma_constants(spec, window.refined(), theta, seed=seed)
    wide = lemma_constants(spec, _widened(window), theta, seed=seed)
    checks = []
    for name in ("holder_increment", "gradient", "delta_pointwise", "delta_integral",
                 "kappa_continuity_0", "kappa_continuity_1"):
        c0, c1, c2 = base[name]["constant"], fine[name]["constant"], wide[name]["constant"]
        refine_drift = abs(c1 - c0) / max(abs(c0), 1e-300)
        domain_drift = abs(c2 - c0) / max(abs(c0), 1e-300)
        ok = bool(np.all(np.isfinite([c0, c1, c2])) and refine_drift < tol and domain_drift < tol)
        checks.append(Check(name, "constant", c1, tol, ok, fine[name]["point"],
                            {"theta": base["theta"], "coarse": c0, "fine": c1, "wide": c2,
                             "refine_drift": refine_drift, "domain_drift": domain_drift}))
    return checks


# ---------------------------------------------------------------------------
def _widened(window, factor=2):
    return SpaceTimeWindow(window.t, window.s, window.dim, window.extent * factor, window.spacing)


def _fourier_derivative_constants(spec, window, theta):
    from .fourier import density_grid, spectral_derivative
    fld = density_grid(spec, window)
    if theta is None:
        grads = np.stack([g.values for g in spectral_derivative(spec, window, gradient=True)])
        return grad_log_constant(fld, grads, spec.alpha)
    return derivative_constant(spectral_derivative(spec, window, theta=theta).values, fld, spec.alpha, theta)


def _parametrix_derivative_constants(spec, t, s, lattice, theta, **solver_kw):
    from .parametrix import Parametrix, _field_from_rows, assemble_density, assemble_fractional_derivative
    solver = Parametrix(spec, t, s, lattice, **solver_kw)
    origin = int(np.argmin(np.linalg.norm(solver.points, axis=-1)))
    q = solver.solve(cols=[origin])
    fld = assemble_density(solver, q)
    y = solver.points[origin]
    if theta is None:
        comps = [assemble_fractional_derivative(solver, q, gradient=True, component=k)["total"][0]
                 for k in range(lattice.dim)]
        grads = np.stack([_field_from_rows(lattice, c.reshape(lattice.shape).real, t, s, y).values
                          for c in comps])
        return grad_log_constant(fld, grads, spec.alpha)
    total = assemble_fractional_derivative(solver, q, theta=theta)["total"][0]
    vals = _field_from_rows(lattice, total.reshape(lattice.shape).real, t, s, y).values
    return derivative_constant(vals, fld, spec.alpha, theta)


def check_derivative(spec, theta=None, window=None, lattice=None, tol=0.1, **solver_kw):
    """Derivative constant, finite and stable under refinement and under doubling the domain.

    ``theta=None`` fits ``sup (s-t)^{1/alpha} |grad log p|`` ("grad_log"),
    otherwise ``sup |Delta^{theta/2} p| / rho^0_{alpha-theta}`` ("frac_derivative").
    Give ``window`` for the fourier route or ``lattice`` (with ``window``
    supplying t and s) for the parametrix route, where doubling the domain
    doubles the torus period.
    """
    from ._numerics import Lattice
    name = "grad_log" if theta is None else "frac_derivative"
    if lattice is None:
        route = "fourier"
        base = _fourier_derivative_constants(spec, window, theta)
        fine = _fourier_derivative_constants(spec, window.refined(), theta)
        wide = _fourier_derivative_constants(spec, _widened(window), theta)
    else:
        route = "parametrix"
        t, s = window.t, window.s
        run = lambda lat: _parametrix_derivative_constants(spec, t, s, lat, theta, **solver_kw)
        base = run(lattice)
        fine = run(Lattice(lattice.dim, 2 * lattice.n, lattice.h / 2))
        wide = run(Lattice(lattice.dim, 2 * lattice.n, lattice.h))
    refine_drift = abs(fine[0] - base[0]) / base[0]
    domain_drift = abs(wide[0] - base[0]) / base[0]
    ok = bool(np.isfinite(base[0]) and np.isfinite(fine[0]) and np.isfinite(wide[0])
              and refine_drift < tol and domain_drift < tol)
    details = {"route": route, "theta": theta, "coarse": base[0], "fine": fine[0], "wide": wide[0],
               "refine_drift": refine_drift, "domain_drift": domain_drift, "wide_point": wide[1]}
    return Check(name, "constant", fine[0], tol, ok, fine[1], details)


# ---------------------------------------------------------------------------
def _lookup(fld, pts):
    """Flat indices of physical points in a field (periodic wrap on a torus)."""
    pts = np.asarray(pts, dtype=float)
    h, lo = fld.spacing, fld.axis[0]
    period = fld.meta.get("period")
    if period is not None:
        pts = (pts - lo) % period + lo
    idx = np.rint((pts - lo) / h).astype(int)
    n = fld.values.shape[0]
    if np.any(idx < 0) or np.any(idx >= n):
        raise ValueError("point outside the field")
    return np.ravel_multi_index(tuple(idx.T), fld.values.shape)


def holder_constant(fld, alpha, pts_a, pts_b):
    """sup |p(a) - p(b)| / ((tau^{-1/alpha}|a - b|) ^ 1)(rho(a) + rho(b)) over given point pairs."""
    p = fld.values.ravel()
    r = _rho_on(fld, alpha, alpha).ravel()
    i, j = _lookup(fld, pts_a), _lookup(fld, pts_b)
    dist = np.linalg.norm(pts_a - pts_b, axis=-1)
    period = fld.meta.get("period")
    if period is not None:
        diff = (pts_a - pts_b + 0.5 * period) % period - 0.5 * period
        dist = np.linalg.norm(diff, axis=-1)
    scale = np.minimum(dist * fld.window.duration ** (-1.0 / alpha), 1.0)
    ratio = np.abs(p[i] - p[j]) / (scale * (r[i] + r[j]))
    k = int(np.argmax(ratio))
    return float(ratio[k]), [pts_a[k].tolist(), pts_b[k].tolist()]


def _holder_pairs(fld, pairs, seed):
    pts = fld.points().reshape(-1, fld.dim)
    rng = np.random.default_rng(np.random.Philox(key=[seed, 11]))
    i = rng.integers(0, len(pts), pairs)
    # half the pairs are lattice neighbours, where the small-distance branch is active
    step = rng.integers(-3, 4, (pairs, fld.dim)) * fld.spacing
    far = pts[rng.integers(0, len(pts), pairs)]
    b = np.where((np.arange(pairs) % 2 == 0)[:, None], far, pts[i] + step)
    a = pts[i]
    lo, hi = fld.axis[0], fld.axis[-1]
    inside = np.all((b >= lo) & (b <= hi), axis=-1) & np.any(a != b, axis=-1)
    return a[inside], b[inside]


def check_holder_xy(fld, alpha, refined=None, wide=None, pairs=4000, seed=0, tol=0.1):
    """Hoelder increment constant in x at fixed y on the same physical point pairs."""
    a, b = _holder_pairs(fld, pairs, seed)
    c0, point = holder_constant(fld, alpha, a, b)
    details, ok, value = {"coarse": c0}, bool(np.isfinite(c0)), c0
    for label, other in (("fine", refined), ("wide", wide)):
        if other is None:
            continue
        c1, p1 = holder_constant(other, alpha, a, b)
        drift = abs(c1 - c0) / c0
        details[label], details[f"{label}_drift"] = c1, drift
        ok = ok and bool(np.isfinite(c1) and drift < tol)
        if label == "fine":
            value, point = c1, p1
    return Check("holder_xy", "constant", value, tol, ok, point, details)


def continuity_constant(fld, other, alpha, K):
    """sup |p^kappa - p^kappa~| / (K rho^0_alpha) between two fields on one lattice."""
    r = _rho_on(fld, alpha, alpha)
    ratio = np.abs(fld.values - other.values) / (K * r)
    idx = np.unravel_index(np.argmax(ratio), ratio.shape)
    return float(ratio[idx]), fld.points()[idx].tolist()


def shifted_kernel(spec, K=0.1):
    """kappa + K: satisfies the difference condition with gamma = 0 and constant K."""
    return replace(spec, a=spec.a + K, kappa0=spec.kappa0 + K)


def parametrix_field(spec, t, s, lattice, **solver_kw):
    """Assembled x -> p_{t,s}(x, 0) on a torus lattice."""
    from .parametrix import Parametrix, assemble_density
    solver = Parametrix(spec, t, s, lattice, **solver_kw)
    origin = int(np.argmin(np.linalg.norm(solver.points, axis=-1)))
    return assemble_density(solver, solver.solve(cols=[origin]))


# ---------------------------------------------------------------------------
DEFAULT_TOLERANCES = {"stability": 0.1, "mass_fourier": 1e-6, "mass_parametrix": 1e-3,
                      "ck_fourier": 1e-6, "ck_parametrix": 1e-3, "generator": 1e-4}


def default_thetas(spec):
    """Orders checked by default: theta = alpha and theta = alpha + beta/2 (capped below 2).

    Orders below alpha are accepted on request; the weight rho^0_{alpha-theta}
    then decays faster than Delta^{theta/2} p, so their fit grows with the window.
    """
    top = min(spec.alpha + 0.5 * spec.beta, 0.5 * (spec.alpha + min(spec.alpha + spec.beta, 2.0)))
    return [spec.alpha, top] if top > spec.alpha else [spec.alpha]


def _window_for(spec, window, dim):
    if window is not None:
        return window
    raise ValueError("a window (t, s, dim) is required")


def run_validation(spec, t, s, dim=1, window=None, method=None, seed=0, tolerance_scale=1.0,
                   thetas=None, quadrature=None):
    """Run the report checks for one kernel and time pair.

    Parameters
    ----------
    spec : KernelSpec
    t, s : float
    dim : int
    window : SpaceTimeWindow, optional
        Fourier-route lattice; default :func:`bound_window`.
    method : {"fourier", "parametrix"}, optional
        Default: fourier for x-independent kernels, parametrix otherwise.
    seed : int
        Seed of the sampled point pairs.
    tolerance_scale : float
        Multiplies every tolerance.
    thetas : sequence of float, optional
        Orders of the fractional-derivative checks (default :func:`default_thetas`).
    quadrature : dict, optional
        Parametrix settings ``n_time``, ``n_cheb``, ``scales``, ``cells`` and
        the torus ``lattice_n`` override.

    Returns
    -------
    ValidationReport
    """
    from .fourier import density_grid
    method = method or ("fourier" if spec.x_independent else "parametrix")
    if method == "fourier" and not spec.x_independent:
        from .kernels import ConfigError
        raise ConfigError("x-dependent kernels need the parametrix method", "method")
    tol = {k: v * tolerance_scale for k, v in DEFAULT_TOLERANCES.items()}
    stab = tol["stability"]
    thetas = list(default_thetas(spec) if thetas is None else thetas)
    quad = dict(quadrature or {})
    alpha = spec.alpha
    report = ValidationReport(meta={"kernel": spec.to_dict(), "times": [t, s], "dim": dim, "method": method,
                                    "seed": seed, "tolerance_scale": tolerance_scale, "thetas": thetas})
    skipped = {}
    if method == "fourier":
        window = window or bound_window(spec, t, s, dim)
        report.meta["window"] = window.to_dict()
        fld, fine, wide = (density_grid(spec, w) for w in (window, window.refined(), _widened(window)))
        report.add(check_two_sided(fld, alpha, fine, wide, stab))
        report.add(check_conservative(fld, tol["mass_fourier"]))
        report.add(check_ck_fourier(spec, t, 0.5 * (t + s), s, tol=tol["ck_fourier"]))
        for th in thetas:
            report.add(check_derivative(spec, th, window=window, tol=stab))
        report.add(check_derivative(spec, None, window=window, tol=stab))
        report.add(check_holder_xy(fld, alpha, fine, wide, seed=seed, tol=stab))
        other = shifted_kernel(spec)
        K = other.a - spec.a
        pairs = [continuity_constant(f, density_grid(other, f.window), alpha, K) for f in (fld, fine, wide)]
        report.add(_continuity_check(pairs, stab, K))
        if dim == 1:
            from .subordination import TestFunction
            sigma = window.extent / (64.0 if alpha < 1.0 else 16.0)
            f = TestFunction("gaussian", width=float(format(sigma, ".2g")))
            report.add(check_generator(spec, f, t, s, tol=tol["generator"]))
            for c in check_lemma_bounds(spec, window, alpha, stab, seed):
                c.name = f"lemma_{c.name}"
                report.add(c)
        else:
            skipped["generator_residual"] = "real-space generator quadrature is one-dimensional"
    elif method == "parametrix":
        tau = s - t
        from ._numerics import cos_radial_constant, sphere_moment
        sigma = (tau * spec.upper() * cos_radial_constant(alpha) * sphere_moment(alpha, dim)) ** (1.0 / alpha)
        lattice = natural_torus(spec, dim, sigma, quad.pop("scales", 16.0 if dim == 1 else 4.0),
                                quad.pop("cells", 16 if dim == 1 else 8))
        # the time-weight tensor grows like points * n_time^2 * n_cheb
        quad.setdefault("n_time", 16 if dim == 1 else 8)
        quad.setdefault("n_cheb", 12 if dim == 1 else 6)
        if "lattice_n" in quad:
            from ._numerics import Lattice
            n = int(quad.pop("lattice_n"))
            lattice = Lattice(dim, n, lattice.period / n)
        from ._numerics import Lattice
        fine_lat = Lattice(dim, 2 * lattice.n, lattice.h / 2)
        wide_lat = Lattice(dim, 2 * lattice.n, lattice.h)
        report.meta["lattice"] = {"n": lattice.n, "h": lattice.h, "period": lattice.period}
        report.meta["quadrature"] = dict(quad)
        fld, fine, wide = (parametrix_field(spec, t, s, lat, **quad) for lat in (lattice, fine_lat, wide_lat))
        report.add(check_two_sided(fld, alpha, fine, wide, stab))
        if dim == 1:
            r = 0.5 * (t + s)
            # all-column checks are exact on any torus; a compact one bounds the memory
            compact = natural_torus(spec, dim, sigma, 4.0, 8)
            report.meta["matrix_lattice"] = {"n": compact.n, "h": compact.h, "period": compact.period}
            mats = parametrix_matrices(spec, t, s, compact, (r - t, s - r, s - t), **quad)
            report.add(check_conservative_matrix(mats[0][2], compact, mats[1].points, tol["mass_parametrix"]))
            report.add(check_ck_parametrix(spec, t, r, s, compact, tol=tol["ck_parametrix"], matrices=mats))
        else:
            skipped["conservative"] = "the y-integral needs every column; run in one dimension"
            skipped["ck_equation"] = "the all-column parametrix solve is run in one dimension"
        win = SpaceTimeWindow(t, s, dim, 1.0, 1.0)
        for th in thetas:
            report.add(check_derivative(spec, th, window=win, lattice=lattice, tol=stab, **quad))
        report.add(check_derivative(spec, None, window=win, lattice=lattice, tol=stab, **quad))
        report.add(check_holder_xy(fld, alpha, fine, wide, seed=seed, tol=stab))
        other = shifted_kernel(spec)
        K = other.a - spec.a
        pairs = [continuity_constant(f, parametrix_field(other, t, s, lat, **quad), alpha, K)
                 for f, lat in ((fld, lattice), (fine, fine_lat), (wide, wide_lat))]
        report.add(_continuity_check(pairs, stab, K))
        skipped["generator_residual"] = "needs an x-independent kernel"
    else:
        from .kernels import ConfigError
        raise ConfigError(f"unknown method {method!r}", "method")
    report.meta["skipped"] = skipped
    return report


def _continuity_check(pairs, tol, K):
    (c0, _), (c1, p1), (c2, _) = pairs
    d1, d2 = abs(c1 - c0) / c0, abs(c2 - c0) / c0
    ok = bool(np.all(np.isfinite([c0, c1, c2])) and d1 < tol and d2 < tol)
    return Check("kernel_continuity", "constant", c1, tol, ok, p1,
                 {"K": K, "coarse": c0, "fine": c1, "wide": c2, "refine_drift": d1, "domain_drift": d2})

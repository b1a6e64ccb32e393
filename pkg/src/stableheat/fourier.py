"""Densities of x-independent kernels by Fourier inversion.

Every inversion is done at unit time (the end time is mapped to ``s - t = 1``
by the scaling ``p_{t,s}(x) = (s-t)^{-d/alpha} p~(x (s-t)^{-1/alpha})``) on a
padded periodic lattice. Periodic images of the heavy tail are removed using
the leading tail term ``kappa(w) |w|^{-d-alpha}``.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate, special

from ._numerics import (Lattice, chebyshev_nodes, cos_radial_constant, gauss_legendre,
                        barycentric_weights, lagrange_basis, next_even, sphere_area)
from .exponent import (QuadratureError, _osc_tail, char_exponent, decay_constant,
                       fractional_laplacian_constant, unit_symbols)
from .fields import DensityField, SpaceTimeWindow

FREQ_THRESHOLD = 1e-12
IMAGE_TARGET = 1e-10
LATTICE_CAPS = {1: 1 << 21, 2: 2048, 3: 128}


class AliasingError(RuntimeError):
    """Spatial period too small for the window."""


class AliasingWarning(UserWarning):
    """Lattice size cap reduced the padding below the accuracy target."""


def _unit_coefficients(spec, t, s, h):
    frozen_h = None if spec.x_independent else h
    c_e, c_o, c_r = spec.coefficients(t, s, frozen_h)
    return float(c_e), float(c_o), float(c_r)


def _lower_bound(c_e, c_o, c_r, spec):
    low = c_e - abs(c_o) - abs(c_r)
    return max(low, 1.0 / spec.kappa0)


def _unit_exponent(freqs, alpha, coeffs, nu):
    c_e, c_o, c_r = coeffs
    even, odd, cos = unit_symbols(freqs, alpha, nu, need_cos=c_r != 0.0)
    out = c_e * even + c_o * odd
    if c_r != 0.0:
        out = out + c_r * cos
    return out


def _multiplier(freqs, psi, kind, theta=None, component=None):
    if kind == "density":
        return np.exp(psi)
    if kind == "gradient":
        return -1j * freqs[..., component] * np.exp(psi)
    if kind == "fractional":
        return -np.linalg.norm(freqs, axis=-1) ** theta * np.exp(psi)
    raise ValueError(kind)


# ---------------------------------------------------------------------------
# image corrections of the heavy tail
def _tail_1d(w, P, coeffs, nu, alpha, kind, theta=None, n_cos=64):
    c_e, c_o, c_r = coeffs
    q_plus, q_minus = 1.0 + w / P, 1.0 - w / P
    out = np.zeros_like(w)
    m = np.concatenate([np.arange(-n_cos, 0), np.arange(1, n_cos + 1)])
    if kind == "density":
        s = 1.0 + alpha
        zp, zm = special.zeta(s, q_plus), special.zeta(s, q_minus)
        out += P ** (-s) * (c_e * (zp + zm) + c_o * (zp - zm))
        if c_r:
            for mm in m:
                v = np.abs(w + mm * P)
                out += c_r * np.cos(nu * v) * v ** (-s)
    elif kind == "gradient":
        s = 1.0 + alpha
        zp, zm = special.zeta(s + 1, q_plus), special.zeta(s + 1, q_minus)
        out += -s * P ** (-s - 1) * (c_e * (zp - zm) + c_o * (zp + zm))
        if c_r:
            for mm in m:
                v = w + mm * P
                a = np.abs(v)
                out += c_r * np.sign(v) * (-nu * np.sin(nu * a) * a ** (-s)
                                           - s * np.cos(nu * a) * a ** (-s - 1))
    elif kind == "fractional":
        s = 1.0 + theta
        const = 1.0 / fractional_laplacian_constant(theta, 1)
        out += const * P ** (-s) * (special.zeta(s, q_plus) + special.zeta(s, q_minus))
    return out


def _tail_value(v, coeffs, nu, alpha, kind, theta=None, component=None):
    """Leading far-field term at displacement ``v`` (shape (..., d))."""
    c_e, c_o, c_r = coeffs
    d = v.shape[-1]
    r = np.linalg.norm(v, axis=-1)
    vhat1 = v[..., 0] / r
    if kind == "density":
        return (c_e + c_o * vhat1 + c_r * np.cos(nu * r)) * r ** (-d - alpha)
    if kind == "fractional":
        return r ** (-d - theta) / fractional_laplacian_constant(theta, d)
    vhat_j = v[..., component] / r
    ang = c_e + c_o * vhat1 + c_r * np.cos(nu * r)
    grad = (-(d + alpha) * ang * vhat_j / r
            + c_o * ((component == 0) - vhat1 * vhat_j) / r
            - c_r * nu * np.sin(nu * r) * vhat_j)
    return grad * r ** (-d - alpha)


def _tail_box(w, P, coeffs, nu, alpha, kind, theta=None, component=None, box=4):
    d = w.shape[-1]
    rng = np.arange(-box, box + 1)
    grids = np.meshgrid(*([rng] * d), indexing="ij")
    shifts = np.stack([g.ravel() for g in grids], -1)
    shifts = shifts[np.any(shifts != 0, axis=1)] * P
    out = np.zeros(w.shape[:-1])
    for shift in shifts:
        out += _tail_value(w + shift, coeffs, nu, alpha, kind, theta, component)
    half = (box + 0.5) * P
    if kind == "density":
        out += coeffs[0] * _outside_cube_integral(d, half, alpha) / P ** d
    elif kind == "fractional":
        out += _outside_cube_integral(d, half, theta) / P ** d / fractional_laplacian_constant(theta, d)
    return out


def image_correction(w, P, coeffs, nu, alpha, kind="density", theta=None, component=None, box=4):
    """Sum of the leading tail over the nonzero periodic images of ``w``."""
    w = np.asarray(w, dtype=float)
    if w.shape[-1] == 1:
        flat = w[..., 0].ravel()
        return _tail_1d(flat, P, coeffs, nu, alpha, kind, theta).reshape(w.shape[:-1])
    return _tail_box(w, P, coeffs, nu, alpha, kind, theta, component, box)


def _outside_cube_integral(d, half, power):
    """int_{outside [-half, half]^d} |v|^{-d-power} dv."""
    if d == 1:
        return 2.0 * half ** (-power) / power
    from .kernels import _sphere_rule
    dirs, dw = _sphere_rule(d, 256 if d == 2 else 48)
    reach = half / np.max(np.abs(dirs), axis=1)
    return float(np.sum(dw * reach ** (-power))) / power


# ---------------------------------------------------------------------------
def _plan(spec, window, coeffs, kind, theta):
    """Choose the internal unit-time lattice (stride k, size n)."""
    d = window.dim
    alpha = spec.alpha
    scale = window.duration ** (1.0 / alpha)
    h_w = window.spacing / scale
    half = window.extent / scale
    low = _lower_bound(*coeffs, spec)
    c = low * cos_radial_constant(alpha) * _moment(alpha, d)
    xi_max = (np.log(1.0 / FREQ_THRESHOLD) / c) ** (1.0 / alpha)
    if kind != "density":
        xi_max *= 1.5
    stride = max(1, int(np.ceil(h_w * xi_max / np.pi)))
    h_int = h_w / stride
    p_acc = (10.0 * spec.kappa0 ** 2 / IMAGE_TARGET) ** (1.0 / (d + 2.0 * alpha))
    if kind == "fractional":
        p_acc = max(p_acc, (10.0 / IMAGE_TARGET) ** (1.0 / (d + theta)))
    target = max(8.0 * half, p_acc)
    n = next_even(target / h_int)
    cap = LATTICE_CAPS[d]
    capped = n > cap
    if capped:
        n = cap
    period = n * h_int
    if period < 2.0 * half + 2.0 * h_int:
        raise AliasingError(f"lattice period {period:.3g} cannot hold window half-width {half:.3g}; "
                            "reduce extent or refine less")
    if capped and period < 4.0 * half:
        warnings.warn("lattice cap limits padding; image correction carries the error",
                      AliasingWarning, stacklevel=3)
    return Lattice(d, n, h_int), stride, scale, xi_max, capped


def _moment(alpha, d):
    from ._numerics import sphere_moment
    return sphere_moment(alpha, d)


def _invert(spec, window, h=None, kind="density", theta=None, component=None, periodic_images=True):
    coeffs = _unit_coefficients(spec, window.t, window.s, h)
    lattice, stride, scale, xi_max, capped = _plan(spec, window, coeffs, kind, theta)
    nu = spec.nu * scale
    d = window.dim
    alpha = spec.alpha
    freqs = lattice.frequencies()
    psi = _unit_exponent(freqs, alpha, coeffs, nu)
    comps = range(d) if (kind == "gradient" and component is None) else [component]
    results = []
    for comp in comps:
        mult = _multiplier(freqs, psi, kind, theta, comp)
        full = lattice.inverse(mult)
        imag = float(np.max(np.abs(full.imag)))
        full = full.real
        m = window.half_count
        centre = lattice.n // 2
        sl = tuple(slice(centre - m * stride, centre + m * stride + 1, stride) for _ in range(d))
        vals = full[sl].copy()
        w_pts = window.points() / scale
        period = lattice.period
        if periodic_images:
            vals -= image_correction(w_pts, period, coeffs, nu, alpha, kind, theta, comp)
        results.append((vals, full, imag))
    info = dict(lattice_n=lattice.n, stride=stride, period_unit=lattice.period, xi_max=xi_max,
                capped=capped, scale=scale, coeffs=coeffs, nu_unit=nu)
    return results, lattice, info


def _tolerance(spec, info, d, kind, theta=None):
    alpha = spec.alpha
    half = info["period_unit"] / 2.0
    tol = 100.0 * spec.kappa0 ** 2 * half ** (-d - 2.0 * alpha) + FREQ_THRESHOLD
    c_r = info["coeffs"][2]
    if c_r:
        tol += abs(c_r) * 2.0 * (64 * 2 * half) ** (-alpha) / alpha / (2 * half)
    if kind == "fractional":
        tol += (half) ** (-d - theta - 1.0)
    return tol


def density_grid(spec, window, h=None, clamp=True):
    """Density p_{t,s} of the increment on the window lattice.

    Parameters
    ----------
    spec : KernelSpec
        x-independent kernel (or x-dependent with freezing value ``h``).
    window : SpaceTimeWindow

    Returns
    -------
    DensityField
        ``provenance="fourier"``; ``meta`` records the internal lattice,
        the analytic tail mass beyond the window, negativity counters and
        the largest imaginary residue.
    """
    if not spec.x_independent and h is None:
        raise ValueError("density_grid needs an x-independent kernel (or a freezing value h)")
    d = window.dim
    alpha = spec.alpha
    results, lattice, info = _invert(spec, window, h, "density")
    vals, full, imag = results[0]
    scale = info["scale"]
    tol_unit = _tolerance(spec, info, d, "density")
    coeffs, nu = info["coeffs"], info["nu_unit"]

    # mass on the fine internal lattice plus the analytic tail beyond the box
    pts_all = lattice.points().reshape(-1, d)
    corr = image_correction(pts_all, lattice.period, coeffs, nu, alpha, "density",
                            box=1 if d > 1 else 4)
    beyond = coeffs[0] * _outside_cube_integral(d, lattice.period / 2.0, alpha)
    if d == 1 and coeffs[2]:
        beyond += 2.0 * coeffs[2] * float(np.real(_osc_tail(np.array([nu]), 1.0 + alpha,
                                                             lattice.period / 2.0))[0])
    fine_mass = float(np.sum(full.reshape(-1) - corr) * lattice.cell_volume + beyond)
    window_mass = float(np.sum(vals) * (window.spacing / scale) ** d)
    tail_mass = fine_mass - window_mass
    values = vals * scale ** (-d)
    tol = tol_unit * scale ** (-d)
    neg = values < 0
    n_clamped = int(np.sum(neg & (values >= -tol)))
    n_negative = int(np.sum(values < -tol))
    if clamp:
        values = np.where(neg & (values >= -tol), 0.0, values)
    meta = dict(info, tail_mass=tail_mass, clamped=n_clamped, negative_above_tol=n_negative,
                imag_residue=imag * scale ** (-d), max_value=float(np.max(values)))
    meta.pop("coeffs")
    meta["coefficients"] = list(coeffs)
    if h is not None:
        meta["frozen_h"] = float(h)
    return DensityField(window=window, values=values, provenance="fourier", tolerance=tol, meta=meta)


def spectral_derivative(spec, window, theta=None, gradient=False, h=None):
    """Gradient (``gradient=True``) or Delta^{theta/2} of the density by multipliers.

    The gradient is with respect to the displacement; ``-i xi`` and
    ``-|xi|^theta`` multiply ``e^psi`` before inversion.

    Returns
    -------
    DensityField or list of DensityField (one per gradient component).
    """
    if gradient == (theta is not None):
        raise ValueError("give exactly one of theta or gradient=True")
    if theta is not None and not 0.0 < theta < 2.0:
        raise ValueError("theta must lie in (0, 2)")
    d = window.dim
    kind = "gradient" if gradient else "fractional"
    results, lattice, info = _invert(spec, window, h, kind, theta)
    scale = info["scale"]
    order = 1.0 if gradient else theta
    tol = _tolerance(spec, info, d, kind, theta) * scale ** (-d - order)
    fields = []
    for vals, _, imag in results:
        meta = dict(info, derivative=kind, theta=theta, imag_residue=imag)
        meta["coeffs"] = list(meta["coeffs"])
        fields.append(DensityField(window=window, values=vals * scale ** (-d - order),
                                   provenance="fourier", tolerance=tol, meta=meta))
    return fields if gradient else fields[0]


# ---------------------------------------------------------------------------
def density_point(spec, t, s, x, h=None, tol=1e-8):
    """Single-point inversion by oscillatory quadrature (no lattice).

    Parameters
    ----------
    x : float or array_like of shape (d,)

    Returns
    -------
    float
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    alpha = spec.alpha
    coeffs = _unit_coefficients(spec, t, s, h)
    tau = s - t
    low = _lower_bound(*coeffs, spec)
    c = low * cos_radial_constant(alpha) * _moment(alpha, d) * tau
    xi_max = (np.log(1.0 / 1e-16) / c) ** (1.0 / alpha)

    def psi(xi_pts):
        return tau * _unit_exponent(xi_pts, alpha, coeffs, spec.nu)

    if d == 1:
        x0 = float(x[0])

        def part(kind):
            def f(xi):
                val = psi(np.array([[xi]]))[0]
                amp = np.exp(val.real)
                return amp * (np.cos(val.imag) if kind == "cos" else np.sin(val.imag))
            return f
        # Re[e^{-i xi x} e^psi] = e^{Re psi} [cos(xi x) cos(Im psi) + sin(xi x) sin(Im psi)]
        if abs(x0) > 1.0:
            a, ea = integrate.quad(part("cos"), 0.0, xi_max, weight="cos", wvar=x0, limit=400)
            b, eb = integrate.quad(part("sin"), 0.0, xi_max, weight="sin", wvar=x0, limit=400)
        else:
            a, ea = integrate.quad(lambda xi: part("cos")(xi) * np.cos(xi * x0), 0.0, xi_max, limit=400,
                                   epsabs=1e-14, epsrel=1e-12)
            b, eb = integrate.quad(lambda xi: part("sin")(xi) * np.sin(xi * x0), 0.0, xi_max, limit=400,
                                   epsabs=1e-14, epsrel=1e-12)
        value = (a + b) / np.pi
        err = (ea + eb) / np.pi
        if err > max(tol, 1e-8 * abs(value)):
            raise QuadratureError(f"density_point error estimate {err:.3g}")
        return float(value)

    # polar rule in d = 2, 3
    n_r = 400
    edges = np.linspace(0.0, xi_max, 81)
    gx, gw = gauss_legendre(n_r // 80 * 2)
    a_, b_ = edges[:-1, None], edges[1:, None]
    rad = (0.5 * (b_ - a_) * (gx + 1.0) + a_).ravel()
    rw = (0.5 * (b_ - a_) * gw).ravel()
    from .kernels import _sphere_rule
    dirs, dw = _sphere_rule(d, 96 if d == 2 else 32)
    pts = rad[:, None, None] * dirs[None, :, :]
    vals = np.exp(psi(pts) - 1j * pts @ x)
    value = np.sum(rw[:, None] * dw[None, :] * rad[:, None] ** (d - 1) * vals).real / (2 * np.pi) ** d
    return float(value)


# ---------------------------------------------------------------------------
def periodic_exponent(spec, t, s, lattice, h=None, backward=True):
    """psi_{t,s} on the lattice frequencies, conjugated for the backward variable."""
    psi = char_exponent(spec, t, s, lattice.frequencies(), h=h)
    return np.conj(psi) if backward else psi


def periodic_density(spec, t, s, lattice, h=None):
    """Density of the increment wrapped onto the torus of the lattice."""
    psi = char_exponent(spec, t, s, lattice.frequencies(), h=h)
    return lattice.inverse(np.exp(psi)).real


class FrozenFamily:
    """Frozen densities p^{(y)}_{t,s} indexed by the freezing point y.

    Off-lattice members are interpolated in the modulation value
    ``H(y) in [-1, 1]`` with Lagrange interpolation on Chebyshev nodes.
    """

    def __init__(self, spec, window, n_nodes=16):
        self.spec = spec
        self.window = window
        if spec.x_independent:
            self.nodes = np.zeros(1)
            self.members = [density_grid(spec, window)]
            self.interpolation_error = 0.0
            return
        self.nodes = chebyshev_nodes(n_nodes)
        self.weights = barycentric_weights(self.nodes)
        self.members = [density_grid(spec, window, h=hk) for hk in self.nodes]
        self._stack = np.stack([m.values for m in self.members])
        probe = np.array([-0.93, -0.31, 0.47, 0.88])
        errs = [np.max(np.abs(self._interpolate(hp) - density_grid(spec, window, h=hp).values))
                for hp in probe]
        self.interpolation_error = float(max(errs))

    def _interpolate(self, h):
        basis = lagrange_basis(self.nodes, self.weights, np.asarray(h, dtype=float))
        return np.tensordot(basis, self._stack, axes=(-1, 0))

    def __call__(self, y):
        """Field p^{(y)} for a freezing point ``y`` (interpolated)."""
        if self.spec.x_independent:
            return self.members[0]
        h = float(self.spec.modulation(np.atleast_1d(np.asarray(y, dtype=float))))
        vals = self._interpolate(h)
        return DensityField(window=self.window, values=vals, provenance="fourier",
                            base_point=np.atleast_1d(np.asarray(y, dtype=float)),
                            tolerance=self.members[0].tolerance + self.interpolation_error,
                            meta={"frozen_h": h, "interpolated": True})


def frozen_family(spec, y_lattice, t, s, window=None, n_nodes=16):
    """Frozen densities for every y of ``y_lattice`` (rows are points)."""
    if window is None:
        raise ValueError("a SpaceTimeWindow is required")
    if (window.t, window.s) != (t, s):
        window = SpaceTimeWindow(t, s, window.dim, window.extent, window.spacing)
    family = FrozenFamily(spec, window, n_nodes)
    ys = np.atleast_2d(np.asarray(y_lattice, dtype=float))
    if ys.shape[-1] != window.dim:
        ys = ys.reshape(-1, window.dim)
    return family, [family(y) for y in ys]

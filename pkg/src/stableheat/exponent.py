"""Characteristic exponents of x-independent kernels.

For ``kappa = c_e(r) + c_o z_1/|z| + c_r cos(nu |z|)`` the time-averaged
exponent is linear in the three coefficients. Each unit symbol has a closed
form (the cosine part in d = 2 needs one angular quadrature). A direct
radial-angular quadrature route is kept as an independent check.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ._numerics import (cos_radial_constant, gauss_legendre, gl_interval, sin_radial_constant,
                        sphere_area, sphere_moment)
from .kernels import _sphere_rule


class QuadratureError(RuntimeError):
    """A quadrature failed its refinement test."""


EPS0 = 1e-3
R_INF = 1e3


# ---------------------------------------------------------------------------
# closed-form unit symbols
@lru_cache(maxsize=8)
def _tanh_sinh(n=48, step=1.0 / 12.0):
    k = np.arange(-n, n + 1) * step
    arg = 0.5 * np.pi * np.sinh(k)
    x = 0.5 * (1.0 + np.tanh(arg))
    w = 0.5 * step * 0.5 * np.pi * np.cosh(k) / np.cosh(arg) ** 2
    return x, w


def _radial_cos_profile(u, nu, alpha):
    """int_0^inf (cos(r u) - 1) cos(nu r) r^{-1-alpha} dr."""
    c = cos_radial_constant(alpha)
    u = np.abs(u)
    return -c * (0.5 * np.abs(u + nu) ** alpha + 0.5 * np.abs(u - nu) ** alpha - nu ** alpha)


def _cos_symbol_radial(rho, nu, alpha, dim):
    """Cosine-part symbol as a function of |xi| (array ``rho``)."""
    rho = np.asarray(rho, dtype=float)
    if dim == 1:
        return 2.0 * _radial_cos_profile(rho, nu, alpha)
    if dim == 3:
        c = cos_radial_constant(alpha)
        out = np.zeros_like(rho)
        if nu == 0.0:
            return -c * sphere_moment(alpha, 3) * rho ** alpha
        small = rho < 1e-4 * nu
        r = rho[~small]
        bracket = (((r + nu) ** (alpha + 1) + np.sign(r - nu) * np.abs(r - nu) ** (alpha + 1))
                   / (2.0 * (alpha + 1)) - nu ** alpha * r)
        out[~small] = -4.0 * np.pi * c * bracket / r
        out[small] = -4.0 * np.pi * c * alpha * (alpha - 1) * nu ** (alpha - 2) * rho[small] ** 2 / 6.0
        return out
    if dim != 2:
        raise ValueError("dimension must be 1, 2 or 3")
    if nu == 0.0:
        return -cos_radial_constant(alpha) * sphere_moment(alpha, 2) * rho ** alpha
    uniq, inverse = np.unique(rho.ravel(), return_inverse=True)
    vals = np.empty_like(uniq)
    x, w = _tanh_sinh()
    half = 0.5 * np.pi
    for start in range(0, uniq.size, 4096):
        r = uniq[start:start + 4096][:, None]
        kink = np.where(r > nu, np.arccos(np.minimum(nu / np.where(r > 0, r, 1.0), 1.0)), half)
        left = kink * x
        right = kink + (half - kink) * x
        total = (kink * np.sum(w * _radial_cos_profile(r * np.cos(left), nu, alpha), axis=1, keepdims=True)
                 + (half - kink) * np.sum(w * _radial_cos_profile(r * np.cos(right), nu, alpha),
                                          axis=1, keepdims=True))
        vals[start:start + 4096] = 4.0 * total[:, 0]
    return vals[inverse].reshape(rho.shape)


def unit_symbols(xi, alpha, nu=1.0, need_cos=True):
    """Unit symbols (even, odd, cos) at frequencies ``xi`` of shape (..., d).

    even: int (e^{i xi.z} - 1 - i xi.z^{(alpha)}) |z|^{-d-alpha} dz
    odd:  same with weight z_1/|z|
    cos:  same with weight cos(nu |z|)
    """
    xi = np.asarray(xi, dtype=float)
    dim = xi.shape[-1]
    rho = np.linalg.norm(xi, axis=-1)
    even = -cos_radial_constant(alpha) * sphere_moment(alpha, dim) * rho ** alpha + 0j
    if alpha == 1.0:
        odd = np.zeros_like(even)
    else:
        safe = np.where(rho > 0, rho, 1.0)
        odd = 1j * sin_radial_constant(alpha) * sphere_moment(alpha + 1, dim) * xi[..., 0] * np.where(
            rho > 0, safe ** (alpha - 1.0), 0.0)
    cos = _cos_symbol_radial(rho, nu, alpha, dim) + 0j if need_cos else None
    return even, odd, cos


def _as_points(xi, dim):
    xi = np.asarray(xi, dtype=float)
    if dim is None:
        if xi.ndim == 0:
            return xi[None], 1
        return xi, xi.shape[-1]
    if dim == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
        return xi[..., None], 1
    return xi, dim


def char_exponent(spec, t, s, xi, h=None, method="closed", dim=None, tol=1e-9, return_info=False):
    """Time-averaged characteristic exponent psi_{t,s}(xi).

    Parameters
    ----------
    spec : KernelSpec
        x-independent kernel, or an x-dependent one frozen through ``h``.
    t, s : float
        Time pair with ``s > t``.
    xi : array_like
        Frequencies; the last axis is the dimension (a scalar means d = 1,
        and with ``dim=1`` any array is read as scalar frequencies).
    h : float, optional
        Value of the x-modulation at the freezing point.
    method : {"closed", "quadrature"}
        Closed-form symbols or direct radial-angular quadrature.

    Returns
    -------
    complex ndarray, plus an info dict when ``return_info``.
    """
    if not s > t:
        raise ValueError("need s > t")
    if not spec.x_independent and h is None:
        raise ValueError("char_exponent needs an x-independent kernel (or a freezing value h)")
    pts, dim = _as_points(xi, dim)
    if method == "closed":
        c_e, c_o, c_r = spec.coefficients(t, s, h if not spec.x_independent else None)
        even, odd, cos = unit_symbols(pts, spec.alpha, spec.nu, need_cos=c_r != 0.0)
        out = c_e * even + c_o * odd
        if c_r != 0.0:
            out = out + c_r * cos
        out = (s - t) * out
        info = {"method": "closed", "relative_change": 0.0}
    elif method == "quadrature":
        coarse = _quadrature_exponent(spec, t, s, pts, h, density=1)
        out = _quadrature_exponent(spec, t, s, pts, h, density=2)
        scale = np.maximum(np.abs(out), 1e-300)
        change = float(np.max(np.abs(out - coarse) / scale)) if out.size else 0.0
        info = {"method": "quadrature", "relative_change": change}
        if change > max(tol, 1e-12) and np.max(np.abs(out - coarse)) > 1e-13:
            raise QuadratureError(f"exponent quadrature changed by {change:.3g} on refinement")
    else:
        raise ValueError(f"unknown method {method!r}")
    out = out.reshape(pts.shape[:-1])
    if np.ndim(xi) == 0:
        out = out[()] if out.ndim == 0 else out.reshape(())[()]
    return (out, info) if return_info else out


# ---------------------------------------------------------------------------
# quadrature route
def _osc_tail(omega, power, start):
    """int_start^inf e^{i omega r} r^{-power} dr for arrays ``omega``."""
    omega = np.asarray(omega, dtype=float)
    out = np.zeros(omega.shape, dtype=complex)
    zero = np.abs(omega) < 1e-14
    out[zero] = start ** (1.0 - power) / (power - 1.0)
    nz = ~zero
    if not np.any(nz):
        return out
    om = omega[nz]
    # push the asymptotic start far enough for the series, integrate the gap
    begin = np.maximum(start, 60.0 / np.abs(om))
    gap = np.zeros(om.shape, dtype=complex)
    needs = begin > start
    if np.any(needs):
        for idx in np.flatnonzero(needs):
            gap[idx] = _panel_integral(lambda r, w=om[idx]: np.exp(1j * w * r) * r ** (-power),
                                       start, begin[idx], abs(om[idx]))
    z = 1j * om * begin
    series = 1.0 + power / z + power * (power + 1) / z ** 2 + power * (power + 1) * (power + 2) / z ** 3
    out[nz] = gap - np.exp(1j * om * begin) * begin ** (-power) / (1j * om) * series
    return out


def _panel_integral(func, lo, hi, freq, nodes=16, density=1):
    """Composite Gauss-Legendre on geometric-and-oscillation-aware panels."""
    n_geo = int(np.ceil(4 * np.log2(hi / lo))) + 1
    n_osc = int(np.ceil((hi - lo) * freq / np.pi)) + 1
    edges = np.unique(np.concatenate([np.geomspace(lo, hi, n_geo * density + 1),
                                      np.linspace(lo, hi, n_osc * density + 1)]))
    x, w = gauss_legendre(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    pts = 0.5 * (b - a) * (x + 1.0) + a
    wts = 0.5 * (b - a) * w
    return np.sum(wts * func(pts))


def _radial_integral(u, alpha, nu, weight, chi_full, density):
    """int_0^inf (e^{i r u} - 1 - i r u chi(r)) g(r) r^{-1-alpha} dr, g = 1 or cos(nu r)."""
    u = float(u)
    if u == 0.0:
        return 0.0j
    cos_w = weight == "cos"
    eps0 = EPS0
    # Taylor coefficients of (e^{iru} - 1 - iru chi) g(r) in powers of r on [0, eps0]
    chi0 = 1.0 if (alpha > 1.0 or alpha == 1.0) else 0.0
    a = {1: 1j * u * (1.0 - chi0), 2: -u ** 2 / 2.0, 3: -1j * u ** 3 / 6.0, 4: u ** 4 / 24.0,
         5: 1j * u ** 5 / 120.0}
    if cos_w:
        g2, g4 = -nu ** 2 / 2.0, nu ** 4 / 24.0
        a = {1: a[1], 2: a[2], 3: a[3] + g2 * a[1], 4: a[4] + g2 * a[2], 5: a[5] + g2 * a[3] + g4 * a[1]}
    near = sum(coef * eps0 ** (k - alpha) / (k - alpha) for k, coef in a.items() if coef != 0)

    def integrand(r, chi):
        g = np.cos(nu * r) if cos_w else 1.0
        return (np.exp(1j * r * u) - 1.0 - 1j * r * u * chi) * g * r ** (-1.0 - alpha)

    freq = abs(u) + (nu if cos_w else 0.0)
    mid = _panel_integral(lambda r: integrand(r, chi0), eps0, 1.0, freq, density=density)
    chi1 = 1.0 if chi_full else 0.0
    far = _panel_integral(lambda r: integrand(r, chi1), 1.0, R_INF, freq, density=density)
    s = 1.0 + alpha
    if cos_w:
        tail = 0.5 * (_osc_tail(u + nu, s, R_INF) + _osc_tail(u - nu, s, R_INF))
        tail -= 0.5 * (_osc_tail(nu, s, R_INF) + _osc_tail(-nu, s, R_INF))
        if chi1:
            tail -= 1j * u * 0.5 * (_osc_tail(nu, alpha, R_INF) + _osc_tail(-nu, alpha, R_INF))
    else:
        tail = _osc_tail(u, s, R_INF) - R_INF ** (-alpha) / alpha
        if chi1:
            tail -= 1j * u * R_INF ** (1.0 - alpha) / (alpha - 1.0)
    return near + mid + far + complex(np.asarray(tail).ravel()[0])


def _quadrature_exponent(spec, t, s, pts, h, density=1):
    """Direct radial-angular/time quadrature of the exponent."""
    alpha = spec.alpha
    dim = pts.shape[-1]
    tn, tw = gl_interval(t, s, 16 * density)
    even_avg = float(np.sum(tw * spec.time_term(tn)))
    cos_coef = spec.radial + (spec.x_amp * h if h is not None and not spec.x_independent else 0.0)
    dirs, dw = _sphere_rule(dim, 48 * density)
    chi_full = alpha > 1.0
    out = np.zeros(pts.shape[:-1], dtype=complex)
    flat = pts.reshape(-1, dim)
    res = np.zeros(flat.shape[0], dtype=complex)
    for i, xi in enumerate(flat):
        u_all = dirs @ xi
        total = 0.0j
        for u, w, theta in zip(u_all, dw, dirs):
            base = _radial_integral(u, alpha, spec.nu, "one", chi_full, density)
            val = (even_avg + spec.odd * (s - t) * theta[0]) * base
            if cos_coef != 0.0:
                val += (s - t) * cos_coef * _radial_integral(u, alpha, spec.nu, "cos", chi_full, density)
            total += w * val
        res[i] = total
    out[...] = res.reshape(out.shape)
    return out


# ---------------------------------------------------------------------------
class CharExponent:
    """Evaluable exponent psi_{t,s} with cached lattice values.

    Parameters
    ----------
    spec : KernelSpec
    t, s : float
    h : float, optional
        Freezing value of the x-modulation for x-dependent kernels.
    """

    def __init__(self, spec, t, s, h=None):
        if not s > t:
            raise ValueError("need s > t")
        if not spec.x_independent and h is None:
            raise ValueError("x-dependent kernel needs a freezing value h")
        self.spec, self.t, self.s, self.h = spec, float(t), float(s), h
        self._cache = {}

    def __repr__(self):
        return f"CharExponent(t={self.t:g}, s={self.s:g}, alpha={self.spec.alpha:g})"

    def __call__(self, xi, dim=None):
        return char_exponent(self.spec, self.t, self.s, xi, h=self.h, dim=dim)

    def on_lattice(self, lattice):
        key = (lattice.dim, lattice.n, lattice.h)
        if key not in self._cache:
            self._cache[key] = char_exponent(self.spec, self.t, self.s, lattice.frequencies(), h=self.h)
        return self._cache[key]

    def ellipticity_constant(self):
        """c with Re psi <= -c |xi|^alpha implied by the lower bound of kappa."""
        lower = self.spec.lower() if self.spec.lower() > 0 else 1.0 / self.spec.kappa0
        return lower * cos_radial_constant(self.spec.alpha) * sphere_moment(self.spec.alpha, 1) / 2.0

    def fitted_decay(self, dim=1, xi_max=None, n=200):
        """Largest c with Re psi(xi) <= -c (s-t) |xi|^alpha on |xi| in [1, xi_max]."""
        alpha = self.spec.alpha
        xi_max = xi_max or 50.0
        rad = np.geomspace(1.0, xi_max, n)
        dirs, _ = _sphere_rule(dim, 8)
        pts = rad[:, None, None] * dirs[None, :, :]
        vals = self(pts).real
        ratio = -vals / ((self.s - self.t) * rad[:, None] ** alpha)
        return float(ratio.min())


def decay_constant(spec, dim):
    """c with Re psi_{t,s}(xi) <= -c (s - t) |xi|^alpha for every admissible time pair."""
    lower = spec.lower() if spec.lower() > 0 else 1.0 / spec.kappa0
    return lower * cos_radial_constant(spec.alpha) * sphere_moment(spec.alpha, dim)


def frequency_extent(spec, dim, threshold=1e-12):
    """Xi with exp(-c Xi^alpha) = threshold at unit time."""
    c = decay_constant(spec, dim)
    return (np.log(1.0 / threshold) / c) ** (1.0 / spec.alpha)


def fractional_laplacian_constant(theta, dim):
    """A with Delta^{theta/2} f = (1/A) int delta^{(theta)}_f |z|^{-d-theta} dz."""
    return cos_radial_constant(theta) * sphere_moment(theta, dim)


__all__ = ["CharExponent", "QuadratureError", "char_exponent", "unit_symbols", "decay_constant",
           "frequency_extent", "fractional_laplacian_constant", "sphere_area"]

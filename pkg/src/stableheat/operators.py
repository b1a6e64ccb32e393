"""Real-space generator and carre du champ by singular quadrature (1-d).

For a kernel ``kappa(t, x, z) = e(t) + odd sgn(z) + c(x) cos(nu |z|)`` the
generator is

    L f(x) = int (f(x+z) - f(x) - z^{(alpha)} f'(x)) kappa(t, x, z) |z|^{-1-alpha} dz.

Both half lines are folded onto ``z > 0``; near the origin the folded
integrand is a smooth function times a power of z and is integrated by
Gauss-Jacobi, further out by Gauss-Legendre panels aligned with the support
of f, and beyond the support the remaining power tail is integrated in
closed form.
"""

from __future__ import annotations

import numpy as np

from ._numerics import gauss_jacobi, gauss_legendre
from .exponent import _osc_tail


def _coeffs(spec, t, x):
    """(e, odd, c) of the kernel at time t and points x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    e = np.broadcast_to(np.asarray(spec.time_term(t), dtype=float), x.shape)
    c = np.full(x.shape, float(spec.radial))
    if spec.x_amp:
        c = c + spec.x_amp * spec.modulation(x[:, None])
    return e, float(spec.odd), c


def _support_of(f, support):
    if support is not None:
        return float(support[0]), float(support[1]), float(support[2])
    center, radius = float(f.center), float(f.support_radius)
    return center - radius, center + radius, float(f.scale)


def _z_rule(x, lo, hi, scale, nodes=12):
    """Panel breakpoints on (0, Z] for one point ``x`` and support [lo, hi]."""
    reach = max(abs(hi - x), abs(x - lo), scale)
    step = 0.25 * scale
    pieces = [np.array([0.125 * scale])]
    for a, b in ((lo - x, hi - x), (x - hi, x - lo)):
        a, b = max(a, 0.0), max(b, 0.0)
        if b > a:
            pieces.append(np.linspace(a, b, max(2, int(np.ceil((b - a) / step)) + 1)))
    ladder = 0.125 * scale * 2.0 ** np.arange(0, 64)
    pieces.append(ladder[ladder < reach])
    pieces.append(np.array([reach]))
    edges = np.unique(np.concatenate(pieces))
    edges = edges[edges >= 0.125 * scale]
    g, w = gauss_legendre(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (b - a) * (g + 1) + a).ravel(), (0.5 * (b - a) * w).ravel(), reach


def _head_rule(scale, power, nodes=16):
    """Gauss-Jacobi nodes on (0, z1) for the weight z^power."""
    z1 = 0.125 * scale
    g, w = gauss_jacobi(nodes, 0.0, power)
    return 0.5 * z1 * (g + 1.0), w * (0.5 * z1) ** (1.0 + power)


def _tail(e, odd, c, alpha, nu, reach):
    """int_R^inf (e + c cos(nu z)) z^{-1-alpha} dz and int_R^inf z^{(alpha)} z^{-1-alpha} dz."""
    even = e * reach ** (-alpha) / alpha
    if np.any(c != 0):
        even = even + c * float(_osc_tail(np.array([nu]), 1.0 + alpha, reach)[0].real)
    if alpha > 1.0:
        first = reach ** (1.0 - alpha) / (alpha - 1.0)
    else:
        first = 0.0  # alpha = 1 cuts the compensator at |z| = 1 <= R; alpha < 1 has none
    return even, first


def levy_integral(f, x, alpha, even, odd, cos=0.0, nu=1.0, grad=None, support=None, nodes=12):
    """int (f(x+z) - f(x) - z^{(alpha)} f'(x)) k(z) |z|^{-1-alpha} dz with
    ``k(z) = even + odd sgn(z) + cos cos(nu |z|)``; coefficients may vary with x.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    even = np.broadcast_to(np.asarray(even, dtype=float), x.shape)
    cos = np.broadcast_to(np.asarray(cos, dtype=float), x.shape)
    if grad is None and alpha >= 1.0:
        grad = f.gradient
    lo, hi, scale = _support_of(f, support)
    zh, wh = _head_rule(scale, 1.0 - alpha)
    # the odd fold vanishes like z^3 when compensated and like z otherwise
    odd_order = 3.0 if alpha >= 1.0 else 1.0
    zo, wo = _head_rule(scale, odd_order - 1.0 - alpha)
    out = np.empty(x.shape)
    for i, xi in enumerate(x):
        fx = float(f(np.array([xi]))[0])
        gx = float(grad(np.array([xi]))[0]) if alpha >= 1.0 else 0.0

        def folded(z):
            plus, minus = f(xi + z), f(xi - z)
            ev = (plus + minus - 2.0 * fx) * (even[i] + cos[i] * np.cos(nu * z))
            comp = z if alpha > 1.0 else (np.where(z < 1.0, z, 0.0) if alpha == 1.0 else 0.0)
            return ev, odd * (plus - minus - 2.0 * comp * gx)

        total = np.sum(wh * folded(zh)[0] / zh ** 2)
        if odd:
            total += np.sum(wo * folded(zo)[1] / zo ** odd_order)
        zb, wb, reach = _z_rule(xi, lo, hi, scale, nodes)
        ev, od = folded(zb)
        total += np.sum(wb * (ev + od) * zb ** (-1.0 - alpha))
        tail_even, tail_first = _tail(even[i], odd, cos[i], alpha, nu, reach)
        total += -2.0 * fx * tail_even - 2.0 * odd * gx * tail_first
        out[i] = total
    return out


def generator_quadrature(spec, f, x, grad=None, t=0.0, support=None, nodes=12):
    """L_t f(x) for a smooth f of compact (or Schwartz) support, d = 1.

    Parameters
    ----------
    spec : KernelSpec
    f : callable
        Test function; a :class:`TestFunction` supplies its own support
        and scale, otherwise pass ``support=(lo, hi, scale)``.
    x : array_like
        Evaluation points.
    grad : callable, optional
        Derivative of f (default ``f.gradient``).
    """
    e, odd, c = _coeffs(spec, t, x)
    return levy_integral(f, x, spec.alpha, e, odd, c, spec.nu, grad=grad, support=support, nodes=nodes)


def carre_du_champ_quadrature(spec, f, x, t=0.0, support=None, nodes=12):
    """Gamma(f)(x) = (1/2) int (f(x+z) - f(x))^2 kappa(t, x, z) |z|^{-1-alpha} dz, d = 1.

    This is the closed form of ``1/2 L(f^2) - f L f``.
    """
    alpha, nu = spec.alpha, spec.nu
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lo, hi, scale = _support_of(f, support)
    e, odd, c = _coeffs(spec, t, x)
    zh, wh = _head_rule(scale, 1.0 - alpha)
    out = np.empty(x.shape)
    for i, xi in enumerate(x):
        fx = float(f(np.array([xi]))[0])

        def folded(z, scaled):
            dp, dm = (f(xi + z) - fx) ** 2, (f(xi - z) - fx) ** 2
            val = (dp + dm) * (e[i] + c[i] * np.cos(nu * z)) + odd * (dp - dm)
            return val / z ** 2 if scaled else val * z ** (-1.0 - alpha)

        total = np.sum(wh * folded(zh, True))
        zb, wb, reach = _z_rule(xi, lo, hi, scale, nodes)
        total += np.sum(wb * folded(zb, False))
        total += 2.0 * fx ** 2 * _tail(e[i], odd, c[i], alpha, nu, reach)[0]
        out[i] = 0.5 * total
    return out


class _Square:
    """f^2 with gradient 2 f f', keeping the support data of f."""

    def __init__(self, f):
        self.f = f
        self.center, self.support_radius, self.scale = f.center, f.support_radius, f.scale

    def __call__(self, x):
        return self.f(x) ** 2

    def gradient(self, x):
        return 2.0 * self.f(x) * self.f.gradient(x)


def carre_du_champ_identity(spec, f, x, t=0.0):
    """Gamma(f) through 1/2 L(f^2) - f L f (cancellation-prone cross-check)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return 0.5 * generator_quadrature(spec, _Square(f), x, t=t) - f(x) * generator_quadrature(spec, f, x, t=t)


def spectral_generator(spec, values, lattice, t=0.0):
    """L f on a periodic lattice for x-independent kernels (any d)."""
    from .exponent import unit_symbols
    if not spec.x_independent:
        raise ValueError("spectral generator needs an x-independent kernel")
    freqs = lattice.frequencies()
    even, odd, cos = unit_symbols(freqs, spec.alpha, spec.nu, need_cos=spec.radial != 0.0)
    lam = np.conj(spec.time_term(t) * even + spec.odd * odd + (spec.radial * cos if spec.radial else 0.0))
    return lattice.inverse(lam * lattice.forward(values)).real

"""Levi parametrix construction on a periodic lattice.

The kernel's x-dependence enters only through ``H(x)``, which is periodic, so
the construction is carried out on a torus whose period is a multiple of
``2 pi / x_freq``. The torus kernel is the periodization of the kernel on
R^d. Every frozen operator is a Fourier multiplier; the freezing value
``H(z)`` is handled by Lagrange interpolation on Chebyshev nodes in [-1, 1].

Time integrals use a grid graded toward ``s``; unknowns are linear in time
between nodes and the exponentials ``e^{(r - r_i) lambda(xi)}`` are
integrated against the hat functions in closed form, which absorbs the
near-diagonal singularity at ``r = r_i`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import math

import numpy as np

from ._numerics import Lattice, barycentric_weights, chebyshev_nodes, lagrange_basis
from .exponent import char_exponent, unit_symbols
from .fields import DensityField, SpaceTimeWindow
from .kernels import compensator, rho_periodic


class SeriesDivergenceError(RuntimeError):
    """Picard levels fail to decay."""


# ---------------------------------------------------------------------------
def _phi123(z):
    """phi_k(z) = int_0^1 e^{(1-v) z} v^{k-1} / (k-1)! dv for k = 1, 2, 3."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1.0
    zs = np.where(small, z, 0.0)
    zb = np.where(small, 1.0, z)
    ez = np.exp(zb)
    big = [(ez - 1.0) / zb, (ez - 1.0 - zb) / zb ** 2, (ez - 1.0 - zb - 0.5 * zb ** 2) / zb ** 3]
    out = []
    for k in (1, 2, 3):
        # sum_j z^j / (j + k)!
        term = np.full_like(z, 1.0 / math.factorial(k))
        acc = np.zeros_like(z)
        for j in range(24):
            acc += term
            term = term * zs / (j + k + 1)
        out.append(np.where(small, acc, big[k - 1]))
    return out


def _moments(z):
    """int_0^1 e^{z v} v^k dv for k = 0, 1, 2, in a form stable for Re z <= 0."""
    p1, p2, p3 = _phi123(z)
    return p1, p1 - p2, p1 - 2.0 * p2 + 2.0 * p3


def graded_times(t, s, n_time, grading, extra=()):
    """Nodes t = r_0 < ... < r_M = s clustered toward ``s``."""
    i = np.arange(n_time + 1)
    nodes = s - (s - t) * (1.0 - i / n_time) ** grading
    nodes = np.concatenate([nodes, [r for r in extra if t < r < s]])
    nodes = np.unique(np.round(nodes, 14))
    nodes[0], nodes[-1] = t, s
    return nodes


def hat_exponential_weights(lam, nodes, lo=None, hi=None, rows=None, order=2):
    """E[i, j, ...] = int_{max(r_i, lo)}^{hi} L_j(r) e^{(r - r_i) lam} dr.

    ``L_j`` is the piecewise Lagrange interpolant of the given ``order``
    (1: hat functions; 2: quadratic on the stencil of each interval and its
    right neighbour, left neighbour for the last interval). ``lam`` has any
    shape; ``lo``/``hi`` are node indices restricting the range; ``rows``
    selects i.
    """
    m = nodes.size
    hi = m - 1 if hi is None else hi
    rows = range(m) if rows is None else rows
    out = np.zeros((len(rows), m) + lam.shape, dtype=complex)
    widths = np.diff(nodes)
    order = min(order, m - 1)
    cache = {}
    for seg in range(m - 1):
        width = widths[seg]
        first = min(seg, m - 1 - order)
        stencil = np.arange(first, first + order + 1)
        v = (nodes[stencil] - nodes[seg]) / width
        coefs = []
        for a, vj in enumerate(v):
            others = np.delete(v, a)
            poly = np.poly(others) / np.prod(vj - others)
            coefs.append(poly[::-1])  # ascending powers of v
        cache[seg] = (stencil, coefs, _moments(lam * width))
    for row, i in enumerate(rows):
        start = i if lo is None else max(i, lo)
        for seg in range(start, hi):
            stencil, coefs, mom = cache[seg]
            scale = widths[seg] * np.exp(lam * (nodes[seg] - nodes[i]))
            for j, c in zip(stencil, coefs):
                out[row, j] += scale * sum(ck * mk for ck, mk in zip(c, mom))
    return out


# ---------------------------------------------------------------------------
@dataclass
class QField:
    """Picard levels and their sum for a block of target columns y.

    Arrays have shape ``(n_columns, n_times, n_points)``: the kernel
    ``q_{r_i, s}(x, y_c)`` at time node ``r_i`` and lattice point ``x``.
    """

    t: float
    s: float
    times: np.ndarray
    columns: np.ndarray
    levels: list
    total: np.ndarray = None
    level_norms: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    truncation_bound: float = np.inf

    @property
    def n_levels(self):
        return len(self.levels)


class Parametrix:
    """Levi construction for a registry kernel on a periodic lattice.

    Parameters
    ----------
    spec : KernelSpec
        Time-independent registry kernel (x-independent kernels give q = 0).
    t, s : float
        Time pair.
    lattice : Lattice
        Periodic lattice; its period must be a multiple of the
        x-modulation period.
    n_time : int
        Number of graded time intervals.
    grading : float
        Grading exponent toward ``s``.
    n_cheb : int
        Chebyshev nodes for the freezing value.
    extra_times : sequence of float
        Additional time nodes (for example the midpoint or a C-K time).
    """

    def __init__(self, spec, t, s, lattice, n_time=32, grading=2.0, n_cheb=16, extra_times=(),
                 time_nodes=None):
        if not s > t:
            raise ValueError("need s > t")
        if not (spec.time_independent or spec.x_independent):
            raise ValueError("x-dependent kernels must be time-independent on this route")
        if not spec.x_independent:
            ratio = lattice.period / spec.x_period
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                raise ValueError("lattice period must be a multiple of the modulation period")
        self.spec, self.t, self.s, self.lattice = spec, float(t), float(s), lattice
        if time_nodes is None:
            self.times = graded_times(t, s, n_time, grading, tuple(extra_times) + ((t + s) / 2.0,))
        else:
            self.times = np.unique(np.concatenate([np.asarray(time_nodes, float), [t, s, (t + s) / 2.0]]))
        self.mid_index = int(np.argmin(np.abs(self.times - (t + s) / 2.0)))
        d = lattice.dim
        self.points = lattice.points().reshape(-1, d)
        self.freqs = lattice.frequencies().reshape(-1, d)
        self.H = spec.modulation(self.points) if not spec.x_independent else np.zeros(len(self.points))
        if spec.x_independent:
            self.nodes = np.zeros(1)
            self.ell = np.ones((len(self.points), 1))
        else:
            self.nodes = chebyshev_nodes(n_cheb)
            self.ell = lagrange_basis(self.nodes, barycentric_weights(self.nodes), self.H)
        even, odd, cos = unit_symbols(self.freqs, spec.alpha, spec.nu)
        self.psi_cos = cos.real
        base = np.conj(spec.a * even + spec.odd * odd + spec.radial * cos)
        self.lam_base = base
        self.lam_nodes = base[None, :] + spec.x_amp * self.nodes[:, None] * self.psi_cos[None, :]
        self._Et = self._matmul_layout(hat_exponential_weights(self.lam_nodes, self.times))

    # -- lattice transforms on flattened spatial axes ----------------------
    def _fwd(self, values):
        shape = values.shape[:-1] + self.lattice.shape
        return self.lattice.forward(values.reshape(shape)).reshape(values.shape)

    def _inv(self, spectrum):
        shape = spectrum.shape[:-1] + self.lattice.shape
        return self.lattice.inverse(spectrum.reshape(shape)).reshape(spectrum.shape)

    @staticmethod
    def _matmul_layout(E):
        rows, m, k, nxi = E.shape
        return np.ascontiguousarray(E.transpose(3, 0, 1, 2).reshape(nxi, rows, m * k))

    def _contract(self, Et, F):
        """sum_{j,k} E[i,j,k,xi] F[c,j,k,xi] -> (c, i, xi)."""
        c, m, k, nxi = F.shape
        Ft = F.transpose(3, 1, 2, 0).reshape(nxi, m * k, c)
        out = np.matmul(Et, Ft)  # (xi, i, c)
        return out.transpose(2, 1, 0)

    def _column_spectrum(self, cols, lag, mult=None):
        """FT of x -> p^{(y)}_{lag}(x, y) for columns y (exactly frozen)."""
        y = self.points[cols]
        h = self.H[cols]
        lam = self.lam_base[None, :] + self.spec.x_amp * h[:, None] * self.psi_cos[None, :]
        phase = np.exp(1j * y @ self.freqs.T)
        lag = np.asarray(lag, dtype=float)
        if self.spec.time_independent:
            spec = np.exp(lag[None, :, None] * lam[:, None, :]) * phase[:, None, :]
        else:
            # x-independent, time-dependent: exact exponent over [s - lag, s]
            expo = np.stack([np.conj(char_exponent(self.spec, self.s - u, self.s, self.freqs))
                             if u > 0 else np.zeros(len(self.freqs), dtype=complex) for u in lag])
            spec = np.exp(expo)[None, :, :] * phase[:, None, :]
        if mult is not None:
            spec = spec * mult
        return spec  # (c, n_lags, xi)

    # -- construction --------------------------------------------------------
    def q0_columns(self, cols):
        """Level 0: q0_{r_i, s}(x, y) for every time node and column."""
        cols = np.atleast_1d(cols)
        if self.spec.x_independent:
            return np.zeros((cols.size, self.times.size, len(self.points)))
        lags = self.s - self.times
        spec = self._column_spectrum(cols, lags, self.psi_cos[None, None, :])
        g = self._inv(spec).real
        dH = self.H[None, None, :] - self.H[cols][:, None, None]
        return self.spec.x_amp * dH * g

    def apply_kernel(self, Q):
        """One Picard step: int_{r_i}^s int q0_{r_i, r}(x, z) Q(r, z) dz dr."""
        if self.spec.x_independent:
            return np.zeros_like(Q)
        ell = self.ell.T[None, None, :, :]  # (1, 1, K, n)
        F = self._fwd(Q[:, :, None, :] * ell)
        G = self._fwd(Q[:, :, None, :] * (ell * self.H[None, None, None, :]))
        SA = self._contract(self._Et, F) * self.psi_cos
        SB = self._contract(self._Et, G) * self.psi_cos
        out = self.H[None, None, :] * self._inv(SA).real - self._inv(SB).real
        return self.spec.x_amp * out

    def solve(self, cols=None, depth=6, tol=1e-6, min_levels=2, block=None):
        """Picard levels with ratio-test stopping; returns a summed QField.

        Columns are processed in blocks to bound memory; the stopping level is
        decided on the first block and reused for the rest.
        """
        cols = np.arange(len(self.points)) if cols is None else np.atleast_1d(cols)
        if block is None:
            per_col = self.times.size * self.nodes.size * len(self.points) * 16 * 4
            block = int(max(1, min(len(cols), 4e8 // per_col)))
        if block < len(cols):
            first = self.solve(cols[:block], depth, tol, min_levels, block)
            depth_used = first.n_levels
            levels = [[lv] for lv in first.levels]
            for start in range(block, len(cols), block):
                part = self.solve(cols[start:start + block], depth_used, 0.0, depth_used, block)
                for acc, lv in zip(levels, part.levels):
                    acc.append(lv)
            return sum_series(self, [np.concatenate(lv, axis=0) for lv in levels], tol=tol, cols=cols)
        q = self.q0_columns(cols)
        levels = [q]
        while len(levels) < depth:
            levels.append(self.apply_kernel(levels[-1]))
            field_ = sum_series(self, levels, tol=tol, cols=cols, finalize=False)
            if len(levels) >= min_levels and field_.truncation_bound <= tol * max(
                    field_.level_norms[0], 1e-300):
                break
        return sum_series(self, levels, tol=tol, cols=cols)

    def assemble(self, qfield, mult=None, split=False):
        """p_{r_i, s}(x, y) for all time nodes: frozen term plus the correction.

        ``mult`` applies a Fourier multiplier (derivative) in x to both terms.
        """
        cols = qfield.columns
        lags = self.s - self.times
        per_col = self.times.size * self.nodes.size * len(self.points) * 16 * 4
        block = int(max(1, 4e8 // per_col))
        frozen = np.empty((cols.size, self.times.size, len(self.points)))
        corr = np.empty_like(frozen)
        for a in range(0, cols.size, block):
            sl = slice(a, a + block)
            front = self._column_spectrum(cols[sl], lags, None if mult is None else mult[None, None, :])
            frozen[sl] = self._inv(front).real
            F = self._fwd(qfield.total[sl, :, None, :] * self.ell.T[None, None, :, :])
            S = self._contract(self._Et, F)
            if mult is not None:
                S = S * mult
            corr[sl] = self._inv(S).real
        if not split:
            return frozen + corr
        return frozen, corr

    def derivative_split(self, qfield, mult):
        """J1..J4 decomposition of a derivative of the assembled kernel at time t."""
        cols = qfield.columns
        mid = self.mid_index
        front = self._column_spectrum(cols, [self.s - self.t], mult[None, None, :])
        J1 = self._inv(front)[:, 0].real
        Q = qfield.total
        ellT = self.ell.T[None, None, :, :]
        F = self._fwd(Q[:, :, None, :] * ellT)
        E_far = hat_exponential_weights(self.lam_nodes, self.times, lo=mid, rows=[0])
        E_near = hat_exponential_weights(self.lam_nodes, self.times, hi=mid, rows=[0])
        J2 = self._inv(self._contract(self._matmul_layout(E_far), F) * mult)[:, 0].real
        near_all = self._inv(self._contract(self._matmul_layout(E_near), F) * mult)[:, 0].real
        # int Delta p^{(z)}_{t,r}(x - z) dz against hat_j, per node j: (j, x)
        ones = self._fwd(self.ell.T.astype(complex))  # (K, xi)
        comp = np.einsum("jkx,kx->jx", E_near[0], ones) * mult
        comp_x = self._inv(comp).real  # (j, x)
        J4 = np.einsum("cjx,jx->cx", Q, comp_x)
        J3 = near_all - J4
        return {"J1": J1, "J2": J2, "J3": J3, "J4": J4, "total": J1 + J2 + J3 + J4}

    # -- multipliers -------------------------------------------------------
    def fractional_multiplier(self, theta):
        return -np.linalg.norm(self.freqs, axis=-1) ** theta + 0j

    def gradient_multiplier(self, component=0):
        return -1j * self.freqs[:, component]


def sum_series(solver, levels, tol=1e-6, cols=None, finalize=True):
    """Sum Picard levels and bound the tail by the observed level ratio."""
    if len(levels) < 2 and finalize:
        raise ValueError("need at least two levels")
    # int_t^s sup_x |q_{r,s}| dr with trapezoid weights on the time nodes
    times = solver.times
    tw = np.zeros(times.size)
    tw[:-1] += 0.5 * np.diff(times)
    tw[1:] += 0.5 * np.diff(times)
    tw[-1] = 0.0  # the level-0 lattice spike at r = s carries no mass
    norms = [float(np.sum(tw * np.max(np.abs(lv), axis=(0, 2)))) for lv in levels]
    ratios = [norms[i] / norms[i - 1] if norms[i - 1] > 0 else 0.0 for i in range(1, len(norms))]
    total = np.sum(levels, axis=0)
    if norms[-1] == 0.0:
        bound = 0.0
    else:
        r = max(ratios[-2:]) if ratios else 1.0
        if r >= 1.0 and finalize and len(ratios) >= 3 and ratios[-1] >= 1.0 and ratios[-2] >= 1.0:
            raise SeriesDivergenceError(f"Picard levels do not decay (ratios {ratios})")
        bound = norms[-1] * r / (1.0 - r) if r < 1.0 else np.inf
    return QField(t=solver.t, s=solver.s, times=solver.times,
                  columns=np.arange(total.shape[0]) if cols is None else np.asarray(cols),
                  levels=levels, total=total, level_norms=norms, ratios=ratios,
                  truncation_bound=bound)


def picard_step(solver, q_prev):
    """Next Picard level from the previous one (array or QField levels[-1])."""
    prev = q_prev.levels[-1] if isinstance(q_prev, QField) else q_prev
    return solver.apply_kernel(prev)


# ---------------------------------------------------------------------------
def torus_lattice(spec, dim=1, periods=2, n=256):
    """Lattice whose period is ``periods`` x-modulation periods."""
    return Lattice(dim, n, periods * spec.x_period / n)


def _field_from_rows(lattice, values, t, s, y, provenance="parametrix", meta=None):
    axis = lattice.axis
    half = -axis[0]
    window = SpaceTimeWindow(t, s, lattice.dim, half, lattice.h)
    # the symmetric window has one point more than the periodic lattice
    full = np.concatenate([values, values[..., :1]], axis=-1) if lattice.dim == 1 else values
    ax = np.concatenate([axis, [half]]) if lattice.dim == 1 else axis
    return DensityField(window=window, values=full, provenance=provenance, base_point=np.atleast_1d(y),
                        axis=ax, meta=meta or {})


def assemble_density(solver, qfield, column=0):
    """Assembled kernel x -> p_{t,s}(x, y) for one column as a DensityField."""
    p = solver.assemble(qfield)[column, 0]
    lat = solver.lattice
    y = solver.points[qfield.columns[column]]
    meta = {"picard_levels": qfield.n_levels, "truncation_bound": qfield.truncation_bound,
            "period": lat.period, "level_ratios": qfield.ratios}
    return _field_from_rows(lat, p.reshape(lat.shape), solver.t, solver.s, y, meta=meta)


def assemble_fractional_derivative(solver, qfield, theta=None, gradient=False, component=0):
    """Delta^{theta/2} (or d/dx_component) of the assembled kernel at time t via J1..J4.

    Returns
    -------
    dict with arrays ``J1``..``J4`` and ``total`` of shape (columns, points).
    """
    alpha, beta = solver.spec.alpha, solver.spec.beta
    if gradient:
        mult = solver.gradient_multiplier(component)
    else:
        if theta is None or not 0.0 < theta < min(alpha + beta, 2.0):
            raise ValueError("theta must lie in (0, (alpha + beta) ^ 2)")
        mult = solver.fractional_multiplier(theta)
    return solver.derivative_split(qfield, mult)


# ---------------------------------------------------------------------------
# pointwise quadrature routes
def _trig_modes(lattice, values):
    """Frequencies and coefficients of the real trigonometric interpolant (1-d).

    The Nyquist mode is split evenly between +xi and -xi so that the
    interpolant is real: ``f(w) = sum_k c_k e^{-i xi_k w}``.
    """
    if lattice.dim != 1:
        raise ValueError("trigonometric interpolation is implemented for d = 1")
    coef = lattice.forward(np.asarray(values, dtype=complex)) / lattice.period
    xi = lattice.freq_axis.copy()
    nyq = lattice.n // 2
    coef = np.append(coef, 0.5 * coef[nyq])
    coef[nyq] *= 0.5
    xi = np.append(xi, -xi[nyq])
    return xi, coef


def trig_interpolate(lattice, values, points):
    """Evaluate the trigonometric interpolant of periodic lattice data (1-d)."""
    xi, coef = _trig_modes(lattice, values)
    pts = np.atleast_1d(points)
    return (np.exp(-1j * np.outer(pts, xi)) @ coef).real


def delta_theta(f, theta, cutoff, x, z, grad=None):
    """Compensated difference f(x+z) - f(x) - (1_{theta>1} + 1_{theta=1} 1_{|z|<cutoff}) z.grad f(x).

    ``f`` is a callable on points of shape (..., d); ``grad`` its gradient
    (required unless theta < 1).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = np.asarray(z, dtype=float)
    if z.ndim == 0 or (x.size == 1 and z.shape[-1] != 1):
        z = z[..., None]
    out = f(x + z) - f(x)
    comp = compensator(theta, z, cutoff)
    if theta >= 1.0:
        if grad is None:
            raise ValueError("gradient needed for theta >= 1")
        out = out - np.sum(comp * grad(x), axis=-1)
    return out


def q0_quadrature(spec, t, s, x, y, lattice, reach_periods=4):
    """Pointwise q0_{t,s}(x, y) on the torus by singular quadrature (1-d).

    Integrates the symmetric second difference of the trigonometric
    interpolant of the frozen kernel ``w -> p^{(y)}(w, y)`` against
    ``(kappa(x, z) - kappa(y, z)) |z|^{-1-alpha}``. Gauss-Jacobi handles
    the origin, h-scale Gauss-Legendre panels the middle range and the
    oscillatory tail is integrated mode by mode in closed form.
    """
    from ._numerics import gauss_jacobi
    from .exponent import _osc_tail
    from .fourier import periodic_density
    if lattice.dim != 1:
        raise ValueError("q0_quadrature supports d = 1")
    if spec.x_independent:
        return 0.0
    alpha, nu = spec.alpha, spec.nu
    hy = float(np.ravel(spec.modulation(np.atleast_1d(y)))[0])
    hx = float(np.ravel(spec.modulation(np.atleast_1d(x)))[0])
    if hx == hy:
        return 0.0
    col = periodic_density(spec.frozen(h=hy), t, s, lattice)
    col_y = np.roll(col[::-1], 1)  # w -> p_X(-w), the column as a function of x - y
    xi, coef = _trig_modes(lattice, col_y)
    w0 = x - y

    def sym(z):
        phase = np.exp(-1j * np.outer(w0 + z, xi)) + np.exp(-1j * np.outer(w0 - z, xi))
        return (phase @ coef).real

    fx = float((np.exp(-1j * w0 * xi) @ coef).real)
    h = lattice.h
    u, wj = gauss_jacobi(48, 0.0, 1.0 - alpha)
    z = 0.5 * (u + 1.0) * h
    near = np.sum(wj * (0.5 * h) ** (2.0 - alpha) * (sym(z) - 2.0 * fx) / z ** 2 * np.cos(nu * z))
    reach = reach_periods * lattice.period
    edges = np.arange(1, int(round(reach / (0.5 * h))) + 1) * 0.5 * h
    edges = np.concatenate([[h], edges[edges > h]])
    gx, gw = np.polynomial.legendre.leggauss(8)
    a_, b_ = edges[:-1, None], edges[1:, None]
    zz = (0.5 * (b_ - a_) * (gx + 1) + a_).ravel()
    ww = (0.5 * (b_ - a_) * gw).ravel()
    mid = np.sum(ww * (sym(zz) - 2.0 * fx) * np.cos(nu * zz) * zz ** (-1.0 - alpha))
    end = edges[-1]
    tail_modes = 0.5 * (np.real(_osc_tail(xi + nu, 1.0 + alpha, end))
                        + np.real(_osc_tail(xi - nu, 1.0 + alpha, end)))
    tail = float((2.0 * np.exp(-1j * w0 * xi) * coef @ tail_modes).real)
    tail -= 2.0 * fx * float(np.real(_osc_tail(np.array([nu]), 1.0 + alpha, end))[0])
    return spec.x_amp * (hx - hy) * (near + mid + tail)

"""Shared numerical helpers: sphere constants, quadrature rules, lattice FFTs."""

from functools import lru_cache

import numpy as np
from scipy import special


def sphere_area(d):
    """Surface measure of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * np.pi ** (d / 2.0) / special.gamma(d / 2.0)


def sphere_moment(p, d):
    """Integral of |theta . e|^p over the unit sphere of R^d."""
    return 2.0 * np.pi ** ((d - 1) / 2.0) * special.gamma((p + 1) / 2.0) / special.gamma((d + p) / 2.0)


def cos_radial_constant(alpha):
    """int_0^inf (1 - cos u) u^{-1-alpha} du."""
    if alpha == 1.0:
        return np.pi / 2.0
    return special.gamma(1.0 - alpha) * np.cos(np.pi * alpha / 2.0) / alpha


def sin_radial_constant(alpha):
    """int_0^inf (sin u - u 1_{alpha>1}) u^{-1-alpha} du, alpha != 1."""
    if alpha == 1.0:
        raise ValueError("no homogeneous odd part for alpha = 1")
    return -special.gamma(-alpha) * np.sin(np.pi * alpha / 2.0)


def isotropic_symbol_constant(alpha, d):
    """A with int (1 - cos(xi.z)) |z|^{-d-alpha} dz = A |xi|^alpha."""
    return cos_radial_constant(alpha) * sphere_moment(alpha, d)


@lru_cache(maxsize=64)
def gauss_legendre(n):
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=128)
def gauss_jacobi(n, a, b):
    """Nodes/weights on [-1, 1] for weight (1-x)^a (1+x)^b."""
    x, w = special.roots_jacobi(n, a, b)
    return x, w


def gl_interval(lo, hi, n):
    x, w = gauss_legendre(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def gj_left(lo, hi, n, exponent):
    """Rule for int_lo^hi f(u) (u - lo)^exponent du; returns nodes and weights
    that already absorb the singular factor."""
    x, w = gauss_jacobi(n, 0.0, float(exponent))
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), w * half ** (1.0 + exponent)


def gj_right(lo, hi, n, exponent):
    """Rule for int_lo^hi f(u) (hi - u)^exponent du."""
    x, w = gauss_jacobi(n, float(exponent), 0.0)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), w * half ** (1.0 + exponent)


def graded_rule(lo, hi, n, grading, toward="lo"):
    """Gauss-Legendre after the substitution u - lo = (hi - lo) v^grading.

    Clusters nodes at one endpoint; absorbs integrable endpoint singularities
    of power type u^{-1+eps} once grading * eps >= 1.
    """
    v, w = gl_interval(0.0, 1.0, n)
    span = hi - lo
    if toward == "lo":
        nodes = lo + span * v ** grading
    else:
        nodes = hi - span * v ** grading
    weights = w * span * grading * v ** (grading - 1.0)
    return nodes, weights


class Lattice:
    """Periodic uniform lattice with ``n`` points per axis and spacing ``h``.

    Points are ``(j - n/2) h`` for ``j = 0..n-1`` so the origin is a node.
    Transforms use ``f^(xi) = int e^{i xi.x} f(x) dx`` and its inverse.
    """

    def __init__(self, dim, n, h):
        if n % 2:
            raise ValueError("lattice size must be even")
        self.dim = int(dim)
        self.n = int(n)
        self.h = float(h)

    def __repr__(self):
        return f"Lattice(dim={self.dim}, n={self.n}, h={self.h:g})"

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def period(self):
        return self.n * self.h

    @property
    def cell_volume(self):
        return self.h ** self.dim

    @property
    def axis(self):
        return (np.arange(self.n) - self.n // 2) * self.h

    def points(self):
        """Array of shape (n,)*dim + (dim,)."""
        grids = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack(grids, axis=-1)

    @property
    def freq_axis(self):
        return 2.0 * np.pi * np.fft.fftfreq(self.n, self.h)

    def frequencies(self):
        """Frequencies in FFT order, shape (n,)*dim + (dim,)."""
        grids = np.meshgrid(*([self.freq_axis] * self.dim), indexing="ij")
        return np.stack(grids, axis=-1)

    def _axes(self, arr):
        return tuple(range(arr.ndim - self.dim, arr.ndim))

    def forward(self, values):
        """Continuous Fourier transform sampled at ``frequencies()``.

        Trailing ``dim`` axes are spatial; leading axes are batch axes.
        """
        axes = self._axes(values)
        shifted = np.fft.ifftshift(values, axes=axes)
        return np.fft.ifftn(shifted, axes=axes) * (self.n * self.h) ** self.dim

    def inverse(self, spectrum):
        axes = self._axes(spectrum)
        out = np.fft.fftn(spectrum, axes=axes) / (self.n * self.h) ** self.dim
        return np.fft.fftshift(out, axes=axes)

    def index_of(self, point):
        """Lattice index of an on-lattice point (raises if off-lattice)."""
        point = np.atleast_1d(np.asarray(point, dtype=float))
        idx = point / self.h + self.n // 2
        ridx = np.rint(idx).astype(int)
        if np.any(np.abs(idx - ridx) > 1e-9) or np.any(ridx < 0) or np.any(ridx >= self.n):
            raise ValueError(f"point {point} is not on {self!r}")
        return tuple(ridx)


def next_even(n):
    n = int(np.ceil(n))
    return n + (n % 2)


def next_pow2(n):
    return 1 << int(np.ceil(np.log2(max(int(np.ceil(n)), 2))))


def barycentric_weights(nodes):
    nodes = np.asarray(nodes, dtype=float)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def lagrange_basis(nodes, weights, h):
    """Values L_k(h) of the Lagrange basis, shape h.shape + (K,)."""
    h = np.asarray(h, dtype=float)
    diff = h[..., None] - nodes
    exact = np.isclose(diff, 0.0, atol=1e-14, rtol=0.0)
    diff = np.where(exact, 1.0, diff)
    terms = weights / diff
    basis = terms / np.sum(terms, axis=-1, keepdims=True)
    hit = np.any(exact, axis=-1)
    if np.any(hit):
        basis = np.where(hit[..., None], exact.astype(float), basis)
    return basis


def chebyshev_nodes(k, lo=-1.0, hi=1.0):
    """Chebyshev points of the second kind (endpoints included)."""
    x = np.cos(np.pi * np.arange(k) / (k - 1))[::-1]
    return lo + 0.5 * (hi - lo) * (x + 1.0)

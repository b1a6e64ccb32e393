"""Monte Carlo simulation of the jump process.

Jumps larger than ``eps_cut`` are drawn by thinning a compound Poisson
process with envelope ``kappa0 |z|^{-d-alpha}``; compensated small jumps are
replaced by a Gaussian with the exact covariance; the compensator drift is
added analytically. Paths are split into fixed-size blocks, each with its
own counter-based Philox stream, so results do not depend on the number of
worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from ._numerics import sphere_area
from .fields import SpaceTimeWindow, _jsonable, write_csv, write_json

BLOCK = 1 << 15


def _radial_cos_integral(power, nu, lo, hi):
    """int_lo^hi r^power cos(nu r) dr (finite range, integrable endpoint)."""
    if nu == 0.0:
        if power == -1.0:
            return np.log(hi / lo)
        return (hi ** (power + 1) - lo ** (power + 1)) / (power + 1)
    val, _ = integrate.quad(lambda r: np.cos(nu * r), lo, hi, weight="alg", wvar=(power, 0.0),
                            epsabs=1e-14, epsrel=1e-12, limit=400) if lo == 0.0 else \
        integrate.quad(lambda r: r ** power * np.cos(nu * r), lo, hi, epsabs=1e-14, epsrel=1e-12, limit=400)
    return val


@dataclass
class JumpSampler:
    """Sampler for the additive process of a kernel, or its frozen-state steps.

    Parameters
    ----------
    spec : KernelSpec
    dim : int
    eps_cut : float
        Small-jump cutoff in the unit-time scale; the cutoff used over a
        time span ``tau`` is ``eps_cut * tau^{1/alpha}``.
    seed : int
        Key of the counter-based streams.
    """

    spec: object
    dim: int = 1
    eps_cut: float = 0.1
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.eps_cut > 0:
            raise ValueError("eps_cut must be positive")
        self.area = sphere_area(self.dim)

    # -- analytic pieces -------------------------------------------------
    def intensity(self, eps):
        """Envelope intensity nu({|z| > eps}) per unit time."""
        return self.spec.kappa0 * self.area * eps ** (-self.spec.alpha) / self.spec.alpha

    def small_variance(self, eps, even, cos_coef):
        """Per-unit-time variance of each coordinate of the small jumps."""
        a, d = self.spec.alpha, self.dim
        radial = even * eps ** (2.0 - a) / (2.0 - a)
        radial = radial + cos_coef * _radial_cos_integral(1.0 - a, self.spec.nu, 0.0, eps)
        return self.area / d * radial

    def drift(self, eps):
        """Per-unit-time drift along e_1 from the compensator bookkeeping."""
        a, spec = self.spec.alpha, self.spec
        if spec.odd == 0.0:
            return 0.0
        scale = spec.odd * self.area / self.dim
        if a > 1.0:
            return -scale * eps ** (1.0 - a) / (a - 1.0)
        if a < 1.0:
            return scale * eps ** (1.0 - a) / (1.0 - a)
        raise ValueError("alpha = 1 requires a z-even kernel")

    def drift_quadrature(self, eps):
        """Same drift as :meth:`drift`, by radial quadrature of the kernel."""
        a, spec = self.spec.alpha, self.spec
        if spec.odd == 0.0:
            return 0.0
        shell = spec.odd * self.area / self.dim
        if a > 1.0:
            val, _ = integrate.quad(lambda r: r ** (-a), eps, np.inf, epsabs=1e-14, epsrel=1e-13)
            return -shell * val
        val, _ = integrate.quad(lambda r: 1.0, 0.0, eps, weight="alg", wvar=(-a, 0.0),
                                epsabs=1e-14, epsrel=1e-13)
        return shell * val

    # -- random pieces ------------------------------------------------------
    def _rng(self, block):
        return np.random.Generator(np.random.Philox(key=[self.seed & (2**64 - 1), block]))

    def _directions(self, rng, n):
        if self.dim == 1:
            return rng.choice([-1.0, 1.0], size=(n, 1))
        v = rng.standard_normal((n, self.dim))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def _jumps(self, rng, state, t0, t1, eps):
        """Sum of accepted large jumps over [t0, t1] with kernel frozen at ``state``.

        ``state`` is None for x-independent kernels; otherwise an (n, d) array.
        Jump times are uniform on the interval (time thinning for
        time-dependent kernels).
        """
        n = self._n
        lam = self.intensity(eps) * (t1 - t0)
        counts = rng.poisson(lam, size=n)
        total = int(counts.sum())
        out = np.zeros((n, self.dim))
        if total == 0:
            return out
        owner = np.repeat(np.arange(n), counts)
        radius = eps * rng.random(total) ** (-1.0 / self.spec.alpha)
        z = radius[:, None] * self._directions(rng, total)
        times = t0 + (t1 - t0) * rng.random(total)
        x = None if state is None else state[owner]
        kappa = self.spec(times, x if x is not None else np.zeros((total, self.dim)), z)
        keep = rng.random(total) * self.spec.kappa0 < kappa
        np.add.at(out, owner[keep], z[keep])
        return out

    def _coefficients(self, t0, t1, state):
        spec = self.spec
        h = None if spec.x_independent else spec.modulation(state)
        even, _, cos_coef = spec.coefficients(t0, t1, h)
        return even, cos_coef

    def _step(self, rng, state, t0, t1, eps):
        even, cos_coef = self._coefficients(t0, t1, state)
        var = self.small_variance(eps, even, cos_coef) * (t1 - t0)
        gauss = rng.standard_normal((self._n, self.dim)) * np.sqrt(var).reshape(-1, 1)
        big = self._jumps(rng, None if self.spec.x_independent else state, t0, t1, eps)
        drift = np.zeros(self.dim)
        drift[0] = self.drift(eps) * (t1 - t0)
        return big + gauss + drift

    def increments_block(self, t, s, block, n):
        """Samples of X_{t,s} for one block of paths (x-independent kernels)."""
        if not self.spec.x_independent:
            raise ValueError("sample_increment needs an x-independent kernel; use euler_frozen_path")
        rng = self._rng(block)
        self._n = n
        eps = self.eps_cut * (s - t) ** (1.0 / self.spec.alpha)
        return self._step(rng, np.zeros((n, self.dim)), t, s, eps)

    def euler_block(self, t, s, x0, n_steps, block, n, period=None):
        """Endpoints of Euler frozen-state paths for one block."""
        rng = self._rng(block)
        self._n = n
        state = np.tile(np.atleast_1d(np.asarray(x0, float)), (n, 1))
        dt = (s - t) / n_steps
        eps = self.eps_cut  # absolute: rescaling by dt would blow up the jump rate
        for k in range(n_steps):
            state = state + self._step(rng, state, t + k * dt, t + (k + 1) * dt, eps)
            if period is not None:
                state = np.mod(state + 0.5 * period, period) - 0.5 * period
        return state


def _blocks(n_paths):
    full, rest = divmod(n_paths, BLOCK)
    return [(b, BLOCK) for b in range(full)] + ([(full, rest)] if rest else [])


def sample_increment(sampler, t, s, n_paths=1, threads=1):
    """Draw ``n_paths`` samples of the increment over [t, s]."""
    blocks = _blocks(n_paths)

    def run(item):
        b, n = item
        return JumpSampler(sampler.spec, sampler.dim, sampler.eps_cut, sampler.seed).increments_block(t, s, b, n)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        parts = list(pool.map(run, blocks))
    return np.concatenate(parts, axis=0)


def euler_frozen_path(spec, t, s, x0, n_steps=256, n_paths=1, seed=0, dim=1, eps_cut=0.1,
                      period=None, threads=1):
    """Endpoints of the Euler scheme with kernels frozen at each step's left state."""
    if n_steps < 16:
        raise ValueError("n_steps must be at least 16")
    blocks = _blocks(n_paths)

    def run(item):
        b, n = item
        return JumpSampler(spec, dim, eps_cut, seed).euler_block(t, s, x0, n_steps, b, n, period)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        parts = list(pool.map(run, blocks))
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
@dataclass
class EmpiricalDensity:
    """Histogram density on lattice-centred bins with binomial standard errors.

    ``counts`` has one entry per bin centred at ``axis`` points (width
    ``spacing``); ``outside`` counts paths beyond the bins.
    """

    axis: np.ndarray
    counts: np.ndarray
    n_paths: int
    outside: int
    window: SpaceTimeWindow = None
    meta: dict = field(default_factory=dict)
    provenance: str = "empirical"

    @property
    def dim(self):
        return self.counts.ndim

    @property
    def spacing(self):
        return float(self.axis[1] - self.axis[0])

    @property
    def bin_volume(self):
        return self.spacing ** self.dim

    @property
    def values(self):
        return self.counts / (self.n_paths * self.bin_volume)

    @property
    def stderr(self):
        p = self.counts / self.n_paths
        return np.sqrt(p * (1.0 - p) / self.n_paths) / self.bin_volume

    def captured_mass(self):
        return float(self.counts.sum()) / self.n_paths

    def bandwidth(self):
        """Silverman-type bandwidth from the binned sample, floored at one bin."""
        pts = np.stack(np.meshgrid(*([self.axis] * self.dim), indexing="ij"), -1).reshape(-1, self.dim)
        w = self.counts.reshape(-1) / max(self.counts.sum(), 1)
        mean = w @ pts
        spread = np.sqrt(np.sum(w * np.sum((pts - mean) ** 2, axis=1)) / self.dim)
        # robust spread: heavy tails inflate the standard deviation
        cdf = np.cumsum(self.counts.sum(axis=tuple(range(1, self.dim))) / max(self.counts.sum(), 1))
        iqr = np.interp(0.75, cdf, self.axis) - np.interp(0.25, cdf, self.axis)
        sigma = min(spread, iqr / 1.349) if iqr > 0 else spread
        return max(0.9 * sigma * self.n_paths ** (-1.0 / (self.dim + 4)), self.spacing)

    def kde(self, bandwidth=None):
        """Gaussian-smoothed density on the bin centres (binned KDE)."""
        from scipy.ndimage import gaussian_filter
        bw = self.bandwidth() if bandwidth is None else bandwidth
        return gaussian_filter(self.values, bw / self.spacing, mode="constant")

    def write(self, path):
        from pathlib import Path
        path = Path(path)
        pts = np.stack(np.meshgrid(*([self.axis] * self.dim), indexing="ij"), -1).reshape(-1, self.dim)
        header = [f"x{i + 1}" for i in range(self.dim)] + ["mass", "density", "stderr"]
        rows = np.column_stack([pts, self.counts.reshape(-1) / self.n_paths,
                                self.values.reshape(-1), self.stderr.reshape(-1)])
        write_csv(path.with_suffix(".csv"), header, rows)
        side = {"n_paths": self.n_paths, "outside": self.outside, "provenance": self.provenance,
                "meta": _jsonable(self.meta)}
        if self.window is not None:
            side["window"] = self.window.to_dict()
        write_json(path.with_suffix(".json"), side)
        return path.with_suffix(".csv"), path.with_suffix(".json")


def histogram(samples, axis, period=None):
    """Counts on bins centred at ``axis`` (uniform) in every coordinate.

    With a ``period`` the samples are wrapped onto the bin range first.
    """
    samples = np.atleast_2d(samples)
    h = axis[1] - axis[0]
    if period is not None:
        lo = axis[0] - 0.5 * h
        samples = np.mod(samples - lo, period) + lo
    edges = np.concatenate([axis - 0.5 * h, [axis[-1] + 0.5 * h]])
    counts, _ = np.histogramdd(samples, bins=[edges] * samples.shape[1])
    counts = counts.astype(np.int64)
    return counts, samples.shape[0] - int(counts.sum())


def _merge(parts, axis):
    counts = None
    outside = 0
    for part in parts:
        c, o = histogram(part, axis)
        counts = c if counts is None else counts + c
        outside += o
    return counts, outside


def simulate_density(sampler, t, s, window, n_paths=100_000, threads=1):
    """Empirical density of the increment over [t, s] on the window lattice."""
    if n_paths < 10_000:
        raise ValueError("n_paths must be at least 1e4")
    blocks = _blocks(n_paths)

    def run(item):
        b, n = item
        local = JumpSampler(sampler.spec, sampler.dim, sampler.eps_cut, sampler.seed)
        return histogram(local.increments_block(t, s, b, n), window.axis)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        parts = list(pool.map(run, blocks))
    counts = sum(c for c, _ in parts)
    outside = sum(o for _, o in parts)
    eps = sampler.eps_cut * (s - t) ** (1.0 / sampler.spec.alpha)
    meta = {"seed": sampler.seed, "eps_cut": sampler.eps_cut, "eps_used": eps,
            "intensity": sampler.intensity(eps), "t": t, "s": s}
    return EmpiricalDensity(window.axis, counts, n_paths, outside, window, meta)


def simulate_euler_density(spec, t, s, x0, axis, n_paths=100_000, n_steps=256, seed=0, dim=1,
                           eps_cut=0.1, period=None, threads=1):
    """Empirical density of Euler frozen-state endpoints on bins centred at ``axis``."""
    blocks = _blocks(n_paths)

    def run(item):
        b, n = item
        ends = JumpSampler(spec, dim, eps_cut, seed).euler_block(t, s, x0, n_steps, b, n, period)
        return histogram(ends, axis, period)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        parts = list(pool.map(run, blocks))
    counts = sum(c for c, _ in parts)
    outside = sum(o for _, o in parts)
    meta = {"seed": seed, "eps_cut": eps_cut, "n_steps": n_steps, "x0": np.atleast_1d(x0).tolist(),
            "period": period, "t": t, "s": s}
    return EmpiricalDensity(np.asarray(axis), counts, n_paths, outside, None, meta)

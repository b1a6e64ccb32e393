"""Drift perturbation: Kato modulus and the Duhamel construction.

The drifted kernel is computed row by row: for a fixed start point ``x`` the
function ``F(r, .) = p^{kappa,b}_{t,r}(x, .)`` solves, in Fourier variables,

    F^(s') = e^{psi_{t,s'}} F^(t) + int_t^{s'} e^{psi_{r,s'}} i xi . FT[F b](r) dr,

which is the Duhamel formula written in the forward variable. The time
integral uses exact exponential weights against local quadratic
interpolation of the nonlinear term; the fixed point is found by Picard
sweeps over the whole time grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._numerics import gauss_jacobi, gauss_legendre, sphere_area
from .exponent import char_exponent
from .fields import DensityField, SpaceTimeWindow
from .kernels import ConfigError
from .parametrix import _moments, graded_times

DRIFT_FAMILIES = ("zero", "constant", "smooth", "time_modulated")


class ContractionError(RuntimeError):
    """Picard sweeps for the Duhamel equation fail to contract."""


@dataclass(frozen=True)
class DriftField:
    """Bounded drift ``b(t, x)`` from a small registry.

    Families
    --------
    zero : b = 0
    constant : b = vector
    smooth : b = amp sin(freq x_1) e_1
    time_modulated : b = amp cos(2 pi time_freq t) sin(freq x_1) e_1

    ``b(t, .) = 0`` for ``t < 0``.
    """

    family: str = "zero"
    vector: tuple = (0.0,)
    amp: float = 0.0
    freq: float = 1.0
    time_freq: float = 1.0

    def __post_init__(self):
        if self.family not in DRIFT_FAMILIES:
            raise ConfigError(f"unknown drift family {self.family!r}", "drift.family")
        for name in ("amp", "freq", "time_freq"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError("drift parameters must be finite", f"drift.params.{name}")
        object.__setattr__(self, "vector", tuple(float(v) for v in np.atleast_1d(self.vector)))

    @property
    def sup_norm(self):
        if self.family == "zero":
            return 0.0
        if self.family == "constant":
            return float(np.linalg.norm(self.vector))
        return abs(self.amp)

    @property
    def x_period(self):
        return None if self.family in ("zero", "constant") else 2.0 * np.pi / self.freq

    def __call__(self, t, x):
        """b(t, x) for points ``x`` of shape (..., d); ``t`` broadcasts against x[..., 0]."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], t.shape)
        d = x.shape[-1]
        out = np.zeros(shape + (d,))
        active = np.broadcast_to(t >= 0, shape)
        if self.family == "zero":
            return out
        if self.family == "constant":
            vec = np.zeros(d)
            k = min(d, len(self.vector))
            vec[:k] = self.vector[:k]
            return np.where(active[..., None], vec, 0.0)
        first = self.amp * np.sin(self.freq * x[..., 0])
        if self.family == "time_modulated":
            first = first * np.cos(2.0 * np.pi * self.time_freq * t)
        out[..., 0] = np.where(active, np.broadcast_to(first, shape), 0.0)
        return out

    def to_dict(self):
        params = {"vector": list(self.vector), "amp": self.amp, "freq": self.freq,
                  "time_freq": self.time_freq}
        return {"family": self.family, "params": params}

    @classmethod
    def from_dict(cls, data):
        if "family" not in data:
            raise ConfigError("missing field", "drift.family")
        params = dict(data.get("params", {}))
        allowed = {"vector", "amp", "freq", "time_freq"}
        extra = set(params) - allowed
        if extra:
            raise ConfigError(f"unknown drift parameter {sorted(extra)[0]!r}", "drift.params")
        try:
            return cls(family=data["family"], **params)
        except TypeError as err:
            raise ConfigError(str(err), "drift.params") from None


# ---------------------------------------------------------------------------
def rho_mass(alpha, dim):
    """int rho^0_alpha(s, y) dy, independent of s."""
    from scipy.special import beta as beta_fn
    return sphere_area(dim) * beta_fn(dim, alpha)


def kato_modulus(b, alpha, eps, dim=1, samples=None, n_time=48, n_space=64):
    """K^alpha_b(eps) by quadrature, maximised over sample points (t, x) and both signs.

    The time integral uses Gauss-Jacobi weights for the two endpoint
    singularities; the space integral substitutes ``y = x + s^{1/alpha} u``
    and ``(1 + |u|)^{-alpha} = v`` to remove the heavy tail.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("the Kato modulus is defined for alpha in (1, 2)")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if b.family == "zero":
        return 0.0
    if samples is None:
        ts = np.array([0.0, 0.25, 0.5, 1.0])
        xs = np.linspace(-np.pi, np.pi, 9)
        samples = [(tt, np.r_[xx, np.zeros(dim - 1)]) for tt in ts for xx in xs]
    g, gw = gauss_jacobi(n_time, -1.0 / alpha, -1.0 / alpha)
    s_nodes = 0.5 * eps * (g + 1.0)
    s_weights = gw * (0.5 * eps) ** (1.0 - 2.0 / alpha)
    v, vw = gauss_legendre(n_space)
    v = 0.5 * (v + 1.0)
    vw = 0.5 * vw
    radius = v ** (-1.0 / alpha) - 1.0
    # int_0^inf (1+r)^{-d-alpha} r^{d-1} g(r) dr = (1/alpha) int_0^1 (r/(1+r))^{d-1} g(r(v)) dv
    rweight = vw / alpha * (radius / (1.0 + radius)) ** (dim - 1)
    if dim == 1:
        dirs, dw = np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    elif dim == 2:
        ang = 2.0 * np.pi * np.arange(32) / 32
        dirs, dw = np.stack([np.cos(ang), np.sin(ang)], -1), np.full(32, 2.0 * np.pi / 32)
    else:
        from .kernels import _sphere_rule
        dirs, dw = _sphere_rule(dim, 16)
    best = 0.0
    for t, x in samples:
        x = np.atleast_1d(np.asarray(x, float))
        for sign in (1.0, -1.0):
            times = t + sign * s_nodes
            pts = (x[None, None, None, :] + (s_nodes ** (1.0 / alpha))[:, None, None, None]
                   * radius[None, :, None, None] * dirs[None, None, :, :])
            mag = np.linalg.norm(b(times[:, None, None], pts), axis=-1)
            inner = np.einsum("srk,r,k->s", mag, rweight, dw)
            best = max(best, eps * float(np.sum(s_weights * inner)))
    return best


def kato_modulus_bounded(alpha, eps, dim=1, bound=1.0):
    """Closed form for |b| = bound everywhere: bound C_rho B(1-1/a, 1-1/a) eps^{2-2/a}."""
    from scipy.special import beta as beta_fn
    a = 1.0 - 1.0 / alpha
    return bound * rho_mass(alpha, dim) * beta_fn(a, a) * eps ** (2.0 - 2.0 / alpha)


# ---------------------------------------------------------------------------
def _duhamel_weights(psi_steps, times, order=2):
    """W[k, j] = int_{t}^{r_k} e^{psi_{r, r_k}} L_j(r) dr on the lattice frequencies.

    ``psi_steps[m]`` is the exact exponent over [r_m, r_{m+1}]; inside a step
    the exponent is taken linear in time (exact for time-independent kernels).
    """
    m_nodes = times.size
    nxi = psi_steps.shape[1]
    phi = np.concatenate([np.zeros((1, nxi), complex), np.cumsum(psi_steps, axis=0)])
    widths = np.diff(times)
    out = np.zeros((m_nodes, m_nodes, nxi), dtype=complex)
    for m in range(m_nodes - 1):
        width = widths[m]
        first = min(m, m_nodes - 1 - order)
        stencil = np.arange(first, first + order + 1)
        v = (times[m + 1] - times[stencil]) / width
        mom = _moments(psi_steps[m])  # lam * width = psi over the step
        local = []
        for a, vj in enumerate(v):
            others = np.delete(v, a)
            c = (np.poly(others) / np.prod(vj - others))[::-1]
            local.append(width * sum(ck * mk for ck, mk in zip(c, mom)))
        for k in range(m + 1, m_nodes):
            carry = np.exp(phi[k] - phi[m + 1])
            for j, w in zip(stencil, local):
                out[k, j] += carry * w
    return out, phi


@dataclass
class DuhamelResult:
    field: DensityField
    history: np.ndarray
    times: np.ndarray
    iterations: int
    increments: list = field(default_factory=list)


def duhamel_solve(spec, b, t, s, x, lattice, n_time=48, grading=2.0, tol=1e-6, max_iter=60):
    """Drift-perturbed kernel y -> p^{kappa,b}_{t,s}(x, y) on a periodic lattice.

    Parameters
    ----------
    spec : KernelSpec
        x-independent kernel with alpha in (1, 2) (any alpha when b = 0).
    b : DriftField
    t, s : float
    x : array_like
        Start point (a lattice point).
    lattice : Lattice
        Periodic lattice; its period must be a multiple of the drift period.
    """
    if not spec.x_independent:
        raise ConfigError("the Duhamel route needs an x-independent kernel", "kernel.family")
    if b.family != "zero" and not 1.0 < spec.alpha < 2.0:
        raise ConfigError("drift perturbation needs alpha in (1, 2)", "kernel.alpha")
    if b.x_period is not None:
        ratio = lattice.period / b.x_period
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError("lattice period must be a multiple of the drift period", "window.extent")
    d = lattice.dim
    x = np.atleast_1d(np.asarray(x, dtype=float))
    freqs = lattice.frequencies().reshape(-1, d)
    pts = lattice.points().reshape(-1, d)
    times = t + (s - t) * (np.arange(n_time + 1) / n_time) ** grading
    psi_steps = np.stack([char_exponent(spec, times[m], times[m + 1], freqs)
                          for m in range(n_time)])
    W, phi = _duhamel_weights(psi_steps, times)
    base = np.exp(phi) * np.exp(1j * freqs @ x)[None, :]
    drift = np.stack([b(r, pts) for r in times])  # (M+1, n, d)

    def fwd(v):
        return lattice.forward(v.reshape(v.shape[:-1] + lattice.shape)).reshape(v.shape)

    def inv(v):
        return lattice.inverse(v.reshape(v.shape[:-1] + lattice.shape)).reshape(v.shape)

    spec_hat = base.copy()
    values = inv(spec_hat).real
    increments = []
    if b.family != "zero":
        for it in range(max_iter):
            nonlin = sum(1j * freqs[:, c][None, :] * fwd(values * drift[:, :, c]) for c in range(d))
            spec_hat = base + np.einsum("kjx,jx->kx", W, nonlin)
            new = inv(spec_hat).real
            inc = float(np.max(np.abs(new - values)))
            values = new
            increments.append(inc)
            if inc < tol:
                break
            if len(increments) >= 4 and increments[-1] >= increments[-2] >= increments[-3]:
                raise ContractionError(f"Duhamel sweeps do not contract: {increments[-4:]}")
        else:
            raise ContractionError(f"no convergence in {max_iter} sweeps (last step {increments[-1]:.2e})")
    from .parametrix import _field_from_rows
    meta = {"iterations": len(increments), "increments": increments, "drift": b.to_dict(),
            "period": lattice.period, "n_time": n_time}
    out = _field_from_rows(lattice, values[-1].reshape(lattice.shape), t, s, x, meta=meta)
    return DuhamelResult(out, values, times, len(increments), increments)

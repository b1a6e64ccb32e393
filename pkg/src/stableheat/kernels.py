"""Jump kernels, the comparison kernel rho, compensators and admissibility checks.

A kernel is one member of a closed parametric registry::

    kappa(t, x, z) = a + time_amp * sin(2 pi time_freq t)
                       + odd * z_1 / |z|
                       + (radial + x_amp * H(x)) * cos(nu |z|)

with ``H(x) = sign(sin(x_freq x_1)) |sin(x_freq x_1)|^beta``. The three
families restrict which parameters may be nonzero.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ._numerics import gl_interval, sphere_area

FAMILIES = ("constant", "time_modulated", "holder")

_FAMILY_PARAMS = {
    "constant": ("a",),
    "time_modulated": ("a", "time_amp", "time_freq", "odd", "radial", "nu"),
    "holder": ("a", "odd", "radial", "nu", "x_amp", "x_freq"),
}

EXACT_TOL = 1e-8


class ConfigError(ValueError):
    """Invalid configuration value; ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class KernelAdmissibilityError(ValueError):
    """Kernel fails a bound; ``triple`` holds the violating (t, x, z)."""

    def __init__(self, message, triple=None):
        super().__init__(message)
        self.triple = triple


@dataclass(frozen=True)
class KernelSpec:
    """Immutable registry kernel.

    Parameters
    ----------
    alpha : float
        Stability index in (0, 2).
    kappa0 : float
        Ellipticity constant, values must lie in ``[1/kappa0, kappa0]``.
    beta : float
        Hoelder index in (0, 1] of the x-modulation.
    family : str
        One of ``constant``, ``time_modulated``, ``holder``.
    a, time_amp, time_freq, odd, radial, nu, x_amp, x_freq : float
        Family parameters (see module docstring).
    """

    alpha: float
    kappa0: float
    beta: float = 1.0
    family: str = "constant"
    a: float = 1.0
    time_amp: float = 0.0
    time_freq: float = 1.0
    odd: float = 0.0
    radial: float = 0.0
    nu: float = 1.0
    x_amp: float = 0.0
    x_freq: float = 1.0
    beta_prime: float = field(default=0.0, init=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}", "family")
        if not 0.0 < self.alpha < 2.0:
            raise ConfigError(f"alpha must lie in (0, 2), got {self.alpha}", "alpha")
        if not self.kappa0 > 1.0:
            raise ConfigError(f"kappa0 must exceed 1, got {self.kappa0}", "kappa0")
        if not 0.0 < self.beta <= 1.0:
            raise ConfigError(f"beta must lie in (0, 1], got {self.beta}", "beta")
        allowed = _FAMILY_PARAMS[self.family]
        defaults = KernelSpec.__dataclass_fields__
        for name in ("time_amp", "odd", "radial", "x_amp"):
            if name not in allowed and getattr(self, name) != defaults[name].default:
                raise ConfigError(f"parameter not allowed for family {self.family!r}",
                                  f"params.{name}")
        if self.nu < 0 or self.x_freq <= 0 or self.time_freq < 0:
            raise ConfigError("frequencies must be nonnegative", "params")

    # -- structure -------------------------------------------------------
    @property
    def x_independent(self):
        return self.x_amp == 0.0

    @property
    def z_even(self):
        return self.odd == 0.0

    @property
    def time_independent(self):
        return self.time_amp == 0.0 or self.time_freq == 0.0

    @property
    def homogeneous(self):
        """True when kappa does not depend on |z| (pure angular kernel)."""
        return self.radial == 0.0 and self.x_amp == 0.0

    @property
    def x_period(self):
        return 2.0 * np.pi / self.x_freq

    def upper(self):
        """Analytic upper bound of kappa."""
        return self.a + abs(self.time_amp) + abs(self.odd) + abs(self.radial) + abs(self.x_amp)

    def lower(self):
        """Analytic lower bound of kappa."""
        return self.a - abs(self.time_amp) - abs(self.odd) - abs(self.radial) - abs(self.x_amp)

    # -- evaluation ------------------------------------------------------
    def modulation(self, x):
        """H(x) for points ``x`` of shape (..., d)."""
        x = np.asarray(x, dtype=float)
        s = np.sin(self.x_freq * x[..., 0])
        return np.sign(s) * np.abs(s) ** self.beta

    def time_term(self, t):
        t = np.asarray(t, dtype=float)
        return self.a + self.time_amp * np.sin(2.0 * np.pi * self.time_freq * t)

    def __call__(self, t, x, z):
        """kappa(t, x, z); ``x`` and ``z`` have shape (..., d) and broadcast."""
        z = np.asarray(z, dtype=float)
        r = np.linalg.norm(z, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        value = self.time_term(t) + self.odd * np.where(r > 0, z[..., 0] / safe, 0.0)
        cos_coef = self.radial
        if self.x_amp:
            cos_coef = cos_coef + self.x_amp * self.modulation(x)
        return value + cos_coef * np.cos(self.nu * r)

    def coefficients(self, t, s, h=None):
        """Time-averaged coefficients (even, odd, cos) over [t, s].

        ``h`` is the value of the modulation H at the freezing point.
        """
        even = self.a
        if self.time_amp and self.time_freq:
            w = 2.0 * np.pi * self.time_freq
            even = even + self.time_amp * (np.cos(w * t) - np.cos(w * s)) / (w * (s - t))
        cos_coef = self.radial
        if h is not None:
            cos_coef = cos_coef + self.x_amp * np.asarray(h, dtype=float)
        elif self.x_amp:
            raise ValueError("x-dependent kernel needs a freezing value h")
        return even, self.odd, cos_coef

    def frozen(self, y=None, h=None):
        """x-independent kernel kappa(., y, .) (freeze by point ``y`` or by H value ``h``)."""
        if self.x_independent:
            return self
        if h is None:
            h = float(np.ravel(self.modulation(np.atleast_1d(np.asarray(y, dtype=float))))[0])
        return replace(self, family="time_modulated", radial=self.radial + self.x_amp * h,
                       x_amp=0.0, x_freq=1.0)

    def scaled(self, factor):
        """Kernel multiplied by a positive constant (kappa0 widened if needed)."""
        kappa0 = max(self.kappa0, factor * self.upper(), 1.0 / (factor * self.lower()))
        return replace(self, kappa0=kappa0, a=self.a * factor, time_amp=self.time_amp * factor,
                       odd=self.odd * factor, radial=self.radial * factor,
                       x_amp=self.x_amp * factor)

    def time_rescaled(self, t, s):
        """Kernel r -> kappa(t + (s - t) r, .) on unit time, returned as a callable of r."""
        return lambda r: self.time_term(t + (s - t) * np.asarray(r))

    # -- serialization ---------------------------------------------------
    def to_dict(self):
        params = {k: getattr(self, k) for k in _FAMILY_PARAMS[self.family]}
        return {"family": self.family, "alpha": self.alpha, "kappa0": self.kappa0,
                "beta": self.beta, "params": params}

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("kernel must be a JSON object", "kernel")
        for key in ("family", "alpha", "kappa0"):
            if key not in data:
                raise ConfigError("missing field", f"kernel.{key}")
        family = data["family"]
        if family not in FAMILIES:
            raise ConfigError(f"unknown family {family!r}", "kernel.family")
        params = dict(data.get("params", {}))
        unknown = set(params) - set(_FAMILY_PARAMS[family])
        if unknown:
            raise ConfigError(f"unknown parameters {sorted(unknown)}", "kernel.params")
        try:
            values = {k: float(v) for k, v in params.items()}
            return cls(alpha=float(data["alpha"]), kappa0=float(data["kappa0"]),
                       beta=float(data.get("beta", 1.0)), family=family, **values)
        except ConfigError as err:
            raise ConfigError(str(err).split(": ", 1)[-1], f"kernel.{err.field}") from None
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err), "kernel") from None

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def registry_examples(alpha, x_dependent=True):
    """Representative registry members used by the validation suites."""
    odd = 0.0 if alpha == 1.0 else 0.5
    specs = {
        "constant": KernelSpec(alpha=alpha, kappa0=2.0),
        "time_modulated": KernelSpec(alpha=alpha, kappa0=3.5, family="time_modulated", a=2.0,
                                     time_amp=0.5, odd=odd, radial=0.3, nu=1.0),
    }
    if x_dependent:
        specs["holder"] = KernelSpec(alpha=alpha, kappa0=3.0, family="holder", beta=1.0,
                                     a=2.0, x_amp=1.0, nu=1.0, x_freq=1.0)
    return specs


# ---------------------------------------------------------------------------
@dataclass
class AdmissibilityReport:
    accepted: bool
    violation: float
    worst_triple: tuple | None
    holder_violation: float
    odd_moments: list = field(default_factory=list)
    observed_range: tuple = (np.nan, np.nan)
    messages: list = field(default_factory=list)

    def to_dict(self):
        out = asdict(self)
        if self.worst_triple is not None:
            out["worst_triple"] = [np.asarray(v).tolist() for v in self.worst_triple]
        return out


def odd_moment_ladder(spec, dim=1, radii=(1e-2, 1e-1, 1.0, 10.0, 100.0), t=0.0, x=None, n=64):
    """Vectors int_{r0 <= |z| <= r1} z kappa / |z|^{d+1} dz for consecutive radii."""
    x = np.zeros(dim) if x is None else np.asarray(x, dtype=float)
    dirs, dw = _sphere_rule(dim, 32)
    out = []
    for r0, r1 in zip(radii[:-1], radii[1:]):
        # log-radial variable: dz / |z|^{d+1} * z = theta dr / r... times r
        u, uw = gl_interval(np.log(r0), np.log(r1), n)
        r = np.exp(u)
        z = r[:, None, None] * dirs[None, :, :]
        vals = spec(t, x, z)[..., None] * dirs[None, :, :]
        moment = np.einsum("i,j,ijk->k", uw, dw, vals)
        out.append(moment)
    return [m.tolist() for m in out]


def _sphere_rule(dim, n):
    """Directions and weights integrating over the unit sphere of R^dim."""
    if dim == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if dim == 2:
        phi = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        return np.stack([np.cos(phi), np.sin(phi)], -1), np.full(n, 2.0 * np.pi / n)
    c, cw = np.polynomial.legendre.leggauss(n)
    phi = 2.0 * np.pi * (np.arange(2 * n) + 0.5) / (2 * n)
    ss = np.sqrt(1.0 - c ** 2)
    dirs = np.stack([np.repeat(c, 2 * n), np.outer(ss, np.cos(phi)).ravel(),
                     np.outer(ss, np.sin(phi)).ravel()], -1)
    return dirs, np.repeat(cw, 2 * n) * (np.pi / n)


def validate_kernel(spec, sample_budget=10_000, dim=1, seed=0, strict=False, t_max=10.0):
    """Sample-based admissibility check of a registry kernel.

    Parameters
    ----------
    spec : KernelSpec
    sample_budget : int
        Number of sampled (t, x, z) triples, at least 1000.
    dim : int
        Spatial dimension used for sampling.
    strict : bool
        Raise :class:`KernelAdmissibilityError` instead of returning a
        rejected report.

    Returns
    -------
    AdmissibilityReport
    """
    if sample_budget < 1000:
        raise ConfigError("sample_budget must be at least 1000", "sample_budget")
    rng = np.random.default_rng(seed)
    n = int(sample_budget)
    t = rng.uniform(0.0, t_max, n)
    x = rng.uniform(-4 * np.pi, 4 * np.pi, (n, dim))
    radius = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), n))
    direction = rng.normal(size=(n, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    z = radius[:, None] * direction
    # include the extreme phases of every oscillating term
    vals = spec(t, x, z)
    lo_gap = 1.0 / spec.kappa0 - vals
    hi_gap = vals - spec.kappa0
    gaps = np.maximum(lo_gap, hi_gap)
    worst = int(np.argmax(gaps))
    violation = max(0.0, float(gaps[worst]))
    analytic = max(0.0, 1.0 / spec.kappa0 - spec.lower(), spec.upper() - spec.kappa0)
    messages = []
    triple = None
    if violation > EXACT_TOL or analytic > EXACT_TOL:
        triple = (float(t[worst]), x[worst], z[worst])
        messages.append(f"kappa leaves [1/kappa0, kappa0] by {max(violation, analytic):.3g}")
        violation = max(violation, analytic)

    y = x + rng.normal(scale=0.5, size=x.shape)
    diff = np.abs(spec(t, x, z) - spec(t, y, z))
    allowance = spec.kappa0 * np.linalg.norm(x - y, axis=1) ** spec.beta * 2.0
    holder = float(np.max(diff - allowance, initial=0.0))
    holder = max(0.0, holder)
    if holder > EXACT_TOL:
        messages.append(f"Hoelder modulus exceeded by {holder:.3g}")

    moments = []
    if spec.alpha == 1.0:
        if spec.odd != 0.0:
            messages.append("alpha = 1 requires kappa even in z")
        moments = odd_moment_ladder(spec, dim)
        worst_moment = max(float(np.max(np.abs(m))) for m in moments)
        if worst_moment > EXACT_TOL and spec.odd == 0.0:
            messages.append(f"odd moment {worst_moment:.3g} on annuli")

    report = AdmissibilityReport(
        accepted=not messages, violation=violation, worst_triple=triple,
        holder_violation=holder, odd_moments=moments,
        observed_range=(float(vals.min()), float(vals.max())), messages=messages)
    if strict and not report.accepted:
        raise KernelAdmissibilityError("; ".join(messages), triple)
    return report


# ---------------------------------------------------------------------------
def rho(beta, gamma, alpha, t, x, d=None):
    """Comparison kernel t^{gamma/alpha} (|x|^beta ^ 1) / (t^{1/alpha} + |x|)^{d+alpha}.

    ``x`` holds points with the spatial axis last; pass ``d`` to give norms
    ``|x|`` directly instead.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("rho requires t > 0")
    x = np.asarray(x, dtype=float)
    if d is None:
        if x.ndim == 0:
            d, norm = 1, np.abs(x)
        else:
            d, norm = x.shape[-1], np.linalg.norm(x, axis=-1)
    else:
        norm = np.abs(x)
    return (t ** (gamma / alpha) * np.minimum(norm ** beta, 1.0)
            / (t ** (1.0 / alpha) + norm) ** (d + alpha))


def rho_periodic(beta, gamma, alpha, t, x, period, images=64):
    """rho summed over periodic images of ``x`` (points with spatial axis last)."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    shifts = np.arange(-images, images + 1) * period
    grids = np.meshgrid(*([shifts] * d), indexing="ij")
    offsets = np.stack([g.ravel() for g in grids], -1)
    total = np.zeros(x.shape[:-1])
    for off in offsets:
        total += rho(beta, gamma, alpha, t, x + off)
    return total


def compensator(alpha, z, cutoff=1.0):
    """z^{(alpha)}: z for alpha in (1,2), z 1_{|z| < cutoff} for alpha = 1, 0 for alpha < 1."""
    z = np.asarray(z, dtype=float)
    if alpha > 1.0:
        return z.copy()
    if alpha < 1.0:
        return np.zeros_like(z)
    norm = np.abs(z) if z.ndim == 0 else np.linalg.norm(z, axis=-1, keepdims=True)
    return np.where(norm < cutoff, z, 0.0)


def drift_conversion(spec, t, s, dim=1):
    """int_t^s b(r) dr translating the z^{(alpha)} convention to the 1_{|z|<=1} one.

    Only the odd angular part contributes, and its first moment is
    ``odd * e_1 * |S^{d-1}| / d`` against the radial power.
    """
    if not spec.x_independent:
        raise ValueError("drift conversion requires an x-independent kernel")
    out = np.zeros(dim)
    if spec.alpha == 1.0 or spec.odd == 0.0:
        return out
    moment = spec.odd * sphere_area(dim) / dim
    if spec.alpha < 1.0:
        out[0] = -moment / (1.0 - spec.alpha)
    else:
        out[0] = moment / (spec.alpha - 1.0)
    return out * (s - t)

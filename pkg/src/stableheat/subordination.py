"""Square root of the generator by subordination, carre du champ and Riesz ratios.

All operators here are for x-independent, time-independent kernels. The
half generator is ``L^{1/2} f = (1 / (2 Gamma(1/2))) int_0^inf (P_t f - f) t^{-3/2} dt``,
which equals ``-(-L)^{1/2}``; the subordinate Levy density is
``nu~(z) = (1 / (2 Gamma(1/2))) int_0^inf p_t(z) t^{-3/2} dt``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._numerics import Lattice, gauss_jacobi, gauss_legendre
from .exponent import unit_symbols
from .kernels import ConfigError

SQRT_PI = np.sqrt(np.pi)
TEST_FAMILIES = ("gaussian", "bump", "modulated_gaussian", "bump_difference")


class RouteDisagreement(RuntimeError):
    """The two half-generator routes disagree beyond tolerance."""


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class TestFunction:
    """Smooth test function on R (registry member).

    Families
    --------
    gaussian : amp exp(-u^2 / 2)
    bump : amp exp(1 - 1 / (1 - u^2)) for |u| < 1
    modulated_gaussian : amp exp(-u^2 / 2) cos(freq u)
    bump_difference : bump(u - shift) - bump(u + shift)

    with ``u = (x - center) / width``.
    """

    __test__ = False  # not a pytest class

    family: str = "gaussian"
    amp: float = 1.0
    center: float = 0.0
    width: float = 1.0
    freq: float = 2.0
    shift: float = 1.5

    def __post_init__(self):
        if self.family not in TEST_FAMILIES:
            raise ConfigError(f"unknown test function {self.family!r}", "test_function.family")
        if not self.width > 0:
            raise ConfigError("width must be positive", "test_function.width")
        if self.amp == 0:
            raise ConfigError("test function must be nonzero", "test_function.amp")

    @property
    def support_radius(self):
        """Radius outside which |f| is below 1e-16 (relative)."""
        if self.family == "bump":
            return self.width
        if self.family == "bump_difference":
            return self.width * (1.0 + self.shift)
        return 8.6 * self.width

    @property
    def scale(self):
        """Length scale that quadrature panels must resolve."""
        if self.family == "modulated_gaussian":
            return self.width / (1.0 + abs(self.freq))
        if self.family in ("bump", "bump_difference"):
            return 0.25 * self.width
        return self.width

    def dilate(self, lam):
        """x -> f(lam x)."""
        return TestFunction(self.family, self.amp, self.center / lam, self.width / lam, self.freq, self.shift)

    def scaled(self, factor):
        return TestFunction(self.family, self.amp * factor, self.center, self.width, self.freq, self.shift)

    @staticmethod
    def _bump(u):
        inside = np.abs(u) < 1.0
        safe = np.where(inside, u, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe ** 2)), 0.0)

    @staticmethod
    def _bump_grad(u):
        inside = np.abs(u) < 1.0
        safe = np.where(inside, u, 0.0)
        val = np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe ** 2)), 0.0)
        return np.where(inside, -2.0 * safe / (1.0 - safe ** 2) ** 2 * val, 0.0)

    def __call__(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        if self.family == "gaussian":
            return self.amp * np.exp(-0.5 * u ** 2)
        if self.family == "modulated_gaussian":
            return self.amp * np.exp(-0.5 * u ** 2) * np.cos(self.freq * u)
        if self.family == "bump":
            return self.amp * self._bump(u)
        return self.amp * (self._bump(u - self.shift) - self._bump(u + self.shift))

    def gradient(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        if self.family == "gaussian":
            g = -u * np.exp(-0.5 * u ** 2)
        elif self.family == "modulated_gaussian":
            g = np.exp(-0.5 * u ** 2) * (-u * np.cos(self.freq * u) - self.freq * np.sin(self.freq * u))
        elif self.family == "bump":
            g = self._bump_grad(u)
        else:
            g = self._bump_grad(u - self.shift) - self._bump_grad(u + self.shift)
        return self.amp * g / self.width

    def to_dict(self):
        return {"family": self.family, "amp": self.amp, "center": self.center, "width": self.width,
                "freq": self.freq, "shift": self.shift}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(**data)
        except TypeError as err:
            raise ConfigError(str(err), "test_function") from None


def test_registry():
    """The fixed family of test functions used in ratio sweeps."""
    return [TestFunction("gaussian"), TestFunction("bump", width=2.0),
            TestFunction("modulated_gaussian", freq=2.0), TestFunction("bump_difference", shift=1.5)]


test_registry.__test__ = False


# ---------------------------------------------------------------------------
def _check_spec(spec, dim=1):
    if not spec.x_independent or not spec.time_independent:
        raise ConfigError("subordination needs an x-independent, time-independent kernel", "kernel.family")


def is_homogeneous(spec):
    """kappa(lambda z) = kappa(z): no radial cosine part."""
    return spec.radial == 0.0 and spec.x_amp == 0.0


def backward_multiplier(spec, freqs):
    """Symbol of the generator acting on functions: psi(-xi) per unit time."""
    even, odd, cos = unit_symbols(freqs, spec.alpha, spec.nu)
    return np.conj(spec.a * even + spec.odd * odd + spec.radial * cos)


def half_multiplier_exact(lam):
    """-(-lam)^{1/2} with the principal branch."""
    return -np.sqrt(-np.asarray(lam, dtype=complex))


def half_multiplier_time(lam, n_nodes=801, log_lo=-36.0, log_hi=36.0):
    """(1/(2 sqrt(pi))) int_0^inf (e^{t lam} - 1) t^{-3/2} dt by trapezoid in log t.

    The integrand in ``u = log t`` decays exponentially at both ends, so the
    trapezoid rule converges geometrically; the truncated tails are added
    analytically.
    """
    lam = np.asarray(lam, dtype=complex)
    u = np.linspace(log_lo, log_hi, n_nodes)
    du = u[1] - u[0]
    w = np.full(n_nodes, du)
    w[0] = w[-1] = 0.5 * du
    acc = np.zeros(lam.shape, dtype=complex)
    for ui, wi in zip(u, w):
        t = np.exp(ui)
        acc += wi * np.expm1(t * lam) * t ** -0.5
    t_lo, t_hi = np.exp(log_lo), np.exp(log_hi)
    acc += 2.0 * lam * np.sqrt(t_lo)  # e^{t lam} - 1 ~ t lam below t_lo
    acc += np.where(np.abs(lam) > 0, -2.0 / np.sqrt(t_hi), 0.0)  # e^{t lam} -> 0 above t_hi
    return acc / (2.0 * SQRT_PI)


# ---------------------------------------------------------------------------
def _log_rule(lo, hi, panels, nodes=16):
    """Composite Gauss-Legendre nodes/weights on [lo, hi]."""
    x, w = gauss_legendre(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (b - a) * (x + 1) + a).ravel(), (0.5 * (b - a) * w).ravel()


def _unit_moment(spec, sign, power, reach=100.0, terms=8):
    """int_0^inf u^power p_1(sign u) du from pointwise unit-time densities (1-d).

    Gauss-Jacobi on [0, 1] and Gauss-Legendre in log u on [1, reach]; beyond
    ``reach`` the density is replaced by its asymptotic series
    ``(1/pi) Re sum_k (-C)^k / k! Gamma(k alpha + 1) (i x)^{-k alpha - 1}``
    with ``C = -psi(1)``, integrated term by term.
    """
    from scipy.special import gamma
    from .fourier import density_point
    u0, w0 = gauss_jacobi(24, 0.0, power)
    u0 = 0.5 * (u0 + 1.0)
    w0 = w0 * 0.5 ** (1.0 + power)
    near = sum(wi * density_point(spec, 0.0, 1.0, np.array([sign * ui])) for ui, wi in zip(u0, w0))
    lu, lw = _log_rule(0.0, np.log(reach), 8)
    far = sum(wi * np.exp((power + 1.0) * li) * density_point(spec, 0.0, 1.0, np.array([sign * np.exp(li)]))
              for li, wi in zip(lu, lw))
    a = spec.alpha
    even, odd, _ = unit_symbols(np.array([[1.0]]), a, spec.nu, need_cos=False)
    big_c = -complex((spec.a * even + spec.odd * odd)[0])
    tail = 0.0
    for k in range(1, terms + 1):
        expo = k * a + 1.0
        coef = (-big_c) ** k / gamma(k + 1) * gamma(expo) * np.exp(-sign * 0.5j * np.pi * expo)
        tail += (coef * reach ** (power + 1.0 - expo) / (expo - power - 1.0)).real / np.pi
    return float(near + far + tail)


def levy_constants(spec, route="symbol"):
    """(C_+, C_-) with nu~(z) = C_sign(z) |z|^{-1-alpha/2} for homogeneous kernels (1-d).

    ``route="symbol"`` matches the symbol of the homogeneous measure,
    ``Gamma(-s) |xi|^s (C_+ e^{-i pi s sgn(xi)/2} + C_- e^{i pi s sgn(xi)/2})`` with
    ``s = alpha/2``, to ``-(-psi(xi))^{1/2}`` at ``xi = 1``.
    ``route="moment"`` uses the substitution ``u = t^{-1/alpha}|z|``, which
    reduces the constants to moments of the unit-time density.
    """
    from scipy.special import gamma
    _check_spec(spec)
    if not is_homogeneous(spec):
        raise ConfigError("Levy constants exist for homogeneous kernels only", "kernel.radial")
    a = spec.alpha
    if route == "moment":
        scale = a / (2.0 * SQRT_PI)
        return (scale * _unit_moment(spec, 1.0, a / 2.0), scale * _unit_moment(spec, -1.0, a / 2.0))
    even, odd, _ = unit_symbols(np.array([[1.0]]), a, spec.nu, need_cos=False)
    psi = complex((spec.a * even + spec.odd * odd)[0])
    target = -np.sqrt(-psi)
    s = 0.5 * a
    g = gamma(-s)
    total = target.real / (g * np.cos(0.5 * np.pi * s))  # C_+ + C_-
    diff = target.imag / (g * np.sin(0.5 * np.pi * s))  # C_- - C_+
    return 0.5 * (total - diff), 0.5 * (total + diff)


def subordinate_levy_density(spec, z, route="symbol"):
    """Subordinate Levy density nu~(z) in d = 1.

    Routes: ``"symbol"`` (closed form, homogeneous kernels), ``"moment"``
    (substitution ``u = t^{-1/alpha}|z|`` against the unit-time density,
    homogeneous kernels) and ``"time"`` (direct integral of
    ``p_t(z) t^{-3/2}`` over t, homogeneous kernels).
    """
    _check_spec(spec)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(np.abs(z) < 1e-8):
        raise ValueError("|z| must be positive")
    a = spec.alpha
    if route in ("symbol", "moment"):
        cp, cm = levy_constants(spec, route)
        return np.where(z > 0, cp, cm) * np.abs(z) ** (-1.0 - a / 2.0)
    if route != "time":
        raise ValueError(f"unknown route {route!r}")
    if not is_homogeneous(spec):
        raise ConfigError("the time route needs a homogeneous kernel", "kernel.radial")
    from scipy.special import gamma
    from .fourier import density_point
    even, odd, _ = unit_symbols(np.array([[1.0]]), a, spec.nu, need_cos=False)
    big_c = -complex((spec.a * even + spec.odd * odd)[0])
    reach = 100.0
    out = []
    for zi in z:
        # below t_lo = (|z| / reach)^alpha the density follows its series in t
        lt_lo = a * np.log(abs(zi) / reach)
        lt, lw = _log_rule(lt_lo, lt_lo + 40.0, 20)
        acc = 0.0
        for li, wi in zip(lt, lw):
            t = np.exp(li)
            acc += wi * density_point(spec, 0.0, t, np.array([zi])) * t ** -0.5
        t_lo = np.exp(lt_lo)
        sign = 1.0 if zi > 0 else -1.0
        for k in range(1, 9):
            expo = k * a + 1.0
            coef = (-big_c) ** k / gamma(k + 1) * gamma(expo) * np.exp(-sign * 0.5j * np.pi * expo)
            acc += (coef * abs(zi) ** (-expo) * t_lo ** (k - 0.5) / (k - 0.5)).real / np.pi
        out.append(acc / (2.0 * SQRT_PI))
    return np.array(out)


def levy_density_slope(spec, lo=0.1, hi=10.0, n=21, route="moment"):
    """Least-squares slope of log nu~ against log |z| over [lo, hi], both signs."""
    z = np.geomspace(lo, hi, n)
    slopes = []
    for sign in (1.0, -1.0):
        vals = subordinate_levy_density(spec, sign * z, route)
        slopes.append(float(np.polyfit(np.log(z), np.log(vals), 1)[0]))
    return slopes


# ---------------------------------------------------------------------------
def riesz_lattice(f, n=1 << 16):
    """Periodic lattice resolving ``f`` with a period far beyond its support."""
    h = min(0.05, f.scale / 16.0)
    return Lattice(1, n, h)


def _image_correction(spec, lattice, mass, center=0.0):
    """Periodic images of the far field ``mass nu~(-x)`` of ``L^{1/2} f`` (homogeneous kernels)."""
    from scipy.special import zeta
    cp, cm = levy_constants(spec)
    q = 1.0 + 0.5 * spec.alpha
    P = lattice.period
    x = lattice.points().ravel() - center
    # the copy of f at -kP (k >= 1) contributes mass C_- (x + kP)^{-q}, the copy at kP mass C_+ (kP - x)^{-q}
    right = P ** -q * zeta(q, 1.0 + x / P)
    left = P ** -q * zeta(q, 1.0 - x / P)
    return mass * (cm * right + cp * left)


def half_generator(spec, f, lattice=None, route="time", points=None):
    """L^{1/2} f for a registry test function (d = 1).

    Routes
    ------
    time : time integral of ``(P_t f - f) t^{-3/2}``, with ``P_t f`` the
        semigroup applied on a periodic lattice (exact per Fourier mode).
    spectral : the multiplier ``-(-psi(-xi))^{1/2}`` (oracle).
    levy : real-space integral ``int (f(x+z) - f(x)) nu~(z) dz``
        (homogeneous kernels; evaluated at ``points``).

    Lattice routes correct the periodic images of the far field for
    homogeneous kernels. Returns ``(points, values)``.
    """
    from .operators import levy_integral
    _check_spec(spec)
    if route == "levy":
        if not is_homogeneous(spec):
            raise ConfigError("the Levy route needs a homogeneous kernel", "kernel.radial")
        if points is None:
            lattice = lattice or riesz_lattice(f)
            x = lattice.points().ravel()
            points = x[np.abs(x - f.center) <= f.support_radius]
        points = np.atleast_1d(np.asarray(points, dtype=float))
        cp, cm = levy_constants(spec)
        vals = levy_integral(f, points, 0.5 * spec.alpha, 0.5 * (cp + cm), 0.5 * (cp - cm))
        return points, vals
    lattice = lattice or riesz_lattice(f)
    x = lattice.points().ravel()
    lam = backward_multiplier(spec, lattice.frequencies())
    if route == "time":
        mult = half_multiplier_time(lam)
    elif route == "spectral":
        mult = half_multiplier_exact(lam)
    else:
        raise ValueError(f"unknown route {route!r}")
    values = f(x)
    out = lattice.inverse(mult * lattice.forward(values)).real
    if is_homogeneous(spec):
        out = out - _image_correction(spec, lattice, float(np.sum(values)) * lattice.h, f.center)
    if points is not None:
        idx = [lattice.index_of(np.atleast_1d(p)) for p in np.atleast_1d(points)]
        return np.asarray(points, float), out[np.ravel(idx)]
    return x, out


def compare_half_routes(spec, f, lattice=None, tol=1e-3, routes=("time", "levy")):
    """Max relative disagreement (to the sup over the support) between two routes."""
    lattice = lattice or riesz_lattice(f)
    x = lattice.points().ravel()
    inside = x[np.abs(x - f.center) <= f.support_radius]
    inside = inside[:: max(1, inside.size // 64)]
    results = [half_generator(spec, f, lattice, r, points=inside)[1] for r in routes]
    scale = max(np.max(np.abs(v)) for v in results)
    err = float(np.max(np.abs(results[0] - results[1])) / scale)
    if err > tol:
        raise RouteDisagreement(f"half-generator routes {routes} disagree by {err:.2e} (> {tol:.0e})")
    return err


# ---------------------------------------------------------------------------
def lp_threshold(alpha, dim=1):
    """Smallest p for which ``Gamma(f)^{1/2}`` (decay ``|x|^{-(d+alpha)/2}``) is in L^p."""
    return 2.0 * dim / (dim + alpha)


def default_p_values(alpha, dim=1):
    return (1.2 * lp_threshold(alpha, dim), 2.0, 4.0)


def _norm_grid(f, reach_factor=1000.0, nodes=8):
    """Gauss-Legendre nodes on [c - X, c + X]: uniform over the support, geometric outside."""
    g, w = gauss_legendre(nodes)
    radius = f.support_radius + 1.0
    inner = np.linspace(-radius, radius, int(np.ceil(2 * radius / (0.25 * f.scale))) + 1)
    outer = radius * 1.25 ** np.arange(1, int(np.ceil(np.log(reach_factor) / np.log(1.25))) + 1)
    edges = np.concatenate([-outer[::-1], inner, outer])
    a, b = edges[:-1, None], edges[1:, None]
    x = (0.5 * (b - a) * (g + 1) + a).ravel() + f.center
    return x, (0.5 * (b - a) * w).ravel(), f.center + edges[0], f.center + edges[-1]


def _lp_with_tail(vals, w, edge_vals, reach, decay, p):
    """(int |g|^p)^{1/p} with |g| ~ A |x - c|^{-decay} beyond the grid."""
    if p * decay <= 1.0:
        return np.inf, 1.0
    body = float(np.sum(w * np.abs(vals) ** p))
    amps = np.abs(edge_vals) * reach ** decay
    tail = float(np.sum(amps ** p)) * reach ** (1.0 - p * decay) / (p * decay - 1.0)
    total = body + tail
    return total ** (1.0 / p), tail / total


def riesz_norms(spec, f, p_values, reach_factor=1000.0):
    """L^p norms of ``L^{1/2} f`` and ``Gamma(f)^{1/2}`` on the real line.

    Both functions are evaluated by real-space quadrature on a graded grid;
    beyond ``X`` their power tails ``|x|^{-1-alpha/2}`` and
    ``|x|^{-(1+alpha)/2}`` are integrated with amplitudes read off at ``X``.
    """
    from .operators import carre_du_champ_quadrature, levy_integral
    _check_spec(spec)
    if not is_homogeneous(spec):
        raise ConfigError("Riesz sweeps need a homogeneous kernel", "kernel.radial")
    a = spec.alpha
    x, w, left, right = _norm_grid(f, reach_factor)
    reach = right - f.center
    pts = np.concatenate([x, [left, right]])
    cp, cm = levy_constants(spec)
    half = levy_integral(f, pts, 0.5 * a, 0.5 * (cp + cm), 0.5 * (cp - cm))
    gam = np.maximum(carre_du_champ_quadrature(spec, f, pts), 0.0)
    root = np.sqrt(gam)
    out = []
    for p in p_values:
        nh, th = _lp_with_tail(half[:-2], w, half[-2:], reach, 1.0 + 0.5 * a, p)
        ng, tg = _lp_with_tail(root[:-2], w, root[-2:], reach, 0.5 * (1.0 + a), p)
        out.append({"p": float(p), "half": nh, "gamma": ng, "tail_fraction": max(th, tg)})
    return out


def riesz_ratio(spec, f, p, reach_factor=1000.0):
    """||L^{1/2} f||_p / ||Gamma(f)^{1/2}||_p for one test function."""
    if not p > lp_threshold(spec.alpha):
        raise ValueError(f"p = {p} is at or below the integrability threshold "
                         f"{lp_threshold(spec.alpha):.4g} of Gamma(f)^(1/2)")
    rec = riesz_norms(spec, f, [p], reach_factor)[0]
    return rec["half"] / rec["gamma"]


def riesz_sweep(spec, functions=None, p_values=None, dilations=(0.5, 1.0, 2.0), reach_factor=1000.0):
    """Ratio report over test functions, dilates and exponents.

    Returns a list of records ``{function, dilation, p, ratio, norms}`` and
    the observed ``[min, max]`` of the ratios.
    """
    functions = test_registry() if functions is None else functions
    p_values = default_p_values(spec.alpha) if p_values is None else p_values
    records = []
    for f in functions:
        for lam in dilations:
            g = f.dilate(lam)
            for rec in riesz_norms(spec, g, p_values, reach_factor):
                records.append({"function": f.to_dict(), "dilation": float(lam), "p": rec["p"],
                                "ratio": rec["half"] / rec["gamma"],
                                "norms": {"half": rec["half"], "gamma": rec["gamma"]},
                                "tail_fraction": rec["tail_fraction"]})
    ratios = np.array([r["ratio"] for r in records])
    return records, (float(ratios.min()), float(ratios.max()))

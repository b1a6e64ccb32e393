"""scikit-learn style wrappers around the density routes and the validation suite."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils.validation import check_is_fitted

from .kernels import KernelSpec


def _spec(kernel):
    if isinstance(kernel, KernelSpec):
        return kernel
    if kernel is None:
        return KernelSpec(alpha=1.0, kappa0=2.0)
    return KernelSpec.from_dict(kernel)


class HeatKernelDensity(DensityMixin, BaseEstimator):
    """Transition density ``y -> p_{t,s}(0, y)`` as a fitted density model.

    ``fit`` computes the density on a lattice; ``score_samples`` returns the
    log density at increments by linear interpolation (d = 1) or multilinear
    interpolation (d > 1). ``sample`` draws increments from the jump sampler
    (x-independent kernels).

    Parameters
    ----------
    kernel : dict or KernelSpec, optional
        Kernel configuration (default kappa = 1, alpha = 1).
    t, s : float
        Time pair.
    dim : int
    extent, spacing : float, optional
        Lattice window; default sized by the density's length scale.
    method : {"auto", "fourier", "parametrix"}
    n_time, n_cheb : int
        Parametrix settings.
    """

    def __init__(self, kernel=None, t=0.0, s=1.0, dim=1, extent=None, spacing=None, method="auto",
                 n_time=32, n_cheb=16):
        self.kernel = kernel
        self.t = t
        self.s = s
        self.dim = dim
        self.extent = extent
        self.spacing = spacing
        self.method = method
        self.n_time = n_time
        self.n_cheb = n_cheb

    def fit(self, X=None, y=None):
        """Build the density field; ``X`` is ignored (the model has no free parameters)."""
        from .fields import SpaceTimeWindow
        from .validation import natural_window
        spec = _spec(self.kernel)
        method = self.method
        if method == "auto":
            method = "fourier" if spec.x_independent else "parametrix"
        if self.extent is None:
            window = natural_window(spec, self.t, self.s, self.dim)
        else:
            window = SpaceTimeWindow(self.t, self.s, self.dim, self.extent, self.spacing)
        if method == "fourier":
            from .fourier import density_grid
            fld = density_grid(spec, window)
            values, axis = fld.values, fld.axis
        elif method == "parametrix":
            from ._numerics import Lattice
            from .parametrix import Parametrix
            per = spec.x_period if not spec.x_independent else 2.0 * window.extent
            cells = 2 * max(1, int(np.ceil(per / window.spacing / 2)))
            periods = max(1, int(np.ceil(2.0 * window.extent / per)))
            lattice = Lattice(self.dim, cells * periods, per / cells)
            solver = Parametrix(spec, self.t, self.s, lattice, n_time=self.n_time, n_cheb=self.n_cheb)
            origin = int(np.argmin(np.linalg.norm(solver.points, axis=-1)))
            values = solver.assemble(solver.solve())[:, 0, origin].real.reshape(lattice.shape)
            axis = lattice.axis
            self.period_ = lattice.period
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.spec_ = spec
        self.method_ = method
        self.axis_ = np.asarray(axis)
        self.values_ = np.asarray(values)
        return self

    def density(self, X):
        """p_{t,s}(0, y) at points ``X`` of shape (n, dim) (zero outside the lattice)."""
        from scipy.interpolate import RegularGridInterpolator
        check_is_fitted(self, "values_")
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        if getattr(self, "period_", None) is not None:
            lo = self.axis_[0]
            X = np.mod(X - lo, self.period_) + lo
        interp = RegularGridInterpolator((self.axis_,) * self.dim, self.values_, bounds_error=False,
                                         fill_value=0.0)
        return np.clip(interp(X), 0.0, None)

    def score_samples(self, X):
        """Log density at ``X``."""
        with np.errstate(divide="ignore"):
            return np.log(self.density(X))

    def sample(self, n_samples=1, random_state=0):
        """Increments over [t, s] from the jump sampler (x-independent kernels)."""
        from .jumps import JumpSampler, sample_increment
        check_is_fitted(self, "values_")
        seed = int(random_state) if random_state is not None else 0
        return sample_increment(JumpSampler(self.spec_, self.dim, seed=seed), self.t, self.s, n_samples)


class KernelValidator(BaseEstimator):
    """Runs the validation report for a kernel; ``score`` is the fraction of passing checks.

    Parameters
    ----------
    kernel : dict or KernelSpec
    t, s : float
    dim : int
    method : {"auto", "fourier", "parametrix"}
    seed : int
    tolerance_scale : float
    thetas : sequence of float, optional
    """

    def __init__(self, kernel=None, t=0.0, s=1.0, dim=1, method="auto", seed=0, tolerance_scale=1.0,
                 thetas=None):
        self.kernel = kernel
        self.t = t
        self.s = s
        self.dim = dim
        self.method = method
        self.seed = seed
        self.tolerance_scale = tolerance_scale
        self.thetas = thetas

    def fit(self, X=None, y=None):
        from .validation import run_validation
        spec = _spec(self.kernel)
        method = None if self.method == "auto" else self.method
        self.report_ = run_validation(spec, self.t, self.s, self.dim, method=method, seed=self.seed,
                                      tolerance_scale=self.tolerance_scale, thetas=self.thetas)
        self.passed_ = self.report_.passed
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "report_")
        return float(np.mean([c.passed for c in self.report_.checks]))

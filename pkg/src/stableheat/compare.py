"""Cross-provenance comparison of density fields (fourier, parametrix, empirical)."""

from __future__ import annotations

import numpy as np

from .validation import Check

MIN_EXPECTED = 100
MIN_BINS = 100


def bin_mass_fourier(spec, window, sub=8):
    """Exact-quadrature bin masses of the fourier density on bins centred at the window points.

    The density is evaluated on a ``sub``-fold refined lattice and integrated
    over each bin by composite Simpson (``sub`` even).
    """
    from .fields import SpaceTimeWindow
    from .fourier import density_grid
    if window.dim != 1:
        raise ValueError("bin masses are computed in d = 1")
    if sub % 2:
        raise ValueError("sub must be even")
    h = window.spacing
    fine = SpaceTimeWindow(window.t, window.s, 1, window.extent + 0.5 * h, h / sub)
    p = density_grid(spec, fine).values
    w = np.ones(sub + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= (h / sub) / 3.0
    n = window.axis.size
    idx = np.arange(n)[:, None] * sub + np.arange(sub + 1)[None, :]
    return p[idx] @ w


def bin_mass_periodic(values, lattice):
    """Bin masses of a torus field on bins centred at its lattice points (trigonometric interpolant)."""
    xi = lattice.frequencies()
    mult = np.prod(np.sinc(xi * lattice.h / (2.0 * np.pi)), axis=-1)
    avg = lattice.inverse(mult * lattice.forward(values)).real
    return avg * lattice.cell_volume


def required_paths(bin_mass, min_expected=MIN_EXPECTED, min_bins=MIN_BINS):
    """Smallest 1-2-5 path count giving ``min_bins`` bins with ``min_expected`` expected counts."""
    m = np.sort(np.asarray(bin_mass).ravel())[::-1]
    if m.size < min_bins or m[min_bins - 1] <= 0:
        return None
    need = min_expected / m[min_bins - 1]
    exp = int(np.floor(np.log10(need)))
    for mant in (1, 2, 5, 10):
        if mant * 10.0 ** exp >= need:
            return int(mant * 10 ** exp)
    return int(10 ** (exp + 1))


def power_check(bin_mass, n_paths, min_expected=MIN_EXPECTED, min_bins=MIN_BINS):
    """None if ``n_paths`` is enough for a bin-wise test, else a failing Check recommending a count."""
    expected = n_paths * np.asarray(bin_mass)
    qualifying = int(np.sum(expected >= min_expected))
    if qualifying >= min_bins and n_paths >= 10_000:
        return None
    rec = max(required_paths(bin_mass, min_expected, min_bins) or 0, 10_000)
    msg = (f"statistically underpowered: {n_paths} paths give {qualifying} bins with >= {min_expected} "
           f"expected counts (need {min_bins}); use at least {rec} paths")
    return Check("compare", "coverage", 0.0, 0.99, False, None,
                 {"underpowered": True, "n_paths": n_paths, "qualifying_bins": qualifying,
                  "recommended_paths": rec, "message": msg})


def compare_empirical(bin_mass, emp, sigmas=3.0, coverage=0.99, min_expected=MIN_EXPECTED):
    """Bin-wise agreement of model bin masses with an empirical histogram.

    Passes iff at least ``coverage`` of the bins with ``min_expected``
    expected counts lie within ``sigmas`` binomial standard errors.
    """
    n = emp.n_paths
    m = np.asarray(bin_mass).ravel()
    counts = np.asarray(emp.counts).ravel()
    expected = n * m
    keep = expected >= min_expected
    se = np.sqrt(np.clip(m * (1.0 - m), 0.0, None) / n)
    z = np.where(keep, (counts / n - m) / np.where(keep, se, 1.0), 0.0)
    within = np.abs(z[keep]) <= sigmas
    frac = float(within.mean()) if keep.any() else 0.0
    worst = int(np.argmax(np.abs(z)))
    ok = bool(keep.sum() >= MIN_BINS and frac >= coverage)
    return Check("compare", "coverage", frac, coverage, ok, [float(np.ravel(emp.axis)[worst % emp.axis.size])],
                 {"bins": int(keep.sum()), "within": int(within.sum()), "max_abs_z": float(np.abs(z).max()),
                  "n_paths": n, "sigmas": sigmas}), z


def compare_fields(a, b, tol):
    """Sup difference of two fields on one lattice, relative to ``sup |b|``."""
    va, vb = np.asarray(a.values), np.asarray(b.values)
    if va.shape != vb.shape:
        raise ValueError("fields live on different lattices")
    diff = np.abs(va - vb) / np.max(np.abs(vb))
    idx = np.unravel_index(np.argmax(diff), diff.shape)
    return Check("compare", "residual", float(diff[idx]), tol, bool(diff[idx] <= tol),
                 b.points()[idx].tolist(), {"a": a.provenance, "b": b.provenance})

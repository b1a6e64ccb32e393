"""Command line entry point: config ingestion, run orchestration, artifact emission."""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fields import SpaceTimeWindow, config_hash, write_csv, write_json
from .kernels import ConfigError, KernelSpec

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_VERDICT = 0, 1, 2, 3
METHODS = ("fourier", "parametrix", "simulate", "all")

SCHEMA = """\
configuration (JSON object):
  kernel      required  {"family": "constant" | "time_modulated" | "holder",
                          "alpha": (0, 2), "kappa0": > 1, "beta": (0, 1],
                          "params": {a, time_amp, time_freq, odd, radial, nu,
                                     x_amp, x_freq} (per family)}
  window      required  {"t": >= 0, "s": > t, "dim": 1 | 2 | 3,
                          "extent": half-width, "spacing": lattice step}
                        extent and spacing may be omitted: the window is then
                        sized by the density's own length scale
  method      optional  "fourier" | "parametrix" | "simulate" | "all"
                        (default: fourier for x-independent kernels,
                        parametrix otherwise)
  seed        optional  integer (overridden by --seed)
  quadrature  optional  {"n_time", "n_cheb", "scales", "cells", "lattice_n",
                          "paths", "eps_cut", "n_steps"}
  drift       perturb   {"family": "zero" | "constant" | "smooth" |
                          "time_modulated", "params": {vector, amp, freq,
                          time_freq}}
  riesz       riesz     {"functions": [{"family", "amp", "center", "width",
                          "freq", "shift"}], "p": [..], "dilations": [..]}
  compare     compare   {"methods": [a, b], "paths": int}
  validate    validate  {"thetas": [..]}

outputs (in --out): CSV tables plus JSON sidecars carrying "config_hash".
exit status: 0 all verdicts pass, 1 configuration error, 2 numerical
convergence failure, 3 validation verdict failure.
"""


class VerdictFailure(RuntimeError):
    """A check ran to completion and failed."""


@dataclass
class RunConfig:
    """Parsed configuration of one run."""

    spec: KernelSpec
    t: float
    s: float
    dim: int
    extent: float = None
    spacing: float = None
    method: str = None
    seed: int = 0
    quadrature: dict = field(default_factory=dict)
    drift: dict = None
    riesz: dict = None
    compare: dict = None
    validate: dict = None
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object", "")
        known = {"kernel", "window", "method", "seed", "quadrature", "drift", "riesz", "compare", "validate"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown field {sorted(extra)[0]!r}", sorted(extra)[0])
        if "kernel" not in data:
            raise ConfigError("missing field", "kernel")
        spec = KernelSpec.from_dict(data["kernel"])
        win = data.get("window")
        if not isinstance(win, dict):
            raise ConfigError("missing or malformed field", "window")
        if "s" not in win:
            raise ConfigError("missing field", "window.s")
        try:
            t, s, dim = float(win.get("t", 0.0)), float(win["s"]), int(win.get("dim", 1))
        except (TypeError, ValueError):
            raise ConfigError("window entries must be numbers", "window") from None
        extent, spacing = win.get("extent"), win.get("spacing")
        if (extent is None) != (spacing is None):
            raise ConfigError("give both extent and spacing or neither", "window.spacing")
        if extent is not None:
            SpaceTimeWindow(t, s, dim, float(extent), float(spacing)).validate(spec.alpha)
        else:
            SpaceTimeWindow(t, s, dim, 1.0, 1.0)
        method = data.get("method")
        if method is not None and method not in METHODS:
            raise ConfigError(f"unknown method {method!r}", "method")
        if method == "fourier" and not spec.x_independent:
            raise ConfigError("x-dependent kernels need the parametrix method", "method")
        seed = data.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed must be a nonnegative integer", "seed")
        quad = data.get("quadrature", {})
        if not isinstance(quad, dict):
            raise ConfigError("quadrature must be an object", "quadrature")
        allowed = {"n_time", "n_cheb", "scales", "cells", "lattice_n", "paths", "eps_cut", "n_steps"}
        bad = set(quad) - allowed
        if bad:
            raise ConfigError(f"unknown quadrature setting {sorted(bad)[0]!r}", f"quadrature.{sorted(bad)[0]}")
        return cls(spec=spec, t=t, s=s, dim=dim, extent=None if extent is None else float(extent),
                   spacing=None if spacing is None else float(spacing), method=method, seed=seed,
                   quadrature=dict(quad), drift=data.get("drift"), riesz=data.get("riesz"),
                   compare=data.get("compare"), validate=data.get("validate"), raw=data)

    def window(self, kind="natural"):
        from .validation import bound_window, natural_window
        if self.extent is not None:
            return SpaceTimeWindow(self.t, self.s, self.dim, self.extent, self.spacing)
        if kind == "bound":
            return bound_window(self.spec, self.t, self.s, self.dim)
        return natural_window(self.spec, self.t, self.s, self.dim)

    @property
    def default_method(self):
        return self.method or ("fourier" if self.spec.x_independent else "parametrix")

    def solver_kw(self):
        return {k: self.quadrature[k] for k in ("n_time", "n_cheb") if k in self.quadrature}


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read configuration: {err.strerror}", "--config") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON ({err.msg} at line {err.lineno})", "--config") from None
    return data


# ---------------------------------------------------------------------------
def _torus_for_window(cfg, window):
    """Torus covering the window: period a multiple of the modulation period, spacing near the window's."""
    from ._numerics import Lattice
    spec = cfg.spec
    if "lattice_n" in cfg.quadrature:
        n = int(cfg.quadrature["lattice_n"])
        if spec.x_independent:
            return Lattice(window.dim, n, 2.0 * window.extent / n)
        per = spec.x_period * max(1, int(np.ceil(2.0 * window.extent / spec.x_period)))
        return Lattice(window.dim, n, per / n)
    if spec.x_independent:
        n = 2 * window.half_count
        return Lattice(window.dim, n, window.spacing)
    per = spec.x_period
    cells = 2 * max(1, int(np.ceil(per / window.spacing / 2)))
    periods = max(1, int(np.ceil(2.0 * window.extent / per)))
    return Lattice(window.dim, cells * periods, per / cells)


def build_density(cfg, method=None):
    """DensityField of the configured kernel by the fourier or parametrix route."""
    method = method or cfg.default_method
    window = cfg.window()
    if method == "fourier":
        from .fourier import density_grid
        return density_grid(cfg.spec, window)
    if method == "parametrix":
        from .validation import parametrix_field
        lattice = _torus_for_window(cfg, window)
        return parametrix_field(cfg.spec, cfg.t, cfg.s, lattice, **cfg.solver_kw())
    raise ConfigError(f"method {method!r} does not build a density", "method")


def build_empirical(cfg, n_paths=None, threads=1):
    from .jumps import JumpSampler, simulate_density, simulate_euler_density
    quad = cfg.quadrature
    n_paths = int(n_paths or quad.get("paths", 100_000))
    eps = float(quad.get("eps_cut", 0.1))
    window = cfg.window()
    if cfg.spec.x_independent:
        sampler = JumpSampler(cfg.spec, cfg.dim, eps, cfg.seed)
        return simulate_density(sampler, cfg.t, cfg.s, window, n_paths, threads)
    emp = simulate_euler_density(cfg.spec, cfg.t, cfg.s, np.zeros(cfg.dim), window.axis, n_paths,
                                 int(quad.get("n_steps", 256)), cfg.seed, cfg.dim, eps, threads=threads)
    emp.window = window
    return emp


# ---------------------------------------------------------------------------
def cmd_density(cfg, args, chash):
    fld = build_density(cfg, None if cfg.method in (None, "all", "simulate") else cfg.method)
    out = Path(args.out) / "density"
    fld.write(out, config_hash=chash)
    return [f"density ({fld.provenance}) written to {out}.csv"]


def cmd_simulate(cfg, args, chash):
    emp = build_empirical(cfg, threads=args.threads)
    emp.meta["config_hash"] = chash
    out = Path(args.out) / "empirical"
    emp.write(out)
    _add_hash(out.with_suffix(".json"), chash)
    return [f"empirical density ({emp.n_paths} paths) written to {out}.csv"]


def cmd_validate(cfg, args, chash):
    from .validation import run_validation
    thetas = (cfg.validate or {}).get("thetas")
    window = cfg.window("bound") if cfg.extent is not None else None
    method = cfg.method if cfg.method in ("fourier", "parametrix") else None
    quad = {k: v for k, v in cfg.quadrature.items() if k in ("n_time", "n_cheb", "scales", "cells", "lattice_n")}
    report = run_validation(cfg.spec, cfg.t, cfg.s, cfg.dim, window=window, method=method, seed=cfg.seed,
                            tolerance_scale=args.tolerance_scale, thetas=thetas, quadrature=quad)
    report.meta["config_hash"] = chash
    out = Path(args.out) / "report"
    report.write(out)
    lines = [f"{c.name}: {c.verdict} (value {c.value:.6g}, point {c.point})" for c in report.checks]
    if not report.passed:
        bad = report.failures()[0]
        raise VerdictFailure(f"check {bad.name} failed at point {bad.point} (value {bad.value:.6g}, "
                             f"tolerance {bad.tolerance:.3g}); report in {out}.json")
    return lines


def cmd_perturb(cfg, args, chash):
    from ._numerics import Lattice
    from .perturbation import DriftField, duhamel_solve, kato_modulus
    if cfg.drift is None:
        raise ConfigError("perturb needs a drift", "drift")
    b = DriftField.from_dict(cfg.drift)
    window = cfg.window()
    if b.x_period is not None:
        per = b.x_period
        cells = 2 * max(1, int(np.ceil(per / window.spacing / 2)))
        periods = max(1, int(np.ceil(2.0 * window.extent / per)))
        lattice = Lattice(cfg.dim, cells * periods, per / cells)
    else:
        lattice = Lattice(cfg.dim, 2 * window.half_count, window.spacing)
    res = duhamel_solve(cfg.spec, b, cfg.t, cfg.s, np.zeros(cfg.dim), lattice,
                        n_time=int(cfg.quadrature.get("n_time", 48)))
    fld = res.field
    out = Path(args.out) / "perturbed"
    fld.write(out, config_hash=chash)
    tol = 1e-3 * args.tolerance_scale
    mass_err = abs(fld.mass() - 1.0)
    lines = [f"perturbed density written to {out}.csv", f"mass {fld.mass():.9f} (tolerance {tol:.1e})"]
    rows = []
    if 1.0 < cfg.spec.alpha < 2.0 and b.family != "zero":
        ladder = (1e-1, 1e-2, 1e-3)
        kato = [kato_modulus(b, cfg.spec.alpha, e, cfg.dim) for e in ladder]
        rows = [[e, k] for e, k in zip(ladder, kato)]
        write_csv(Path(args.out) / "kato.csv", ["eps", "modulus"], rows)
        lines.append("kato modulus " + ", ".join(f"{k:.4g}" for k in kato))
        if not all(a > c for a, c in zip(kato, kato[1:])):
            raise VerdictFailure(f"Kato modulus not decreasing along {ladder}: {kato}")
    if mass_err > tol:
        raise VerdictFailure(f"check conservative failed: |mass - 1| = {mass_err:.3e} > {tol:.1e}")
    return lines


def cmd_riesz(cfg, args, chash):
    from .subordination import TestFunction, riesz_sweep
    opts = cfg.riesz or {}
    try:
        funcs = [TestFunction.from_dict(f) for f in opts["functions"]] if "functions" in opts else None
    except (TypeError, KeyError) as err:
        raise ConfigError(str(err), "riesz.functions") from None
    p_values = opts.get("p")
    dil = tuple(opts.get("dilations", (0.5, 1.0, 2.0)))
    records, (lo, hi) = riesz_sweep(cfg.spec, funcs, p_values, dil)
    out = Path(args.out)
    payload = [{"function": r["function"], "dilation": r["dilation"], "p": r["p"], "ratio": r["ratio"],
                "norms": r["norms"]} for r in records]
    write_json(out / "riesz.json", payload)
    write_json(out / "riesz_meta.json", {"config_hash": chash, "interval": [lo, hi],
                                         "C": max(hi, 1.0 / lo)})
    write_csv(out / "riesz.csv", ["p", "dilation", "ratio", "half", "gamma"],
              [[r["p"], r["dilation"], r["ratio"], r["norms"]["half"], r["norms"]["gamma"]] for r in records])
    C = max(hi, 1.0 / lo)
    bound = 20.0 * args.tolerance_scale
    lines = [f"ratios in [{lo:.4g}, {hi:.4g}], C = {C:.4g}"]
    if not C < bound:
        raise VerdictFailure(f"check riesz failed: comparability constant {C:.4g} >= {bound:g}")
    return lines


def cmd_compare(cfg, args, chash):
    from .compare import (bin_mass_fourier, bin_mass_periodic, compare_empirical, compare_fields,
                          power_check)
    opts = cfg.compare or {}
    methods = list(opts.get("methods", ["fourier", "simulate"]))
    if len(methods) != 2 or any(m not in ("fourier", "parametrix", "simulate") for m in methods):
        raise ConfigError("compare needs two of fourier, parametrix, simulate", "compare.methods")
    if "fourier" in methods and not cfg.spec.x_independent:
        raise ConfigError("the fourier route needs an x-independent kernel", "compare.methods")
    out = Path(args.out) / "compare"
    window = cfg.window()
    if "simulate" in methods:
        model = [m for m in methods if m != "simulate"][0]
        n_paths = int(opts.get("paths", cfg.quadrature.get("paths", 100_000)))
        if model == "fourier":
            if cfg.dim != 1:
                raise ConfigError("empirical comparison runs in one dimension", "window.dim")
            mass = bin_mass_fourier(cfg.spec, window)
            axis = window.axis
            period = None
        else:
            from ._numerics import Lattice
            from .parametrix import Parametrix, assemble_density
            lattice = _torus_for_window(cfg, window)
            solver = Parametrix(cfg.spec, cfg.t, cfg.s, lattice, **cfg.solver_kw())
            origin = int(np.argmin(np.linalg.norm(solver.points, axis=-1)))
            # the sample started at 0 estimates the row y -> p(0, y): every column is needed
            row = solver.assemble(solver.solve())[:, 0, origin].real.reshape(lattice.shape)
            mass = bin_mass_periodic(row, lattice)
            axis, period = lattice.axis, lattice.period
        weak = power_check(mass, n_paths)
        if weak is not None:
            write_json(out.with_suffix(".json"), {"config_hash": chash, "check": weak.to_dict()})
            raise VerdictFailure(weak.details["message"])
        if model == "fourier":
            emp = build_empirical(cfg, n_paths, args.threads)
        else:
            from .jumps import simulate_euler_density
            q = cfg.quadrature
            emp = simulate_euler_density(cfg.spec, cfg.t, cfg.s, np.zeros(cfg.dim), axis, n_paths,
                                         int(q.get("n_steps", 256)), cfg.seed, cfg.dim,
                                         float(q.get("eps_cut", 0.1)), period=period, threads=args.threads)
        check, z = compare_empirical(mass, emp)
        write_csv(out.with_suffix(".csv"), ["x1", "model_mass", "empirical_mass", "z"],
                  np.column_stack([axis, mass.ravel(), emp.counts.ravel() / emp.n_paths, z]))
    else:
        a = build_density(cfg, methods[0])
        b = build_density(cfg, methods[1])
        if "parametrix" in methods and "fourier" in methods:
            from .fourier import periodic_density
            from .parametrix import _field_from_rows
            tor = a if a.provenance == "parametrix" else b
            lattice = _torus_for_window(cfg, cfg.window())
            wrapped = periodic_density(cfg.spec, cfg.t, cfg.s, lattice)
            # the torus field is x -> p(x, 0) = p_X(-x): mirror the wrapped increment density
            for ax in range(cfg.dim):
                wrapped = np.roll(np.flip(wrapped, ax), 1, ax)
            other = _field_from_rows(lattice, wrapped, cfg.t, cfg.s, np.zeros(cfg.dim), provenance="fourier",
                                     meta={"period": lattice.period})
            a, b = (tor, other) if a is tor else (other, tor)
        check = compare_fields(a, b, 1e-3 * args.tolerance_scale)
        pts = b.points().reshape(-1, cfg.dim)
        write_csv(out.with_suffix(".csv"), [f"x{i + 1}" for i in range(cfg.dim)] + [methods[0], methods[1], "diff"],
                  np.column_stack([pts, a.values.ravel(), b.values.ravel(), (a.values - b.values).ravel()]))
    write_json(out.with_suffix(".json"), {"config_hash": chash, "methods": methods, "check": check.to_dict()})
    line = f"compare {methods[0]} vs {methods[1]}: {check.verdict} (value {check.value:.6g})"
    if not check.passed:
        raise VerdictFailure(f"check compare failed at point {check.point}: {check.details}")
    return [line]


def _add_hash(path, chash):
    data = json.loads(Path(path).read_text())
    data["config_hash"] = chash
    write_json(path, data)


COMMANDS = {"density": cmd_density, "simulate": cmd_simulate, "validate": cmd_validate,
            "perturb": cmd_perturb, "riesz": cmd_riesz, "compare": cmd_compare}

HELP = {
    "density": "build a density field (fourier or parametrix route) and write CSV + JSON",
    "simulate": "Monte Carlo empirical density (jump sampler or frozen Euler scheme)",
    "validate": "run the validation checks and write report.json / report.csv",
    "perturb": "drift-perturbed density by the Duhamel equation, with Kato modulus",
    "riesz": "Riesz ratio sweep ||L^{1/2} f||_p / ||Gamma(f)^{1/2}||_p",
    "compare": "cross-provenance difference table (fourier, parametrix, simulate)",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="stableheat", description="Heat kernels of stable-like operators.",
                                     epilog=SCHEMA, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, text in HELP.items():
        p = sub.add_parser(name, help=text, description=text, epilog=SCHEMA,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", required=True, help="path of the JSON configuration")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sampling")
        p.add_argument("--tolerance-scale", type=float, default=1.0,
                       help="multiplies every tolerance (default 1)")
    return parser


def _config_message(err):
    text = str(err)
    field = err.field or "<root>"
    return text if text.startswith(f"{field}:") else f"{field}: {text}"


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        data = load_config(args.config)
        if isinstance(data, dict) and args.seed is not None:
            data = dict(data, seed=args.seed)
        cfg = RunConfig.from_dict(data)
        if not args.tolerance_scale > 0:
            raise ConfigError("must be positive", "--tolerance-scale")
        if args.threads < 1:
            raise ConfigError("must be at least 1", "--threads")
    except ConfigError as err:
        print(f"config error: {_config_message(err)}", file=sys.stderr)
        return EXIT_CONFIG
    from .exponent import QuadratureError
    from .fourier import AliasingError
    from .parametrix import SeriesDivergenceError
    from .perturbation import ContractionError
    from .subordination import RouteDisagreement
    Path(args.out).mkdir(parents=True, exist_ok=True)
    chash = config_hash({"config": data, "tolerance_scale": args.tolerance_scale})
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            lines = COMMANDS[args.command](cfg, args, chash)
    except ConfigError as err:
        print(f"config error: {_config_message(err)}", file=sys.stderr)
        return EXIT_CONFIG
    except (SeriesDivergenceError, ContractionError, AliasingError, QuadratureError, RouteDisagreement) as err:
        print(f"convergence failure: {err}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except VerdictFailure as err:
        print(f"verdict failure: {err}", file=sys.stderr)
        return EXIT_VERDICT
    for line in lines:
        print(line)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

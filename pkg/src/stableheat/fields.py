"""Space-time windows, density fields and their CSV/JSON serialization."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kernels import ConfigError

PROVENANCES = ("fourier", "parametrix", "empirical")


@dataclass(frozen=True)
class SpaceTimeWindow:
    """Time pair and a symmetric uniform lattice ``{-m h, ..., m h}^d``.

    Parameters
    ----------
    t, s : float
        Start and end time, ``0 <= t < s``.
    dim : int
        Spatial dimension (1 to 3).
    extent : float
        Half-width L of the window.
    spacing : float
        Lattice spacing; ``extent / spacing`` must be an integer.
    check_extent : bool
        Enforce ``L >= 4 (s - t)^{1/alpha}`` when ``alpha`` is supplied to
        :meth:`validate`.
    """

    t: float
    s: float
    dim: int = 1
    extent: float = 10.0
    spacing: float = 0.05

    def __post_init__(self):
        if not self.t >= 0:
            raise ConfigError("t must be nonnegative", "window.t")
        if not self.s > self.t:
            raise ConfigError("need s > t", "window.s")
        if self.dim not in (1, 2, 3):
            raise ConfigError("dimension must be 1, 2 or 3", "window.dim")
        if not self.spacing > 0:
            raise ConfigError("spacing must be positive", "window.spacing")
        ratio = self.extent / self.spacing
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError("extent must be a positive multiple of spacing", "window.extent")

    @property
    def duration(self):
        return self.s - self.t

    @property
    def half_count(self):
        return int(round(self.extent / self.spacing))

    @property
    def axis(self):
        m = self.half_count
        return np.round(np.arange(-m, m + 1) * self.spacing, 12)

    @property
    def shape(self):
        return (2 * self.half_count + 1,) * self.dim

    @property
    def cell_volume(self):
        return self.spacing ** self.dim

    def points(self):
        grids = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack(grids, -1)

    def validate(self, alpha):
        need = 4.0 * self.duration ** (1.0 / alpha)
        if self.extent < need:
            raise ConfigError(f"extent {self.extent} below 4 (s-t)^(1/alpha) = {need:.3g}",
                              "window.extent")
        return self

    def refined(self, factor=2):
        return SpaceTimeWindow(self.t, self.s, self.dim, self.extent, self.spacing / factor)

    def to_dict(self):
        return {"t": self.t, "s": self.s, "dim": self.dim, "extent": self.extent,
                "spacing": self.spacing}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(t=float(data.get("t", 0.0)), s=float(data["s"]), dim=int(data.get("dim", 1)),
                       extent=float(data.get("extent", 10.0)), spacing=float(data.get("spacing", 0.05)))
        except KeyError as err:
            raise ConfigError("missing field", f"window.{err.args[0]}") from None
        except (TypeError, ValueError) as err:
            if isinstance(err, ConfigError):
                raise
            raise ConfigError(str(err), "window") from None


@dataclass
class DensityField:
    """Lattice values of a density together with provenance metadata.

    ``values`` has shape ``window.shape``; ``axis`` gives the coordinates of
    each lattice axis (it equals ``window.axis`` unless the field lives on a
    periodic lattice).
    """

    window: SpaceTimeWindow
    values: np.ndarray
    provenance: str
    base_point: np.ndarray = None
    tolerance: float = 0.0
    axis: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        self.values = np.asarray(self.values)
        if self.axis is None:
            self.axis = self.window.axis
        if self.base_point is None:
            self.base_point = np.zeros(self.window.dim)

    @property
    def dim(self):
        return self.window.dim

    @property
    def spacing(self):
        return float(self.axis[1] - self.axis[0])

    def points(self):
        grids = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack(grids, -1)

    def lattice_mass(self):
        vals = self.values
        if self.meta.get("period") is not None and self.dim == 1 and vals.size == self.axis.size:
            vals = vals[:-1]  # the periodic endpoint is stored twice
        return float(np.sum(vals) * self.spacing ** self.dim)

    def mass(self):
        """Lattice mass plus the recorded analytic tail beyond the lattice."""
        return self.lattice_mass() + float(self.meta.get("tail_mass", 0.0))

    def value_at(self, point):
        """Value at an on-lattice point."""
        point = np.atleast_1d(np.asarray(point, dtype=float))
        idx = np.rint((point - self.axis[0]) / self.spacing).astype(int)
        if np.any(np.abs(self.axis[0] + idx * self.spacing - point) > 1e-9 * max(1.0, self.spacing)):
            raise ValueError(f"{point} is not a lattice point")
        return float(self.values[tuple(idx)])

    # -- serialization ---------------------------------------------------
    def sidecar(self, config_hash=None):
        out = {"window": self.window.to_dict(), "provenance": self.provenance,
               "tolerance": float(self.tolerance), "base_point": np.asarray(self.base_point).tolist(),
               "meta": _jsonable(self.meta)}
        if config_hash is not None:
            out["config_hash"] = config_hash
        return out

    def write(self, path, config_hash=None, extra_columns=None):
        """Write ``<path>.csv`` and ``<path>.json``."""
        path = Path(path)
        pts = self.points().reshape(-1, self.dim)
        cols = {"value": self.values.reshape(-1)}
        if extra_columns:
            cols.update({k: np.asarray(v).reshape(-1) for k, v in extra_columns.items()})
        header = [f"x{i + 1}" for i in range(self.dim)] + list(cols)
        rows = np.column_stack([pts] + [cols[k] for k in cols])
        write_csv(path.with_suffix(".csv"), header, rows)
        write_json(path.with_suffix(".json"), self.sidecar(config_hash))
        return path.with_suffix(".csv"), path.with_suffix(".json")

    @classmethod
    def read(cls, path):
        path = Path(path)
        side = json.loads(path.with_suffix(".json").read_text())
        window = SpaceTimeWindow.from_dict(side["window"])
        data = np.loadtxt(path.with_suffix(".csv"), delimiter=",", skiprows=1, ndmin=2)
        d = window.dim
        n = int(round(data.shape[0] ** (1.0 / d)))
        axis = np.unique(np.round(data[:, 0], 12))
        values = data[:, d].reshape((n,) * d)
        return cls(window=window, values=values, provenance=side["provenance"],
                   base_point=np.asarray(side["base_point"]), tolerance=side["tolerance"],
                   axis=axis, meta=side.get("meta", {}))


def _fmt(v):
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_csv(path, header, rows):
    """CSV with a header row; numbers are written with full round-trip precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload):
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def config_hash(config):
    """SHA-256 of the canonical JSON form of a configuration mapping."""
    text = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()

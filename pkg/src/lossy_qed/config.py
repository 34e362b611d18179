"""Experiment configuration and measured-data ingestion.

Configs are flat ``key = value`` files with dotted keys::

    experiment = kk-check
    medium.kind = lorentz
    medium.omega_p = 0.5
    medium.gamma = 0.1
    grids.sample.count = 4000
    tol.kk = 1e-3
    output.dir = out

``#`` and ``;`` start comment lines.  Relative paths are resolved against
the config file's directory.  Grids: ``sample`` (susceptibility sampling
for kk-check), ``omega`` and ``k`` (kernel and equivalence points),
``lomega`` (longitudinal points) and ``t`` (time samples).
"""

from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError, PassivityError
from .hopfield import ReservoirDiscretization
from .medium import MediumModel, SusceptibilityGrid

EXPERIMENTS = ("kk-check", "fano", "kernels", "dynamics", "equivalence", "all")

KIND_ALIASES = {
    "vacuum": "vacuum",
    "constant": "constant-chi",
    "constant-chi": "constant-chi",
    "lorentz": "lorentz-analytic",
    "lorentz-analytic": "lorentz-analytic",
    "tabulated": "tabulated",
    "hopfield": "hopfield-microscopic",
    "hopfield-microscopic": "hopfield-microscopic",
}

DEFAULT_TOLERANCES = {
    "kk": 1e-3,
    "ratio": 0.02,
    "consistency": 0.04,
    "normalization": 1e-10,
    "reconstruction": 1e-8,
    "green": 1e-10,
    "identity": 1e-12,
    "initial": 1e-5,
    "residue": 1e-6,
    "transverse": 1e-4,
    "longitudinal": 1e-6,
    "commutator": 0.04,
}

MEDIUM_KEYS = {"kind", "chi", "omega_p", "gamma", "omega_0", "csv", "alpha_c", "v", "rho", "band_min", "band_max"}
GRID_NAMES = {"sample", "omega", "k", "t", "lomega"}
GRID_FIELDS = {"min", "max", "count", "spacing"}
RESERVOIR_KEYS = {"n", "min", "max"}
DYNAMICS_KEYS = {"omega_k", "omega", "decay_t"}


@dataclass(frozen=True)
class GridSpec:
    min: float
    max: float
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.count < 2:
            raise ConfigError("grid count must be at least 2")
        if not self.min < self.max:
            raise ConfigError("grid min must be below max")
        if self.spacing not in ("linear", "log"):
            raise ConfigError("grid spacing must be 'linear' or 'log'")
        if self.spacing == "log" and self.min <= 0:
            raise ConfigError("log grids need a positive min")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class ReservoirSpec:
    n: int = 1000
    min: float | None = None
    max: float | None = None

    def discretization(self, model: MediumModel) -> ReservoirDiscretization:
        lo = self.min if self.min is not None else model.band[0]
        hi = self.max if self.max is not None else model.band[1]
        if self.n < 2 or not 0 < lo < hi:
            raise ConfigError("reservoir needs n >= 2 and 0 < min < max")
        return ReservoirDiscretization.gauss_legendre(self.n, lo, hi)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    medium: MediumModel
    grids: dict = field(default_factory=dict)
    reservoir: ReservoirSpec = ReservoirSpec()
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_dir: Path = Path("lossy-qed-out")
    dynamics: dict = field(default_factory=dict)

    def grid(self, name: str, default: GridSpec) -> np.ndarray:
        return self.grids.get(name, default).values()

    def tol(self, name: str) -> float:
        return self.tolerances[name]

    def with_overrides(self, experiment: str | None = None, output_dir: str | None = None,
                       tolerances: dict | None = None) -> "ExperimentConfig":
        cfg = self
        if experiment is not None:
            cfg = replace(cfg, experiment=_experiment(experiment))
        if output_dir is not None:
            cfg = replace(cfg, output_dir=Path(output_dir))
        if tolerances:
            tol = dict(cfg.tolerances)
            tol.update({k: _tolerance(k, v) for k, v in tolerances.items()})
            cfg = replace(cfg, tolerances=tol)
        return cfg


def _experiment(name: str) -> str:
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r} (choose from {', '.join(EXPERIMENTS)})")
    return name


def _float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _tolerance(name: str, raw) -> float:
    if name not in DEFAULT_TOLERANCES:
        raise ConfigError(f"unknown tolerance {name!r} (known: {', '.join(sorted(DEFAULT_TOLERANCES))})")
    value = _float(f"tol.{name}", str(raw))
    if not value > 0:
        raise ConfigError(f"tol.{name} must be positive")
    return value


def parse_tol_override(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise ConfigError(f"--tol expects name=value, got {text!r}")
    name = name.strip()
    return name, _tolerance(name, value.strip())


def _read_pairs(path: Path) -> dict[str, str]:
    try:
        text = path.read_text()
    except OSError:
        raise
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#",), strict=True)
    try:
        parser.read_string("[config]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return dict(parser["config"])


def _build_medium(values: dict[str, str], base: Path) -> MediumModel:
    raw_kind = values.get("kind")
    if raw_kind is None:
        raise ConfigError("medium.kind is required")
    kind = KIND_ALIASES.get(raw_kind)
    if kind is None:
        raise ConfigError(f"unknown medium kind {raw_kind!r}")
    num = {k: _float(f"medium.{k}", v) for k, v in values.items() if k not in ("kind", "csv")}
    try:
        if kind == "vacuum":
            return MediumModel.vacuum()
        if kind == "constant-chi":
            return MediumModel.constant(num.get("chi", 0.0))
        if kind == "lorentz-analytic":
            return MediumModel.lorentz(num.get("omega_p", 0.5), num.get("gamma", 0.1), num.get("omega_0", 1.0))
        if kind == "hopfield-microscopic":
            band = (num.get("band_min", 1e-2), num.get("band_max", 20.0))
            return MediumModel.hopfield(num.get("alpha_c", 1.0), num.get("v", 0.02), num.get("rho", 1.0),
                                        num.get("omega_0", 1.0), band)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid medium parameters: {exc}") from None
    csv_path = values.get("csv")
    if not csv_path:
        raise ConfigError("medium.csv is required for tabulated media")
    path = Path(csv_path)
    if not path.is_absolute():
        path = base / path
    return MediumModel.tabulated(ingest_susceptibility_csv(path))


def load_config(path) -> ExperimentConfig:
    """Parse a config file into an :class:`ExperimentConfig`."""
    path = Path(path)
    pairs = _read_pairs(path)
    base = path.parent
    medium_vals, grids_raw, reservoir, tolerances, dyn = {}, {}, {}, dict(DEFAULT_TOLERANCES), {}
    experiment, out = "all", None
    for key, raw in pairs.items():
        parts = key.split(".")
        if key == "experiment":
            experiment = _experiment(raw)
        elif key == "output.dir":
            out = raw
        elif parts[0] == "medium" and len(parts) == 2 and parts[1] in MEDIUM_KEYS:
            medium_vals[parts[1]] = raw
        elif parts[0] == "grids" and len(parts) == 3 and parts[1] in GRID_NAMES and parts[2] in GRID_FIELDS:
            grids_raw.setdefault(parts[1], {})[parts[2]] = raw
        elif parts[0] == "reservoir" and len(parts) == 2 and parts[1] in RESERVOIR_KEYS:
            reservoir[parts[1]] = raw
        elif parts[0] == "tol" and len(parts) == 2:
            tolerances[parts[1]] = _tolerance(parts[1], raw)
        elif parts[0] == "dynamics" and len(parts) == 2 and parts[1] in DYNAMICS_KEYS:
            dyn[parts[1]] = _float(key, raw)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    grids = {}
    for name, spec in grids_raw.items():
        missing = {"min", "max", "count"} - set(spec)
        if missing:
            raise ConfigError(f"grids.{name} is missing {', '.join(sorted(missing))}")
        grids[name] = GridSpec(_float(f"grids.{name}.min", spec["min"]), _float(f"grids.{name}.max", spec["max"]),
                               _int(f"grids.{name}.count", spec["count"]), spec.get("spacing", "linear"))
    res = ReservoirSpec(
        _int("reservoir.n", reservoir["n"]) if "n" in reservoir else 1000,
        _float("reservoir.min", reservoir["min"]) if "min" in reservoir else None,
        _float("reservoir.max", reservoir["max"]) if "max" in reservoir else None,
    )
    output_dir = Path(out) if out else Path("lossy-qed-out")
    if not output_dir.is_absolute():
        output_dir = base / output_dir
    model = _build_medium(medium_vals, base)
    return ExperimentConfig(experiment, model, grids, res, tolerances, output_dir, dyn)


def ingest_susceptibility_csv(path) -> SusceptibilityGrid:
    """Read ``omega,im_chi`` (optionally ``re_chi``) samples into a validated grid.

    Row numbers in error messages count file lines from 1 (the header).
    When no ``re_chi`` column is present, Re chi is reconstructed from Im chi
    by Kramers-Kronig.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        lines = [(i, row) for i, row in enumerate(csv.reader(fh), start=1)
                 if row and not row[0].lstrip().startswith("#")]
    if not lines:
        raise FormatError(f"{path}: empty file")
    header = [h.strip() for h in lines[0][1]]
    if "omega" not in header or "im_chi" not in header or len(set(header)) != len(header):
        raise FormatError(f"{path}: header must contain omega and im_chi (got {','.join(header)})")
    unknown = set(header) - {"omega", "im_chi", "re_chi"}
    if unknown:
        raise FormatError(f"{path}: unknown columns {', '.join(sorted(unknown))}")
    col = {name: header.index(name) for name in header}
    rows = lines[1:]
    if not rows:
        raise FormatError(f"{path}: no data rows")
    omega, im, re = [], [], []
    for lineno, row in rows:
        if len(row) != len(header):
            raise FormatError(f"{path}: row {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = {name: float(row[i]) for name, i in col.items()}
        except ValueError:
            raise FormatError(f"{path}: row {lineno}: non-numeric field") from None
        if not all(np.isfinite(v) for v in vals.values()):
            raise FormatError(f"{path}: row {lineno}: non-finite value")
        if vals["omega"] <= 0:
            raise FormatError(f"{path}: row {lineno}: omega must be positive")
        if omega and vals["omega"] <= omega[-1]:
            raise FormatError(f"{path}: row {lineno}: omega not strictly increasing "
                              f"({vals['omega']:.15g} after {omega[-1]:.15g})")
        if vals["im_chi"] < 0:
            raise PassivityError(f"{path}: row {lineno}: Im chi = {vals['im_chi']:.15g} < 0")
        omega.append(vals["omega"])
        im.append(vals["im_chi"])
        if "re_chi" in vals:
            re.append(vals["re_chi"])
    if len(omega) < 2:
        # a single sample cannot define a grid
        raise FormatError(f"{path}: need at least two data rows")
    if re:
        return SusceptibilityGrid(np.array(omega), np.array(re) + 1j * np.array(im))
    return SusceptibilityGrid.from_imag(np.array(omega), np.array(im))

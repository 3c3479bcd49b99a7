"""Run configuration and file formats.

Configuration files are TOML with flat top-level keys and a single
``[params]`` table for the preset parameters::

    preset = "torus_coil"
    n = 256
    t_end = 0.2
    snapshot_every = 0.01

    [params]
    R = 2.0
    r = 0.5

Floats in CSV output use ``repr``, the shortest decimal that round-trips.
Undefined values are empty fields.
"""

from __future__ import annotations

import csv
import dataclasses
import inspect
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .flow import FlowConfig, FlowState
from .functionals import IDENTITIES, FunctionalSample
from .scenarios import PRESETS


@dataclass
class RunConfig:
    preset: str = "circle"
    params: dict = field(default_factory=dict)
    n: int = 256
    t_end: float = 0.45
    sigma_cfl: float = 0.2
    kappa_stop: float = 1e3
    dt_floor: float = 1e-12
    resample_every: int = 10
    snapshot_every: float = 0.01
    scheme: str = "spectral"
    out: str = "out"
    seed: int | None = None
    lambda_entropy: bool = False
    identities: list[str] | None = None  # None: every identity the preset supports
    plots: bool = True
    rho: float = 0.5
    sphere_tol: float = 1e-4
    inflection_margin: float = 1e-3
    # verify
    n0: int = 128
    t_span: float = 0.04
    delta0: float = 0.01
    levels: int = 3
    # sweep
    kappa0: list[float] = field(default_factory=lambda: [1.0])
    tau0: list[float] = field(default_factory=lambda: [1.0])
    dt: float = 1e-4
    sweep_t_end: float = 5.0
    workers: int = 1

    def flow_config(self) -> FlowConfig:
        try:
            return FlowConfig(t_end=self.t_end, sigma_cfl=self.sigma_cfl, kappa_stop=self.kappa_stop,
                              dt_floor=self.dt_floor, resample_every=self.resample_every,
                              snapshot_every=self.snapshot_every, scheme=self.scheme)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def preset_params(self) -> dict:
        params = dict(self.params)
        if self.seed is not None:
            if "seed" not in inspect.signature(PRESETS[self.preset]).parameters:
                raise ConfigError(f"preset {self.preset!r} takes no seed")
            params["seed"] = self.seed
        return params

    def validate(self) -> "RunConfig":
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        if self.scheme not in ("spectral", "fd4"):
            raise ConfigError(f"unknown derivative scheme {self.scheme!r}")
        if self.n < 16 or self.n % 2:
            raise ConfigError("n must be even and at least 16")
        if self.identities is not None:
            unknown = [i for i in self.identities if i not in IDENTITIES]
            if unknown:
                raise ConfigError(f"unknown identities {unknown}; choose from {list(IDENTITIES)}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.flow_config()
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name, value):
    default = RunConfig()
    current = getattr(default, name)
    if name in ("kappa0", "tau0"):
        values = value if isinstance(value, list) else [value]
        return [float(v) for v in values]
    if name == "identities":
        if value is None:
            return None
        items = value.split(",") if isinstance(value, str) else list(value)
        return [s.strip() for s in items if s.strip()]
    if name == "params":
        if not isinstance(value, dict):
            raise ConfigError("params must be a table")
        return dict(value)
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false")
        return value
    if isinstance(current, int) or name == "seed":
        if isinstance(value, bool) or not float(value).is_integer():
            raise ConfigError(f"{name} must be an integer")
        return int(value)
    if isinstance(current, float):
        return float(value)
    return value


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Read a TOML config and apply overrides (values of ``None`` are ignored)."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        kwargs = {k: _coerce(k, v) for k, v in data.items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(**kwargs).validate()


# -- CSV ---------------------------------------------------------------------

def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return repr(value)


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def write_series(path: Path, series: Sequence[FunctionalSample]) -> None:
    cols = FunctionalSample.columns()
    write_rows(path, cols, ([getattr(s, c) for c in cols] for s in series))


_INT_COLS = {"flat_point_count"}
_BOOL_COLS = {"twisted"}


def read_series(path: Path) -> list[FunctionalSample]:
    """Parse a series.csv file back into samples."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != FunctionalSample.columns():
            raise ValueError(f"unexpected header in {path}")
        for row in reader:
            kw = {}
            for k, v in row.items():
                if v == "":
                    kw[k] = None
                elif k in _BOOL_COLS:
                    kw[k] = v == "true"
                elif k in _INT_COLS:
                    kw[k] = int(v)
                else:
                    kw[k] = float(v)
            out.append(FunctionalSample(**kw))
    return out


def write_snapshot(path: Path, state: FlowState) -> None:
    fr = state.frenet
    rows = zip(state.curve.u(), *state.curve.points.T, fr.kappa,
               np.where(fr.tau_valid, fr.tau, np.nan), fr.tau_valid)
    write_rows(path, ["u", "x", "y", "z", "kappa", "tau", "tau_valid"], rows)


def write_jsonl(path: Path, records: Iterable[dict]) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(_jsonable(rec), allow_nan=False) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, allow_nan=False)
        fh.write("\n")

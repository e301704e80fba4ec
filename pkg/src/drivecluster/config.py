"""Run configuration: a flat TOML file of documented keys.

Example::

    data_dir = "logs"            # or: fleet_spec = "fleet.toml"
    signals = ["GAS", "BRK"]     # default: all eight
    features = [1, 2]            # default: 1..7
    min_hours = 10.0
    bins = 10
    trim_low = 2.0
    trim_high = 98.0
    k_min = 2
    k_max = 10
    trials = 40
    percentages = [100, 50, 20, 10, 5, 2, 1]
    subsample_methods = ["independent", "contiguous"]
    bin_mode = "local"           # or "global"
    kmeans_restarts = 10
    kmeans_tol = 1e-8
    seed = 0
    out_dir = "results"
    jobs = 1

Relative paths are resolved against the directory holding the config file.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import SpecValidationError
from .experiments import PERCENTAGES, TRIALS, ClusterOptions
from .features import FeatureKind
from .ingest import SignalKind

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class RunConfig:
    data_dir: Path | None = None
    fleet_spec: Path | None = None
    signals: tuple[SignalKind, ...] = tuple(SignalKind)
    features: tuple[FeatureKind, ...] = tuple(FeatureKind)
    min_hours: float = 10.0
    bins: int = 10
    trim_low: float = 2.0
    trim_high: float = 98.0
    k_min: int = 2
    k_max: int = 10
    trials: int = TRIALS
    percentages: tuple[float, ...] = tuple(float(p) for p in PERCENTAGES)
    subsample_methods: tuple[str, ...] = ("independent", "contiguous")
    bin_mode: str = "local"
    kmeans_restarts: int = 10
    kmeans_tol: float = 1e-8
    seed: int = 0
    out_dir: Path = field(default_factory=lambda: Path("results"))
    jobs: int = 1

    @property
    def ks(self) -> tuple[int, ...]:
        return tuple(range(self.k_min, self.k_max + 1))

    @property
    def cluster_options(self) -> ClusterOptions:
        return ClusterOptions(
            bins=self.bins,
            trim=(self.trim_low, self.trim_high),
            bin_mode=self.bin_mode,
            restarts=self.kmeans_restarts,
            tol=self.kmeans_tol,
        )

    def validate(self) -> "RunConfig":
        if (self.data_dir is None) == (self.fleet_spec is None):
            raise SpecValidationError("set exactly one of data_dir or fleet_spec")
        if not self.signals:
            raise SpecValidationError("signals must not be empty")
        if not self.features:
            raise SpecValidationError("features must not be empty")
        if self.min_hours < 0:
            raise SpecValidationError("min_hours must be >= 0")
        if self.bins < 1:
            raise SpecValidationError("bins must be >= 1")
        if not 0 <= self.trim_low < self.trim_high <= 100:
            raise SpecValidationError("need 0 <= trim_low < trim_high <= 100")
        if not 1 <= self.k_min <= self.k_max:
            raise SpecValidationError("need 1 <= k_min <= k_max")
        if self.trials < 1:
            raise SpecValidationError("trials must be >= 1")
        if not self.percentages or any(not 0 < p <= 100 for p in self.percentages):
            raise SpecValidationError("percentages must lie in (0, 100]")
        bad = set(self.subsample_methods) - {"independent", "contiguous"}
        if bad:
            raise SpecValidationError(f"unknown subsample methods {sorted(bad)}")
        if self.bin_mode not in ("local", "global"):
            raise SpecValidationError("bin_mode must be 'local' or 'global'")
        if self.kmeans_restarts < 1:
            raise SpecValidationError("kmeans_restarts must be >= 1")
        if not self.kmeans_tol > 0:
            raise SpecValidationError("kmeans_tol must be > 0")
        if not 0 <= self.seed < 2**63:
            raise SpecValidationError("seed must be a non-negative 63-bit integer")
        if self.jobs < 1:
            raise SpecValidationError("jobs must be >= 1")
        return self


_KEYS = {f.name for f in fields(RunConfig)}


def _as_list(value: Any, key: str) -> list:
    if isinstance(value, (list, tuple)):
        return list(value)
    if isinstance(value, str) and value.lower() == "all":
        return []
    if isinstance(value, (str, int, float)):
        return [value]
    raise SpecValidationError(f"{key}: expected a list")


def config_from_dict(data: Mapping[str, Any], base_dir: Path | None = None) -> RunConfig:
    unknown = set(data) - _KEYS
    if unknown:
        raise SpecValidationError(f"unknown config keys: {sorted(unknown)}")
    base_dir = base_dir or Path.cwd()
    kwargs: dict[str, Any] = {}
    try:
        for key, value in data.items():
            if isinstance(value, dict):
                raise SpecValidationError(f"{key}: nested tables are not allowed")
            if key in ("data_dir", "fleet_spec", "out_dir"):
                kwargs[key] = base_dir / Path(str(value))
            elif key == "signals":
                items = _as_list(value, key)
                kwargs[key] = tuple(SignalKind.parse(str(s)) for s in items) if items else tuple(SignalKind)
            elif key == "features":
                items = _as_list(value, key)
                kwargs[key] = tuple(FeatureKind.parse(f) for f in items) if items else tuple(FeatureKind)
            elif key == "percentages":
                kwargs[key] = tuple(float(p) for p in _as_list(value, key))
            elif key == "subsample_methods":
                kwargs[key] = tuple(str(m) for m in _as_list(value, key))
            elif key in ("bins", "k_min", "k_max", "trials", "kmeans_restarts", "seed", "jobs"):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise SpecValidationError(f"{key}: expected an integer, got {value!r}")
                kwargs[key] = value
            elif key == "bin_mode":
                kwargs[key] = str(value)
            else:
                kwargs[key] = float(value)
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, SpecValidationError):
            raise
        raise SpecValidationError(f"invalid config: {exc}") from None
    return RunConfig(**kwargs).validate()


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise SpecValidationError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise SpecValidationError(f"{path}: {exc}") from None
    return config_from_dict(data, path.parent)


def with_overrides(cfg: RunConfig, **overrides: Any) -> RunConfig:
    """Apply non-None CLI overrides (``seed``, ``out_dir``, ``jobs``)."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **changes).validate() if changes else cfg

"""Synthetic fleets with planted driver archetypes.

Each signal is an exactly-discretised Ornstein-Uhlenbeck process around an
archetype-specific level, plus Poisson-timed raised-cosine bumps ("peak
events"). Everything is drawn from generators keyed on
``(seed, archetype, driver, session)`` so output is a pure function of the spec.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Iterator, Mapping

import numpy as np
from scipy.signal import lfilter

from .errors import SpecValidationError
from .ingest import RESAMPLE_RATE, SampleSeries, Session, SignalKind, UserRecord, assemble_users, write_session_log

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class SignalParams:
    mean: float
    std: float
    theta: float = 0.5  # mean-reversion rate [1/s]
    peak_rate: float = 0.0  # events per minute
    peak_amplitude: float = 0.0
    peak_duration: float = 2.0  # seconds
    floor: float | None = None

    def validate(self, where: str) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.std)):
            raise SpecValidationError(f"{where}: mean/std must be finite")
        if self.std < 0:
            raise SpecValidationError(f"{where}: std must be >= 0")
        if self.theta <= 0:
            raise SpecValidationError(f"{where}: theta must be > 0")
        if self.peak_rate < 0:
            raise SpecValidationError(f"{where}: peak_rate must be >= 0")
        if self.peak_duration <= 0:
            raise SpecValidationError(f"{where}: peak_duration must be > 0")


# Rough physical scales; archetypes override what they care about.
DEFAULT_SIGNALS: dict[SignalKind, SignalParams] = {
    SignalKind.BRK: SignalParams(mean=2.0, std=3.0, theta=0.8, peak_rate=1.0, peak_amplitude=20.0, floor=0.0),
    SignalKind.GAS: SignalParams(mean=25.0, std=8.0, theta=0.5, peak_rate=1.0, peak_amplitude=30.0, floor=0.0),
    SignalKind.RPM: SignalParams(mean=1800.0, std=350.0, theta=0.2, peak_rate=0.5, peak_amplitude=900.0, floor=0.0),
    SignalKind.SPD: SignalParams(mean=45.0, std=15.0, theta=0.05, floor=0.0),
    SignalKind.SWA: SignalParams(mean=0.0, std=25.0, theta=0.4, peak_rate=1.5, peak_amplitude=90.0),
    SignalKind.SWM: SignalParams(mean=0.0, std=1.2, theta=0.8, peak_rate=1.5, peak_amplitude=3.0),
    SignalKind.FACC: SignalParams(mean=0.0, std=0.6, theta=0.6, peak_rate=1.0, peak_amplitude=2.0),
    SignalKind.LACC: SignalParams(mean=0.0, std=0.5, theta=0.6, peak_rate=1.5, peak_amplitude=1.5),
}


@dataclass(frozen=True)
class Archetype:
    name: str
    signals: Mapping[SignalKind, SignalParams]


@dataclass(frozen=True)
class FleetSpec:
    archetypes: tuple[Archetype, ...]
    drivers_per_archetype: int
    sessions_per_driver: int
    session_minutes: tuple[float, float]
    seed: int
    raw_rate: float = 20.0
    # per-driver level offset, in units of each signal's std
    driver_jitter: float = 0.0

    def validate(self) -> "FleetSpec":
        if len(self.archetypes) < 1:
            raise SpecValidationError("at least one archetype is required")
        names = [a.name for a in self.archetypes]
        if len(set(names)) != len(names):
            raise SpecValidationError(f"duplicate archetype names: {names}")
        for a in self.archetypes:
            if not a.name or "__" in a.name:
                raise SpecValidationError(f"archetype name {a.name!r} must be non-empty and free of '__'")
            missing = [s.name for s in SignalKind if s not in a.signals]
            if missing:
                raise SpecValidationError(f"archetype {a.name}: missing signals {missing}")
            for sig, p in a.signals.items():
                p.validate(f"archetype {a.name} signal {sig.name}")
        if self.drivers_per_archetype < 1:
            raise SpecValidationError("drivers_per_archetype must be >= 1")
        if self.sessions_per_driver < 1:
            raise SpecValidationError("sessions_per_driver must be >= 1")
        lo, hi = self.session_minutes
        if not (0 < lo <= hi):
            raise SpecValidationError("session_minutes must satisfy 0 < min <= max")
        if self.raw_rate <= 0:
            raise SpecValidationError("raw_rate must be > 0")
        if self.driver_jitter < 0:
            raise SpecValidationError("driver_jitter must be >= 0")
        if not (0 <= int(self.seed) < 2**64):
            raise SpecValidationError("seed must be a 64-bit unsigned integer")
        return self

    @property
    def n_drivers(self) -> int:
        return len(self.archetypes) * self.drivers_per_archetype


def make_archetype(name: str, **overrides: Mapping[str, float] | SignalParams) -> Archetype:
    """Archetype from the default signal table with per-signal overrides.

    ``make_archetype("eco", GAS={"mean": 20, "std": 3})``
    """
    signals = dict(DEFAULT_SIGNALS)
    for key, value in overrides.items():
        sig = SignalKind.parse(key)
        signals[sig] = value if isinstance(value, SignalParams) else replace(signals[sig], **value)
    return Archetype(name, signals)


def driver_id(archetype: Archetype, index: int) -> str:
    return f"{archetype.name}-{index:03d}"


def archetype_labels(spec: FleetSpec) -> dict[str, int]:
    """Planted ground truth: user id -> archetype index."""
    return {
        driver_id(a, d): g for g, a in enumerate(spec.archetypes) for d in range(spec.drivers_per_archetype)
    }


def _ou_path(rng: np.random.Generator, p: SignalParams, level: float, n: int, dt: float) -> np.ndarray:
    a = math.exp(-p.theta * dt)
    innov = rng.standard_normal(n) * (p.std * math.sqrt(1.0 - a * a))
    dev0 = rng.standard_normal() * p.std
    dev, _ = lfilter([1.0], [1.0, -a], innov, zi=[a * dev0])
    return level + dev


def _add_peaks(rng: np.random.Generator, x: np.ndarray, p: SignalParams, dt: float) -> None:
    if p.peak_rate <= 0 or p.peak_amplitude == 0:
        return
    duration = x.size * dt
    count = rng.poisson(p.peak_rate * duration / 60.0)
    width = max(int(round(p.peak_duration / dt)), 2)
    bump = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(width) / (width - 1)))
    starts = rng.integers(0, x.size, size=count)
    scales = rng.uniform(0.5, 1.5, size=count) * p.peak_amplitude
    for s, amp in zip(starts.tolist(), scales.tolist()):
        stop = min(s + width, x.size)
        x[s:stop] += amp * bump[: stop - s]


def _driver_levels(spec: FleetSpec, g: int, d: int) -> dict[SignalKind, float]:
    arch = spec.archetypes[g]
    if spec.driver_jitter == 0:
        return {sig: arch.signals[sig].mean for sig in SignalKind}
    rng = np.random.default_rng(np.random.SeedSequence(int(spec.seed), spawn_key=(g, d)))
    z = rng.standard_normal(len(SignalKind))
    return {
        sig: arch.signals[sig].mean + spec.driver_jitter * arch.signals[sig].std * float(zi)
        for sig, zi in zip(SignalKind, z)
    }


def _generate_session(spec: FleetSpec, g: int, d: int, s: int, levels: Mapping[SignalKind, float]) -> Session:
    arch = spec.archetypes[g]
    rng = np.random.default_rng(np.random.SeedSequence(int(spec.seed), spawn_key=(g, d, s + 1)))
    lo, hi = spec.session_minutes
    seconds = rng.uniform(lo, hi) * 60.0
    dt = 1.0 / spec.raw_rate
    n = int(math.floor(seconds * spec.raw_rate)) + 1
    t = np.arange(n) * dt
    series = {}
    for sig in SignalKind:
        p = arch.signals[sig]
        x = _ou_path(rng, p, levels[sig], n, dt)
        _add_peaks(rng, x, p, dt)
        if p.floor is not None:
            np.maximum(x, p.floor, out=x)
        series[sig] = SampleSeries(t, x)
    return Session.from_series(f"s{s:03d}", driver_id(arch, d), series)


def generate_sessions(spec: FleetSpec) -> Iterator[Session]:
    """Raw sessions sampled at ``spec.raw_rate``, in (archetype, driver, session) order."""
    spec.validate()
    for g in range(len(spec.archetypes)):
        for d in range(spec.drivers_per_archetype):
            levels = _driver_levels(spec, g, d)
            for s in range(spec.sessions_per_driver):
                yield _generate_session(spec, g, d, s, levels)


def generate_synthetic_fleet(spec: FleetSpec, rate: float = RESAMPLE_RATE) -> list[UserRecord]:
    """Generate the fleet and resample every session onto the uniform grid."""
    return assemble_users(generate_sessions(spec), rate)


def write_fleet_logs(spec: FleetSpec, out_dir: str | Path) -> dict:
    """Write one ``<user>__<session>.csv`` per session plus ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = archetype_labels(spec)
    hours: dict[str, float] = {}
    counts: dict[str, int] = {}
    for session in generate_sessions(spec):
        write_session_log(session, out / f"{session.user_id}__{session.session_id}.csv")
        hours[session.user_id] = hours.get(session.user_id, 0.0) + session.duration / 3600.0
        counts[session.user_id] = counts.get(session.user_id, 0) + 1
    manifest = {
        "seed": int(spec.seed),
        "archetypes": [a.name for a in spec.archetypes],
        "users": [
            {
                "user_id": uid,
                "archetype": spec.archetypes[labels[uid]].name,
                "sessions": counts[uid],
                "hours": hours[uid],
            }
            for uid in sorted(hours)
        ],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest


# -- spec files ---------------------------------------------------------------

_TOP_KEYS = {
    "seed",
    "drivers_per_archetype",
    "sessions_per_driver",
    "session_minutes",
    "raw_rate",
    "driver_jitter",
    "defaults",
    "archetypes",
}
_PARAM_KEYS = {f.name for f in fields(SignalParams)}


def _signal_params(base: SignalParams, table: Any, where: str) -> SignalParams:
    if not isinstance(table, dict):
        raise SpecValidationError(f"{where}: expected a table of signal parameters")
    unknown = set(table) - _PARAM_KEYS
    if unknown:
        raise SpecValidationError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return replace(base, **{k: float(v) for k, v in table.items()})
    except (TypeError, ValueError) as exc:
        raise SpecValidationError(f"{where}: {exc}") from None


def _signal_tables(table: dict, where: str) -> dict[SignalKind, dict]:
    out = {}
    for key, value in table.items():
        try:
            sig = SignalKind.parse(key)
        except ValueError as exc:
            raise SpecValidationError(f"{where}: {exc}") from None
        out[sig] = value
    return out


def fleet_spec_from_dict(data: Mapping[str, Any]) -> FleetSpec:
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise SpecValidationError(f"unknown fleet spec keys: {sorted(unknown)}")
    for key in ("seed", "drivers_per_archetype", "sessions_per_driver", "session_minutes", "archetypes"):
        if key not in data:
            raise SpecValidationError(f"fleet spec is missing {key!r}")

    base = dict(DEFAULT_SIGNALS)
    for sig, tbl in _signal_tables(data.get("defaults", {}), "defaults").items():
        base[sig] = _signal_params(base[sig], tbl, f"defaults.{sig.name}")

    archetypes = []
    raw_archetypes = data["archetypes"]
    if not isinstance(raw_archetypes, list):
        raise SpecValidationError("'archetypes' must be an array of tables")
    for i, entry in enumerate(raw_archetypes):
        entry = dict(entry)
        name = str(entry.pop("name", f"a{i}"))
        signals = dict(base)
        for sig, tbl in _signal_tables(entry, f"archetype {name}").items():
            signals[sig] = _signal_params(signals[sig], tbl, f"archetype {name}.{sig.name}")
        archetypes.append(Archetype(name, signals))

    minutes = data["session_minutes"]
    if isinstance(minutes, (int, float)):
        minutes = (minutes, minutes)
    try:
        spec = FleetSpec(
            archetypes=tuple(archetypes),
            drivers_per_archetype=int(data["drivers_per_archetype"]),
            sessions_per_driver=int(data["sessions_per_driver"]),
            session_minutes=(float(minutes[0]), float(minutes[1])),
            seed=int(data["seed"]),
            raw_rate=float(data.get("raw_rate", 20.0)),
            driver_jitter=float(data.get("driver_jitter", 0.0)),
        )
    except (TypeError, ValueError, IndexError) as exc:
        raise SpecValidationError(f"invalid fleet spec: {exc}") from None
    return spec.validate()


def load_fleet_spec(path: str | Path) -> FleetSpec:
    try:
        with Path(path).open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise SpecValidationError(f"fleet spec {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise SpecValidationError(f"{path}: {exc}") from None
    return fleet_spec_from_dict(data)

"""Session log parsing, 4 Hz resampling and per-user assembly."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InsufficientDataError, OrderingError, ParseError, SchemaError

logger = logging.getLogger(__name__)

RESAMPLE_RATE = 4.0
# Grid/timestamp coincidence tolerance, in seconds.
_TIME_TOL = 1e-9


class SignalKind(str, Enum):
    BRK = "BRK"
    GAS = "GAS"
    RPM = "RPM"
    SPD = "SPD"
    SWA = "SWA"
    SWM = "SWM"
    FACC = "FACC"
    LACC = "LACC"

    @property
    def column(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: str) -> "SignalKind":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown signal {name!r}; expected one of {[s.name for s in cls]}") from None


LOG_COLUMNS: tuple[str, ...] = ("t",) + tuple(s.column for s in SignalKind)


@dataclass(frozen=True)
class SampleSeries:
    """Raw (t, x) samples of one signal in one session."""

    t: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if t.shape != x.shape or t.ndim != 1:
            raise ValueError("t and x must be 1-D arrays of equal length")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise OrderingError("timestamps must be strictly increasing")
        t.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)

    def __len__(self) -> int:
        return int(self.t.size)


@dataclass(frozen=True)
class UniformSeries:
    rate: float
    start: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("values must be 1-D")
        if not np.all(np.isfinite(v)):
            raise ValueError("uniform series values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def times(self) -> np.ndarray:
        return self.start + np.arange(self.values.size) / self.rate


@dataclass(frozen=True)
class Session:
    session_id: str
    user_id: str
    series: Mapping[SignalKind, SampleSeries]
    duration: float

    @classmethod
    def from_series(cls, session_id: str, user_id: str, series: Mapping[SignalKind, SampleSeries]) -> "Session":
        missing = [s.column for s in SignalKind if s not in series]
        if missing:
            raise SchemaError(f"session {session_id} lacks signals {missing}")
        duration = max(float(s.t[-1]) for s in series.values() if len(s))
        return cls(session_id, user_id, dict(series), duration)


@dataclass(frozen=True)
class ResampledSession:
    session_id: str
    user_id: str
    series: Mapping[SignalKind, UniformSeries]
    duration: float


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    sessions: tuple[ResampledSession, ...] = field(default_factory=tuple)

    @property
    def total_hours(self) -> float:
        return sum(s.duration for s in self.sessions) / 3600.0


def _parse_float(text: str, *, path: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"column {column}: cannot parse {text!r} as a number", path=path, line=line) from None
    if not math.isfinite(value):
        raise ParseError(f"column {column}: non-finite value {text!r}", path=path, line=line)
    return value


def split_log_name(path: str | Path) -> tuple[str, str]:
    """Return ``(user_id, session_id)`` from a ``<user>__<session>.csv`` filename."""
    stem = Path(path).stem
    if "__" not in stem:
        raise ParseError("filename must look like <user_id>__<session_id>.csv", path=str(path))
    user_id, session_id = stem.split("__", 1)
    if not user_id or not session_id:
        raise ParseError("empty user or session id in filename", path=str(path))
    return user_id, session_id


def parse_session_log(path: str | Path, user_id: str | None = None, session_id: str | None = None) -> Session:
    """Parse one session CSV.

    Empty cells mean "no sample for that signal at this row", so signals may be
    sampled at different rates within one file. Timestamps are shifted so the
    first row sits at t = 0.
    """
    path = Path(path)
    if user_id is None or session_id is None:
        u, s = split_log_name(path)
        user_id = user_id or u
        session_id = session_id or s
    spath = str(path)

    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError("empty file, no header", path=spath, line=1) from None
        missing = [c for c in LOG_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"missing columns: {', '.join(missing)}", path=spath, line=1)
        col_index = {c: header.index(c) for c in LOG_COLUMNS}

        ts: dict[SignalKind, list[float]] = {s: [] for s in SignalKind}
        xs: dict[SignalKind, list[float]] = {s: [] for s in SignalKind}
        prev_t = -math.inf
        t0 = None
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", path=spath, line=line_no)
            t_text = row[col_index["t"]].strip()
            if not t_text:
                raise ParseError("missing timestamp", path=spath, line=line_no)
            t = _parse_float(t_text, path=spath, line=line_no, column="t")
            if t <= prev_t:
                raise OrderingError(f"timestamp {t} does not follow {prev_t}", path=spath, line=line_no)
            prev_t = t
            if t0 is None:
                t0 = t
            for sig in SignalKind:
                cell = row[col_index[sig.column]].strip()
                if cell:
                    ts[sig].append(t - t0)
                    xs[sig].append(_parse_float(cell, path=spath, line=line_no, column=sig.column))

    empty = [s.column for s in SignalKind if not ts[s]]
    if empty:
        raise SchemaError(f"no samples for signals: {', '.join(empty)}", path=spath)
    series = {s: SampleSeries(np.array(ts[s]), np.array(xs[s])) for s in SignalKind}
    return Session.from_series(session_id, user_id, series)


def write_session_log(session: Session, path: str | Path) -> None:
    """Write a session in the CSV log format, one row per distinct timestamp."""
    times = np.unique(np.concatenate([s.t for s in session.series.values()]))
    lookup = {}
    for sig, s in session.series.items():
        lookup[sig] = dict(zip(np.searchsorted(times, s.t).tolist(), s.x.tolist()))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(LOG_COLUMNS)
        for i, t in enumerate(times.tolist()):
            row = [f"{t:.3f}"]
            for sig in SignalKind:
                v = lookup[sig].get(i)
                row.append("" if v is None else f"{v:.6f}")
            out.writerow(row)


def resample_linear(series: SampleSeries, rate: float = RESAMPLE_RATE) -> UniformSeries:
    """Linearly interpolate onto a grid ``t0, t0 + 1/rate, ...`` not exceeding the last sample."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    if len(series) < 2:
        raise InsufficientDataError(f"resampling needs at least 2 samples, got {len(series)}")
    t, x = series.t, series.x
    start = float(t[0])
    n = int(math.floor((t[-1] - start) * rate + _TIME_TOL)) + 1
    grid = start + np.arange(n) / rate
    values = np.interp(grid, t, x)
    # return raw samples verbatim where a grid point coincides with one
    idx = np.clip(np.searchsorted(t, grid), 0, t.size - 1)
    for cand in (idx, np.maximum(idx - 1, 0)):
        hit = np.abs(t[cand] - grid) <= _TIME_TOL
        values[hit] = x[cand[hit]]
    return UniformSeries(rate=float(rate), start=start, values=values)


def resample_session(session: Session, rate: float = RESAMPLE_RATE) -> ResampledSession:
    series = {sig: resample_linear(s, rate) for sig, s in session.series.items()}
    return ResampledSession(session.session_id, session.user_id, series, session.duration)


def assemble_users(sessions: Iterable[Session], rate: float = RESAMPLE_RATE) -> list[UserRecord]:
    """Group sessions by user (sorted by user id, sessions by session id) and resample them."""
    by_user: dict[str, list[Session]] = {}
    for s in sessions:
        by_user.setdefault(s.user_id, []).append(s)
    users = []
    for uid in sorted(by_user):
        ordered = sorted(by_user[uid], key=lambda s: s.session_id)
        users.append(UserRecord(uid, tuple(resample_session(s, rate) for s in ordered)))
    return users


def load_log_dir(directory: str | Path, rate: float = RESAMPLE_RATE) -> list[UserRecord]:
    directory = Path(directory)
    paths = sorted(directory.glob("*.csv"))
    logger.info("parsing %d session logs from %s", len(paths), directory)
    return assemble_users((parse_session_log(p) for p in paths), rate)


def filter_min_duration(users: Sequence[UserRecord], min_hours: float) -> list[UserRecord]:
    """Keep users who drove at least ``min_hours`` in total (inclusive)."""
    if min_hours < 0:
        raise ValueError("min_hours must be >= 0")
    return [u for u in users if u.total_hours >= min_hours]

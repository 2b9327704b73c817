"""RSRP traces: synthetic generation and the drive-test CSV format.

CSV layout::

    t,pcell,scell1,...,scellN,event
    0.0,-80.5,-95.0,-101.25,session_start
    1.0,-81.0,-94.5,-100.0,none

``t`` is in seconds with a fixed step, RSRP columns are dBm, ``event`` is one
of :data:`EVENT_TAGS`. UTF-8, LF line endings.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import BinaryIO, Sequence

import numpy as np

RSRP_MIN = -140.0
RSRP_MAX = -44.0
EVENT_TAGS = ("none", "session_start", "stall", "ho_attempt", "ho_success")

# time stamps are stored at nanosecond resolution so CSV round-trips are exact
_TIME_DECIMALS = 9


class TraceParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(eq=False)
class RsrpTrace:
    cells: tuple[str, ...]
    rsrp: np.ndarray  # shape (slots, cells), dBm
    events: tuple[str | None, ...] = ()
    slot_duration: float = 1.0
    start_time: float = 0.0
    clamped: int = 0

    def __post_init__(self) -> None:
        self.cells = tuple(self.cells)
        r = np.asarray(self.rsrp, dtype=float)
        if r.ndim != 2 or r.shape[1] != len(self.cells):
            raise ValueError(f"rsrp must have shape (slots, {len(self.cells)}), got {r.shape}")
        if len(set(self.cells)) != len(self.cells) or not self.cells:
            raise ValueError("cell ids must be unique and non-empty")
        if not np.all(np.isfinite(r)):
            raise ValueError("rsrp values must be finite")
        out = (r < RSRP_MIN) | (r > RSRP_MAX)
        if out.any():
            self.clamped += int(out.sum())
            r = np.clip(r, RSRP_MIN, RSRP_MAX)
        self.rsrp = r
        if not self.events:
            self.events = (None,) * r.shape[0]
        self.events = tuple(None if e in (None, "none") else e for e in self.events)
        if len(self.events) != r.shape[0]:
            raise ValueError("events must have one entry per slot")
        bad = {e for e in self.events if e is not None and e not in EVENT_TAGS}
        if bad:
            raise ValueError(f"unknown event tags: {sorted(bad)}")
        if not self.slot_duration > 0:
            raise ValueError("slot_duration must be positive")
        self.slot_duration = round(float(self.slot_duration), _TIME_DECIMALS)
        self.start_time = round(float(self.start_time), _TIME_DECIMALS)

    def __len__(self) -> int:
        return self.rsrp.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RsrpTrace):
            return NotImplemented
        return (
            self.cells == other.cells
            and self.events == other.events
            and self.slot_duration == other.slot_duration
            and self.start_time == other.start_time
            and np.array_equal(self.rsrp, other.rsrp)
        )

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.rsrp[:, self.cells.index(name)]
        except ValueError:
            raise KeyError(f"unknown column {name!r}; have {list(self.cells)}") from None

    def times(self) -> np.ndarray:
        return np.round(self.start_time + np.arange(len(self)) * self.slot_duration, _TIME_DECIMALS)


def default_cells(n: int) -> tuple[str, ...]:
    return ("pcell",) + tuple(f"scell{i}" for i in range(1, n))


@dataclass(frozen=True)
class MobilitySpec:
    """UE moving along a straight route past collinear base stations.

    The defaults drive a UE at 25 m/s towards a tight cluster of three
    cells (primary in the middle) and park it 40 m short of the nearest
    one. While approaching, the margins between cells are within a few dB
    and shadowing keeps flipping the best cell; once parked, the near cell
    dominates and the serving cell settles.
    """

    bs_positions: tuple[float, ...] = (1200.0, 1270.0, 1130.0)
    ue_speed: float = 25.0
    route_length: float = 1090.0
    route_start: float = 0.0
    tx_power_at_ref: float = -60.0
    ref_distance: float = 50.0
    pathloss_exponent: float = 3.5
    shadowing_sigma: float = 4.0
    shadowing_correlation: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "bs_positions", tuple(float(b) for b in self.bs_positions))
        if not self.bs_positions:
            raise ValueError("need at least one base station")
        if not self.ue_speed > 0:
            raise ValueError("ue_speed must be positive")
        if self.route_length < 0:
            raise ValueError("route_length must be non-negative")
        if not self.ref_distance > 0:
            raise ValueError("ref_distance must be positive")
        if not self.pathloss_exponent > 0:
            raise ValueError("pathloss_exponent must be positive")
        if self.shadowing_sigma < 0:
            raise ValueError("shadowing_sigma must be non-negative")
        if not 0 <= self.shadowing_correlation < 1:
            raise ValueError("shadowing_correlation must lie in [0, 1)")


def ue_positions(spec: MobilitySpec, horizon: int, slot_duration: float = 1.0) -> np.ndarray:
    travelled = np.minimum(spec.ue_speed * slot_duration * np.arange(horizon), spec.route_length)
    return spec.route_start + travelled


def generate_trace(spec: MobilitySpec, horizon: int, slot_duration: float = 1.0) -> RsrpTrace:
    """Log-distance path loss plus AR(1) log-normal shadowing, one series per cell."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng([spec.seed, 0])
    x = ue_positions(spec, horizon, slot_duration)
    bs = np.asarray(spec.bs_positions)
    d = np.maximum(np.abs(x[:, None] - bs[None, :]), spec.ref_distance)
    mean = spec.tx_power_at_ref - 10.0 * spec.pathloss_exponent * np.log10(d / spec.ref_distance)

    rho = spec.shadowing_correlation
    noise = rng.standard_normal((horizon, bs.size))
    shadow = np.empty_like(noise)
    shadow[0] = spec.shadowing_sigma * noise[0]
    innov = spec.shadowing_sigma * math.sqrt(1.0 - rho * rho)
    for t in range(1, horizon):
        shadow[t] = rho * shadow[t - 1] + innov * noise[t]

    events: list[str | None] = [None] * horizon
    events[0] = "session_start"
    return RsrpTrace(default_cells(bs.size), mean + shadow, tuple(events), slot_duration)


def _format_float(v: float) -> str:
    return repr(float(v))


def save_trace_csv(trace: RsrpTrace) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *trace.cells, "event"])
    for t, row, ev in zip(trace.times(), trace.rsrp, trace.events):
        w.writerow([_format_float(t), *(_format_float(v) for v in row), ev or "none"])
    return buf.getvalue().encode("utf-8")


def _parse_float(text: str, what: str, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise TraceParseError(f"non-numeric {what} {text!r}", line) from None
    if not math.isfinite(v):
        raise TraceParseError(f"non-finite {what} {text!r}", line)
    return v


def load_trace_csv(source: bytes | str | BinaryIO) -> RsrpTrace:
    if isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    elif isinstance(source, str):
        raw = source.encode("utf-8")
    else:
        raw = source.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise TraceParseError(f"not UTF-8: {exc}") from None

    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if not header or header[0].strip() != "t" or header[-1].strip() != "event" or len(header) < 3:
        raise TraceParseError("missing header 't,pcell,...,event'", 1)
    cells = tuple(h.strip() for h in header[1:-1])
    if len(set(cells)) != len(cells) or any(not c for c in cells):
        raise TraceParseError("duplicate or empty cell column names", 1)

    times: list[float] = []
    values: list[list[float]] = []
    events: list[str | None] = []
    for row in rows:
        line = rows.line_num
        if not row:
            continue
        if len(row) != len(header):
            raise TraceParseError(f"expected {len(header)} fields, got {len(row)}", line)
        t = _parse_float(row[0], "time", line)
        if times:
            if t <= times[-1]:
                raise TraceParseError("time stamps must increase", line)
            if len(times) >= 2:
                step = times[1] - times[0]
                if abs((t - times[-1]) - step) > 1e-6 * max(1.0, step):
                    raise TraceParseError("time step is not fixed", line)
        times.append(t)
        values.append([_parse_float(v, "RSRP", line) for v in row[1:-1]])
        ev = row[-1].strip()
        if ev not in EVENT_TAGS:
            raise TraceParseError(f"unknown event tag {ev!r}", line)
        events.append(None if ev == "none" else ev)

    if not values:
        raise TraceParseError("no data rows")
    slot = times[1] - times[0] if len(times) > 1 else 1.0
    return RsrpTrace(cells, np.array(values), tuple(events), slot, times[0])


def read_trace(path) -> RsrpTrace:
    with open(path, "rb") as fh:
        return load_trace_csv(fh)


def write_trace(trace: RsrpTrace, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_trace_csv(trace))

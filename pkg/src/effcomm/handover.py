"""Handover decision logic (A3 and A2-A4 style) over per-slot measurements.

Both algorithms are available as incremental deciders, fed one measurement
vector per slot, so the same logic drives batch analysis of a trace and the
receiver inside the simulation loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .infotheory import BinningSpec, SymbolSeries, discretize
from .scenario import RsrpTrace

Algorithm = Literal["A3_RSRP", "A2_A4"]


@dataclass(frozen=True)
class HandoverParams:
    algorithm: Algorithm = "A3_RSRP"
    hysteresis: float = 3.0
    a2_threshold: float = -110.0
    a4_threshold: float = -100.0
    time_to_trigger: int = 1
    initial_serving: int = 0

    def __post_init__(self) -> None:
        if self.algorithm not in ("A3_RSRP", "A2_A4"):
            raise ValueError(f"unknown handover algorithm {self.algorithm!r}")
        if self.hysteresis < 0:
            raise ValueError("hysteresis must be >= 0")
        if self.time_to_trigger < 1:
            raise ValueError("time_to_trigger must be >= 1")
        if self.initial_serving < 0:
            raise ValueError("initial_serving must be a cell index")


@dataclass(frozen=True)
class ActionSeries:
    """Per-slot handover targets (``None`` means stay)."""

    targets: tuple[int | None, ...]
    initial_serving: int = 0

    def __len__(self) -> int:
        return len(self.targets)

    def serving(self) -> np.ndarray:
        """Serving cell at the end of each slot."""
        out = np.empty(len(self.targets), dtype=np.int64)
        s = self.initial_serving
        for t, target in enumerate(self.targets):
            if target is not None:
                s = target
            out[t] = s
        return out

    def serving_before(self) -> np.ndarray:
        """Serving cell at the start of each slot, before any handover in it."""
        after = self.serving()
        if after.size == 0:
            return after
        return np.concatenate([[self.initial_serving], after[:-1]])

    def handover_slots(self) -> list[int]:
        return [t for t, target in enumerate(self.targets) if target is not None]

    def to_symbols(self) -> SymbolSeries:
        return to_symbols(self)


class A3Decider:
    """Hand over to the strongest neighbour that beat serving + hysteresis for TTT slots."""

    def __init__(self, n_cells: int, params: HandoverParams):
        self.params = params
        self.serving = params.initial_serving
        self.counters = np.zeros(n_cells, dtype=np.int64)

    def update(self, meas: np.ndarray) -> int | None:
        p = self.params
        better = meas > meas[self.serving] + p.hysteresis
        better[self.serving] = False
        self.counters = np.where(better, self.counters + 1, 0)
        ready = np.flatnonzero(self.counters >= p.time_to_trigger)
        if ready.size == 0:
            return None
        # argmax returns the first maximum, so ties go to the lower cell index
        target = int(ready[np.argmax(meas[ready])])
        self.serving = target
        self.counters[:] = 0
        return target


class A2A4Decider:
    """Arm on serving < A2 threshold for TTT slots; hand over to the first
    neighbour that has been above the A4 threshold for TTT slots."""

    def __init__(self, n_cells: int, params: HandoverParams):
        self.params = params
        self.serving = params.initial_serving
        self.armed_for = 0
        self.counters = np.zeros(n_cells, dtype=np.int64)

    @property
    def armed(self) -> bool:
        return self.armed_for >= self.params.time_to_trigger

    def update(self, meas: np.ndarray) -> int | None:
        p = self.params
        self.armed_for = self.armed_for + 1 if meas[self.serving] < p.a2_threshold else 0
        above = meas > p.a4_threshold
        above[self.serving] = False
        self.counters = np.where(above, self.counters + 1, 0)
        if not self.armed:
            return None
        ready = np.flatnonzero(self.counters >= p.time_to_trigger)
        if ready.size == 0:
            return None
        target = int(ready[0])
        self.serving = target
        self.armed_for = 0
        self.counters[:] = 0
        return target


def make_decider(n_cells: int, params: HandoverParams) -> A3Decider | A2A4Decider:
    if not params.initial_serving < n_cells:
        raise ValueError("initial_serving out of range for this trace")
    if params.algorithm == "A3_RSRP":
        return A3Decider(n_cells, params)
    return A2A4Decider(n_cells, params)


def _run(measurements: np.ndarray, params: HandoverParams) -> ActionSeries:
    m = np.asarray(measurements, dtype=float)
    if m.ndim != 2 or m.shape[0] == 0:
        raise ValueError("need a non-empty (slots, cells) measurement matrix")
    decider = make_decider(m.shape[1], params)
    return ActionSeries(tuple(decider.update(row) for row in m), params.initial_serving)


def decide_a3(trace: RsrpTrace, p: HandoverParams = HandoverParams()) -> ActionSeries:
    return _run(trace.rsrp, _with_algorithm(p, "A3_RSRP"))


def decide_a2a4(trace: RsrpTrace, p: HandoverParams = HandoverParams(),
                measurements: np.ndarray | None = None) -> ActionSeries:
    """A2-A4 on the trace's RSRP columns, or on ``measurements`` (same shape) if given."""
    m = trace.rsrp if measurements is None else np.asarray(measurements, dtype=float)
    if m.shape != trace.rsrp.shape:
        raise ValueError("measurement matrix must match the trace shape")
    return _run(m, _with_algorithm(p, "A2_A4"))


def decide(trace: RsrpTrace, p: HandoverParams = HandoverParams()) -> ActionSeries:
    return _run(trace.rsrp, p)


def _with_algorithm(p: HandoverParams, algorithm: Algorithm) -> HandoverParams:
    if p.algorithm == algorithm:
        return p
    return HandoverParams(algorithm, p.hysteresis, p.a2_threshold, p.a4_threshold,
                          p.time_to_trigger, p.initial_serving)


def to_symbols(a: ActionSeries) -> SymbolSeries:
    return SymbolSeries(np.array([t is not None for t in a.targets], dtype=np.int64), 2)


def actions_from_events(trace: RsrpTrace) -> SymbolSeries:
    """Binary handover series read from ``ho_success`` event tags."""
    return SymbolSeries(np.array([e == "ho_success" for e in trace.events], dtype=np.int64), 2)


def serving_margin(measurements: np.ndarray, serving_before: np.ndarray) -> np.ndarray:
    """Best neighbour minus serving cell, per slot, using the cell served at slot start."""
    m = np.asarray(measurements, dtype=float)
    if m.shape[1] < 2:
        raise ValueError("margin needs at least two cells")
    rows = np.arange(m.shape[0])
    serving_val = m[rows, serving_before]
    others = m.copy()
    others[rows, serving_before] = -np.inf
    return others.max(axis=1) - serving_val


def margin_binning(hysteresis: float = 3.0) -> BinningSpec:
    """Four bins of width ``hysteresis`` with edges offset by 0.5 dB.

    On 1 dB quantised margins the top bin is exactly "neighbour exceeds
    serving by more than the hysteresis".
    """
    w = hysteresis if hysteresis > 0 else 1.0
    return BinningSpec(0.5 - 2 * w, 0.5 + 2 * w, 4)


def margin_symbols(measurements: np.ndarray, actions: ActionSeries,
                   hysteresis: float = 3.0, spec: BinningSpec | None = None) -> SymbolSeries:
    margin = serving_margin(measurements, actions.serving_before())
    return discretize(margin, spec or margin_binning(hysteresis))

"""Receiver viability: negative entropy of the belief over the handover instant.

A dropped call is absorbing and pinned to ``drop_penalty``. The belief model
is deliberately minimal: the receiver starts with a degenerate belief, each
slot without fresh information widens the support by one candidate instant
(up to uniform over all candidates), and ``I`` bits of information shrink the
uniform belief's entropy linearly from ``log2(candidates)`` to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .infotheory import ProbDist, shannon_entropy


@dataclass(frozen=True)
class ScenarioSpec:
    horizon: int = 5
    deadline: int = 3
    candidate_instants: int = 4
    drop_penalty: float = -100.0

    def __post_init__(self) -> None:
        if not 1 <= self.deadline < self.horizon:
            raise ValueError("need 1 <= deadline < horizon")
        if self.candidate_instants < 2:
            raise ValueError("need at least 2 candidate instants")
        if not self.drop_penalty < -math.log2(self.candidate_instants):
            raise ValueError("drop_penalty must be below the no-information viability")

    @property
    def max_entropy(self) -> float:
        return math.log2(self.candidate_instants)


@dataclass(frozen=True, eq=False)
class Belief:
    dist: ProbDist

    @classmethod
    def widened(cls, support: int, candidates: int) -> "Belief":
        """Uniform belief over ``min(support, candidates)`` instants."""
        s = max(1, min(int(support), candidates))
        p = np.zeros(candidates)
        p[:s] = 1.0 / s
        return cls(ProbDist(p))


@dataclass(frozen=True, eq=False)
class ViabilityCurve:
    values: np.ndarray
    drop_slot: int | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if np.any(v > 0):
            raise ValueError("viability is never positive")
        object.__setattr__(self, "values", v)


def viability_from_belief(b: Belief, dropped: bool, spec: ScenarioSpec = ScenarioSpec()) -> float:
    if dropped:
        return float(spec.drop_penalty)
    # -0.0 would print oddly in reports
    return -shannon_entropy(b.dist) + 0.0


def viability_vs_information(i_bits: float, spec: ScenarioSpec = ScenarioSpec()) -> float:
    """Upper bound on viability given ``i_bits`` of information about the handover instant."""
    if i_bits < 0:
        raise ValueError("information must be non-negative")
    return -max(0.0, spec.max_entropy - i_bits) + 0.0


def staleness_viability(stale_slots: int, dropped: bool, spec: ScenarioSpec) -> float:
    """Viability after ``stale_slots`` consecutive slots without fresh information."""
    return viability_from_belief(
        Belief.widened(stale_slots + 1, spec.candidate_instants), dropped, spec
    )


def fictitious_scenario(spec: ScenarioSpec = ScenarioSpec()) -> tuple[ViabilityCurve, ViabilityCurve]:
    """Viability over time with full measurement data and with none.

    With full information the handover happens at ``spec.deadline`` and the
    belief stays degenerate. Without information the belief widens by one
    candidate per slot and the call drops one slot past the deadline.
    """
    full = [viability_from_belief(Belief.widened(1, spec.candidate_instants), False, spec)
            for _ in range(spec.horizon)]
    drop_slot = spec.deadline + 1
    none = [staleness_viability(t, t >= drop_slot, spec) for t in range(spec.horizon)]
    return ViabilityCurve(np.array(full)), ViabilityCurve(np.array(none), drop_slot)


def information_curve(spec: ScenarioSpec = ScenarioSpec(), max_bits: float | None = None,
                      points: int = 41) -> tuple[np.ndarray, np.ndarray]:
    if max_bits is None:
        max_bits = 2 * spec.max_entropy
    bits = np.linspace(0.0, max_bits, points)
    return bits, np.array([viability_vs_information(b, spec) for b in bits])

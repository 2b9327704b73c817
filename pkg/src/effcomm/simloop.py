"""Slot-by-slot sender/channel/receiver loop.

Each slot the sender picks a payload from its surrogate copy of the
receiver's knowledge, the channel loses or delays it, the receiver decodes
whatever arrives, runs handover logic on its decoded view and its viability
is scored. A full-information reference receiver, fed the true quantized
measurements, defines when a handover was actually due: if the receiver's
serving cell disagrees with the reference for more than ``drop_grace``
consecutive slots the call drops.

Messages carry a sequence number and, for deltas, the sequence number of
their base. That header is bookkeeping only and is not counted in the bit
totals.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Any, Literal

import numpy as np

from .encoding import (
    CodecSpec,
    DecodeError,
    decode_delta_row,
    decode_raw_row,
    encode_delta,
    encode_delta_row,
    encode_raw,
    encode_raw_row,
    te_bound_bits,
)
from .handover import ActionSeries, HandoverParams, make_decider, margin_symbols, to_symbols
from .infotheory import TEConfig, transfer_entropy, windowed_transfer_entropy
from .scenario import RsrpTrace
from .viability import staleness_viability, ScenarioSpec

PolicyKind = Literal["always_raw", "always_delta", "event_triggered"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelSpec:
    loss_probability: float = 0.0
    delay: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.loss_probability <= 1.0:
            raise ConfigError("loss_probability must lie in [0, 1]")
        if self.delay < 0:
            raise ConfigError("delay must be >= 0 slots")


@dataclass(frozen=True)
class SenderPolicy:
    kind: PolicyKind = "always_raw"
    trigger_threshold: float = 3.0

    def __post_init__(self) -> None:
        if self.kind not in ("always_raw", "always_delta", "event_triggered"):
            raise ConfigError(f"unknown sender policy {self.kind!r}")
        if self.kind == "event_triggered" and not self.trigger_threshold > 0:
            raise ConfigError("event_triggered needs a positive trigger_threshold")


@dataclass(frozen=True)
class ViabilityParams:
    candidate_instants: int = 4
    drop_penalty: float = -100.0
    drop_grace: int = 1

    def __post_init__(self) -> None:
        # reuse the scenario checks on candidates and penalty
        ScenarioSpec(horizon=2, deadline=1, candidate_instants=self.candidate_instants,
                     drop_penalty=self.drop_penalty)
        if self.drop_grace < 0:
            raise ConfigError("drop_grace must be >= 0")

    def scenario(self) -> ScenarioSpec:
        return ScenarioSpec(2, 1, self.candidate_instants, self.drop_penalty)


@dataclass
class KnowledgeState:
    codec: CodecSpec
    last_decoded: np.ndarray | None = None
    updates_seen: int = 0
    last_seq: int = -1
    info_slot: int = 0  # slot the freshest known measurement refers to

    def absorb(self, q_row: np.ndarray, seq: int, slot: int) -> None:
        self.last_decoded = np.array(q_row, dtype=np.int64)
        self.last_seq = seq
        self.info_slot = slot
        self.updates_seen += 1

    def same_as(self, other: "KnowledgeState") -> bool:
        if (self.last_decoded is None) != (other.last_decoded is None):
            return False
        same_values = self.last_decoded is None or np.array_equal(self.last_decoded, other.last_decoded)
        return same_values and self.updates_seen == other.updates_seen and self.last_seq == other.last_seq


@dataclass
class SurrogateState:
    knowledge: KnowledgeState
    last_receiver_serving: int | None = None


@dataclass
class Message:
    seq: int
    sent_slot: int
    kind: Literal["raw", "delta"]
    payload: str
    base_seq: int = -1
    lost: bool = False

    @property
    def bits(self) -> int:
        return len(self.payload)


@dataclass
class SlotRecord:
    slot: int
    bits_sent: int
    sent: bool
    lost: bool
    decoded: int
    decode_errors: int
    staleness: int
    serving: int
    reference_serving: int
    handover: int | None
    reference_handover: int | None
    dropped: bool
    viability: float


@dataclass
class SimState:
    codec: CodecSpec
    n_cells: int
    handover: HandoverParams
    viability: ViabilityParams
    rng: np.random.Generator
    receiver: KnowledgeState = None  # type: ignore[assignment]
    surrogate: SurrogateState = None  # type: ignore[assignment]
    in_flight: deque = field(default_factory=deque)
    next_seq: int = 0
    mismatch: int = 0
    dropped: bool = False
    drop_slot: int | None = None

    def __post_init__(self) -> None:
        self.receiver = self.receiver or KnowledgeState(self.codec)
        self.surrogate = self.surrogate or SurrogateState(KnowledgeState(self.codec))
        self.decider = make_decider(self.n_cells, self.handover)
        self.reference = make_decider(self.n_cells, self.handover)


def _choose_message(state: SimState, t: int, q_row: np.ndarray, policy: SenderPolicy) -> Message | None:
    known = state.surrogate.knowledge
    codec = state.codec
    if policy.kind == "always_raw":
        return Message(state.next_seq, t, "raw", encode_raw_row(q_row, codec))
    if policy.kind == "always_delta":
        if known.last_decoded is None:
            return Message(state.next_seq, t, "raw", encode_raw_row(q_row, codec))
        return Message(state.next_seq, t, "delta", encode_delta_row(q_row, known.last_decoded),
                       base_seq=known.last_seq)
    change = None if known.last_decoded is None else np.abs(q_row - known.last_decoded).max() * codec.step
    if change is None or change >= policy.trigger_threshold:
        return Message(state.next_seq, t, "raw", encode_raw_row(q_row, codec))
    return None


def _decode_message(known: KnowledgeState, msg: Message, n_cells: int) -> np.ndarray:
    if msg.kind == "raw":
        row, end = decode_raw_row(msg.payload, 0, n_cells, known.codec)
    else:
        if known.last_decoded is None or known.last_seq != msg.base_seq:
            raise DecodeError("delta base not held by receiver", 0)
        row, end = decode_delta_row(msg.payload, 0, known.last_decoded, known.codec)
    if end != len(msg.payload):
        raise DecodeError("trailing bits in message", end)
    return row


def step(state: SimState, t: int, q_row: np.ndarray, policy: SenderPolicy,
         channel: ChannelSpec) -> SlotRecord:
    """Advance the loop by one slot, mutating ``state``; returns the slot record."""
    codec = state.codec
    # one uniform per slot whether or not anything is sent, so runs at
    # different loss rates see nested loss patterns
    u = state.rng.random()

    msg = _choose_message(state, t, q_row, policy)
    if msg is not None:
        state.next_seq += 1
        msg.lost = u < channel.loss_probability
        state.surrogate.knowledge.absorb(q_row, msg.seq, t)
        if not msg.lost:
            state.in_flight.append((t + channel.delay, msg))

    decoded = errors = 0
    while state.in_flight and state.in_flight[0][0] <= t:
        _, arriving = state.in_flight.popleft()
        try:
            row = _decode_message(state.receiver, arriving, state.n_cells)
        except DecodeError:
            errors += 1
            continue
        state.receiver.absorb(row, arriving.seq, arriving.sent_slot)
        decoded += 1

    ref_target = state.reference.update(codec.dequantize(q_row))
    target = None
    if not state.dropped and state.receiver.last_decoded is not None:
        target = state.decider.update(codec.dequantize(state.receiver.last_decoded))
    serving = state.decider.serving
    state.surrogate.last_receiver_serving = serving

    if not state.dropped:
        state.mismatch = state.mismatch + 1 if serving != state.reference.serving else 0
        if state.mismatch > state.viability.drop_grace:
            state.dropped = True
            state.drop_slot = t

    stale = 0 if policy.kind == "event_triggered" else t - state.receiver.info_slot
    v = staleness_viability(stale, state.dropped, state.viability.scenario())
    return SlotRecord(
        slot=t,
        bits_sent=msg.bits if msg is not None else 0,
        sent=msg is not None,
        lost=bool(msg is not None and msg.lost),
        decoded=decoded,
        decode_errors=errors,
        staleness=stale,
        serving=serving,
        reference_serving=state.reference.serving,
        handover=target,
        reference_handover=ref_target,
        dropped=state.dropped,
        viability=v,
    )


@dataclass
class SimReport:
    seed: int
    horizon: int
    viability: list[float]
    cumulative_bits: dict[str, list[int]]
    te_bound: list[float]
    te_global: float
    te_windowed: dict[str, list]
    handovers: dict[str, list[list[int]]]
    serving: list[int]
    reference_serving: list[int]
    counters: dict[str, int]
    drop_slot: int | None
    config: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @property
    def final_viability(self) -> float:
        return self.viability[-1]


def _check(trace: RsrpTrace, codec: CodecSpec, policy: SenderPolicy, handover: HandoverParams) -> None:
    if len(trace) < 1:
        raise ConfigError("trace is empty")
    if trace.n_cells < 2:
        raise ConfigError("need at least two cells for handover")
    if not handover.initial_serving < trace.n_cells:
        raise ConfigError("initial_serving is not a cell of this trace")
    if not codec.covers_rsrp_range():
        raise ConfigError(
            f"{codec.bits_per_sample}-bit samples at {codec.step} dB cannot hold the RSRP range"
        )
    expected = {"always_raw": "raw", "always_delta": "delta", "event_triggered": "raw"}[policy.kind]
    if codec.kind != expected:
        raise ConfigError(f"policy {policy.kind} sends {expected} payloads but codec is {codec.kind}")


def run_detailed(
    trace: RsrpTrace,
    policy: SenderPolicy = SenderPolicy(),
    channel: ChannelSpec = ChannelSpec(),
    handover: HandoverParams = HandoverParams(),
    te: TEConfig = TEConfig(),
    codec: CodecSpec | None = None,
    viability: ViabilityParams = ViabilityParams(),
    te_window: int = 10,
    te_step: int = 1,
    seed: int | None = None,
    config_echo: dict[str, Any] | None = None,
) -> tuple[SimReport, list[SlotRecord]]:
    if codec is None:
        codec = CodecSpec("delta" if policy.kind == "always_delta" else "raw")
    _check(trace, codec, policy, handover)
    q = codec.quantize(trace.rsrp)
    state = SimState(codec, trace.n_cells, handover, viability,
                     np.random.default_rng([channel.seed, 1]))

    records = [step(state, t, q[t], policy, channel) for t in range(len(trace))]

    # offline codec comparison and TE bound on the true trace, relative to the
    # full-information handover decisions
    view = RsrpTrace(trace.cells, codec.dequantize(q), trace.events, trace.slot_duration,
                     trace.start_time)
    raw_spec = CodecSpec("raw", codec.bits_per_sample, codec.step, codec.floor)
    delta_spec = CodecSpec("delta", codec.bits_per_sample, codec.step, codec.floor)
    reference = ActionSeries(tuple(r.reference_handover for r in records), handover.initial_serving)
    target = to_symbols(reference)
    source = margin_symbols(view.rsrp, reference, handover.hysteresis)
    if len(trace) > te.lag + 1:
        bound = te_bound_bits(source, target, te).tolist()
        te_global = transfer_entropy(source, target, te).value
    else:
        bound, te_global = [0.0] * len(trace), 0.0
    if len(trace) >= te_window and te_window > te.lag + 1:
        ends, bits = windowed_transfer_entropy(source, target, te, te_window, te_step)
        windowed = {"slots": ends.tolist(), "bits": bits.tolist()}
    else:
        windowed = {"slots": [], "bits": []}

    report = SimReport(
        seed=channel.seed if seed is None else seed,
        horizon=len(trace),
        viability=[r.viability for r in records],
        cumulative_bits={
            "policy": np.cumsum([r.bits_sent for r in records]).tolist(),
            "raw": encode_raw(view, raw_spec).cumulative_bits.tolist(),
            "delta": encode_delta(view, delta_spec).cumulative_bits.tolist(),
        },
        te_bound=bound,
        te_global=te_global,
        te_windowed=windowed,
        handovers={
            "receiver": [[r.slot, r.handover] for r in records if r.handover is not None],
            "reference": [[r.slot, r.reference_handover] for r in records
                          if r.reference_handover is not None],
        },
        serving=[r.serving for r in records],
        reference_serving=[r.reference_serving for r in records],
        counters={
            "clamped": trace.clamped,
            "messages_sent": sum(r.sent for r in records),
            "lost": sum(r.lost for r in records),
            "decode_errors": sum(r.decode_errors for r in records),
            "decoded": sum(r.decoded for r in records),
        },
        drop_slot=state.drop_slot,
        config=config_echo or {},
    )
    return report, records


def run(trace: RsrpTrace, *args, **kwargs) -> SimReport:
    """Simulate the whole trace; see :func:`run_detailed` for the arguments."""
    return run_detailed(trace, *args, **kwargs)[0]

import numpy as np
import pytest

from effcomm.encoding import CodecSpec
from effcomm.handover import HandoverParams
from effcomm.scenario import MobilitySpec, RsrpTrace, default_cells, generate_trace
from effcomm.simloop import (
    ChannelSpec,
    ConfigError,
    SenderPolicy,
    SimState,
    ViabilityParams,
    run,
    run_detailed,
    step,
)


def trace(rows):
    rows = np.asarray(rows, dtype=float)
    return RsrpTrace(default_cells(rows.shape[1]), rows)


def handover_due_at(slot, horizon=8):
    """Serving cell flat at -90; the neighbour jumps to -80 at ``slot``."""
    rows = [[-90.0, -100.0]] * horizon
    for t in range(slot, horizon):
        rows[t] = [-90.0, -80.0]
    return trace(rows)


@pytest.fixture
def default_trace():
    return generate_trace(MobilitySpec(seed=2), 60)


def test_lossless_raw(default_trace):
    rep, recs = run_detailed(default_trace)
    assert rep.cumulative_bits["policy"][-1] == 1440 == rep.cumulative_bits["raw"][-1]
    assert rep.viability == [0.0] * 60
    assert rep.serving == rep.reference_serving
    assert rep.drop_slot is None
    assert all(len(v) == 60 for v in (rep.viability, rep.te_bound, rep.serving))


def test_lossless_receiver_view_equals_quantized_trace(default_trace):
    codec = CodecSpec()
    q = codec.quantize(default_trace.rsrp)
    state = SimState(codec, 3, HandoverParams(), ViabilityParams(), np.random.default_rng(0))
    for t in range(60):
        step(state, t, q[t], SenderPolicy(), ChannelSpec())
        np.testing.assert_array_equal(state.receiver.last_decoded, q[t])
        assert state.surrogate.knowledge.same_as(state.receiver)


def test_delta_policy_is_cheaper(default_trace):
    rep = run(default_trace, SenderPolicy("always_delta"))
    assert rep.cumulative_bits["policy"][-1] == rep.cumulative_bits["delta"][-1] < 1440
    assert rep.te_bound[-1] <= rep.cumulative_bits["delta"][-1]
    assert rep.final_viability == 0.0


def test_total_loss_collapses_like_no_information():
    rep = run(handover_due_at(3, 6), channel=ChannelSpec(loss_probability=1.0))
    np.testing.assert_allclose(rep.viability, [0.0, -1.0, -np.log2(3), -2.0, -100.0, -100.0], atol=1e-15)
    assert rep.drop_slot == 4
    assert rep.handovers == {"receiver": [], "reference": [[3, 1]]}
    assert rep.counters["decoded"] == 0 and rep.counters["lost"] == 6


def test_delay_postpones_handover_and_drops():
    tr = handover_due_at(3)
    assert run(tr, channel=ChannelSpec(delay=1)).drop_slot is None
    rep = run(tr, channel=ChannelSpec(delay=2))
    assert rep.drop_slot == 4 and rep.viability[-1] == -100.0


def test_event_triggered_sends_on_large_changes():
    rows = np.full((40, 3), -90.0)
    rows[:, 1] = -100.0
    rows[1::2, 2] = -108.0
    rows[::2, 2] = -110.0
    rows[10:, 0] = -95.0
    rows[30:, 0] = -85.0
    rep, recs = run_detailed(trace(rows), SenderPolicy("event_triggered", 3.0))
    assert [r.slot for r in recs if r.sent] == [0, 10, 30]
    assert rep.cumulative_bits["policy"][-1] == 72


def test_event_triggered_matches_raw_viability_with_fewer_bits():
    rows = np.array([[-90.0, -100.0]] * 20)
    rows[5:, 1] = -85.0
    rows[12:, 0] = -80.0
    tr = trace(rows)
    raw = run(tr)
    ev = run(tr, SenderPolicy("event_triggered"))
    assert ev.viability == raw.viability
    assert ev.serving == raw.serving
    assert ev.cumulative_bits["policy"][-1] < raw.cumulative_bits["policy"][-1]


def test_surrogate_diverges_only_under_loss(default_trace):
    codec = CodecSpec()
    q = codec.quantize(default_trace.rsrp)
    state = SimState(codec, 3, HandoverParams(), ViabilityParams(), np.random.default_rng([7, 1]))
    diverged = False
    for t in range(60):
        rec = step(state, t, q[t], SenderPolicy(), ChannelSpec(loss_probability=0.3))
        if rec.lost:
            diverged = True
        if not diverged:
            assert state.surrogate.knowledge.same_as(state.receiver)
    assert diverged


def test_lost_delta_base_counts_as_decode_error(default_trace):
    rep = run(default_trace, SenderPolicy("always_delta"), ChannelSpec(loss_probability=0.3, seed=1))
    c = rep.counters
    assert c["lost"] > 0 and c["decode_errors"] > 0
    assert c["decoded"] + c["decode_errors"] + c["lost"] == c["messages_sent"]


def test_reproducible(default_trace):
    a = run(default_trace, channel=ChannelSpec(0.3, 1, seed=4))
    b = run(default_trace, channel=ChannelSpec(0.3, 1, seed=4))
    assert a.to_json() == b.to_json()
    assert a.to_json() != run(default_trace, channel=ChannelSpec(0.3, 1, seed=5)).to_json()


def test_raw_beats_silence_on_default_scenarios():
    for seed in range(5):
        tr = generate_trace(MobilitySpec(seed=seed), 60)
        raw = run(tr, channel=ChannelSpec(seed=seed)).final_viability
        silent = run(tr, channel=ChannelSpec(1.0, seed=seed)).final_viability
        assert raw >= silent


def test_loss_patterns_nested():
    tr = generate_trace(MobilitySpec(seed=9), 60)
    lost = {p: [r.lost for r in run_detailed(tr, channel=ChannelSpec(p, seed=3))[1]] for p in (0.2, 0.5)}
    assert all(b for a, b in zip(lost[0.2], lost[0.5]) if a)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(policy=SenderPolicy("always_delta"), codec=CodecSpec("raw")),
        dict(codec=CodecSpec("raw", bits_per_sample=6)),
        dict(handover=HandoverParams(initial_serving=5)),
    ],
)
def test_config_errors(default_trace, kwargs):
    with pytest.raises(ConfigError):
        run(default_trace, **kwargs)


def test_single_cell_rejected():
    with pytest.raises(ConfigError):
        run(trace([[-90.0]] * 5))


@pytest.mark.parametrize(
    "ctor, kwargs",
    [(ChannelSpec, dict(loss_probability=1.5)), (ChannelSpec, dict(delay=-1)),
     (SenderPolicy, dict(kind="sometimes")), (SenderPolicy, dict(kind="event_triggered", trigger_threshold=0)),
     (ViabilityParams, dict(drop_grace=-1))],
)
def test_spec_validation(ctor, kwargs):
    with pytest.raises(ValueError):
        ctor(**kwargs)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from effcomm.encoding import (
    CodecSpec,
    DecodeError,
    decode,
    decode_bits,
    decode_bytes,
    elias_gamma,
    encode,
    encode_delta,
    encode_raw,
    local_te_cumsum,
    pack_bits,
    read_gamma,
    te_bound_bits,
    unpack_bits,
    unzigzag,
    zigzag,
)
from effcomm.handover import decide_a3, margin_symbols, to_symbols
from effcomm.infotheory import SymbolSeries
from effcomm.scenario import MobilitySpec, RsrpTrace, default_cells, generate_trace
from oracles import hand_gamma

RAW, DELTA = CodecSpec("raw"), CodecSpec("delta")


def trace(rows):
    rows = np.asarray(rows, dtype=float)
    return RsrpTrace(default_cells(rows.shape[1]), rows)


def test_raw_rate_three_cells():
    log = encode_raw(generate_trace(MobilitySpec(seed=5), 60), RAW)
    assert all(len(p) == 24 for p in log.payloads)
    assert log.total_bits == 1440 and log.cumulative_bits[-1] == 1440
    np.testing.assert_array_equal(log.cumulative_bits, 24 * np.arange(1, 61))


def test_raw_one_cell():
    assert encode_raw(trace([[-100.0], [-99.0]])).payloads == ["00101000", "00101001"]


def test_raw_overflow_is_an_error():
    with pytest.raises(ValueError):
        encode_raw(trace([[-44.0]]), CodecSpec("raw", bits_per_sample=6))


def test_delta_hand_example():
    log = encode_delta(trace([[-100.0], [-100.0], [-99.0]]), DELTA)
    assert log.payloads == ["00101000", "1", "011"]
    assert log.total_bits == 12
    np.testing.assert_array_equal(decode(log), [[40], [40], [41]])


@pytest.mark.parametrize("n", [1, 2, 17])
def test_delta_constant_trace(n):
    log = encode_delta(trace([[-80.0, -120.0]] * n), DELTA)
    assert log.total_bits == 2 * (8 + (n - 1))


@pytest.mark.parametrize("v, z", [(0, 0), (-1, 1), (1, 2), (-2, 3), (2, 4)])
def test_zigzag(v, z):
    assert zigzag(v) == z and unzigzag(z) == v


@given(st.integers(1, 10**9))
def test_gamma_matches_textbook(n):
    code = elias_gamma(n)
    assert code == hand_gamma(n)
    assert read_gamma(code + "1", 0) == (n, len(code))


@given(st.lists(st.integers(1, 5000), min_size=1, max_size=40))
def test_gamma_prefix_free(values):
    bits = "".join(elias_gamma(v) for v in values)
    out, pos = [], 0
    while pos < len(bits):
        v, pos = read_gamma(bits, pos)
        out.append(v)
    assert out == values


quantized = st.integers(1, 4).flatmap(
    lambda c: st.lists(st.lists(st.integers(-140, -44), min_size=c, max_size=c), min_size=1, max_size=40)
)


@settings(max_examples=150)
@given(quantized, st.sampled_from(["raw", "delta"]))
def test_round_trip(rows, kind):
    tr = trace(rows)
    spec = CodecSpec(kind)
    log = encode(tr, spec)
    q = spec.quantize(tr.rsrp)
    np.testing.assert_array_equal(decode(log), q)
    data, pad = log.to_bytes()
    assert len(data) * 8 - pad == log.total_bits
    np.testing.assert_array_equal(decode_bytes(data, pad, spec, tr.n_cells), q)
    assert np.all(np.diff(log.cumulative_bits) >= 0)


def test_round_trip_off_grid_values():
    rng = np.random.default_rng(0)
    tr = trace(rng.uniform(-140, -44, (50, 3)))
    for spec in (RAW, DELTA):
        np.testing.assert_array_equal(decode(encode(tr, spec)), spec.quantize(tr.rsrp))


def test_pack_bits_msb_first():
    assert pack_bits("1") == (b"\x80", 7)
    assert pack_bits("") == (b"", 0)
    assert unpack_bits(b"\x80", 7) == "1"


def test_truncated_raw_reports_offset():
    with pytest.raises(DecodeError) as err:
        decode_bits("0" * 8 * 3 + "0101", RAW, 3)
    assert err.value.offset == 24


def test_truncated_gamma_reports_offset():
    bits = "00101000" + "1" + "0001"
    with pytest.raises(DecodeError) as err:
        decode_bits(bits, DELTA, 1)
    assert err.value.offset == 9


def test_delta_out_of_range_reports_offset():
    # 0 followed by zigzag(-1)=1 -> gamma(2)="010"
    with pytest.raises(DecodeError) as err:
        decode_bits("00000000" + "010", DELTA, 1)
    assert err.value.offset == 8


def test_bad_padding():
    with pytest.raises(DecodeError):
        unpack_bits(b"\x00", 9)


def test_codec_mismatch():
    log = encode_raw(trace([[-90.0]]))
    with pytest.raises(ValueError):
        decode(log, DELTA)


def test_codec_validation():
    with pytest.raises(ValueError):
        CodecSpec("huffman")
    with pytest.raises(ValueError):
        CodecSpec(bits_per_sample=0)
    assert CodecSpec().covers_rsrp_range() and not CodecSpec(bits_per_sample=6).covers_rsrp_range()


def test_te_bound_constant_source(rng):
    x = SymbolSeries.of(rng.integers(0, 2, 200), 2)
    bound = te_bound_bits(SymbolSeries.of(np.zeros(200, int), 2), x)
    assert np.all(bound == 0.0)


def test_te_bound_copy_slope(rng):
    y = rng.integers(0, 2, 5000)
    x = np.roll(y, 1)
    bound = te_bound_bits(SymbolSeries.of(y, 2), SymbolSeries.of(x, 2))
    assert bound[-1] / (len(y) - 1) == pytest.approx(1.0, abs=0.02)
    assert np.all(np.diff(bound) >= 0)


def test_unclipped_sum_matches_global(rng):
    y = rng.integers(0, 3, 300)
    x = (y + rng.integers(0, 2, 300)) % 3
    s, t = SymbolSeries.of(y, 3), SymbolSeries.of(np.roll(x, 1), 3)
    raw = local_te_cumsum(s, t, clip=False)
    clipped = te_bound_bits(s, t)
    assert np.all(clipped >= raw - 1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_ordering_on_default_scenario(seed):
    tr = generate_trace(MobilitySpec(seed=seed), 60)
    view = trace(RAW.dequantize(RAW.quantize(tr.rsrp)))
    actions = decide_a3(view)
    bound = te_bound_bits(margin_symbols(view.rsrp, actions), to_symbols(actions))
    raw = encode_raw(view).total_bits
    delta = encode_delta(view).total_bits
    assert bound[-1] <= delta < raw == 1440

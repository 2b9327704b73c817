"""Measurement codecs and cumulative bit accounting.

``raw`` sends every quantized sample in a fixed-width field. ``delta`` sends
the first slot raw, then per-cell differences mapped through zigzag and
Elias-gamma coded, which keeps the stream prefix-free.

Serialized streams are most-significant-bit first, zero-padded to a byte
boundary; the pad length travels with the log.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .infotheory import SymbolSeries, TEConfig, transfer_entropy
from .scenario import RSRP_MAX, RSRP_MIN, RsrpTrace

CodecKind = Literal["raw", "delta"]


class DecodeError(ValueError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"bit {offset}: {message}")


@dataclass(frozen=True)
class CodecSpec:
    kind: CodecKind = "raw"
    bits_per_sample: int = 8
    step: float = 1.0
    floor: float = RSRP_MIN

    def __post_init__(self) -> None:
        if self.kind not in ("raw", "delta"):
            raise ValueError(f"unknown codec kind {self.kind!r}")
        if self.bits_per_sample < 1:
            raise ValueError("bits_per_sample must be >= 1")
        if not self.step > 0:
            raise ValueError("quantization step must be positive")

    @property
    def levels(self) -> int:
        return 1 << self.bits_per_sample

    def covers_rsrp_range(self) -> bool:
        return int(np.rint((RSRP_MAX - self.floor) / self.step)) < self.levels

    def quantize(self, rsrp: np.ndarray) -> np.ndarray:
        q = np.rint((np.asarray(rsrp, dtype=float) - self.floor) / self.step).astype(np.int64)
        if q.size and (q.min() < 0 or q.max() >= self.levels):
            raise ValueError(
                f"quantized value outside {self.bits_per_sample}-bit field "
                f"(range {q.min()}..{q.max()})"
            )
        return q

    def dequantize(self, q: np.ndarray) -> np.ndarray:
        return self.floor + np.asarray(q, dtype=float) * self.step


@dataclass(eq=False)
class MessageLog:
    codec: CodecSpec
    n_cells: int
    payloads: list[str] = field(default_factory=list)

    @property
    def cumulative_bits(self) -> np.ndarray:
        return np.cumsum([len(p) for p in self.payloads], dtype=np.int64)

    @property
    def total_bits(self) -> int:
        return sum(len(p) for p in self.payloads)

    def bitstring(self) -> str:
        return "".join(self.payloads)

    def to_bytes(self) -> tuple[bytes, int]:
        """Pack MSB-first; returns ``(data, padding_bits)``."""
        return pack_bits(self.bitstring())


def pack_bits(bits: str) -> tuple[bytes, int]:
    pad = (-len(bits)) % 8
    padded = bits + "0" * pad
    data = int(padded, 2).to_bytes(len(padded) // 8, "big") if padded else b""
    return data, pad


def unpack_bits(data: bytes, padding: int) -> str:
    if not 0 <= padding < 8 or (padding and not data):
        raise DecodeError(f"invalid padding {padding}", 0)
    bits = "".join(f"{b:08b}" for b in data)
    return bits[: len(bits) - padding]


def zigzag(v: int) -> int:
    return 2 * v if v >= 0 else -2 * v - 1


def unzigzag(z: int) -> int:
    return z // 2 if z % 2 == 0 else -(z + 1) // 2


def elias_gamma(n: int) -> str:
    if n < 1:
        raise ValueError("Elias-gamma codes positive integers only")
    b = bin(n)[2:]
    return "0" * (len(b) - 1) + b


def read_gamma(bits: str, pos: int) -> tuple[int, int]:
    start = pos
    zeros = 0
    while pos < len(bits) and bits[pos] == "0":
        zeros += 1
        pos += 1
    end = pos + zeros + 1
    if end > len(bits):
        raise DecodeError("truncated Elias-gamma code", start)
    return int(bits[pos:end], 2), end


def _raw_field(q: int, width: int) -> str:
    return format(int(q), f"0{width}b")


def encode_raw_row(q_row: np.ndarray, spec: CodecSpec) -> str:
    return "".join(_raw_field(q, spec.bits_per_sample) for q in q_row)


def encode_delta_row(q_row: np.ndarray, q_prev: np.ndarray) -> str:
    return "".join(elias_gamma(zigzag(int(a) - int(b)) + 1) for a, b in zip(q_row, q_prev))


def encode_raw(trace: RsrpTrace, spec: CodecSpec = CodecSpec()) -> MessageLog:
    q = spec.quantize(trace.rsrp)
    return MessageLog(spec, trace.n_cells, [encode_raw_row(row, spec) for row in q])


def encode_delta(trace: RsrpTrace, spec: CodecSpec = CodecSpec("delta")) -> MessageLog:
    q = spec.quantize(trace.rsrp)
    payloads = []
    for t, row in enumerate(q):
        payloads.append(encode_raw_row(row, spec) if t == 0 else encode_delta_row(row, q[t - 1]))
    return MessageLog(spec, trace.n_cells, payloads)


def encode(trace: RsrpTrace, spec: CodecSpec) -> MessageLog:
    return encode_raw(trace, spec) if spec.kind == "raw" else encode_delta(trace, spec)


def decode_raw_row(bits: str, pos: int, n_cells: int, spec: CodecSpec) -> tuple[np.ndarray, int]:
    w = spec.bits_per_sample
    end = pos + n_cells * w
    if end > len(bits):
        raise DecodeError("truncated raw sample", pos)
    row = np.array([int(bits[pos + i * w: pos + (i + 1) * w], 2) for i in range(n_cells)],
                   dtype=np.int64)
    return row, end


def decode_delta_row(bits: str, pos: int, prev: np.ndarray, spec: CodecSpec) -> tuple[np.ndarray, int]:
    row = np.empty_like(prev)
    for c in range(prev.size):
        start = pos
        g, pos = read_gamma(bits, pos)
        row[c] = prev[c] + unzigzag(g - 1)
        if not 0 <= row[c] < spec.levels:
            raise DecodeError("delta leaves the quantizer range", start)
    return row, pos


def decode_bits(bits: str, spec: CodecSpec, n_cells: int) -> np.ndarray:
    """Decode a concatenated stream back to quantized samples, shape (slots, cells)."""
    if n_cells < 1:
        raise ValueError("n_cells must be >= 1")
    rows: list[np.ndarray] = []
    pos = 0
    while pos < len(bits):
        if spec.kind == "raw" or not rows:
            row, pos = decode_raw_row(bits, pos, n_cells, spec)
        else:
            row, pos = decode_delta_row(bits, pos, rows[-1], spec)
        rows.append(row)
    return np.array(rows, dtype=np.int64).reshape(len(rows), n_cells)


def decode(log: MessageLog, spec: CodecSpec | None = None) -> np.ndarray:
    spec = spec or log.codec
    if spec != log.codec:
        raise ValueError("codec mismatch between log and decoder")
    return decode_bits(log.bitstring(), spec, log.n_cells)


def decode_bytes(data: bytes, padding: int, spec: CodecSpec, n_cells: int) -> np.ndarray:
    return decode_bits(unpack_bits(data, padding), spec, n_cells)


def local_te_cumsum(source: SymbolSeries, actions: SymbolSeries, cfg: TEConfig = TEConfig(),
                    clip: bool = True) -> np.ndarray:
    """Cumulative local TE per slot; slots before the first valid sample hold 0."""
    est = transfer_entropy(source, actions, cfg)
    local = np.maximum(est.local_bits, 0.0) if clip else est.local_bits
    out = np.zeros(len(actions))
    out[est.first_slot:] = np.cumsum(local)
    return out


def te_bound_bits(source: SymbolSeries, actions: SymbolSeries, cfg: TEConfig = TEConfig()) -> np.ndarray:
    """Monotone lower-bound curve: cumulative sum of local TE clipped at zero."""
    return local_te_cumsum(source, actions, cfg, clip=True)

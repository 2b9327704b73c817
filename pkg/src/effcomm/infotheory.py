"""Discrete information measures estimated from symbol series.

All quantities are in bits. Probabilities come from plug-in (maximum
likelihood) frequency counts; a Miller-Madow correction is available for
entropy-based estimates.

Transfer entropy follows the history-embedding convention

    TE(Y -> X) = sum p(x_t, x^(k), y^(l)) log2 [ p(x_t | x^(k), y^(l)) / p(x_t | x^(k)) ]

with x^(k) = (x_{t-1}, ..., x_{t-k}) and y^(l) = (y_{t-1}, ..., y_{t-l}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

BiasCorrection = Literal["none", "miller_madow"]


@dataclass(frozen=True, eq=False)
class ProbDist:
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probability vector must be one-dimensional and non-empty")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)

    def __len__(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, n: int) -> "ProbDist":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def degenerate(cls, n: int, at: int = 0) -> "ProbDist":
        p = np.zeros(n)
        p[at] = 1.0
        return cls(p)


@dataclass(frozen=True, eq=False)
class SymbolSeries:
    """Integer time series over the alphabet ``range(alphabet_size)``.

    ``clamped`` counts how many raw values fell outside the binning range
    when the series was produced by :func:`discretize`.
    """

    symbols: np.ndarray
    alphabet_size: int
    clamped: int = 0

    def __post_init__(self) -> None:
        s = np.asarray(self.symbols)
        if s.ndim != 1:
            raise ValueError("symbols must be one-dimensional")
        if s.size and not np.issubdtype(s.dtype, np.integer):
            if not np.all(np.equal(np.mod(s, 1), 0)):
                raise ValueError("symbols must be integers")
        s = s.astype(np.int64)
        if int(self.alphabet_size) < 1:
            raise ValueError("alphabet_size must be positive")
        if s.size and (s.min() < 0 or s.max() >= self.alphabet_size):
            raise ValueError(
                f"symbols must lie in [0, {self.alphabet_size}); got range "
                f"[{s.min()}, {s.max()}]"
            )
        object.__setattr__(self, "symbols", s)
        object.__setattr__(self, "alphabet_size", int(self.alphabet_size))

    def __len__(self) -> int:
        return self.symbols.size

    def __getitem__(self, item: slice) -> "SymbolSeries":
        return SymbolSeries(self.symbols[item], self.alphabet_size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymbolSeries):
            return NotImplemented
        return self.alphabet_size == other.alphabet_size and np.array_equal(
            self.symbols, other.symbols
        )

    @classmethod
    def of(cls, values: Iterable[int], alphabet_size: int | None = None) -> "SymbolSeries":
        """Build a series, inferring the alphabet as ``max + 1`` when not given."""
        arr = np.asarray(list(values), dtype=np.int64)
        if alphabet_size is None:
            alphabet_size = int(arr.max()) + 1 if arr.size else 1
        return cls(arr, alphabet_size)


@dataclass(frozen=True)
class BinningSpec:
    lo: float
    hi: float
    bins: int

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"binning requires lo < hi (got {self.lo}, {self.hi})")
        if int(self.bins) < 2:
            raise ValueError("binning requires at least 2 bins")

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.bins


@dataclass(frozen=True)
class TEConfig:
    k: int = 1
    l: int = 1
    bias_correction: BiasCorrection = "none"

    def __post_init__(self) -> None:
        if self.k < 1 or self.l < 1:
            raise ValueError("history lengths k and l must be >= 1")
        if self.bias_correction not in ("none", "miller_madow"):
            raise ValueError(f"unknown bias correction {self.bias_correction!r}")

    @property
    def lag(self) -> int:
        return max(self.k, self.l)


@dataclass(frozen=True, eq=False)
class TEEstimate:
    """Result of a transfer-entropy estimate.

    ``global_bits`` is always the plug-in value; ``local_bits[i]`` belongs to
    slot ``first_slot + i``. When a bias correction is configured the
    corrected figure is in ``corrected_bits`` and exposed through
    :attr:`value`.
    """

    global_bits: float
    local_bits: np.ndarray
    config: TEConfig
    samples_used: int
    first_slot: int
    corrected_bits: float | None = None

    @property
    def value(self) -> float:
        return self.global_bits if self.corrected_bits is None else self.corrected_bits

    @property
    def slots(self) -> np.ndarray:
        return np.arange(self.first_slot, self.first_slot + self.samples_used)


def _xlogx_sum(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def shannon_entropy(p: ProbDist) -> float:
    h = _xlogx_sum(p.probs)
    return max(h, 0.0)


def entropy_from_counts(counts: Sequence[int] | np.ndarray) -> float:
    c = np.asarray(counts, dtype=float)
    total = c.sum()
    if total <= 0:
        raise ValueError("counts must have a positive total")
    return max(_xlogx_sum(c / total), 0.0)


def empirical_distribution(x: SymbolSeries) -> ProbDist:
    if len(x) == 0:
        raise ValueError("cannot estimate a distribution from an empty series")
    counts = np.bincount(x.symbols, minlength=x.alphabet_size)
    return ProbDist(counts / counts.sum())


def miller_madow(h_plugin: float, distinct_outcomes: int, n: int) -> float:
    """Add the first-order bias term ``(m - 1) / (2 n ln 2)`` to a plug-in entropy."""
    if n < 1 or distinct_outcomes < 1:
        raise ValueError("miller_madow requires n >= 1 and distinct_outcomes >= 1")
    return h_plugin + (distinct_outcomes - 1) / (2.0 * n * math.log(2))


def entropy(x: SymbolSeries, bias_correction: BiasCorrection = "none") -> float:
    if len(x) == 0:
        raise ValueError("cannot estimate entropy from an empty series")
    counts = np.bincount(x.symbols, minlength=x.alphabet_size)
    h = entropy_from_counts(counts)
    if bias_correction == "miller_madow":
        h = miller_madow(h, int(np.count_nonzero(counts)), len(x))
    return h


def joint_counts(x: SymbolSeries, y: SymbolSeries) -> np.ndarray:
    if len(x) != len(y):
        raise ValueError(f"series lengths differ ({len(x)} vs {len(y)})")
    if len(x) == 0:
        raise ValueError("series must be non-empty")
    table = np.zeros((x.alphabet_size, y.alphabet_size), dtype=np.int64)
    np.add.at(table, (x.symbols, y.symbols), 1)
    return table


def mutual_information(x: SymbolSeries, y: SymbolSeries) -> float:
    """Plug-in I(X;Y) = H(X) + H(Y) - H(X,Y)."""
    table = joint_counts(x, y)
    hx = entropy_from_counts(table.sum(axis=1))
    hy = entropy_from_counts(table.sum(axis=0))
    hxy = entropy_from_counts(table.ravel())
    return max(hx + hy - hxy, 0.0)


def discretize(values: Sequence[float] | np.ndarray, spec: BinningSpec) -> SymbolSeries:
    """Map reals onto ``spec.bins`` equal-width bins.

    Bins are half-open except the last, which is closed at ``hi``. Values
    outside ``[lo, hi]`` are clamped into the edge bins and counted in the
    returned series' ``clamped`` field.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise ValueError("values must be one-dimensional")
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    clamped = int(np.count_nonzero((v < spec.lo) | (v > spec.hi)))
    idx = np.floor((v - spec.lo) / spec.width).astype(np.int64)
    idx = np.clip(idx, 0, spec.bins - 1)
    return SymbolSeries(idx, spec.bins, clamped=clamped)


def _histories(s: np.ndarray, length: int, idx: np.ndarray) -> np.ndarray:
    # column i holds s[t - 1 - i]
    return np.stack([s[idx - 1 - i] for i in range(length)], axis=1)


def _count_rows(rows: np.ndarray) -> tuple[np.ndarray, int]:
    """Per-row occurrence counts of each row's value, plus the number of distinct rows."""
    _, inverse, counts = np.unique(rows, axis=0, return_inverse=True, return_counts=True)
    return counts[inverse.ravel()], counts.size


def transfer_entropy(source: SymbolSeries, target: SymbolSeries, cfg: TEConfig = TEConfig()) -> TEEstimate:
    """Plug-in transfer entropy from ``source`` to ``target`` with local values."""
    if len(source) != len(target):
        raise ValueError(f"series lengths differ ({len(source)} vs {len(target)})")
    n = len(target)
    m = cfg.lag
    if n <= m + 1:
        raise ValueError(
            f"series of length {n} too short for k={cfg.k}, l={cfg.l}; "
            f"need length >= {m + 2}"
        )
    x = target.symbols
    y = source.symbols
    idx = np.arange(m, n)
    xt = x[idx][:, None]
    xh = _histories(x, cfg.k, idx)
    yh = _histories(y, cfg.l, idx)

    c_xxy, m_xxy = _count_rows(np.hstack([xt, xh, yh]))
    c_xy, m_xy = _count_rows(np.hstack([xh, yh]))
    c_xx, m_xx = _count_rows(np.hstack([xt, xh]))
    c_x, m_x = _count_rows(xh)

    # ratio of integer products: exactly 1.0 whenever the source adds nothing
    local = np.log2((c_xxy * c_x) / (c_xy * c_xx))
    samples = idx.size

    _, first = np.unique(np.hstack([xt, xh, yh]), axis=0, return_index=True)
    g = float(np.sum(c_xxy[first] / samples * local[first]))
    g = max(g, 0.0)

    corrected = None
    if cfg.bias_correction == "miller_madow":
        corrected = g + (m_xx - m_x - m_xxy + m_xy) / (2.0 * samples * math.log(2))

    return TEEstimate(
        global_bits=g,
        local_bits=local,
        config=cfg,
        samples_used=samples,
        first_slot=m,
        corrected_bits=corrected,
    )


def windowed_transfer_entropy(
    source: SymbolSeries,
    target: SymbolSeries,
    cfg: TEConfig = TEConfig(),
    window: int = 10,
    step: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Sliding-window TE; returns ``(end_slots, bits)`` with one entry per window."""
    if len(source) != len(target):
        raise ValueError(f"series lengths differ ({len(source)} vs {len(target)})")
    if window <= cfg.lag + 1:
        raise ValueError(f"window must exceed {cfg.lag + 1} slots (got {window})")
    if step < 1:
        raise ValueError("step must be >= 1")
    ends = np.arange(window - 1, len(target), step, dtype=np.int64)
    bits = np.empty(ends.size)
    for i, end in enumerate(ends):
        sl = slice(end - window + 1, end + 1)
        est = transfer_entropy(source[sl], target[sl], cfg)
        bits[i] = max(est.value, 0.0)
    return ends, bits

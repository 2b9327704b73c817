"""Bitrate and latency budget for remote touch sensing."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class SenseSpec:
    range_span: float
    resolution: float
    receptors: float
    sample_rate: float
    distance: float
    nerve_speed: float = 30.0

    def __post_init__(self) -> None:
        for name in ("range_span", "resolution", "receptors", "sample_rate", "distance", "nerve_speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.resolution < self.range_span:
            raise ValueError("resolution must be finer than the range")

    @property
    def bits(self) -> int:
        return quantization_bits(self.range_span, self.resolution)

    @property
    def bitrate(self) -> float:
        return bitrate(self.receptors, self.bits, self.sample_rate)

    @property
    def max_delay(self) -> float:
        return max_delay(self.distance, self.nerve_speed)


def quantization_bits(range_span: float, resolution: float) -> int:
    if not (range_span > 0 and resolution > 0):
        raise ValueError("range and resolution must be positive")
    levels = range_span / resolution
    # 40 / 0.02 is 1999.9999999999998 in binary floating point
    nearest = round(levels)
    if abs(levels - nearest) <= 1e-9 * max(1.0, levels):
        levels = nearest
    return max(0, math.ceil(math.log2(levels)))


def bitrate(receptors: float, bits: float, sample_rate: float) -> float:
    return receptors * bits * sample_rate


def max_delay(distance: float, nerve_speed: float = 30.0) -> float:
    if not nerve_speed > 0:
        raise ValueError("nerve_speed must be positive")
    return distance / nerve_speed


# Published touch-sensing rates in Mbps. Receptor counts are back-derived
# assuming 11-bit samples at 50 Hz; ``exact`` marks whether the division is.
TOUCH_REFERENCE_RATES_MBPS = {
    "temperature_hands": {"mbps": 26.4, "receptors": 48000, "exact": True},
    "temperature_feet": {"mbps": 33.8, "receptors": 61455, "exact": False},
    "temperature_total": {"mbps": 60.2, "receptors": None, "exact": True},
    "pressure_palm": {"mbps": 191.4, "receptors": 348000, "exact": True},
    "pressure_fingertip": {"mbps": 21.2, "receptors": 38545, "exact": False},
    "pressure_foot": {"mbps": 116.6, "receptors": 212000, "exact": True},
    "pressure_total": {"mbps": 827.6, "receptors": None, "exact": False},
}


def back_derive_receptors(mbps: float, bits: int = 11, sample_rate: float = 50.0) -> float:
    return mbps * 1e6 / (bits * sample_rate)

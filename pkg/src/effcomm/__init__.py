"""Viability, transfer entropy and message-cost analysis for cellular handover."""

from .encoding import CodecSpec, MessageLog, decode, encode, te_bound_bits
from .handover import ActionSeries, HandoverParams, decide, decide_a2a4, decide_a3, to_symbols
from .infotheory import (
    BinningSpec,
    ProbDist,
    SymbolSeries,
    TEConfig,
    TEEstimate,
    discretize,
    mutual_information,
    shannon_entropy,
    transfer_entropy,
    windowed_transfer_entropy,
)
from .scenario import MobilitySpec, RsrpTrace, generate_trace, load_trace_csv, save_trace_csv
from .simloop import ChannelSpec, SenderPolicy, SimReport, ViabilityParams, run
from .viability import ScenarioSpec, fictitious_scenario, viability_vs_information

__version__ = "0.1.0"

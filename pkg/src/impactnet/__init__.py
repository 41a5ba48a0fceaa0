"""Immediate price impact of trades by trader class and trading-network position."""

from .engine import (BookState, MatchingEngine, ReplayResult, TradeRecord, TradeType,
                     Transaction, classify_trade, mid_price, replay)
from .impact import (AnalysisConfig, BinnedCurve, CellKey, CellStats, PowerLawFit, analyze,
                     bin_curve, cell_stats, fit_power_law, immediate_impact, normalize,
                     ordering_report)
from .network import (PositionPartition, ShellAssignment, TradingNetwork, attach_positions,
                      build_network, kshell_decompose, partition_terciles)
from .orderflow import (InstrumentMeta, OrderEvent, ValidationReport, parse_stream,
                        serialize_stream, validate_stream)
from .synth import GroundTruth, SynthConfig, generate, plant_report

__version__ = "0.1.0"

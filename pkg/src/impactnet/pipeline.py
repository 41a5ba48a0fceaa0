"""End-to-end orchestration: events -> book replay -> network -> shells -> impact."""

from __future__ import annotations

import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

from . import artifacts
from .engine import ReplayResult, TradeRecord, replay
from .impact import AnalysisConfig, AnalysisResult, analyze, ordering_report
from .network import (DegeneratePartitionError, PositionPartition, ShellAssignment,
                      TradingNetwork, attach_positions, build_network, kshell_decompose,
                      partition_terciles)
from .orderflow import (InstrumentMeta, MarketSegment, OrderEvent, OrderflowError, load_meta,
                        meta_path_for, parse_stream, validate_stream)
from .synth import SynthConfig, generate

log = logging.getLogger(__name__)


class PipelineError(Exception):
    """A stage failure; ``stage`` names where it happened."""

    def __init__(self, stage: str, cause: str):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")

    def to_json(self) -> dict:
        return {"error": self.cause, "stage": self.stage}


@dataclass
class InstrumentRun:
    meta: InstrumentMeta
    replay: ReplayResult
    network: TradingNetwork
    shells: ShellAssignment
    partition: PositionPartition | None
    trades: list[TradeRecord]
    diagnostics: list[str] = field(default_factory=list)


def process_instrument(events: Sequence[OrderEvent], meta: InstrumentMeta) -> InstrumentRun:
    """Validate, replay, build the network and label every trade with its position."""
    if not events:
        raise PipelineError("ingest", "empty stream")
    report = validate_stream(events, meta)
    if not report.accepted:
        raise PipelineError("validate", f"{meta.instrument_id}: stream rejected: "
                            f"dangling={report.dangling_cancels[:5]} "
                            f"duplicates={report.duplicate_order_ids[:5]} "
                            f"out_of_session={report.out_of_session[:5]}")
    try:
        result = replay(events, meta)
    except Exception as exc:
        raise PipelineError("replay", f"{meta.instrument_id}: {exc}") from exc
    classes = {ev.trader_id: ev.trader_class for ev in events}
    net = build_network(result.transactions, classes)
    shells = kshell_decompose(net)
    diagnostics = list(result.diagnostics)
    # every aggressor traded, so it is a node; shell 0 only after self-trade removal
    ks = [shells.shell[t.trader_id] for t in result.trades]
    try:
        part = partition_terciles([k for k in ks if k >= 1])
    except DegeneratePartitionError as exc:
        diagnostics.append(f"{meta.instrument_id}: {exc}; positions left unassigned")
        part = None
    trades = attach_positions(result.trades, shells, part)
    return InstrumentRun(meta, result, net, shells, part, trades, diagnostics)


def _process_job(args):
    events, meta = args
    return process_instrument(events, meta)


def process_many(streams: Sequence[tuple[Sequence[OrderEvent], InstrumentMeta]],
                 jobs: int = 1) -> list[InstrumentRun]:
    if jobs > 1 and len(streams) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_process_job, streams))
    return [process_instrument(ev, meta) for ev, meta in streams]


@dataclass
class PipelineConfig:
    inputs: list[str] = field(default_factory=list)
    synth: SynthConfig | None = None
    out: Path | None = Path("impactnet-out")  # None: compute only
    analysis: AnalysisConfig = AnalysisConfig()
    export_edges: bool = True
    jobs: int = 1
    market: str | None = None  # overrides sidecar market segment

    def __post_init__(self):
        if self.out is not None:
            self.out = Path(self.out)
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


def write_instrument(run: InstrumentRun, outdir: Path, export_edges: bool = True) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    artifacts.write_transactions(run.replay.transactions, outdir / "transactions.csv")
    artifacts.write_trades(run.trades, outdir / "trades.csv")
    artifacts.write_shells(run.network, run.shells, outdir / "shells.csv")
    if export_edges:
        artifacts.write_edges(run.network, outdir / "edges.csv")
    if run.partition is not None:
        artifacts.write_partition(run.partition, outdir / "partition.json")


def write_analysis(res: AnalysisResult, outdir: Path) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    artifacts.write_stats(res.stats, outdir / "stats.csv")
    artifacts.write_curves(res.curves, outdir / "curves.csv")
    artifacts.write_fits(res.fits, outdir / "fits.csv")
    report = build_report(res)
    artifacts.write_json(report, outdir / "ordering.json", "ordering")
    return report


def build_report(res: AnalysisResult) -> dict:
    """Ordering report for the pooled market plus one per segment present."""
    markets = sorted({k.market for k in res.stats})
    return {"reports": [ordering_report(res.stats, res.fits, m) for m in markets]}


def run_pipeline(config: PipelineConfig, streams=None) -> tuple[list[InstrumentRun], AnalysisResult]:
    """Run every stage and write all artifacts under ``config.out``.

    ``streams`` (a list of ``(events, meta)``) short-circuits input loading.
    Raises :class:`PipelineError` naming the failing stage.
    """
    if streams is None:
        streams = load_inputs(config)
    if config.market is not None:
        streams = [(ev, replace(meta, market_segment=MarketSegment(config.market)))
                   for ev, meta in streams]
    ids = [m.instrument_id for _, m in streams]
    if len(set(ids)) != len(ids):
        raise PipelineError("ingest", f"duplicate instrument ids {ids}")
    runs = process_many(streams, config.jobs)
    trades = [t for run in runs for t in run.trades]
    try:
        res = analyze(trades, config.analysis)
    except Exception as exc:
        raise PipelineError("analyze", str(exc)) from exc
    for run in runs:
        res.diagnostics.extend(run.diagnostics)
    if config.out is not None:
        for run in runs:
            write_instrument(run, config.out / run.meta.instrument_id, config.export_edges)
        write_analysis(res, config.out)
        (config.out / "diagnostics.txt").write_text(
            artifacts.banner("diagnostics") + "".join(d + "\n" for d in res.diagnostics))
    return runs, res


def load_inputs(config: PipelineConfig) -> list[tuple[list[OrderEvent], InstrumentMeta]]:
    streams = []
    if config.synth is not None:
        streams.append((generate(config.synth), config.synth.meta()))
    for src in config.inputs:
        try:
            if src == "-":
                raw = sys.stdin.buffer.read()
                meta = InstrumentMeta("stdin")
            else:
                raw = Path(src).read_bytes()
                sidecar = meta_path_for(src)
                meta = load_meta(sidecar) if sidecar.exists() else InstrumentMeta(Path(src).stem)
            if not raw.strip():
                raise PipelineError("ingest", "empty stream")
            events = parse_stream(raw, meta)
        except OrderflowError as exc:
            raise PipelineError("ingest", f"{src}: {exc}") from exc
        except OSError as exc:
            raise PipelineError("ingest", f"{src}: {exc.strerror or exc}") from exc
        if not events:
            raise PipelineError("ingest", "empty stream")
        streams.append((events, meta))
    if not streams:
        raise PipelineError("ingest", "no input streams")
    return streams


def load_config_file(path: str | Path) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


ANALYSIS_KEYS = {f.name for f in fields(AnalysisConfig)}

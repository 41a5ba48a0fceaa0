"""``impactnet`` command line.

Stages: synth, replay, network, kshell, analyze, report, and pipeline
(all of them). Settings resolve as CLI flags > ``--config`` JSON > defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import artifacts
from .engine import replay
from .impact import AnalysisConfig, AnalysisResult
from .network import build_network, kshell_decompose
from .orderflow import (OrderflowError, meta_path_for, read_stream, save_meta,
                        serialize_stream)
from .pipeline import (PipelineConfig, PipelineError, build_report, load_config_file,
                       run_pipeline)
from .synth import RNG_ALGORITHM, SynthConfig, generate, plant_report

log = logging.getLogger("impactnet")


def _setup_logging() -> None:
    level = os.environ.get("IMPACTNET_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output path or directory")
    p.add_argument("--input", action="append", default=[], help="input file (repeatable)")


def _add_synth(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--events", type=int)
    p.add_argument("--alpha", type=float)


def _add_analysis(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bins", type=int)
    p.add_argument("--fit-lo", type=float)
    p.add_argument("--fit-hi", type=float)
    p.add_argument("--min-occupancy", type=int)
    p.add_argument("--per-stock", action="store_true", default=None)
    p.add_argument("--jobs", type=int)
    p.add_argument("--market", choices=["A_share", "B_share"],
                   help="override the market segment of every input")
    p.add_argument("--no-edges", action="store_true", help="skip the edge-list export")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="impactnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic order-event stream")
    _add_common(p)
    _add_synth(p)

    p = sub.add_parser("replay", help="replay events into transactions and trade records")
    _add_common(p)
    p.add_argument("paths", nargs="*")

    p = sub.add_parser("network", help="build the trading network edge list from transactions")
    _add_common(p)
    p.add_argument("paths", nargs="*")

    p = sub.add_parser("kshell", help="k-shell indices of an edge list")
    _add_common(p)
    p.add_argument("paths", nargs="*")

    p = sub.add_parser("analyze", help="full analysis of event streams; prints the fits table")
    _add_common(p)
    _add_analysis(p)
    p.add_argument("paths", nargs="*", help="event CSVs, '-' for stdin")

    p = sub.add_parser("report", help="ordering report from an analysis directory")
    _add_common(p)
    p.add_argument("paths", nargs="*")

    p = sub.add_parser("pipeline", help="synthesize (if no inputs) and run every stage")
    _add_common(p)
    _add_synth(p)
    _add_analysis(p)
    p.add_argument("paths", nargs="*")
    return parser


def _file_config(args) -> dict:
    return load_config_file(args.config) if args.config else {}


def _synth_config(args, conf: dict) -> SynthConfig:
    cfg = SynthConfig.from_dict(conf.get("synth", {}))
    overrides = {k: v for k, v in (("seed", args.seed), ("n_events", args.events),
                                   ("planted_alpha", args.alpha)) if v is not None}
    return replace(cfg, **overrides)


def _analysis_config(args, conf: dict) -> AnalysisConfig:
    base = AnalysisConfig(**conf.get("analysis", {}))
    overrides = {k: v for k, v in (("n_bins", args.bins), ("fit_lo", args.fit_lo),
                                   ("fit_hi", args.fit_hi), ("min_occupancy", args.min_occupancy),
                                   ("per_stock", args.per_stock)) if v is not None}
    return replace(base, **overrides)


def _inputs(args, conf: dict) -> list[str]:
    return list(args.paths) + list(args.input) or list(conf.get("inputs", []))


def _pipeline_config(args, conf: dict, out) -> PipelineConfig:
    return PipelineConfig(
        inputs=_inputs(args, conf),
        out=out,
        analysis=_analysis_config(args, conf),
        export_edges=not args.no_edges and conf.get("export_edges", True),
        jobs=args.jobs if args.jobs is not None else conf.get("jobs", 1),
        market=args.market or conf.get("market"),
    )


def _one_input(args, conf) -> str:
    paths = _inputs(args, conf)
    if len(paths) != 1:
        raise PipelineError(args.command, f"expected exactly one input, got {len(paths)}")
    return paths[0]


def cmd_synth(args, conf) -> int:
    cfg = _synth_config(args, conf)
    events = generate(cfg)
    out = args.out or conf.get("out") or "-"
    if out == "-":
        serialize_stream(events, sys.stdout)
        return 0
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        serialize_stream(events, fh)
    save_meta(cfg.meta(), meta_path_for(path), {"rng_algorithm": RNG_ALGORITHM, "seed": cfg.seed})
    artifacts.write_json(asdict(plant_report(cfg)), path.with_name(path.stem + ".truth.json"), "truth")
    return 0


def cmd_replay(args, conf) -> int:
    src = _one_input(args, conf)
    try:
        events, meta = read_stream(src)
    except OrderflowError as exc:
        raise PipelineError("ingest", str(exc)) from exc
    if not events:
        raise PipelineError("ingest", "empty stream")
    res = replay(events, meta)
    outdir = Path(args.out or conf.get("out") or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    artifacts.write_transactions(res.transactions, outdir / "transactions.csv")
    artifacts.write_trades(res.trades, outdir / "trades.csv")
    for d in res.diagnostics:
        log.info(d)
    return 0


def cmd_network(args, conf) -> int:
    src = _one_input(args, conf)
    net = build_network(artifacts.read_transactions(src))
    out = args.out or conf.get("out")
    artifacts.write_edges(net, out if out else sys.stdout)
    return 0


def cmd_kshell(args, conf) -> int:
    src = _one_input(args, conf)
    net = artifacts.read_edges(src)
    shells = kshell_decompose(net)
    out = args.out or conf.get("out")
    artifacts.write_shells(net, shells, out if out else sys.stdout)
    return 0


def cmd_analyze(args, conf) -> int:
    out = args.out or conf.get("out")
    cfg = _pipeline_config(args, conf, out)
    if not cfg.inputs:
        raise PipelineError("ingest", "no input streams")
    _, res = run_pipeline(cfg)
    artifacts.write_fits(res.fits, sys.stdout)
    return 0


def cmd_report(args, conf) -> int:
    src = Path(_one_input(args, conf))
    stats = artifacts.read_stats(src / "stats.csv")
    fits = artifacts.read_fits(src / "fits.csv")
    report = build_report(AnalysisResult(stats=stats, fits=fits))
    out = args.out or conf.get("out")
    artifacts.write_json(report, out if out else sys.stdout, "ordering")
    return 0


def cmd_pipeline(args, conf) -> int:
    out = Path(args.out or conf.get("out") or "impactnet-out")
    cfg = _pipeline_config(args, conf, out)
    if not cfg.inputs:
        synth = _synth_config(args, conf)
        out.mkdir(parents=True, exist_ok=True)
        events_path = out / "events.csv"
        with open(events_path, "w") as fh:
            serialize_stream(generate(synth), fh)
        save_meta(synth.meta(), meta_path_for(events_path),
              {"rng_algorithm": RNG_ALGORITHM, "seed": synth.seed})
        artifacts.write_json(asdict(plant_report(synth)), out / "events.truth.json", "truth")
        cfg.inputs = [str(events_path)]
    run_pipeline(cfg)
    return 0


COMMANDS = {"synth": cmd_synth, "replay": cmd_replay, "network": cmd_network,
            "kshell": cmd_kshell, "analyze": cmd_analyze, "report": cmd_report,
            "pipeline": cmd_pipeline}


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        conf = _file_config(args)
        return COMMANDS[args.command](args, conf)
    except PipelineError as exc:
        err = exc.to_json()
    except (OrderflowError, ValueError, KeyError, OSError) as exc:
        err = {"error": str(exc), "stage": args.command}
    print(json.dumps(err), file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())

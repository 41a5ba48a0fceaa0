"""Readers and writers for the on-disk artifacts.

Every CSV starts with a ``# schema: <name>/<version>`` comment line and
every JSON object carries a ``schema`` key. Floats are written with
``repr`` so files are byte-stable across runs.
"""

from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable, Mapping

from .engine import TradeRecord, Transaction
from .impact import BinnedCurve, CellKey, CellStats, PowerLawFit
from .network import PositionPartition, ShellAssignment, TradingNetwork
from .orderflow import Side, TraderClass

SCHEMA_VERSION = 1

TRANSACTION_COLUMNS = ("txn_id", "aggressor_order_id", "resting_order_id", "buyer_id",
                       "seller_id", "price", "size", "aggressor_side")
TRADE_COLUMNS = ("aggressor_order_id", "trader_id", "trader_class", "trade_type", "omega",
                 "mid_before", "mid_after", "r", "valid_impact")
SHELL_COLUMNS = ("trader_id", "trader_class", "degree", "shell")
EDGE_COLUMNS = ("trader_i", "trader_j")
STATS_COLUMNS = ("market", "instrument", "trade_type", "trader_class", "position", "count",
                 "mean_r", "mean_omega", "r_q1", "r_median", "r_q3",
                 "omega_q1", "omega_median", "omega_q3")
CURVE_COLUMNS = ("cell", "bin_center", "bin_mean", "count")
FIT_COLUMNS = ("market", "type", "position", "trader_class", "alpha", "stderr", "n_bins",
               "r_squared", "intercept", "fit_lo", "fit_hi", "instrument")


def banner(name: str) -> str:
    return f"# schema: impactnet.{name}/{SCHEMA_VERSION}\n"


def fmt_float(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def fmt_decimal(q: Fraction | None) -> str:
    """Exact decimal for half-integer (or integer) rationals."""
    if q is None:
        return ""
    if q.denominator == 1:
        return str(q.numerator)
    if q.denominator == 2:
        whole = abs(q.numerator) // 2
        sign = "-" if q < 0 else ""
        return f"{sign}{whole}.5"
    raise ValueError(f"{q} is not a half-tick value")


def _write(path_or_fh, name: str, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    def dump(fh: IO[str]):
        fh.write(banner(name))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    if hasattr(path_or_fh, "write"):
        dump(path_or_fh)
    else:
        with open(path_or_fh, "w", newline="") as fh:
            dump(fh)


def _read(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_json(obj: dict, path_or_fh, name: str) -> None:
    data = {"schema": f"impactnet.{name}/{SCHEMA_VERSION}", **obj}
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if hasattr(path_or_fh, "write"):
        path_or_fh.write(text)
    else:
        Path(path_or_fh).write_text(text)


def write_transactions(txns: Iterable[Transaction], path) -> None:
    _write(path, "transactions", TRANSACTION_COLUMNS,
           ((t.txn_id, t.aggressor_order_id, t.resting_order_id, t.buyer_id, t.seller_id,
             t.price, t.size, t.aggressor_side.value) for t in txns))


def read_transactions(path) -> list[Transaction]:
    return [Transaction(int(r["txn_id"]), r["aggressor_order_id"], r["resting_order_id"],
                        r["buyer_id"], r["seller_id"], int(r["price"]), int(r["size"]),
                        Side(r["aggressor_side"])) for r in _read(path)]


def write_trades(trades: Iterable[TradeRecord], path) -> None:
    _write(path, "trades", TRADE_COLUMNS,
           ((t.aggressor_order_id, t.trader_id, int(t.trader_class), t.trade_type.value, t.omega,
             fmt_decimal(t.mid_before), fmt_decimal(t.mid_after), fmt_float(t.r),
             int(t.valid_impact)) for t in trades))


def write_shells(net: TradingNetwork, shells: ShellAssignment, path) -> None:
    rows = []
    for v in sorted(net.adjacency):
        cls = net.trader_class.get(v)
        rows.append((v, "" if cls is None else int(cls), net.degree(v), shells.shell[v]))
    _write(path, "shells", SHELL_COLUMNS, rows)


def read_shells(path) -> tuple[ShellAssignment, dict[str, TraderClass]]:
    shell, classes = {}, {}
    for r in _read(path):
        shell[r["trader_id"]] = int(r["shell"])
        if r["trader_class"] != "":
            classes[r["trader_id"]] = TraderClass(int(r["trader_class"]))
    return ShellAssignment(shell, max(shell.values(), default=0)), classes


def write_edges(net: TradingNetwork, path) -> None:
    _write(path, "edges", EDGE_COLUMNS, net.edges())


def read_edges(path) -> TradingNetwork:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#") and ln.strip()]
    rows = list(csv.reader(lines))
    if rows and [c.strip() for c in rows[0]] == list(EDGE_COLUMNS):
        rows = rows[1:]
    net = TradingNetwork()
    for row in rows:
        if len(row) != 2:
            raise ValueError(f"edge row needs two fields: {row}")
        net.add_edge(row[0].strip(), row[1].strip())
    return net


def write_partition(part: PositionPartition, path) -> None:
    write_json(part.to_json(), path, "partition")


def write_stats(stats: Mapping[CellKey, CellStats], path) -> None:
    rows = []
    for k in sorted(stats):
        s = stats[k]
        rows.append((k.market, k.instrument, k.trade_type, k.trader_class, k.position, s.count,
                     fmt_float(s.mean_r), fmt_float(s.mean_omega),
                     *map(fmt_float, s.r_quartiles), *map(fmt_float, s.omega_quartiles)))
    _write(path, "stats", STATS_COLUMNS, rows)


def read_stats(path) -> dict[CellKey, CellStats]:
    out = {}
    for r in _read(path):
        key = CellKey(r["trade_type"], int(r["trader_class"]), r["position"], r["market"],
                      r["instrument"])
        out[key] = CellStats(float(r["mean_r"]), float(r["mean_omega"]), int(r["count"]),
                             (float(r["r_q1"]), float(r["r_median"]), float(r["r_q3"])),
                             (float(r["omega_q1"]), float(r["omega_median"]), float(r["omega_q3"])))
    return out


def write_curves(curves: Mapping[CellKey, BinnedCurve], path) -> None:
    rows = []
    for k in sorted(curves):
        c = curves[k]
        for x, y, n in zip(c.centers, c.means, c.counts):
            rows.append((k.label, fmt_float(x), fmt_float(y), int(n)))
    _write(path, "curves", CURVE_COLUMNS, rows)


def write_fits(fits: Mapping[CellKey, PowerLawFit], path) -> None:
    rows = []
    for k in sorted(fits):
        f = fits[k]
        rows.append((k.market, k.trade_type, k.position, k.trader_class, fmt_float(f.alpha),
                     fmt_float(f.stderr), f.n_bins, fmt_float(f.r_squared),
                     fmt_float(f.intercept), fmt_float(f.fit_range[0]), fmt_float(f.fit_range[1]),
                     k.instrument))
    _write(path, "fits", FIT_COLUMNS, rows)


def read_fits(path) -> dict[CellKey, PowerLawFit]:
    out = {}
    for r in _read(path):
        key = CellKey(r["type"], int(r["trader_class"]), r["position"], r["market"],
                      r.get("instrument") or "all")
        stderr = float(r["stderr"]) if r["stderr"] else float("nan")
        out[key] = PowerLawFit(float(r["alpha"]), stderr, float(r["intercept"]),
                               (float(r["fit_lo"]), float(r["fit_hi"])), int(r["n_bins"]),
                               float(r["r_squared"]))
    return out

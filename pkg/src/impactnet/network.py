"""Trader-trader network, k-shell decomposition and position terciles."""

from __future__ import annotations

import dataclasses
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .engine import TradeRecord, Transaction
from .orderflow import TraderClass

PERIPHERY = "periphery"
INTERMEDIATE = "intermediate"
KERNEL = "kernel"
POSITIONS = (PERIPHERY, INTERMEDIATE, KERNEL)


class DegeneratePartitionError(ValueError):
    def __init__(self, distinct: Sequence[int]):
        self.distinct = list(distinct)
        super().__init__(
            f"need at least 3 distinct shell values to form terciles, got {self.distinct}")


class UnknownTraderError(KeyError):
    def __init__(self, trader_id: str):
        self.trader_id = trader_id
        super().__init__(f"trader {trader_id!r} has no shell assignment")


@dataclass
class TradingNetwork:
    adjacency: dict[str, set[str]] = field(default_factory=dict)
    trader_class: dict[str, TraderClass] = field(default_factory=dict)
    multiplicity: Counter = field(default_factory=Counter)

    @property
    def nodes(self) -> list[str]:
        return list(self.adjacency)

    def degree(self, v: str) -> int:
        return len(self.adjacency[v])

    def add_node(self, v: str) -> None:
        self.adjacency.setdefault(v, set())

    def add_edge(self, u: str, v: str) -> None:
        self.add_node(u)
        self.add_node(v)
        if u == v:
            return
        self.adjacency[u].add(v)
        self.adjacency[v].add(u)
        self.multiplicity[(u, v) if u < v else (v, u)] += 1

    def edges(self) -> list[tuple[str, str]]:
        """Sorted edge list with ``u < v``."""
        return sorted((u, v) for u, nbrs in self.adjacency.items() for v in nbrs if u < v)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]]) -> "TradingNetwork":
        net = cls()
        for u, v in edges:
            net.add_edge(u, v)
        return net


def build_network(transactions: Iterable[Transaction],
                  trader_class: Mapping[str, TraderClass] | None = None) -> TradingNetwork:
    """Undirected simple graph: one edge per trading pair, self-trades dropped.

    Self-trading traders still appear as (possibly isolated) nodes.
    """
    net = TradingNetwork()
    for t in transactions:
        net.add_edge(t.buyer_id, t.seller_id)
    if trader_class:
        net.trader_class = {v: trader_class[v] for v in net.adjacency if v in trader_class}
    return net


@dataclass(frozen=True)
class ShellAssignment:
    shell: dict[str, int]
    k_max: int

    def __getitem__(self, v: str) -> int:
        return self.shell[v]


def kshell_decompose(net: TradingNetwork | Mapping[str, set[str]]) -> ShellAssignment:
    """Shell index of every node via the bucket (degeneracy order) algorithm.

    Runs in O(V + E): nodes sit in buckets by current degree, the lowest
    bucket is processed first and each neighbour with a higher degree
    moves down one bucket.
    """
    adj = net.adjacency if isinstance(net, TradingNetwork) else net
    nodes = sorted(adj)
    n = len(nodes)
    if n == 0:
        return ShellAssignment({}, 0)
    index = {v: i for i, v in enumerate(nodes)}
    nbrs = [[index[u] for u in adj[v]] for v in nodes]
    deg = [len(x) for x in nbrs]
    max_deg = max(deg)

    # counting sort of vertices by degree
    bin_start = [0] * (max_deg + 1)
    for d in deg:
        bin_start[d] += 1
    start = 0
    for d in range(max_deg + 1):
        start, bin_start[d] = start + bin_start[d], start
    pos = [0] * n
    vert = [0] * n
    for v in range(n):
        pos[v] = bin_start[deg[v]]
        vert[pos[v]] = v
        bin_start[deg[v]] += 1
    for d in range(max_deg, 0, -1):
        bin_start[d] = bin_start[d - 1]
    bin_start[0] = 0

    for i in range(n):
        v = vert[i]
        dv = deg[v]
        for u in nbrs[v]:
            du = deg[u]
            if du > dv:
                # swap u with the first vertex of its bin, then shrink the bin
                pu = pos[u]
                pw = bin_start[du]
                w = vert[pw]
                if u != w:
                    pos[u], pos[w] = pw, pu
                    vert[pu], vert[pw] = w, u
                bin_start[du] += 1
                deg[u] = du - 1

    shell = {nodes[i]: deg[i] for i in range(n)}
    return ShellAssignment(shell, max(deg))


@dataclass(frozen=True)
class PositionPartition:
    thresholds: tuple[int, int]
    counts: dict[str, int]

    @property
    def k_p(self) -> int:
        return self.thresholds[0]

    @property
    def k_i(self) -> int:
        return self.thresholds[1]

    def label(self, k: int) -> str:
        if k <= self.k_p:
            return PERIPHERY
        if k <= self.k_i:
            return INTERMEDIATE
        return KERNEL

    def to_json(self) -> dict:
        return {"k_P": self.k_p, "k_I": self.k_i,
                "counts": {p: self.counts.get(p, 0) for p in POSITIONS}}


def partition_terciles(shells: Iterable[int | TradeRecord]) -> PositionPartition:
    """Split trades into three trade-count groups by shell index.

    Accepts shell indices or trade records carrying ``shell``. Trades with
    the same shell stay together, so cutoffs ``k_P < k_I`` are picked among
    the observed values to bring the cumulative counts as close as possible
    to N/3 and then 2N/3; remaining ties go to the smaller cutoff.
    """
    ks = [s.shell if isinstance(s, TradeRecord) else s for s in shells]
    if any(k is None or k < 1 for k in ks):
        raise ValueError("every trade needs a shell index >= 1")
    hist = Counter(ks)
    distinct = sorted(hist)
    if len(distinct) < 3:
        raise DegeneratePartitionError(distinct)
    n = len(ks)
    cum = []
    total = 0
    for k in distinct:
        total += hist[k]
        cum.append(total)

    best = None
    # kernel must stay nonempty, so k_I ranges up to the second-largest value
    for i in range(len(distinct) - 2):
        for j in range(i + 1, len(distinct) - 1):
            score = (abs(3 * cum[i] - n), abs(3 * cum[j] - 2 * n), distinct[i], distinct[j])
            if best is None or score < best[0]:
                best = (score, i, j)
    _, i, j = best
    counts = {PERIPHERY: cum[i], INTERMEDIATE: cum[j] - cum[i], KERNEL: n - cum[j]}
    return PositionPartition((distinct[i], distinct[j]), counts)


def attach_positions(trades: Iterable[TradeRecord], shells: ShellAssignment,
                     part: PositionPartition | None) -> list[TradeRecord]:
    """Stamp each trade with its aggressor's shell and position label.

    Shell-0 traders (isolated after self-trade removal) get ``position=None``.
    """
    out = []
    for t in trades:
        k = shells.shell.get(t.trader_id)
        if k is None:
            raise UnknownTraderError(t.trader_id)
        position = part.label(k) if (part is not None and k >= 1) else None
        out.append(dataclasses.replace(t, shell=k, position=position))
    return out

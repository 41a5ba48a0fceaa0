"""Independent oracles and fixture builders shared by the test modules."""

from __future__ import annotations

import bisect
from fractions import Fraction

import numpy as np

from impactnet.engine import MatchingEngine
from impactnet.orderflow import Action, OrderEvent, Side, TraderClass


def ev(seq, side, price, size, order_id=None, trader="T1", cls=0, action="S"):
    return OrderEvent(seq, seq, order_id or f"O{seq}", trader, TraderClass(cls),
                      Side(side), price, size, Action(action))


def cancel(seq, order_id, side="B", trader="T1", cls=0):
    return OrderEvent(seq, seq, order_id, trader, TraderClass(cls), Side(side), None, 0,
                      Action.CANCEL)


def book_events(bids=(), asks=(), start=1, trader_prefix="M"):
    """Resting orders: ``bids``/``asks`` are (price, size) pairs."""
    out = []
    seq = start
    for side, levels in (("B", bids), ("S", asks)):
        for price, size in levels:
            out.append(ev(seq, side, price, size, trader=f"{trader_prefix}{seq}"))
            seq += 1
    return out


def random_stream(n, seed, center=1000, spread=15, cancel_p=0.15, market_p=0.05,
                  n_traders=40, max_size=100):
    """Valid random stream: cancels only reference already submitted ids."""
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    sides = rng.random(n) < 0.5
    offs = rng.integers(-spread, spread + 1, n)
    sizes = rng.integers(1, max_size + 1, n)
    mkt = rng.random(n) < market_p
    traders = rng.integers(0, n_traders, n)
    picks = rng.random(n)
    events = []
    submitted = []
    for i in range(n):
        seq = i + 1
        trader = f"T{traders[i]}"
        cls = TraderClass(int(traders[i]) % 2)
        if submitted and u[i] < cancel_p:
            window = submitted[-200:]
            oid, side, owner, ocls = window[int(picks[i] * len(window))]
            events.append(OrderEvent(seq, seq, oid, owner, ocls, side, None, 0, Action.CANCEL))
            continue
        side = Side.BUY if sides[i] else Side.SELL
        price = None if mkt[i] else center + int(offs[i])
        oid = f"O{seq}"
        events.append(OrderEvent(seq, seq, oid, trader, cls, side, price, int(sizes[i]),
                                 Action.SUBMIT))
        submitted.append((oid, side, trader, cls))
    return events


class ReferenceBook:
    """Deliberately naive matcher: per-side lists kept sorted by (price key, seq).

    Produces ``(aggressor, resting, buyer, seller, price, size)`` tuples and
    per-order ``(order_id, executed, mid_before, mid_after)``.
    """

    def __init__(self):
        self.sides = {Side.BUY: [], Side.SELL: []}  # entries: [key, seq, order_id, trader, rem]
        self.by_id = {}
        self.fills = []
        self.orders = []

    @staticmethod
    def _key(side, price):
        return -price if side is Side.BUY else price

    def _best(self, side):
        lst = self.sides[side]
        while lst and lst[0][4] == 0:
            lst.pop(0)
        if not lst:
            return None
        k = lst[0][0]
        return -k if side is Side.BUY else k

    def mid(self):
        b, a = self._best(Side.BUY), self._best(Side.SELL)
        if b is None or a is None:
            return None
        return Fraction(a + b, 2)

    def process(self, e: OrderEvent):
        if e.action is Action.CANCEL:
            entry = self.by_id.get(e.order_id)
            if entry is not None:
                entry[4] = 0
            return
        mid_before = self.mid()
        opp = self.sides[e.side.opposite]
        rem = e.size
        executed = 0
        while rem:
            best = self._best(e.side.opposite)
            if best is None:
                break
            if e.price is not None:
                if e.side is Side.BUY and best > e.price:
                    break
                if e.side is Side.SELL and best < e.price:
                    break
            entry = opp[0]
            q = min(rem, entry[4])
            entry[4] -= q
            rem -= q
            executed += q
            buyer, seller = (e.trader_id, entry[3]) if e.side is Side.BUY else (entry[3], e.trader_id)
            self.fills.append((e.order_id, entry[2], buyer, seller, best, q))
        if rem and e.price is not None:
            entry = [self._key(e.side, e.price), e.seq, e.order_id, e.trader_id, rem]
            bisect.insort(self.sides[e.side], entry)
            self.by_id[e.order_id] = entry
        if executed:
            self.orders.append((e.order_id, executed, mid_before, self.mid()))


def core_sets(adj):
    """k-cores by literal definition: repeatedly strip nodes of degree < k."""
    cores = {}
    k = 0
    alive = set(adj)
    while alive:
        k += 1
        changed = True
        while changed:
            changed = False
            for v in list(alive):
                if sum(1 for u in adj[v] if u in alive) < k:
                    alive.discard(v)
                    changed = True
        cores[k] = set(alive)
    return cores


def check_shells(adj, shell):
    """Return a list of mismatch descriptions (empty when ``shell`` is right)."""
    problems = []
    cores = core_sets(adj)
    k_max = max((k for k, c in cores.items() if c), default=0)
    for v in adj:
        expected = max((k for k, c in cores.items() if v in c), default=0)
        if shell[v] != expected:
            problems.append(f"{v}: shell {shell[v]} != {expected}")
    for k in range(1, k_max + 1):
        members = {v for v in adj if shell[v] >= k}
        if members != cores[k]:
            problems.append(f"{k}-core mismatch")
        for v in members:
            if sum(1 for u in adj[v] if u in members) < k:
                problems.append(f"{v} has fewer than {k} neighbours in the {k}-core")
        peeled = cores[k] - cores.get(k + 1, set())
        if peeled != {v for v in adj if shell[v] == k}:
            problems.append(f"pruning at level {k} does not remove exactly the shell-{k} nodes")
    return problems


def er_graph(n, p, rng):
    adj = {i: set() for i in range(n)}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                adj[i].add(j)
                adj[j].add(i)
    return adj


def check_invariants(events, res):
    """Conservation, priority, sign; returns nothing, asserts."""
    submitted = {e.order_id: e for e in events if e.action.value == "S"}
    by_aggr = {}
    for t in res.transactions:
        by_aggr.setdefault(t.aggressor_order_id, []).append(t)
    assert set(by_aggr) == {tr.aggressor_order_id for tr in res.trades}
    for tr in res.trades:
        order = submitted[tr.aggressor_order_id]
        fills = by_aggr[tr.aggressor_order_id]
        assert sum(f.size for f in fills) == tr.omega <= order.size
        assert (tr.omega == order.size) == tr.trade_type.is_filled
        assert tr.trade_type.is_buy == (order.side is Side.BUY)
        prices = [f.price for f in fills]
        assert prices == sorted(prices, reverse=order.side is Side.SELL)
        for a, b in zip(fills, fills[1:]):
            if a.price == b.price:
                assert submitted[a.resting_order_id].seq < submitted[b.resting_order_id].seq
        if order.price is not None:
            assert all((p <= order.price) if order.side is Side.BUY else (p >= order.price)
                       for p in prices)
        if tr.valid_impact:
            assert tr.r == float((tr.mid_after - tr.mid_before) / tr.mid_before)
            assert tr.r >= 0 if tr.trade_type.is_buy else tr.r <= 0


def book_ok(_, engine: MatchingEngine, full_every: int = 1):
    """Uncrossed book after every event; every resting order alive every ``full_every`` events."""
    b, a = engine.book.best_bid(), engine.book.best_ask()
    assert b is None or a is None or b < a
    book_ok.calls = getattr(book_ok, "calls", 0) + 1
    if book_ok.calls % full_every == 0:
        for side in (engine.book.bids, engine.book.asks):
            assert all(o.remaining > 0 for o in side.orders())

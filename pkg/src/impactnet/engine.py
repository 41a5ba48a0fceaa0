"""Price-time priority continuous double auction replay.

The book keeps one FIFO queue per price level and a lazily-cleaned heap of
level prices per side. Cancelled orders are zeroed in place and skipped at
match time, so cancels are O(1).

Mid-prices are handled as doubled integers (``best_bid + best_ask``) inside
the engine so that half-tick mids stay exact; they are exposed as
:class:`fractions.Fraction`.
"""

from __future__ import annotations

import enum
import heapq
import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .orderflow import Action, InstrumentMeta, OrderEvent, Side, TraderClass

log = logging.getLogger(__name__)


class TradeType(enum.Enum):
    PB = "PB"
    PS = "PS"
    FB = "FB"
    FS = "FS"

    @property
    def is_buy(self) -> bool:
        return self in (TradeType.PB, TradeType.FB)

    @property
    def is_filled(self) -> bool:
        return self in (TradeType.FB, TradeType.FS)


class ReplayError(Exception):
    def __init__(self, message: str, seq: int | None = None, position: int | None = None):
        self.seq = seq
        self.position = position
        where = f" at event #{position} (seq={seq})" if position is not None else ""
        super().__init__(message + where)


class InvariantViolation(ReplayError):
    pass


@dataclass(frozen=True, slots=True)
class Transaction:
    txn_id: int
    aggressor_order_id: str
    resting_order_id: str
    buyer_id: str
    seller_id: str
    price: int
    size: int
    aggressor_side: Side

    @property
    def self_trade(self) -> bool:
        return self.buyer_id == self.seller_id


@dataclass(frozen=True, slots=True)
class TradeRecord:
    aggressor_order_id: str
    trader_id: str
    trader_class: TraderClass
    trade_type: TradeType
    omega: int
    mid_before: Fraction | None
    mid_after: Fraction | None
    r: float | None
    counterparty_ids: frozenset[str] = frozenset()
    # attached after network analysis
    shell: int | None = None
    position: str | None = None
    instrument_id: str | None = None
    market: str | None = None

    @property
    def valid_impact(self) -> bool:
        return self.r is not None


class RestingOrder:
    __slots__ = ("order_id", "trader_id", "trader_class", "side", "price",
                 "remaining", "arrival_seq")

    def __init__(self, order_id, trader_id, trader_class, side, price, remaining, arrival_seq):
        self.order_id = order_id
        self.trader_id = trader_id
        self.trader_class = trader_class
        self.side = side
        self.price = price
        self.remaining = remaining
        self.arrival_seq = arrival_seq

    def __repr__(self):
        return (f"RestingOrder({self.order_id!r}, {self.trader_id!r}, {self.side.value}, "
                f"{self.price}, rem={self.remaining}, seq={self.arrival_seq})")


class _Level:
    __slots__ = ("queue", "volume")

    def __init__(self):
        self.queue: deque[RestingOrder] = deque()
        self.volume = 0


class BookSide:
    """One side of the book. ``sign`` is +1 for asks (lowest first), -1 for bids."""

    def __init__(self, side: Side):
        self.side = side
        self.sign = 1 if side is Side.SELL else -1
        self.levels: dict[int, _Level] = {}
        self._heap: list[int] = []

    def best(self) -> int | None:
        heap, levels = self._heap, self.levels
        while heap:
            price = heap[0] * self.sign
            if price in levels:
                return price
            heapq.heappop(heap)
        return None

    def add(self, order: RestingOrder) -> None:
        level = self.levels.get(order.price)
        if level is None:
            level = self.levels[order.price] = _Level()
            heapq.heappush(self._heap, order.price * self.sign)
        level.queue.append(order)
        level.volume += order.remaining

    def remove(self, order: RestingOrder) -> None:
        level = self.levels[order.price]
        level.volume -= order.remaining
        order.remaining = 0
        if level.volume == 0:
            del self.levels[order.price]

    def depth(self) -> list[tuple[int, int]]:
        """(price, volume) from best outward."""
        return sorted(((p, lv.volume) for p, lv in self.levels.items()),
                      key=lambda pv: pv[0] * self.sign)

    def orders(self) -> list[RestingOrder]:
        out = []
        for price, _ in self.depth():
            out.extend(o for o in self.levels[price].queue if o.remaining > 0)
        return out

    def __len__(self):
        return len(self.levels)


@dataclass
class BookState:
    bids: BookSide = field(default_factory=lambda: BookSide(Side.BUY))
    asks: BookSide = field(default_factory=lambda: BookSide(Side.SELL))

    def best_bid(self) -> int | None:
        return self.bids.best()

    def best_ask(self) -> int | None:
        return self.asks.best()

    def side(self, side: Side) -> BookSide:
        return self.bids if side is Side.BUY else self.asks

    def doubled_mid(self) -> int | None:
        b, a = self.bids.best(), self.asks.best()
        if b is None or a is None:
            return None
        return a + b


def mid_price(book: BookState) -> Fraction | None:
    """Exact mid of the best quotes, or None when a side is empty."""
    s = book.doubled_mid()
    return None if s is None else Fraction(s, 2)


def classify_trade(order: OrderEvent, executed: int, txns: Sequence[Transaction] = ()) -> TradeType:
    if executed < 1 or executed > order.size:
        raise InvariantViolation(
            f"executed size {executed} outside [1, {order.size}] for order {order.order_id}")
    filled = executed == order.size
    if order.side is Side.BUY:
        return TradeType.FB if filled else TradeType.PB
    return TradeType.FS if filled else TradeType.PS


@dataclass
class ReplayResult:
    transactions: list[Transaction]
    trades: list[TradeRecord]
    book: BookState
    diagnostics: list[str]

    def __iter__(self):
        # allows ``txns, trades, book = replay(...)``
        return iter((self.transactions, self.trades, self.book))


class MatchingEngine:
    """Stateful single-instrument engine; feed events with :meth:`process`."""

    def __init__(self, meta: InstrumentMeta | None = None):
        self.meta = meta
        self.book = BookState()
        self.transactions: list[Transaction] = []
        self.trades: list[TradeRecord] = []
        self.diagnostics: list[str] = []
        self._live: dict[str, RestingOrder] = {}
        self._seen: set[str] = set()
        self._position = 0
        self._instrument = meta.instrument_id if meta else None
        self._market = meta.market_segment.value if meta else None

    def process(self, ev: OrderEvent) -> TradeRecord | None:
        self._position += 1
        if ev.action is Action.CANCEL:
            self._cancel(ev)
            return None
        if ev.order_id in self._seen:
            raise ReplayError(f"duplicate order_id {ev.order_id!r}", ev.seq, self._position)
        if ev.size <= 0:
            raise ReplayError(f"non-positive size {ev.size}", ev.seq, self._position)
        self._seen.add(ev.order_id)
        return self._submit(ev)

    def _cancel(self, ev: OrderEvent) -> None:
        order = self._live.pop(ev.order_id, None)
        if order is None:
            if ev.order_id in self._seen:
                self.diagnostics.append(
                    f"seq={ev.seq}: cancel of inactive order {ev.order_id} ignored")
                return
            raise ReplayError(f"cancel of unknown order {ev.order_id!r}", ev.seq, self._position)
        self.book.side(order.side).remove(order)

    def _submit(self, ev: OrderEvent) -> TradeRecord | None:
        book = self.book
        mid_before = book.doubled_mid()
        opposite = book.asks if ev.side is Side.BUY else book.bids
        limit = ev.price
        sign = opposite.sign
        remaining = ev.size
        txns = self.transactions
        n_before = len(txns)
        counterparties = set()
        live = self._live
        is_buy = ev.side is Side.BUY

        while remaining:
            best = opposite.best()
            if best is None:
                break
            # buy crosses if ask <= limit; sell crosses if bid >= limit
            if limit is not None and best * sign > limit * sign:
                break
            level = opposite.levels[best]
            queue = level.queue
            while remaining and queue:
                resting = queue[0]
                if resting.remaining == 0:
                    queue.popleft()
                    continue
                qty = min(remaining, resting.remaining)
                remaining -= qty
                resting.remaining -= qty
                level.volume -= qty
                if is_buy:
                    buyer, seller = ev.trader_id, resting.trader_id
                else:
                    buyer, seller = resting.trader_id, ev.trader_id
                txns.append(Transaction(len(txns) + 1, ev.order_id, resting.order_id,
                                        buyer, seller, best, qty, ev.side))
                counterparties.add(resting.trader_id)
                if resting.remaining == 0:
                    queue.popleft()
                    del live[resting.order_id]
            if level.volume == 0:
                del opposite.levels[best]

        if remaining and limit is not None:
            order = RestingOrder(ev.order_id, ev.trader_id, ev.trader_class, ev.side,
                                 limit, remaining, ev.seq)
            book.side(ev.side).add(order)
            live[ev.order_id] = order

        executed = ev.size - remaining
        if executed == 0:
            return None
        mid_after = book.doubled_mid()
        if mid_before is not None and mid_after is not None:
            r = (mid_after - mid_before) / mid_before
            mb, ma = Fraction(mid_before, 2), Fraction(mid_after, 2)
        else:
            r = None
            mb = None if mid_before is None else Fraction(mid_before, 2)
            ma = None if mid_after is None else Fraction(mid_after, 2)
        trade = TradeRecord(ev.order_id, ev.trader_id, ev.trader_class,
                            classify_trade(ev, executed, txns[n_before:]),
                            executed, mb, ma, r, frozenset(counterparties),
                            instrument_id=self._instrument, market=self._market)
        self.trades.append(trade)
        return trade

    def result(self) -> ReplayResult:
        return ReplayResult(self.transactions, self.trades, self.book, self.diagnostics)


def replay(events: Iterable[OrderEvent], meta: InstrumentMeta | None = None,
           on_event: Callable[[OrderEvent, MatchingEngine], None] | None = None) -> ReplayResult:
    """Replay ``events`` through a fresh engine.

    ``on_event`` is called after each event with the engine, which is handy
    for checking book invariants step by step.
    """
    engine = MatchingEngine(meta)
    process = engine.process
    if on_event is None:
        for ev in events:
            process(ev)
    else:
        for ev in events:
            process(ev)
            on_event(ev, engine)
    for msg in engine.diagnostics:
        log.debug(msg)
    return engine.result()

"""Order-event streams: CSV parsing, validation and serialization.

Prices are integers in instrument price units and must be multiples of the
tick size. ``seq`` is the only ordering authority; timestamps are carried
along for session checks and nothing else.
"""

from __future__ import annotations

import enum
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

COLUMNS = ("seq", "timestamp", "order_id", "trader_id", "trader_class",
           "side", "price", "size", "action")
EVENTS_SCHEMA = "impactnet.events/1"
META_SCHEMA = "impactnet.meta/1"


class TraderClass(enum.IntEnum):
    INDIVIDUAL = 0
    INSTITUTION = 1


class Side(enum.Enum):
    BUY = "B"
    SELL = "S"

    @property
    def opposite(self) -> "Side":
        return Side.SELL if self is Side.BUY else Side.BUY


class Action(enum.Enum):
    SUBMIT = "S"
    CANCEL = "C"


class MarketSegment(enum.Enum):
    A_SHARE = "A_share"
    B_SHARE = "B_share"


class OrderflowError(Exception):
    """Base class for every ingestion failure."""


@dataclass(frozen=True)
class RowError:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


class StreamParseError(OrderflowError):
    def __init__(self, errors: Sequence[RowError]):
        self.errors = list(errors)
        head = "; ".join(str(e) for e in self.errors[:5])
        more = f" (+{len(self.errors) - 5} more)" if len(self.errors) > 5 else ""
        super().__init__(f"{len(self.errors)} malformed row(s): {head}{more}")


class NonMonotoneSequenceError(OrderflowError):
    def __init__(self, seq: int, previous: int, line: int):
        self.seq = seq
        self.previous = previous
        self.line = line
        super().__init__(
            f"non-monotone sequence at line {line}: seq={seq} follows seq={previous}")


@dataclass(frozen=True, slots=True)
class OrderEvent:
    seq: int
    timestamp: int
    order_id: str
    trader_id: str
    trader_class: TraderClass
    side: Side
    price: int | None
    size: int
    action: Action

    @property
    def is_market(self) -> bool:
        return self.price is None


@dataclass(frozen=True)
class InstrumentMeta:
    instrument_id: str
    market_segment: MarketSegment = MarketSegment.A_SHARE
    tick_size: int = 1
    session_bounds: tuple[int, int] = (0, 2**62)

    def __post_init__(self):
        if self.tick_size <= 0:
            raise ValueError(f"tick_size must be positive, got {self.tick_size}")
        lo, hi = self.session_bounds
        if lo > hi:
            raise ValueError(f"session bounds out of order: {self.session_bounds}")

    def to_json(self) -> dict:
        return {
            "instrument_id": self.instrument_id,
            "market_segment": self.market_segment.value,
            "tick_size": self.tick_size,
            "session_open": self.session_bounds[0],
            "session_close": self.session_bounds[1],
        }

    @classmethod
    def from_json(cls, data: dict) -> "InstrumentMeta":
        try:
            return cls(
                instrument_id=str(data["instrument_id"]),
                market_segment=MarketSegment(data["market_segment"]),
                tick_size=int(data["tick_size"]),
                session_bounds=(int(data["session_open"]), int(data["session_close"])),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise OrderflowError(f"bad instrument metadata: {exc}") from exc


def meta_path_for(csv_path: str | Path) -> Path:
    """Sidecar location: ``foo.csv`` -> ``foo.meta.json``."""
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.json")


def load_meta(path: str | Path) -> InstrumentMeta:
    with open(path) as fh:
        return InstrumentMeta.from_json(json.load(fh))


def save_meta(meta: InstrumentMeta, path: str | Path, extra: dict | None = None) -> None:
    """Write the sidecar; ``extra`` keys (e.g. provenance) are stored alongside and ignored on load."""
    with open(path, "w") as fh:
        data = {**(extra or {}), "schema": META_SCHEMA, **meta.to_json()}
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


_CLASS_CODES = {"0": TraderClass.INDIVIDUAL, "1": TraderClass.INSTITUTION}
_SIDE_CODES = {"B": Side.BUY, "S": Side.SELL}
_ACTION_CODES = {"S": Action.SUBMIT, "C": Action.CANCEL}


def _parse_int(text: str, name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"{name} is not an integer: {text!r}") from None


def _parse_row(row: list[str], meta: InstrumentMeta) -> OrderEvent:
    if len(row) != len(COLUMNS):
        raise ValueError(f"expected {len(COLUMNS)} fields, got {len(row)}")
    seq_s, ts_s, oid, tid, cls_s, side_s, price_s, size_s, action_s = (s.strip() for s in row)
    seq = _parse_int(seq_s, "seq")
    ts = _parse_int(ts_s, "timestamp")
    if not oid:
        raise ValueError("empty order_id")
    if not tid:
        raise ValueError("empty trader_id")
    if cls_s not in _CLASS_CODES:
        raise ValueError(f"unknown trader_class code {cls_s!r}")
    if side_s not in _SIDE_CODES:
        raise ValueError(f"unknown side {side_s!r}")
    if action_s not in _ACTION_CODES:
        raise ValueError(f"unknown action {action_s!r}")
    action = _ACTION_CODES[action_s]
    price = None
    if price_s:
        price = _parse_int(price_s, "price")
        if price <= 0 or price % meta.tick_size:
            raise ValueError(
                f"price {price} is not a positive multiple of tick size {meta.tick_size}")
    if size_s:
        size = _parse_int(size_s, "size")
    elif action is Action.CANCEL:
        size = 0
    else:
        raise ValueError("missing size on submit")
    if action is Action.SUBMIT and size <= 0:
        raise ValueError(f"submit size must be positive, got {size}")
    if size < 0:
        raise ValueError(f"negative size {size}")
    return OrderEvent(seq, ts, oid, tid, _CLASS_CODES[cls_s], _SIDE_CODES[side_s],
                      price, size, action)


def _data_lines(text: str) -> Iterable[tuple[int, str]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith("#") or not line.strip():
            continue
        yield lineno, line


def parse_stream(source: bytes | str | IO, meta: InstrumentMeta) -> list[OrderEvent]:
    """Parse a CSV order-event stream.

    ``source`` may be raw bytes, decoded text or a file object. Leading
    ``#`` comment lines (schema banners) and blank lines are skipped.

    Raises :class:`StreamParseError` listing every malformed row, or
    :class:`NonMonotoneSequenceError` for the first ``seq`` that does not
    strictly increase.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            text = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise StreamParseError([RowError(0, f"not UTF-8: {exc}")]) from None
    else:
        text = source

    lines = list(_data_lines(text))
    if not lines:
        raise StreamParseError([RowError(0, "missing header")])
    header_line, header = lines[0]
    if [h.strip() for h in header.split(",")] != list(COLUMNS):
        raise StreamParseError([RowError(header_line, f"bad header {header!r}")])

    events: list[OrderEvent] = []
    errors: list[RowError] = []
    last_seq = None
    for lineno, line in lines[1:]:
        try:
            ev = _parse_row(line.split(","), meta)
        except ValueError as exc:
            errors.append(RowError(lineno, str(exc) or type(exc).__name__))
            continue
        if last_seq is not None and ev.seq <= last_seq:
            raise NonMonotoneSequenceError(ev.seq, last_seq, lineno)
        last_seq = ev.seq
        events.append(ev)
    if errors:
        raise StreamParseError(errors)
    return events


def read_stream(path: str | Path, meta: InstrumentMeta | None = None) -> tuple[list[OrderEvent], InstrumentMeta]:
    """Read ``path`` and its sidecar metadata (falls back to defaults named after the file)."""
    path = Path(path)
    if meta is None:
        sidecar = meta_path_for(path)
        meta = load_meta(sidecar) if sidecar.exists() else InstrumentMeta(path.stem)
    with open(path, "rb") as fh:
        return parse_stream(fh.read(), meta), meta


def format_row(ev: OrderEvent) -> str:
    price = "" if ev.price is None else str(ev.price)
    size = "" if (ev.action is Action.CANCEL and ev.size == 0) else str(ev.size)
    return (f"{ev.seq},{ev.timestamp},{ev.order_id},{ev.trader_id},{int(ev.trader_class)},"
            f"{ev.side.value},{price},{size},{ev.action.value}")


def serialize_stream(events: Iterable[OrderEvent], out: IO[str] | None = None) -> str | None:
    """Write events in the canonical CSV layout; returns the text when ``out`` is None."""
    buf = io.StringIO() if out is None else out
    buf.write(f"# schema: {EVENTS_SCHEMA}\n")
    buf.write(",".join(COLUMNS) + "\n")
    for ev in events:
        buf.write(format_row(ev) + "\n")
    return buf.getvalue() if out is None else None


@dataclass
class ValidationReport:
    dangling_cancels: list[str] = field(default_factory=list)
    duplicate_order_ids: list[str] = field(default_factory=list)
    out_of_session: list[int] = field(default_factory=list)  # seq numbers

    @property
    def accepted(self) -> bool:
        return not (self.dangling_cancels or self.duplicate_order_ids or self.out_of_session)


def validate_stream(events: Sequence[OrderEvent],
                    meta: InstrumentMeta | None = None) -> ValidationReport:
    """Check referential integrity of a parsed stream; never raises."""
    report = ValidationReport()
    seen: set[str] = set()
    dup: set[str] = set()
    lo, hi = meta.session_bounds if meta is not None else (None, None)
    for ev in events:
        if lo is not None and not (lo <= ev.timestamp <= hi):
            report.out_of_session.append(ev.seq)
        if ev.action is Action.SUBMIT:
            if ev.order_id in seen and ev.order_id not in dup:
                dup.add(ev.order_id)
                report.duplicate_order_ids.append(ev.order_id)
            seen.add(ev.order_id)
        elif ev.order_id not in seen:
            report.dangling_cancels.append(ev.order_id)
    return report

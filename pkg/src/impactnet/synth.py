"""Seeded synthetic order flow with planted impact exponent and size structure.

The book is kept around a fixed anchor mid ``M``. Level ``j`` on each side
(price ``M -/+ (j+1)*tick``) holds enough volume that the cumulative volume
through level ``j`` is ``A * (j + 1/2) ** (1/alpha)``. A filled aggressive
order of size ``w`` therefore clears ``round((w/A) ** alpha)`` levels and moves
the mid by half that many ticks, so impact grows like ``w ** alpha`` once it
goes through the real matching engine. After every aggressive order the
consumed levels are topped back up, with a per-cycle log-normal volume
factor that supplies the multiplicative noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .orderflow import (Action, InstrumentMeta, MarketSegment, OrderEvent, Side,
                        TraderClass)

RNG_ALGORITHM = "numpy.random.PCG64 via SeedSequence.spawn(4)"


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 7
    n_traders: int = 20_000
    institution_fraction: float = 0.2
    size_tail_individual: float = 1.5
    size_scale_individual: float = 200.0
    size_tail_institution: float = 1.5
    size_scale_institution: float = 800.0
    planted_alpha: float = 2 / 3
    noise_sigma: float = 0.1
    n_events: int = 100_000
    hub_bias: float = 1.0
    # aggressor size multiplier ~ (relative activity) ** kernel_size_bias
    kernel_size_bias: float = 0.25
    partial_fraction: float = 0.2
    market_order_fraction: float = 0.5
    # depth unit A in shares; None -> 5% of the individual size scale
    depth_unit: float | None = None
    # largest order as a multiple of the trader's size scale
    size_cap: float = 400.0
    tick_size: int = 1
    initial_mid: int = 100_000
    instrument_id: str = "SYN"
    market_segment: str = "A_share"

    def __post_init__(self):
        if self.n_events <= 0:
            raise ValueError("n_events must be positive")
        if not 0 < self.planted_alpha < 1.5:
            raise ValueError(f"planted_alpha must be in (0, 1.5), got {self.planted_alpha}")
        for name in ("institution_fraction", "partial_fraction", "market_order_fraction"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must be a probability, got {v}")
        if self.n_traders < 2:
            raise ValueError("need at least two traders")
        if min(self.size_tail_individual, self.size_tail_institution) <= 1:
            raise ValueError("size tail exponents must exceed 1 for a finite mean")
        if min(self.size_scale_individual, self.size_scale_institution) <= 0:
            raise ValueError("size scales must be positive")
        if self.noise_sigma < 0 or self.hub_bias < 0:
            raise ValueError("noise_sigma and hub_bias must be non-negative")
        if self.tick_size <= 0 or self.initial_mid % self.tick_size:
            raise ValueError("initial_mid must be a multiple of a positive tick_size")
        MarketSegment(self.market_segment)

    @property
    def unit(self) -> float:
        return self.depth_unit if self.depth_unit is not None else 0.05 * self.size_scale_individual

    def meta(self) -> InstrumentMeta:
        return InstrumentMeta(self.instrument_id, MarketSegment(self.market_segment),
                              self.tick_size, (0, 10 * self.n_events))

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class GroundTruth:
    seed: int
    planted_alpha: float
    size_scales: dict
    size_ratio: float
    hub_bias: float
    kernel_size_bias: float
    noise_sigma: float
    rng_algorithm: str = RNG_ALGORITHM
    # alpha is planted identically in every class/position/market cell
    alpha_by_cell: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def plant_report(config: SynthConfig) -> GroundTruth:
    cells = {f"{tt}/{cls}/{pos}": config.planted_alpha
             for tt in ("FB", "FS") for cls in (0, 1)
             for pos in ("periphery", "intermediate", "kernel", "all")}
    return GroundTruth(
        seed=config.seed,
        planted_alpha=config.planted_alpha,
        size_scales={"individual": config.size_scale_individual,
                     "institution": config.size_scale_institution},
        size_ratio=config.size_scale_institution / config.size_scale_individual,
        hub_bias=config.hub_bias,
        kernel_size_bias=config.kernel_size_bias,
        noise_sigma=config.noise_sigma,
        alpha_by_cell=cells,
    )


def level_profile(unit: float, alpha: float, n_levels: int) -> np.ndarray:
    """Integer volume per level with cumulative ``round(unit * (j + 1/2) ** (1/alpha))``."""
    cum = np.rint(unit * (np.arange(n_levels) + 0.5) ** (1.0 / alpha)).astype(np.int64)
    vol = np.diff(cum, prepend=0)
    return np.maximum(vol, 1)


class _Blocks:
    """Pre-drawn random numbers served one at a time."""

    def __init__(self, draw, block: int = 8192):
        self._draw = draw
        self._block = block
        self._buf = draw(block)
        self._i = 0

    def next(self):
        if self._i == len(self._buf):
            self._buf = self._draw(self._block)
            self._i = 0
        v = self._buf[self._i]
        self._i += 1
        return v


class _Builder:
    def __init__(self, config: SynthConfig):
        self.cfg = config
        self.events: list[OrderEvent] = []
        self.n_orders = 0
        rng_traders, rng_agg, rng_passive, rng_misc = (
            np.random.Generator(np.random.PCG64(s))
            for s in np.random.SeedSequence(config.seed).spawn(4))

        n = config.n_traders
        self.ids = [f"T{i:05d}" for i in range(n)]
        self.classes = [TraderClass.INSTITUTION if u < config.institution_fraction
                        else TraderClass.INDIVIDUAL for u in rng_traders.random(n)]
        rank = rng_traders.permutation(n) + 1.0
        act = rank ** -config.hub_bias
        act /= act.sum()
        rel = act * n
        scales = np.where(np.array([int(c) for c in self.classes]) == 1,
                          config.size_scale_institution, config.size_scale_individual)
        self.scales = scales * rel ** config.kernel_size_bias
        self.tails = [config.size_tail_institution if c is TraderClass.INSTITUTION
                      else config.size_tail_individual for c in self.classes]

        passive = rank ** (-config.hub_bias / 2)
        passive /= passive.sum()
        self.agg = _Blocks(lambda k: rng_agg.choice(n, size=k, p=act))
        self.passive = _Blocks(lambda k: rng_passive.choice(n, size=k, p=passive))
        self.unif = _Blocks(lambda k: rng_misc.random(k))
        self.normal = _Blocks(lambda k: rng_misc.standard_normal(k))

        alpha = config.planted_alpha
        max_size = float(self.scales.max() * config.size_cap)
        self.n_levels = int(math.ceil((max_size / config.unit) ** alpha)) + 3
        # short streams would spend their whole budget seeding; filled sizes are capped at depth
        self.n_levels = min(self.n_levels, max(20, config.n_events // 20))
        self.profile = level_profile(config.unit, alpha, self.n_levels)
        # resting volume per level; index 0 is the best level
        self.book = {Side.BUY: np.zeros(self.n_levels, dtype=np.int64),
                     Side.SELL: np.zeros(self.n_levels, dtype=np.int64)}
        self.noise_scale = config.noise_sigma / alpha

    # -- emission ----------------------------------------------------------

    @property
    def full(self) -> bool:
        return len(self.events) >= self.cfg.n_events

    def price(self, side: Side, level: int) -> int:
        # side is the resting side the level belongs to
        t = self.cfg.tick_size
        off = (level + 1) * t
        return self.cfg.initial_mid - off if side is Side.BUY else self.cfg.initial_mid + off

    def emit(self, trader: int, side: Side, price: int | None, size: int,
             action: Action = Action.SUBMIT, order_id: str | None = None) -> str:
        if order_id is None:
            self.n_orders += 1
            order_id = f"O{self.n_orders}"
        seq = len(self.events) + 1
        self.events.append(OrderEvent(seq, 10 * seq, order_id, self.ids[trader],
                                      self.classes[trader], side, price, size, action))
        return order_id

    def post(self, side: Side, level: int, size: int) -> None:
        if size <= 0 or self.full:
            return
        self.emit(int(self.passive.next()), side, self.price(side, level), int(size))
        self.book[side][level] += size

    # -- phases ------------------------------------------------------------

    def seed_book(self) -> None:
        for j in range(self.n_levels):
            for side in (Side.BUY, Side.SELL):
                self.post(side, j, int(self.profile[j]))

    def draw_size(self, trader: int) -> int:
        tail = self.tails[trader]
        u = self.unif.next()
        # Lomax (Pareto II): density decays like w^-(1+tail), mass down to zero
        w = self.scales[trader] * ((1.0 - u) ** (-1.0 / tail) - 1.0)
        w = min(w, self.scales[trader] * self.cfg.size_cap)
        return max(1, int(round(w)))

    def consume(self, side: Side, size: int) -> int:
        """Shadow-match ``size`` against resting ``side``; returns levels fully cleared."""
        vol = self.book[side]
        j = 0
        while size > 0 and j < self.n_levels:
            take = min(size, int(vol[j]))
            vol[j] -= take
            size -= take
            if vol[j] == 0:
                j += 1
        return j

    def refill(self, side: Side, upto: int) -> None:
        factor = math.exp(self.noise_scale * self.normal.next())
        vol = self.book[side]
        for j in range(min(upto + 1, self.n_levels)):
            target = max(1, int(round(self.profile[j] * factor)))
            self.post(side, j, target - int(vol[j]))

    def cycle(self) -> None:
        cfg = self.cfg
        trader = int(self.agg.next())
        side = Side.BUY if self.unif.next() < 0.5 else Side.SELL
        resting = side.opposite
        size = self.draw_size(trader)
        vol = self.book[resting]

        partial = self.unif.next() < cfg.partial_fraction
        if partial:
            cum = np.cumsum(vol)
            full_level = int(np.searchsorted(cum, size))  # level where the order would complete
            if full_level == 0:
                partial = False
        if partial:
            k = int(self.unif.next() * full_level)  # last level the limit reaches
            price = self.price(resting, k)
            oid = self.emit(trader, side, price, size)
            executed = int(cum[k])
            self.consume(resting, executed)
            # remainder rests inside the spread; pull it before refilling
            if not self.full:
                self.emit(trader, side, None, 0, Action.CANCEL, oid)
            self.refill(resting, k)
            return

        # filled orders never outrun the resting depth
        size = min(size, int(vol.sum()))
        if self.unif.next() < cfg.market_order_fraction:
            price = None
        else:
            price = self.price(resting, self.n_levels - 1)
        self.emit(trader, side, price, size)
        cleared = self.consume(resting, size)
        self.refill(resting, cleared)

    def run(self) -> list[OrderEvent]:
        self.seed_book()
        while not self.full:
            self.cycle()
        return self.events


def generate(config: SynthConfig) -> list[OrderEvent]:
    """Generate exactly ``config.n_events`` order events."""
    return _Builder(config).run()

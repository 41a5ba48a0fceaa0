"""Immediate price impact statistics and log-binned power-law fits.

Trades are grouped into cells by trade type, trader class, network
position and market segment. Within a cell, impact and size are normalized
by the cell averages (per instrument, then pooled), binned logarithmically
in normalized size, and the exponent is the OLS slope of log mean impact on
log bin center.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .engine import TradeRecord, TradeType
from .network import POSITIONS
from .orderflow import TraderClass

ALL = "all"
MIN_FIT_BINS = 5


class ImpactError(ValueError):
    pass


class DegenerateCellError(ImpactError):
    pass


class EmptyCurveError(ImpactError):
    pass


class FitError(ImpactError):
    pass


def immediate_impact(mid_before, mid_after) -> float:
    """Relative mid-price change ``(after - before) / before``."""
    if mid_before <= 0:
        raise ImpactError(f"mid_before must be positive, got {mid_before}")
    if isinstance(mid_before, (int, Fraction)) and isinstance(mid_after, (int, Fraction)):
        return float(Fraction(mid_after - mid_before) / mid_before)
    return (mid_after - mid_before) / mid_before


@dataclass(frozen=True, order=True)
class CellKey:
    trade_type: str
    trader_class: int
    position: str = ALL
    market: str = ALL
    instrument: str = ALL

    def __post_init__(self):
        # accept enums for convenience, store plain values so keys sort and serialize
        if isinstance(self.trade_type, TradeType):
            object.__setattr__(self, "trade_type", self.trade_type.value)
        object.__setattr__(self, "trader_class", int(self.trader_class))

    def matches(self, t: TradeRecord) -> bool:
        return (t.trade_type.value == self.trade_type
                and int(t.trader_class) == self.trader_class
                and (self.position == ALL or t.position == self.position)
                and (self.market == ALL or t.market == self.market)
                and (self.instrument == ALL or t.instrument_id == self.instrument))

    @property
    def label(self) -> str:
        parts = [self.market, self.trade_type, str(self.trader_class), self.position]
        if self.instrument != ALL:
            parts.append(self.instrument)
        return "/".join(parts)


@dataclass(frozen=True)
class CellStats:
    mean_r: float
    mean_omega: float
    count: int
    r_quartiles: tuple[float, float, float]
    omega_quartiles: tuple[float, float, float]


def _select(trades: Iterable[TradeRecord], key: CellKey) -> list[TradeRecord]:
    return [t for t in trades if t.valid_impact and key.matches(t)]


def _quartiles(values: Sequence[float]) -> tuple[float, float, float]:
    q = np.percentile(np.asarray(values, dtype=float), [25, 50, 75])
    return float(q[0]), float(q[1]), float(q[2])


def cell_stats(trades: Iterable[TradeRecord], key: CellKey) -> CellStats | None:
    """Means and quartiles of r and omega over the cell; None for an empty cell."""
    sel = _select(trades, key)
    if not sel:
        return None
    rs = [t.r for t in sel]
    ws = [t.omega for t in sel]
    n = len(sel)
    return CellStats(math.fsum(rs) / n, math.fsum(ws) / n, n, _quartiles(rs), _quartiles(ws))


def normalize(trades: Iterable[TradeRecord], key: CellKey,
              diagnostics: list[str] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-trade ``(omega/<omega>, r/<r>)`` for the cell.

    Averages are taken per instrument and the normalized pairs pooled, so a
    sell cell (negative mean) still yields positive normalized impacts.
    Instruments whose cell mean impact is zero are dropped; if nothing is
    left a :class:`DegenerateCellError` is raised.
    """
    groups: dict[str | None, list[TradeRecord]] = defaultdict(list)
    for t in _select(trades, key):
        groups[t.instrument_id].append(t)
    if not groups:
        raise DegenerateCellError(f"cell {key.label} is empty")
    xs, ys = [], []
    for inst in sorted(groups, key=str):
        grp = groups[inst]
        n = len(grp)
        mean_r = math.fsum(t.r for t in grp) / n
        mean_w = math.fsum(t.omega for t in grp) / n
        if mean_r == 0:
            if diagnostics is not None:
                diagnostics.append(f"{key.label}: instrument {inst} has zero mean impact, excluded")
            continue
        xs.extend(t.omega / mean_w for t in grp)
        ys.extend(t.r / mean_r for t in grp)
    if not xs:
        raise DegenerateCellError(f"cell {key.label} has zero mean impact")
    return np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)


@dataclass(frozen=True)
class BinnedCurve:
    centers: np.ndarray
    means: np.ndarray
    counts: np.ndarray
    range: tuple[float, float]

    def __len__(self):
        return len(self.centers)


def bin_curve(x, y, n_bins: int = 20, range: tuple[float, float] = (0.1, 100.0),
              min_occupancy: int = 10) -> BinnedCurve:
    """Average ``y`` in logarithmically spaced bins of ``x`` over ``range``.

    Bin centers are geometric midpoints of the edges. Points outside the
    range are ignored; bins with fewer than ``min_occupancy`` points are
    dropped.
    """
    lo, hi = range
    if not (0 < lo < hi):
        raise ImpactError(f"bad binning range {range}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    edges = np.logspace(math.log10(lo), math.log10(hi), n_bins + 1)
    inside = (x >= lo) & (x <= hi)
    x, y = x[inside], y[inside]
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=y, minlength=n_bins)
    keep = counts >= max(min_occupancy, 1)
    if not keep.any():
        raise EmptyCurveError(f"no bin reaches occupancy {min_occupancy}")
    centers = np.sqrt(edges[:-1] * edges[1:])
    return BinnedCurve(centers[keep], sums[keep] / counts[keep], counts[keep], (lo, hi))


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    stderr: float
    intercept: float
    fit_range: tuple[float, float]
    n_bins: int
    r_squared: float
    diagnostics: tuple[str, ...] = ()


def fit_power_law(curve: BinnedCurve, fit_range: tuple[float, float] | None = None) -> PowerLawFit:
    """OLS of ln(bin mean) on ln(bin center); ``alpha`` is the slope.

    ``stderr`` is the ordinary least-squares standard error of the slope.
    Bins with a non-positive mean are skipped and noted in ``diagnostics``.
    """
    lo, hi = fit_range or curve.range
    notes = []
    xs, ys = [], []
    for c, m in zip(curve.centers, curve.means):
        if not (lo <= c <= hi):
            continue
        if m <= 0:
            notes.append(f"bin at {c:.4g} has non-positive mean {m:.4g}, excluded")
            continue
        xs.append(math.log(c))
        ys.append(math.log(m))
    n = len(xs)
    if n < MIN_FIT_BINS:
        raise FitError(f"only {n} usable bins in [{lo}, {hi}], need {MIN_FIT_BINS}")
    lx = np.asarray(xs)
    ly = np.asarray(ys)
    dx = lx - lx.mean()
    dy = ly - ly.mean()
    sxx = float(dx @ dx)
    slope = float(dx @ dy) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    resid = dy - slope * dx
    ssr = float(resid @ resid)
    syy = float(dy @ dy)
    stderr = math.sqrt(ssr / (n - 2) / sxx) if n > 2 else float("nan")
    r2 = 1.0 - ssr / syy if syy > 0 else 1.0
    return PowerLawFit(slope, stderr, intercept, (float(math.exp(lx.min())), float(math.exp(lx.max()))),
                       n, r2, tuple(notes))


@dataclass(frozen=True)
class AnalysisConfig:
    n_bins: int = 20
    fit_lo: float = 0.1
    fit_hi: float = 100.0
    min_occupancy: int = 10
    per_stock: bool = False

    def __post_init__(self):
        if not (0 < self.fit_lo < self.fit_hi):
            raise ValueError(f"fit range must satisfy 0 < lo < hi, got ({self.fit_lo}, {self.fit_hi})")
        if self.n_bins < 1 or self.min_occupancy < 1:
            raise ValueError("n_bins and min_occupancy must be positive")


@dataclass
class AnalysisResult:
    stats: dict[CellKey, CellStats] = field(default_factory=dict)
    curves: dict[CellKey, BinnedCurve] = field(default_factory=dict)
    fits: dict[CellKey, PowerLawFit] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)


def cell_keys(trades: Sequence[TradeRecord], per_stock: bool = False) -> list[CellKey]:
    markets = [ALL] + sorted({t.market for t in trades if t.market is not None})
    positions = (ALL,) + POSITIONS
    keys = [CellKey(tt.value, int(cls), pos, mkt)
            for mkt, tt, cls, pos in itertools.product(markets, TradeType, TraderClass, positions)]
    if per_stock:
        seg = {t.instrument_id: t.market for t in trades if t.instrument_id is not None}
        for inst in sorted(seg):
            keys += [CellKey(tt.value, int(cls), pos, seg[inst] or ALL, inst)
                     for tt, cls, pos in itertools.product(TradeType, TraderClass, positions)]
    return keys


def analyze(trades: Sequence[TradeRecord], config: AnalysisConfig = AnalysisConfig()) -> AnalysisResult:
    """Stats for every populated cell, curves for every normalizable cell and
    power-law fits for the filled-trade cells."""
    res = AnalysisResult()
    valid = [t for t in trades if t.valid_impact]
    # bucket once by (type, class) so each key only scans its own trades
    by_tc: dict[tuple[str, int], list[TradeRecord]] = defaultdict(list)
    for t in valid:
        by_tc[(t.trade_type.value, int(t.trader_class))].append(t)
    rng = (config.fit_lo, config.fit_hi)
    for key in cell_keys(trades, config.per_stock):
        pool = by_tc.get((key.trade_type, key.trader_class), [])
        st = cell_stats(pool, key)
        if st is None:
            continue
        res.stats[key] = st
        try:
            x, y = normalize(pool, key, res.diagnostics)
            curve = bin_curve(x, y, config.n_bins, rng, config.min_occupancy)
        except ImpactError as exc:
            res.diagnostics.append(f"{key.label}: {exc}")
            continue
        res.curves[key] = curve
        if TradeType(key.trade_type).is_filled:
            try:
                res.fits[key] = fit_power_law(curve, rng)
            except FitError as exc:
                res.diagnostics.append(f"{key.label}: {exc}")
    return res


# -- ordering relations -------------------------------------------------------

def _strict_chain(values: Sequence[float | None], descending: bool = True) -> bool | None:
    if any(v is None for v in values):
        return None
    pairs = zip(values, values[1:])
    return all((a > b) if descending else (a < b) for a, b in pairs)


def _summarize(entry_id: str, relation: str, comparisons: list[dict]) -> dict:
    evaluated = [c["holds"] for c in comparisons if c["holds"] is not None]
    holds = None if not evaluated else all(evaluated)
    return {"id": entry_id, "relation": relation, "holds": holds,
            "n_evaluated": len(evaluated), "n_holding": sum(evaluated),
            "comparisons": comparisons}


def ordering_report(stats: Mapping[CellKey, CellStats], fits: Mapping[CellKey, PowerLawFit],
                    market: str = ALL) -> dict:
    """Evaluate the qualitative orderings between cells.

    Impact comparisons use the sign-adjusted mean (``-<r>`` for sell
    types), i.e. impact magnitude. Each entry holds iff every evaluable
    comparison holds; an entry with nothing evaluable reports ``None``.
    """
    def mean_r(tt, cls, pos=ALL, mkt=market):
        s = stats.get(CellKey(tt, cls, pos, mkt))
        if s is None:
            return None
        return s.mean_r if TradeType(tt).is_buy else -s.mean_r

    def mean_w(tt, cls, pos=ALL, mkt=market):
        s = stats.get(CellKey(tt, cls, pos, mkt))
        return None if s is None else s.mean_omega

    def alpha(tt, cls, pos=ALL, mkt=market):
        f = fits.get(CellKey(tt, cls, pos, mkt))
        return None if f is None else f.alpha

    types = [t.value for t in TradeType]
    filled = [TradeType.FB.value, TradeType.FS.value]
    P, I, K = POSITIONS
    entries = []

    comps = []
    for tt in types:
        v = [mean_r(tt, 1), mean_r(tt, 0)]
        comps.append({"cell": tt, "institution": v[0], "individual": v[1], "holds": _strict_chain(v)})
    entries.append(_summarize("institution_impact_exceeds_individual",
                              "|<r^1>| > |<r^0>| per trade type", comps))

    comps = []
    for tt in types:
        v = [mean_w(tt, 1), mean_w(tt, 0)]
        comps.append({"cell": tt, "institution": v[0], "individual": v[1], "holds": _strict_chain(v)})
    entries.append(_summarize("institution_size_exceeds_individual",
                              "<w^1> > <w^0> per trade type", comps))

    for entry_id, fn, rel in (("kernel_impact_hierarchy", mean_r, "|<r_K>| > |<r_I>| > |<r_P>|"),
                              ("kernel_size_hierarchy", mean_w, "<w_K> > <w_I> > <w_P>")):
        comps = []
        for tt in types:
            for cls in (0, 1):
                v = [fn(tt, cls, K), fn(tt, cls, I), fn(tt, cls, P)]
                comps.append({"cell": f"{tt}/{cls}", "kernel": v[0], "intermediate": v[1],
                              "periphery": v[2], "holds": _strict_chain(v)})
        entries.append(_summarize(entry_id, rel + " per type and class", comps))

    comps = []
    for tt in filled:
        for pos in (P, I, K):
            v = [alpha(tt, 0, pos), alpha(tt, 1, pos)]
            comps.append({"cell": f"{tt}/{pos}", "individual": v[0], "institution": v[1],
                          "holds": _strict_chain(v)})
    entries.append(_summarize("individual_alpha_exceeds_institution",
                              "alpha^0 > alpha^1 per type and position", comps))

    comps = []
    for tt in filled:
        for cls in (0, 1):
            v = [alpha(tt, cls, P), alpha(tt, cls, I), alpha(tt, cls, K)]
            comps.append({"cell": f"{tt}/{cls}", "periphery": v[0], "intermediate": v[1],
                          "kernel": v[2], "holds": _strict_chain(v, descending=False)})
    entries.append(_summarize("alpha_increases_toward_kernel",
                              "alpha_P < alpha_I < alpha_K per type and class", comps))

    comps = []
    for cls in (0, 1):
        for pos in (P, I, K):
            v = [alpha("FS", cls, pos), alpha("FB", cls, pos)]
            comps.append({"cell": f"{cls}/{pos}", "FS": v[0], "FB": v[1], "holds": _strict_chain(v)})
    entries.append(_summarize("sell_alpha_exceeds_buy", "alpha^FS > alpha^FB per class and position",
                              comps))

    comps = []
    for tt in filled:
        for cls in (0, 1):
            for pos in (P, I, K):
                v = [alpha(tt, cls, pos, "B_share"), alpha(tt, cls, pos, "A_share")]
                comps.append({"cell": f"{tt}/{cls}/{pos}", "B_share": v[0], "A_share": v[1],
                              "holds": _strict_chain(v)})
    entries.append(_summarize("b_share_alpha_exceeds_a_share",
                              "alpha^B > alpha^A per type, class and position", comps))

    ratios = []
    for cls in (0, 1):
        for partial, full in (("PB", "FB"), ("PS", "FS")):
            a, b = mean_r(partial, cls), mean_r(full, cls)
            ratio = None if (a is None or b is None or b == 0) else a / b
            ratios.append({"cell": f"{partial}:{full}/{cls}", "partial": a, "filled": b,
                           "ratio": ratio})
    return {"market": market, "entries": entries,
            "partial_to_filled_impact_ratio": {"reference": 10.0, "values": ratios}}

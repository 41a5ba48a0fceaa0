"""Published empirical reference values (Shenzhen Stock Exchange, 2003).

These come from the proprietary order-flow data set this toolkit was
designed around. They are kept as targets for real data only. Nothing in
the synthetic pipeline reproduces them; the property-based acceptance
suite replaces any numeric comparison against them.
"""

from __future__ import annotations

from .impact import CellKey, PowerLawFit

# (market, trade type, position) -> ((individual alpha, err), (institution alpha, err))
_ROWS = {
    ("all", "FB", "periphery"): ((0.52, 0.02), (0.46, 0.03)),
    ("all", "FB", "intermediate"): ((0.58, 0.02), (0.52, 0.02)),
    ("all", "FB", "kernel"): ((0.62, 0.01), (0.58, 0.02)),
    ("all", "FS", "periphery"): ((0.55, 0.01), (0.51, 0.01)),
    ("all", "FS", "intermediate"): ((0.64, 0.01), (0.57, 0.02)),
    ("all", "FS", "kernel"): ((0.69, 0.01), (0.62, 0.02)),
    ("A_share", "FB", "periphery"): ((0.52, 0.02), (0.39, 0.03)),
    ("A_share", "FB", "intermediate"): ((0.58, 0.02), (0.46, 0.03)),
    ("A_share", "FB", "kernel"): ((0.62, 0.01), (0.52, 0.01)),
    ("A_share", "FS", "periphery"): ((0.55, 0.01), (0.43, 0.02)),
    ("A_share", "FS", "intermediate"): ((0.64, 0.01), (0.53, 0.02)),
    ("A_share", "FS", "kernel"): ((0.69, 0.00), (0.53, 0.03)),
    ("B_share", "FB", "periphery"): ((0.52, 0.02), (0.58, 0.03)),
    ("B_share", "FB", "intermediate"): ((0.65, 0.02), (0.63, 0.02)),
    ("B_share", "FB", "kernel"): ((0.62, 0.03), (0.69, 0.02)),
    ("B_share", "FS", "periphery"): ((0.62, 0.01), (0.58, 0.03)),
    ("B_share", "FS", "intermediate"): ((0.71, 0.02), (0.59, 0.04)),
    ("B_share", "FS", "kernel"): ((0.70, 0.03), (0.73, 0.03)),
}

REFERENCE_ALPHA: dict[CellKey, tuple[float, float]] = {
    CellKey(tt, cls, pos, mkt): pair[cls]
    for (mkt, tt, pos), pair in _ROWS.items()
    for cls in (0, 1)
}

# order of magnitude of |<r>| for partially filled and filled trades
REFERENCE_PARTIAL_IMPACT = 1e-3
REFERENCE_FILLED_IMPACT = 1e-4
REFERENCE_PARTIAL_TO_FILLED_RATIO = 10.0

REPRODUCIBLE = False
REASON = ("the reference values come from proprietary exchange order-flow data; "
          "synthetic streams plant their own exponent instead")


def reference_fits() -> dict[CellKey, PowerLawFit]:
    """Reference exponents wrapped as fits, e.g. to run them through ``ordering_report``."""
    return {key: PowerLawFit(alpha, err, float("nan"), (0.1, 100.0), 0, float("nan"))
            for key, (alpha, err) in REFERENCE_ALPHA.items()}

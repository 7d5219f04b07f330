"""Loose coupling: capital reallocation from realized effectiveness.

Each symbol/timeframe earns a mean-risk score (window P/L minus
lambda_risk times its dispersion); capital fractions follow the clipped
scores, with an optional per-symbol floor, and fall back entirely to
reserve when nothing scores positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

STANDARD_LOT = 100_000
LOT_STEP = 0.01


class EmptyRecords(ValidationError):
    pass


class InfeasibleFloor(ValidationError):
    pass


@dataclass(frozen=True)
class Allocation:
    """Capital fractions per symbol plus the idle reserve; sums to one."""

    fractions: dict
    reserve: float

    def __post_init__(self):
        if any(f < 0 for f in self.fractions.values()) or self.reserve < 0:
            raise ValidationError("fractions and reserve must be nonnegative")
        total = sum(self.fractions.values()) + self.reserve
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"allocation sums to {total}, not 1")


@dataclass(frozen=True)
class EffectivenessRecord:
    """Realized performance of one symbol at one timeframe over a window."""

    symbol: str
    timeframe: int
    window_pl: float
    pl_std: float
    trade_count: int

    def __post_init__(self):
        if self.pl_std < 0:
            raise ValidationError("pl_std must be >= 0")
        if self.trade_count < 0:
            raise ValidationError("trade_count must be >= 0")


def reallocate(records, lambda_risk: float = 1.0, floor: float = 0.0) -> Allocation:
    """Mean-risk scores -> simplex of capital fractions.

    score_i = window_pl_i - lambda_risk * pl_std_i, clipped at zero;
    fractions are proportional to the clipped scores, then raised to the
    floor and renormalized.  All-nonpositive scores park everything in
    reserve.
    """
    records = list(records)
    if not records:
        raise EmptyRecords("no effectiveness records")
    if lambda_risk < 0:
        raise ValidationError("lambda_risk must be >= 0")
    if floor < 0:
        raise ValidationError("floor must be >= 0")
    if floor * len(records) > 1.0 + 1e-12:
        raise InfeasibleFloor(f"floor {floor} infeasible for {len(records)} symbols")
    scores = np.array(
        [max(0.0, r.window_pl - lambda_risk * r.pl_std) for r in records]
    )
    symbols = [r.symbol for r in records]
    if scores.sum() <= 0.0:
        return Allocation({s: 0.0 for s in symbols}, 1.0)
    frac = scores / scores.sum()
    # Lift below-floor entries to the floor, renormalizing the rest; the
    # floored set only ever grows, so this terminates.
    floored = np.zeros(len(frac), dtype=bool)
    while True:
        low = (frac < floor - 1e-15) & ~floored
        if not low.any():
            break
        floored |= low
        frac[floored] = floor
        free = ~floored
        budget = 1.0 - floor * floored.sum()
        if free.any() and frac[free].sum() > 0:
            frac[free] *= budget / frac[free].sum()
        else:
            frac[floored] = 1.0 / floored.sum()
            break
    return Allocation(dict(zip(symbols, (frac / frac.sum()).tolist())), 0.0)


def enforce_margin(
    alloc: Allocation,
    equity: float,
    leverage: int,
    prices,
    lot_size: int = STANDARD_LOT,
) -> dict:
    """Convert fractions to lot amounts that can never exceed the margin.

    lots_i = round_down_to_0.01(n_i * equity * leverage / (lot_size * price_i)),
    so total margin sum(lots * lot_size * price / leverage) stays <= equity.
    """
    if equity <= 0:
        raise ValidationError("equity must be positive")
    if leverage < 1:
        raise ValidationError("leverage must be >= 1")
    lots = {}
    for sym, frac in alloc.fractions.items():
        price = prices[sym]
        if price <= 0:
            raise ValidationError(f"{sym}: price must be positive")
        raw = frac * equity * leverage / (lot_size * price)
        lots[sym] = math.floor(raw / LOT_STEP + 1e-9) * LOT_STEP
    return lots

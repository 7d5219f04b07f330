"""Simulated broker: order lifecycle, P/L conversion, account accounting.

Replaces a live trade server.  Fills happen at bar close plus or minus
half the spread; stop-loss and take-profit trigger intra-bar against the
bar extremes with the pessimistic ordering (S/L before T/P); swap accrues
per open position per calendar day.  Profits are converted to USD with
the statement conventions reverse-engineered from standard MetaTrader
ledgers, rounded half-away-from-zero to the cent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataError, ValidationError
from .portfolio import STANDARD_LOT

BUY = "buy"
SELL = "sell"
BALANCE = "balance"

SECONDS_PER_DAY = 86_400


class MissingConversionRate(ValidationError):
    pass


class InsufficientMargin(ValidationError):
    pass


class UnknownSymbol(DataError):
    pass


def round_money(x: float) -> float:
    """Round to 0.01 with ties away from zero (statement convention)."""
    return math.copysign(math.floor(abs(x) * 100.0 + 0.5 + 1e-9), x) / 100.0


def fill_profit(
    side: str,
    lots: float,
    symbol: str,
    open_price: float,
    close_price: float,
    conversion_rate: float | None = None,
) -> float:
    """Trade P/L in USD.

    The raw move (close - open, sign-flipped for sells) times lots times
    the contract size is denominated in the quote currency: USD-quoted
    pairs take it directly, USD-base pairs divide by the close price, and
    cross pairs need an explicit quote-to-USD conversion rate.
    """
    if open_price <= 0 or close_price <= 0:
        raise ValidationError("prices must be positive")
    if side not in (BUY, SELL):
        raise ValidationError(f"side must be buy or sell, got {side!r}")
    move = close_price - open_price if side == BUY else open_price - close_price
    raw = move * lots * STANDARD_LOT
    quote = symbol[-3:].lower()
    base = symbol[:3].lower()
    if quote == "usd":
        usd = raw
    elif base == "usd":
        usd = raw / close_price
    else:
        if conversion_rate is None:
            raise MissingConversionRate(f"{symbol}: need quote->USD conversion rate")
        usd = raw * conversion_rate
    return round_money(usd)


@dataclass(frozen=True)
class TradeRecord:
    """One statement row; ``side == "balance"`` marks deposit rows."""

    ticket: int
    open_time: int
    close_time: int
    side: str
    lots: float
    symbol: str
    open_price: float
    close_price: float
    sl: float = 0.0
    tp: float = 0.0
    commission: float = 0.0
    taxes: float = 0.0
    swap: float = 0.0
    profit: float = 0.0

    def __post_init__(self):
        if self.side not in (BUY, SELL, BALANCE):
            raise ValidationError(f"unknown side {self.side!r}")
        if self.side != BALANCE:
            if self.close_time < self.open_time:
                raise ValidationError("close_time before open_time")
            if self.lots <= 0:
                raise ValidationError("lots must be positive")

    def pl(self, convention: str = "profit_plus_swap") -> float:
        if convention == "profit_only":
            return self.profit
        if convention == "profit_plus_swap":
            return self.profit + self.swap + self.commission + self.taxes
        raise ValidationError(f"unknown pl convention {convention!r}")


@dataclass(frozen=True)
class Account:
    deposit: float
    balance: float
    equity: float
    margin: float
    free_margin: float


@dataclass(frozen=True)
class SymbolSpec:
    """Broker-side trading conditions for one symbol."""

    symbol: str
    spread: float = 0.0
    swap_long: float = 0.0  # USD per 1.0 lot per calendar day
    swap_short: float = 0.0
    conversion_rate: float | None = None  # quote -> USD, cross pairs only

    def __post_init__(self):
        if self.spread < 0:
            raise ValidationError(f"{self.symbol}: negative spread")


@dataclass
class Position:
    ticket: int
    symbol: str
    side: str
    lots: float
    open_time: int
    open_price: float
    sl: float
    tp: float
    margin: float
    swap: float = 0.0
    last_price: float = 0.0


class Broker:
    """Single-owner account state machine; all mutation at bar boundaries."""

    def __init__(
        self,
        deposit: float,
        leverage: int = 100,
        symbol_specs: dict | None = None,
        pl_convention: str = "profit_plus_swap",
        start_time: int = 0,
        start_ticket: int = 1,
    ):
        if deposit <= 0:
            raise ValidationError("deposit must be positive")
        if leverage < 1:
            raise ValidationError("leverage must be >= 1")
        self.deposit = deposit
        self.balance = deposit
        self.leverage = leverage
        self.specs = dict(symbol_specs or {})
        self.pl_convention = pl_convention
        self.positions: dict[int, Position] = {}
        self.closed: list[TradeRecord] = [
            TradeRecord(start_ticket, start_time, start_time, BALANCE, 0.0, "", 0.0, 0.0, profit=deposit)
        ]
        self._next_ticket = start_ticket + 1
        self._last_time = start_time

    def spec(self, symbol: str) -> SymbolSpec:
        try:
            return self.specs[symbol]
        except KeyError:
            raise UnknownSymbol(symbol) from None

    # -- account arithmetic -------------------------------------------------

    def margin_used(self) -> float:
        return sum(p.margin for p in self.positions.values())

    def floating(self) -> float:
        total = 0.0
        for p in self.positions.values():
            total += self.position_profit(p, p.last_price) + p.swap
        return total

    def equity(self) -> float:
        return self.balance + self.floating()

    def account(self) -> Account:
        eq = self.equity()
        used = self.margin_used()
        return Account(self.deposit, self.balance, eq, used, eq - used)

    def position_profit(self, p: Position, mid: float) -> float:
        spec = self.spec(p.symbol)
        exit_price = mid - spec.spread / 2.0 if p.side == BUY else mid + spec.spread / 2.0
        return fill_profit(p.side, p.lots, p.symbol, p.open_price, exit_price, spec.conversion_rate)

    # -- order lifecycle ----------------------------------------------------

    def open_position(
        self,
        symbol: str,
        side: str,
        lots: float,
        time: int,
        mid: float,
        sl: float = 0.0,
        tp: float = 0.0,
    ) -> Position:
        spec = self.spec(symbol)
        if lots <= 0:
            raise ValidationError("lots must be positive")
        price = mid + spec.spread / 2.0 if side == BUY else mid - spec.spread / 2.0
        margin = lots * STANDARD_LOT * price / self.leverage
        if self.margin_used() + margin > self.equity() + 1e-9:
            raise InsufficientMargin(
                f"{symbol}: margin {margin:.2f} exceeds free equity"
            )
        pos = Position(self._next_ticket, symbol, side, lots, time, price, sl, tp, margin, 0.0, mid)
        self._next_ticket += 1
        self.positions[pos.ticket] = pos
        return pos

    def close_position(self, ticket: int, time: int, mid: float) -> TradeRecord:
        p = self.positions.pop(ticket)
        spec = self.spec(p.symbol)
        price = mid - spec.spread / 2.0 if p.side == BUY else mid + spec.spread / 2.0
        return self._settle(p, time, price)

    def _settle(self, p: Position, time: int, exit_price: float) -> TradeRecord:
        spec = self.spec(p.symbol)
        profit = fill_profit(p.side, p.lots, p.symbol, p.open_price, exit_price, spec.conversion_rate)
        swap = round_money(p.swap)
        rec = TradeRecord(
            p.ticket, p.open_time, time, p.side, p.lots, p.symbol,
            p.open_price, exit_price, p.sl, p.tp, 0.0, 0.0, swap, profit,
        )
        self.balance += rec.pl(self.pl_convention)
        self.closed.append(rec)
        return rec

    # -- bar processing -----------------------------------------------------

    def on_bar(self, time: int, bars: dict) -> list[TradeRecord]:
        """Advance to a new bar close: swap accrual, S/L-T/P sweeps, repricing.

        ``bars`` maps symbol to the current Bar.  Returns records closed by
        stop-loss or take-profit this bar (pessimistic: S/L checked first).
        """
        days = _calendar_days_crossed(self._last_time, time)
        self._last_time = max(self._last_time, time)
        closed = []
        for ticket in sorted(self.positions):
            p = self.positions[ticket]
            spec = self.spec(p.symbol)
            if days:
                rate = spec.swap_long if p.side == BUY else spec.swap_short
                p.swap += rate * p.lots * days
            bar = bars.get(p.symbol)
            if bar is None:
                continue
            p.last_price = bar.close
            half = spec.spread / 2.0
            if p.side == BUY:
                hit_sl = p.sl > 0 and bar.low - half <= p.sl
                hit_tp = p.tp > 0 and bar.high - half >= p.tp
            else:
                hit_sl = p.sl > 0 and bar.high + half >= p.sl
                hit_tp = p.tp > 0 and bar.low + half <= p.tp
            if hit_sl:
                closed.append(self._settle(self.positions.pop(ticket), time, p.sl))
            elif hit_tp:
                closed.append(self._settle(self.positions.pop(ticket), time, p.tp))
        return closed

    def open_rows(self) -> list[TradeRecord]:
        """Open positions as statement rows marked to their last price."""
        rows = []
        for ticket in sorted(self.positions):
            p = self.positions[ticket]
            spec = self.spec(p.symbol)
            exit_price = (
                p.last_price - spec.spread / 2.0 if p.side == BUY else p.last_price + spec.spread / 2.0
            )
            rows.append(
                TradeRecord(
                    p.ticket, p.open_time, p.open_time, p.side, p.lots, p.symbol,
                    p.open_price, exit_price, p.sl, p.tp, 0.0, 0.0,
                    round_money(p.swap),
                    fill_profit(p.side, p.lots, p.symbol, p.open_price, exit_price, spec.conversion_rate),
                )
            )
        return rows


def _calendar_days_crossed(t0: int, t1: int) -> int:
    if t1 <= t0:
        return 0
    return t1 // SECONDS_PER_DAY - t0 // SECONDS_PER_DAY

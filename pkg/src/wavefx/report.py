"""Account statement parsing, summary statistics, and rendering.

The statement format mirrors broker trading reports: a Closed
Transactions table, an Open Trades block, and a Summary/Details section
with thousands-space money formatting ("5 683.62").  ``summarize``
computes every Summary/Details figure from the rows; rendering a parsed
statement reproduces the file modulo whitespace normalization.
"""

from __future__ import annotations

import math
from calendar import timegm
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from time import strptime

from .errors import DataError, ValidationError
from .ledger import BALANCE, BUY, SELL, TradeRecord, round_money

PL_CONVENTIONS = ("profit_only", "profit_plus_swap")


class FormatError(DataError):
    def __init__(self, line: int, detail: str = ""):
        self.line = line
        super().__init__(f"line {line}: {detail}" if detail else f"bad line {line}")


class UnparseableRow(FormatError):
    pass


class NoTrades(ValidationError):
    pass


def parse_money(text: str) -> float:
    return float(text.replace(" ", "").replace("\u00a0", ""))


def fmt_money(x: float) -> str:
    return f"{x:,.2f}".replace(",", " ")


def _fmt_price(symbol: str, price: float) -> str:
    digits = 3 if symbol.lower().endswith("jpy") else 5
    return f"{price:.{digits}f}"


def parse_time(text: str) -> int:
    return timegm(strptime(text.strip(), "%Y.%m.%d %H:%M"))


def fmt_time(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y.%m.%d %H:%M")


@dataclass(frozen=True)
class Statement:
    """Everything needed to re-render a statement file."""

    records: list
    open_trades: list
    deposit: float
    margin: float | None = None


def _split_row(line: str) -> list:
    if "\t" in line:
        return [f.strip() for f in line.split("\t")]
    import re

    return [f.strip() for f in re.split(r"\s{2,}", line.strip())]


def _is_row(fields_: list) -> bool:
    return len(fields_) >= 10 and fields_ and fields_[0].isdigit()


def _closed_record(f: list, line_no: int) -> TradeRecord:
    try:
        if f[2] == BALANCE:
            t = parse_time(f[1])
            return TradeRecord(
                int(f[0]), t, t, BALANCE, 0.0, "", 0.0, 0.0, profit=parse_money(f[-1])
            )
        return TradeRecord(
            ticket=int(f[0]),
            open_time=parse_time(f[1]),
            close_time=parse_time(f[8]),
            side=f[2],
            lots=float(f[3]),
            symbol=f[4],
            open_price=float(f[5]),
            close_price=float(f[9]),
            sl=float(f[6]),
            tp=float(f[7]),
            commission=parse_money(f[10]),
            taxes=parse_money(f[11]),
            swap=parse_money(f[12]),
            profit=parse_money(f[13]),
        )
    except (ValueError, IndexError, ValidationError) as exc:
        raise UnparseableRow(line_no, str(exc)) from None


def _open_record(f: list, line_no: int) -> TradeRecord:
    try:
        t = parse_time(f[1])
        return TradeRecord(
            ticket=int(f[0]),
            open_time=t,
            close_time=t,
            side=f[2],
            lots=float(f[3]),
            symbol=f[4],
            open_price=float(f[5]),
            close_price=float(f[8]),
            sl=float(f[6]),
            tp=float(f[7]),
            commission=parse_money(f[9]),
            taxes=parse_money(f[10]),
            swap=parse_money(f[11]),
            profit=parse_money(f[12]),
        )
    except (ValueError, IndexError, ValidationError) as exc:
        raise UnparseableRow(line_no, str(exc)) from None


def read_statement(path) -> Statement:
    """Full parse of a statement file, keeping the reported margin."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    records: list[TradeRecord] = []
    open_trades: list[TradeRecord] = []
    margin = None
    section = None
    saw_closed = False
    for i, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        if text.startswith("Closed Transactions:"):
            section, saw_closed = "closed", True
            continue
        if text.startswith("Open Trades:"):
            section = "open"
            continue
        if text.startswith(("Working Orders:", "Summary:", "Details:")):
            section = "tail"
            continue
        if text.startswith(("Closed P/L:", "Floating P/L:")):
            continue
        f = _split_row(line)
        if section == "closed" and _is_row(f):
            records.append(_closed_record(f, i))
        elif section == "open" and _is_row(f):
            open_trades.append(_open_record(f, i))
        elif "Margin:" in f:
            try:
                margin = parse_money(f[f.index("Margin:") + 1])
            except (ValueError, IndexError):
                raise FormatError(i, "bad Margin value") from None
    if not saw_closed or not records:
        raise FormatError(0, "no Closed Transactions section")
    deposit = sum(r.profit for r in records if r.side == BALANCE)
    return Statement(records, open_trades, deposit, margin)


def parse_statement(path):
    """Parse to (records, open_trades, deposit); balance rows stay in records."""
    st = read_statement(path)
    return st.records, st.open_trades, st.deposit


@dataclass(frozen=True)
class SummaryStats:
    """Every figure of the statement Summary/Details block.

    Money fields are rounded to 0.01 and percent fields to 0.01;
    ``profit_factor`` is the infinity sentinel when there are no losses.
    """

    pl_convention: str
    deposit: float
    closed_pl: float
    floating_pl: float
    balance: float
    equity: float
    margin: float | None
    free_margin: float | None
    gross_profit: float
    gross_loss: float
    net_profit: float
    profit_factor: float
    expected_payoff: float
    absolute_drawdown: float
    maximal_drawdown: float
    maximal_drawdown_pct: float
    relative_drawdown_pct: float
    relative_drawdown_value: float
    total_trades: int
    long_count: int
    long_won_pct: float
    short_count: int
    short_won_pct: float
    profit_trades: int
    profit_trades_pct: float
    loss_trades: int
    loss_trades_pct: float
    largest_profit: float
    largest_loss: float
    average_profit: float
    average_loss: float
    max_consec_wins: int
    max_consec_wins_profit: float
    max_consec_losses: int
    max_consec_losses_loss: float
    max_consec_profit: float
    max_consec_profit_count: int
    max_consec_loss: float
    max_consec_loss_count: int
    avg_consec_wins: int
    avg_consec_losses: int

    def __post_init__(self):
        if abs(self.net_profit - (self.gross_profit - self.gross_loss)) > 0.005:
            raise ValidationError("net profit != gross profit - gross loss")
        if self.total_trades != self.long_count + self.short_count:
            raise ValidationError("trade counts do not add up")


def _round_pct(x: float) -> float:
    return round_money(x)


def _streaks(pls):
    out = []
    run_win, count, total = None, 0, 0.0
    for pl in pls:
        win = pl >= 0
        if run_win is None or win == run_win:
            count += 1
            total += pl
        else:
            out.append((run_win, count, total))
            count, total = 1, pl
        run_win = win
    if run_win is not None:
        out.append((run_win, count, total))
    return out


def summarize(
    records,
    open_trades,
    deposit: float,
    pl_convention: str = "profit_plus_swap",
    margin: float | None = None,
) -> SummaryStats:
    """All Summary/Details statistics from statement rows.

    Balance rows are excluded from trade counts; per-trade P/L follows
    ``pl_convention``; drawdowns and streaks run over the balance curve in
    close-time order (ties broken by ticket); floating P/L always includes
    open-trade swap.
    """
    if pl_convention not in PL_CONVENTIONS:
        raise ValidationError(f"unknown pl convention {pl_convention!r}")
    trades = sorted(
        (r for r in records if r.side in (BUY, SELL)),
        key=lambda r: (r.close_time, r.ticket),
    )
    if not trades:
        raise NoTrades("statement contains no closed trades")
    pls = [r.pl(pl_convention) for r in trades]
    wins = [p for p in pls if p >= 0]
    losses = [p for p in pls if p < 0]
    gross_profit = sum(wins)
    gross_loss = -sum(losses)
    net = sum(pls)
    total = len(pls)
    longs = [r for r in trades if r.side == BUY]
    shorts = [r for r in trades if r.side == SELL]
    long_won = sum(1 for r in longs if r.pl(pl_convention) >= 0)
    short_won = sum(1 for r in shorts if r.pl(pl_convention) >= 0)

    # Balance curve and drawdowns.
    balance = deposit
    low = deposit
    peak = deposit
    max_dd = 0.0
    max_dd_peak = peak
    rel_dd_ratio = 0.0
    rel_dd_value = 0.0
    for pl in pls:
        balance += pl
        low = min(low, balance)
        if balance > peak:
            peak = balance
        dd = peak - balance
        if dd > max_dd:
            max_dd = dd
            max_dd_peak = peak
        if peak > 0 and dd / peak > rel_dd_ratio:
            rel_dd_ratio = dd / peak
            rel_dd_value = dd

    streaks = _streaks(pls)
    win_streaks = [s for s in streaks if s[0]]
    loss_streaks = [s for s in streaks if not s[0]]
    best_len = max(win_streaks, key=lambda s: s[1], default=(True, 0, 0.0))
    best_sum = max(win_streaks, key=lambda s: s[2], default=(True, 0, 0.0))
    worst_len = max(loss_streaks, key=lambda s: s[1], default=(False, 0, 0.0))
    worst_sum = min(loss_streaks, key=lambda s: s[2], default=(False, 0, 0.0))

    floating = sum(r.profit + r.swap + r.commission + r.taxes for r in open_trades)
    closed_pl = net
    bal = deposit + closed_pl

    return SummaryStats(
        pl_convention=pl_convention,
        deposit=round_money(deposit),
        closed_pl=round_money(closed_pl),
        floating_pl=round_money(floating),
        balance=round_money(bal),
        equity=round_money(bal + floating),
        margin=None if margin is None else round_money(margin),
        free_margin=None if margin is None else round_money(bal + floating - margin),
        gross_profit=round_money(gross_profit),
        gross_loss=round_money(gross_loss),
        net_profit=round_money(net),
        profit_factor=(
            math.inf if gross_loss == 0 else round_money(gross_profit / gross_loss)
        ),
        expected_payoff=round_money(net / total),
        absolute_drawdown=round_money(max(0.0, deposit - low)),
        maximal_drawdown=round_money(max_dd),
        maximal_drawdown_pct=_round_pct(100.0 * max_dd / max_dd_peak if max_dd_peak > 0 else 0.0),
        relative_drawdown_pct=_round_pct(100.0 * rel_dd_ratio),
        relative_drawdown_value=round_money(rel_dd_value),
        total_trades=total,
        long_count=len(longs),
        long_won_pct=_round_pct(100.0 * long_won / len(longs) if longs else 0.0),
        short_count=len(shorts),
        short_won_pct=_round_pct(100.0 * short_won / len(shorts) if shorts else 0.0),
        profit_trades=len(wins),
        profit_trades_pct=_round_pct(100.0 * len(wins) / total),
        loss_trades=len(losses),
        loss_trades_pct=_round_pct(100.0 * len(losses) / total),
        largest_profit=round_money(max(wins) if wins else 0.0),
        largest_loss=round_money(min(losses) if losses else 0.0),
        average_profit=round_money(gross_profit / len(wins) if wins else 0.0),
        average_loss=round_money(sum(losses) / len(losses) if losses else 0.0),
        max_consec_wins=best_len[1],
        max_consec_wins_profit=round_money(best_len[2]),
        max_consec_losses=worst_len[1],
        max_consec_losses_loss=round_money(worst_len[2]),
        max_consec_profit=round_money(best_sum[2]),
        max_consec_profit_count=best_sum[1],
        max_consec_loss=round_money(worst_sum[2]),
        max_consec_loss_count=worst_sum[1],
        avg_consec_wins=(
            int(sum(s[1] for s in win_streaks) / len(win_streaks) + 0.5)
            if win_streaks
            else 0
        ),
        avg_consec_losses=(
            int(sum(s[1] for s in loss_streaks) / len(loss_streaks) + 0.5)
            if loss_streaks
            else 0
        ),
    )


def _fmt_pf(pf: float) -> str:
    return "-" if math.isinf(pf) else f"{pf:.2f}"


def render_report(stats: SummaryStats, with_convention: bool = False) -> str:
    """The Summary/Details block in statement layout."""
    s = stats
    margin = fmt_money(s.margin) if s.margin is not None else "0.00"
    free = fmt_money(s.free_margin) if s.free_margin is not None else fmt_money(s.equity)
    lines = []
    if with_convention:
        lines.append(f"P/L convention:\t{s.pl_convention}")
        lines.append("")
    lines += [
        "Summary:",
        f"Deposit/Withdrawal:\t{fmt_money(s.deposit)}\tCredit Facility:\t0.00",
        f"Closed Trade P/L:\t{fmt_money(s.closed_pl)}\tFloating P/L:\t{fmt_money(s.floating_pl)}\tMargin:\t{margin}",
        f"Balance:\t{fmt_money(s.balance)}\tEquity:\t{fmt_money(s.equity)}\tFree Margin:\t{free}",
        "",
        "Details:",
        f"Gross Profit:\t{fmt_money(s.gross_profit)}\tGross Loss:\t{fmt_money(s.gross_loss)}\tTotal Net Profit:\t{fmt_money(s.net_profit)}",
        f"Profit Factor:\t{_fmt_pf(s.profit_factor)}\tExpected Payoff:\t{s.expected_payoff:.2f}",
        f"Absolute Drawdown:\t{fmt_money(s.absolute_drawdown)}\tMaximal Drawdown:\t{fmt_money(s.maximal_drawdown)} ({s.maximal_drawdown_pct:.2f}%)\tRelative Drawdown:\t{s.relative_drawdown_pct:.2f}% ({fmt_money(s.relative_drawdown_value)})",
        f"Total Trades:\t{s.total_trades}\tShort Positions (won %):\t{s.short_count} ({s.short_won_pct:.2f}%)\tLong Positions (won %):\t{s.long_count} ({s.long_won_pct:.2f}%)",
        f"Profit Trades (% of total):\t{s.profit_trades} ({s.profit_trades_pct:.2f}%)\tLoss trades (% of total):\t{s.loss_trades} ({s.loss_trades_pct:.2f}%)",
        f"Largest profit trade:\t{fmt_money(s.largest_profit)}\tloss trade:\t{fmt_money(s.largest_loss)}",
        f"Average profit trade:\t{fmt_money(s.average_profit)}\tloss trade:\t{fmt_money(s.average_loss)}",
        f"Maximum consecutive wins ($):\t{s.max_consec_wins} ({fmt_money(s.max_consec_wins_profit)})\tconsecutive losses ($):\t{s.max_consec_losses} ({fmt_money(s.max_consec_losses_loss)})",
        f"Maximal consecutive profit (count):\t{fmt_money(s.max_consec_profit)} ({s.max_consec_profit_count})\tconsecutive loss (count):\t{fmt_money(s.max_consec_loss)} ({s.max_consec_loss_count})",
        f"Average consecutive wins:\t{s.avg_consec_wins}\tconsecutive losses:\t{s.avg_consec_losses}",
        "",
    ]
    return "\n".join(lines)


def _closed_row(r: TradeRecord) -> str:
    if r.side == BALANCE:
        return (
            f"{r.ticket}\t{fmt_time(r.open_time)}\tbalance\tDeposit"
            + "\t" * 10
            + f"{r.profit:.2f}"
        )
    return "\t".join(
        [
            str(r.ticket),
            fmt_time(r.open_time),
            r.side,
            f"{r.lots:.2f}",
            r.symbol,
            _fmt_price(r.symbol, r.open_price),
            _fmt_price(r.symbol, r.sl),
            _fmt_price(r.symbol, r.tp),
            fmt_time(r.close_time),
            _fmt_price(r.symbol, r.close_price),
            f"{r.commission:.2f}",
            f"{r.taxes:.2f}",
            f"{r.swap:.2f}",
            f"{r.profit:.2f}",
        ]
    )


def _open_row(r: TradeRecord) -> str:
    return "\t".join(
        [
            str(r.ticket),
            fmt_time(r.open_time),
            r.side,
            f"{r.lots:.2f}",
            r.symbol,
            _fmt_price(r.symbol, r.open_price),
            _fmt_price(r.symbol, r.sl),
            _fmt_price(r.symbol, r.tp),
            _fmt_price(r.symbol, r.close_price),
            f"{r.commission:.2f}",
            f"{r.taxes:.2f}",
            f"{r.swap:.2f}",
            f"{r.profit:.2f}",
        ]
    )


def render_statement(statement: Statement, pl_convention: str = "profit_plus_swap") -> str:
    """Full statement file: rows plus a Summary/Details recomputed from them.

    A statement without closed trades still renders its rows; the
    Summary/Details block is skipped.
    """
    try:
        stats = summarize(
            statement.records,
            statement.open_trades,
            statement.deposit,
            pl_convention,
            margin=statement.margin,
        )
    except NoTrades:
        stats = None
    lines = ["Closed Transactions:"]
    lines.append(
        "Ticket\tOpen Time\tType\tSize\tItem\tPrice\tS / L\tT / P\tClose Time\tPrice\tCommission\tTaxes\tSwap\tProfit"
    )
    lines += [_closed_row(r) for r in statement.records]
    closed_pl = stats.closed_pl if stats else 0.0
    lines += ["", f"Closed P/L:\t{fmt_money(closed_pl)}", "", "Open Trades:"]
    lines.append(
        "Ticket\tOpen Time\tType\tSize\tItem\tPrice\tS / L\tT / P\tPrice\tCommission\tTaxes\tSwap\tProfit"
    )
    lines += [_open_row(r) for r in statement.open_trades]
    totals = [
        sum(r.commission for r in statement.open_trades),
        sum(r.taxes for r in statement.open_trades),
        sum(r.swap for r in statement.open_trades),
        sum(r.profit for r in statement.open_trades),
    ]
    lines.append("\t" * 9 + "\t".join(fmt_money(t) for t in totals))
    floating = stats.floating_pl if stats else round_money(totals[0] + totals[1] + totals[2] + totals[3])
    lines += ["", f"Floating P/L:\t{fmt_money(floating)}", ""]
    lines += ["Working Orders:", "", "No transactions", ""]
    if stats is not None:
        lines.append(render_report(stats))
    return "\n".join(lines)


def stats_to_dict(stats: SummaryStats) -> dict:
    """Flat machine-readable dump; money/percent values as decimal strings."""
    out = {}
    for f in fields(stats):
        v = getattr(stats, f.name)
        if v is None:
            out[f.name] = ""
        elif isinstance(v, bool) or isinstance(v, int):
            out[f.name] = str(v)
        elif isinstance(v, float):
            out[f.name] = "inf" if math.isinf(v) else f"{v:.2f}"
        else:
            out[f.name] = str(v)
    return out

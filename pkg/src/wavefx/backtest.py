"""Bar-replay engine: data, decision graph, portfolio, and broker in one loop.

The ledger advances at the base timeframe (stop sweeps, swap accrual,
mark-to-market); the decision tree fires at the root node's timeframe.
Per fire, each symbol's elementary generators are evaluated (dynamic and
convolution criteria gated by the shift-stability test, plus MACD,
Bollinger, RSI and feedback columns), the tree fuses them into coupled
scores, capital is reallocated from realized effectiveness, and orders
are routed to the simulated broker.  Runs are deterministic for a fixed
seed; per-symbol evaluation may run on a thread pool with results applied
in symbol order, so worker count never changes the output.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import assembly, market_data, sde, signals, wavelets
from .assembly import ACTIVE, AssemblyNode, AssemblyState, encode_action
from .config import RunConfig
from .errors import ValidationError
from .ledger import BUY, SELL, Broker, InsufficientMargin, SymbolSpec
from .portfolio import Allocation, EffectivenessRecord, enforce_margin, reallocate
from .report import Statement, render_report, render_statement, stats_to_dict, summarize
from .signals import Action, RiskConfig, Signal


@dataclass
class BacktestResult:
    statement_text: str
    report_text: str
    stats_dict: dict
    decision_journal: str
    allocation_journal: str
    final_equity: float


@dataclass
class _DensityCache:
    p_s: float = 0.5
    p_conv: float = 0.5
    gate_dynamic: bool = False
    gate_convolution: bool = False


def build_tree(cfg: RunConfig) -> AssemblyNode:
    node = AssemblyNode("elementary", cfg.base_timeframe, (), cfg.feedback_depth)
    tf = cfg.base_timeframe
    for factor in cfg.homothetic_factors:
        tf *= factor
        node = AssemblyNode("homothetic", tf, (node,), cfg.feedback_depth)
    return node


def _walk(node: AssemblyNode, path: str = "0"):
    yield path, node
    for i, child in enumerate(node.children):
        yield from _walk(child, f"{path}.{i}")


class Engine:
    """One configured backtest; implements the NodeView protocol."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.symbols = cfg.symbols
        self.kappa = cfg.coupling_kappa
        self.risk = RiskConfig(cfg.alpha1, cfg.ks_alpha, cfg.shift_T)
        self.family = wavelets.family(cfg.wavelet_family)
        self.root = build_tree(cfg)
        self.nodes = []  # unique nodes, root-first walk order
        self.node_path = {}
        for path, node in _walk(self.root):
            if node not in self.node_path:
                self.node_path[node] = path
                self.nodes.append(node)
        self.series = {sym: self._series_for(sym) for sym in self.symbols}
        n = min(len(s) for s in self.series.values())
        self.series = {sym: s.slice(0, n) for sym, s in self.series.items()}
        self.n_bars = n
        self.resampled = {}
        for node in self.nodes:
            factor = node.timeframe // cfg.base_timeframe
            self.resampled[node.timeframe] = {
                sym: (
                    self.series[sym]
                    if factor == 1
                    else market_data.resample(self.series[sym], factor)
                )
                for sym in self.symbols
            }
        specs = {
            sym: SymbolSpec(
                sym,
                spread=cfg.symbol_config(sym).spread,
                swap_long=cfg.symbol_config(sym).swap_long,
                swap_short=cfg.symbol_config(sym).swap_short,
                conversion_rate=cfg.symbol_config(sym).conversion_rate,
            )
            for sym in self.symbols
        }
        for sym, spec in specs.items():
            if sym[-3:] != "usd" and sym[:3] != "usd" and spec.conversion_rate is None:
                raise ValidationError(f"{sym}: cross pair needs conversion_rate")
        start = int(self.series[self.symbols[0]].time[0])
        self.broker = Broker(
            cfg.deposit,
            cfg.leverage,
            specs,
            cfg.pl_convention,
            start_time=start - 1,
        )
        self.state = AssemblyState()
        self._hist = {(node, sym): [] for node in self.nodes for sym in self.symbols}
        self._current = {}
        self._realized = {sym: [] for sym in self.symbols}
        self._prev_fire_close = {sym: None for sym in self.symbols}
        self._density = {
            (node.timeframe, sym): _DensityCache() for node in self.nodes for sym in self.symbols
        }
        self._corr_cache = {}
        self._fire_idx = -1
        self._alloc = Allocation({sym: 1.0 / len(self.symbols) for sym in self.symbols}, 0.0)
        self._lots = {sym: 0.0 for sym in self.symbols}
        self._realloc_watermark = 1  # skip the deposit row
        self._exit_signals = {}
        self._journal_rows = []
        self._alloc_rows = []
        root_factor = self.root.timeframe // cfg.base_timeframe
        self.fire_step = root_factor
        self.warmup = max(
            (cfg.window + cfg.shift_T + 1) * (node.timeframe // cfg.base_timeframe)
            for node in self.nodes
        )

    # -- data ---------------------------------------------------------------

    def _series_for(self, sym: str) -> market_data.QuoteSeries:
        cfg = self.cfg
        sc = cfg.symbol_config(sym)
        if sc.data:
            path = Path(cfg.data_dir) / sc.data if cfg.data_dir else Path(sc.data)
            return market_data.load_history(path, sym, cfg.base_timeframe)
        if cfg.data_dir:
            path = Path(cfg.data_dir) / f"{sym}.csv"
            if path.exists():
                return market_data.load_history(path, sym, cfg.base_timeframe)
        sym_seed = int(np.random.SeedSequence([cfg.seed, *sym.encode()]).generate_state(1)[0])
        spec = market_data.SyntheticSpec(
            cfg.synthetic_kind,
            {"sigma": sc.sigma, "dt": 1.0, "y0": sc.price0, "spread": sc.spread},
            cfg.synthetic_length,
            sym_seed,
            symbol=sym,
            timeframe=cfg.base_timeframe,
            start_time=cfg.synthetic_start,
        )
        return market_data.generate(spec)

    # -- NodeView protocol ----------------------------------------------------

    def history(self, node: AssemblyNode, symbol: str) -> np.ndarray:
        rows = self._hist[(node, symbol)][-self.cfg.train_window:]
        if not rows:
            return np.zeros((0, len(self._current[(node, symbol)])))
        return np.asarray(rows, dtype=float)

    def realized(self, node: AssemblyNode, symbol: str) -> np.ndarray:
        return np.asarray(self._realized[symbol][-self.cfg.train_window:], dtype=float)

    def actions(self, node: AssemblyNode, symbol: str) -> np.ndarray:
        return self._current[(node, symbol)]

    def correlation(self, node: AssemblyNode):
        key = node.timeframe
        if key not in self._corr_cache or self._fire_idx % self.cfg.refit_every == 0:
            tf_series = self.resampled[node.timeframe]
            count = self._coarse_count(node)
            closes = {
                sym: tf_series[sym].close[:count] for sym in self.symbols
            }
            self._corr_cache[key] = assembly.correlation_matrix(
                closes, self.cfg.correlation_window
            )
        return self._corr_cache[key]

    def should_retrain(self, node: AssemblyNode) -> bool:
        return self._fire_idx % self.cfg.optimize_every == 0

    def perturb_plan(self, node: AssemblyNode):
        seed = (self.cfg.seed * 1_000_003 + node.timeframe) * 1_000_033 + self._fire_idx
        return self.cfg.perturb_rounds, self.cfg.perturb_temperature, seed

    def state_plan(self, node: AssemblyNode):
        do = self._fire_idx % self.cfg.state_window == 0 and self._fire_idx > 0
        return do, self.cfg.state_window, self.cfg.q_hi, self.cfg.q_lo

    # -- per-fire evaluation --------------------------------------------------

    def _coarse_count(self, node: AssemblyNode) -> int:
        factor = node.timeframe // self.cfg.base_timeframe
        return (self._bar_idx + 1) // factor

    def _refresh_density(self, node: AssemblyNode, sym: str, closes: np.ndarray) -> None:
        cfg = self.cfg
        cache = self._density[(node.timeframe, sym)]
        w, shift = cfg.window, cfg.shift_T
        if len(closes) < w + shift:
            return
        try:
            now = wavelets.decompose(closes[-w:], cfg.scale, self.family)[-1].values
            then = wavelets.decompose(closes[-w - shift : -shift], cfg.scale, self.family)[-1].values
            fit = sde.estimate_fg(
                wavelets.increments(now), 1.0, cfg.bins, cfg.hermite_order_f, cfg.hermite_order_g2
            )
            dens_now = sde.stationary_density(fit)
            fit_then = sde.estimate_fg(
                wavelets.increments(then), 1.0, cfg.bins, cfg.hermite_order_f, cfg.hermite_order_g2
            )
            dens_then = sde.stationary_density(fit_then)
            ks = sde.ks_two_sample(now, then, cfg.ks_alpha)
            conv = sde.convolve_shifted(dens_now, dens_then)
            cache.p_s = sde.prob_nonpositive(dens_now)
            cache.p_conv = sde.prob_nonpositive(conv)
            cache.gate_dynamic = signals.stationarity_gate(ks, "dynamic")
            cache.gate_convolution = signals.stationarity_gate(ks, "convolution")
        except ValidationError:
            cache.gate_dynamic = False
            cache.gate_convolution = False

    def _symbol_fire(self, sym: str):
        """Pure per-symbol work for one fire: signals and action vectors."""
        cfg = self.cfg
        refit = self._fire_idx % cfg.refit_every == 0
        out = {}
        elementary = {}
        for node in self.nodes:
            count = self._coarse_count(node)
            series = self.resampled[node.timeframe][sym]
            closes = series.close[:count]
            if refit:
                self._refresh_density(node, sym, closes)
            cache = self._density[(node.timeframe, sym)]
            window = closes[-cfg.window:]
            coeff = wavelets.decompose(window, cfg.scale, self.family)[-1].values
            y, dy = float(coeff[-1]), float(coeff[-1] - coeff[-2])
            sig_dyn = (
                signals.dynamic_signal(y, dy, cache.p_s, self.risk)
                if cache.gate_dynamic
                else Signal(Action.HOLD, signals.Source.DYNAMIC, 0.0)
            )
            sig_conv = (
                signals.statistical_signal(cache.p_conv, self.risk)
                if cache.gate_convolution
                else Signal(Action.HOLD, signals.Source.CONVOLUTION, 0.0)
            )
            sig_macd = signals.indicator_signal(window, "macd")
            sig_bb = signals.indicator_signal(window, "bollinger")
            sig_rsi = signals.indicator_signal(window, "rsi")
            sigs = (sig_dyn, sig_conv, sig_macd, sig_bb, sig_rsi)
            actions = [encode_action(s) for s in sigs]
            path = self.node_path[node]
            past_scores = self.state.score_hist.get((path, sym), [])
            for j in range(node.feedback_depth):
                k = len(past_scores) - 1 - j
                actions.append(int(np.sign(past_scores[k])) if k >= 0 else 0)
            out[node] = np.asarray(actions, dtype=float)
            elementary[node] = sigs
        return out, elementary

    def _reallocate(self, time: int) -> None:
        trades = [r for r in self.broker.closed[self._realloc_watermark:]]
        self._realloc_watermark = len(self.broker.closed)
        records = []
        by_sym = {sym: [] for sym in self.symbols}
        for r in trades:
            if r.symbol in by_sym:
                by_sym[r.symbol].append(r.pl(self.cfg.pl_convention))
        for sym in self.symbols:
            pls = by_sym[sym]
            records.append(
                EffectivenessRecord(
                    sym,
                    self.root.timeframe,
                    float(sum(pls)),
                    float(np.std(pls)) if len(pls) > 1 else 0.0,
                    len(pls),
                )
            )
        if not trades:
            self._alloc = Allocation(
                {sym: 1.0 / len(self.symbols) for sym in self.symbols}, 0.0
            )
        else:
            self._alloc = reallocate(records, self.cfg.lambda_risk, self.cfg.allocation_floor)
        prices = {sym: float(self.series[sym].close[self._bar_idx]) for sym in self.symbols}
        # Size from a configured slice of equity; the margin bound then
        # holds with room to spare for adverse marks between reallocations.
        equity = self.broker.equity() * self.cfg.exposure
        if equity > 0:
            self._lots = enforce_margin(self._alloc, equity, self.cfg.leverage, prices)
        else:
            self._lots = {sym: 0.0 for sym in self.symbols}
        for sym in self.symbols:
            self._alloc_rows.append(
                (time, sym, self._alloc.fractions.get(sym, 0.0), self._lots.get(sym, 0.0))
            )

    def _close_side(self, sym: str, side: str, time: int, mid: float) -> None:
        for ticket in [
            t for t, p in self.broker.positions.items() if p.symbol == sym and p.side == side
        ]:
            self.broker.close_position(ticket, time, mid)

    def _orders(self, time: int, scores: dict) -> None:
        for sym in self.symbols:
            st = self.state.unit_state("0", sym)
            if st.state != ACTIVE:
                continue
            mid = float(self.series[sym].close[self._bar_idx])
            exit_sig = self._exit_signals.get(sym)
            if exit_sig is not None and exit_sig.action in (Action.EXIT_LONG, Action.EXIT_SHORT):
                side = BUY if exit_sig.action is Action.EXIT_LONG else SELL
                self._close_side(sym, side, time, mid)
            score = scores.get(sym, 0.0)
            if score == 0.0:
                continue
            side, opposite = (BUY, SELL) if score > 0 else (SELL, BUY)
            # A reversed conviction is an exit for the opposite side.
            self._close_side(sym, opposite, time, mid)
            lots = self._lots.get(sym, 0.0)
            if lots < 0.01:
                continue
            if any(
                p.symbol == sym and p.side == side for p in self.broker.positions.values()
            ):
                continue
            try:
                self.broker.open_position(sym, side, lots, time, mid)
            except InsufficientMargin:
                pass

    def _fire(self, time: int) -> None:
        self._fire_idx += 1
        for sym in self.symbols:
            close = float(self.series[sym].close[self._bar_idx])
            prev = self._prev_fire_close[sym]
            if prev is not None:
                self._realized[sym].append(float(np.sign(close - prev)))
            self._prev_fire_close[sym] = close

        if self.cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
                results = list(pool.map(self._symbol_fire, self.symbols))
        else:
            results = [self._symbol_fire(sym) for sym in self.symbols]

        elem_signals = {}
        for sym, (vectors, elementary) in zip(self.symbols, results):
            elem_signals[sym] = elementary
            for node, vec in vectors.items():
                self._current[(node, sym)] = vec

        scores = assembly.evaluate_node(self.root, self, self.state, "0")

        for sym in self.symbols:
            for node in self.nodes:
                self._hist[(node, sym)].append(tuple(self._current[(node, sym)]))
            self._exit_signals[sym] = elem_signals[sym][self.root][1]

        if self._fire_idx % self.cfg.realloc_every == 0:
            self._reallocate(time)
        self._orders(time, scores)

        for sym in self.symbols:
            st = self.state.unit_state("0", sym)
            for sig in elem_signals[sym][self.root]:
                if sig.action is not Action.HOLD:
                    self._journal_rows.append(
                        (time, sym, sig.source.value, sig.action.value, sig.strength, st.state)
                    )
            score = scores.get(sym, 0.0)
            fused_action = (
                Action.ENTER_LONG if score > 0 else Action.ENTER_SHORT if score < 0 else Action.HOLD
            )
            self._journal_rows.append(
                (time, sym, "fusion", fused_action.value, abs(score), st.state)
            )

    # -- main loop ------------------------------------------------------------

    def run(self) -> BacktestResult:
        cfg = self.cfg
        for t in range(self.n_bars):
            self._bar_idx = t
            time = int(self.series[self.symbols[0]].time[t])
            bars = {sym: self.series[sym].bar(t) for sym in self.symbols}
            self.broker.on_bar(time, bars)
            if (t + 1) % self.fire_step == 0 and t + 1 >= self.warmup:
                self._fire(time)
            if self.broker.equity() <= 0:
                break

        statement = Statement(
            list(self.broker.closed),
            self.broker.open_rows(),
            cfg.deposit,
            margin=self.broker.margin_used(),
        )
        statement_text = render_statement(statement, cfg.pl_convention)
        try:
            stats = summarize(
                statement.records,
                statement.open_trades,
                cfg.deposit,
                cfg.pl_convention,
                margin=statement.margin,
            )
            report_text = render_report(stats, with_convention=True)
            stats_dict = stats_to_dict(stats)
        except ValidationError:
            report_text = "No closed trades.\n"
            stats_dict = {}
        return BacktestResult(
            statement_text,
            report_text,
            stats_dict,
            self._journal(),
            self._alloc_journal(),
            self.broker.equity(),
        )

    def _journal(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bar_time", "symbol", "source", "action", "strength", "state"])
        for row in self._journal_rows:
            writer.writerow(
                [row[0], row[1], row[2], row[3], f"{row[4]:.6f}", row[5]]
            )
        return buf.getvalue()

    def _alloc_journal(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bar_time", "symbol", "fraction", "lots"])
        for time, sym, frac, lots in self._alloc_rows:
            writer.writerow([time, sym, f"{frac:.6f}", f"{lots:.2f}"])
        return buf.getvalue()


def run_backtest(cfg: RunConfig) -> BacktestResult:
    return Engine(cfg).run()

"""Elementary trading signals.

Two signal families drive the elementary decision units: the dynamic
criterion keyed to the sign of the latest coefficient increment together
with the stationary probability mass P_s, and the statistical exit
criterion keyed to P_s thresholds on the shifted-convolution density.
Classic indicators (MACD, Bollinger, RSI) are available as extra
generators; all emit the same Signal shape.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import SeriesTooShort, ValidationError
from .market_data import QuoteSeries
from .sde import KSResult


class Action(str, enum.Enum):
    ENTER_LONG = "enter_long"
    ENTER_SHORT = "enter_short"
    EXIT_LONG = "exit_long"
    EXIT_SHORT = "exit_short"
    HOLD = "hold"


class Source(str, enum.Enum):
    DYNAMIC = "dynamic"
    STATISTICAL = "statistical"
    CONVOLUTION = "convolution"
    MACD = "macd"
    BOLLINGER = "bollinger"
    RSI = "rsi"


@dataclass(frozen=True)
class RiskConfig:
    """Risk level alpha1, KS significance, and the shift T in bars."""

    alpha1: float = 0.05
    ks_alpha: float = 0.05
    shift_T: int = 16

    def __post_init__(self):
        if not 0.0 < self.alpha1 < 0.5:
            raise ValidationError(f"alpha1 must be in (0, 0.5), got {self.alpha1}")
        if not 0.0 < self.ks_alpha < 1.0:
            raise ValidationError(f"ks_alpha must be in (0, 1), got {self.ks_alpha}")
        if self.shift_T < 1:
            raise ValidationError(f"shift_T must be >= 1, got {self.shift_T}")


@dataclass(frozen=True)
class Signal:
    action: Action
    source: Source
    strength: float

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise ValidationError(f"strength must be in [0, 1], got {self.strength}")
        if self.action is Action.HOLD and self.strength != 0.0:
            raise ValidationError("hold signals must carry strength 0")


def _hold(source: Source) -> Signal:
    return Signal(Action.HOLD, source, 0.0)


def dynamic_signal(y: float, dy: float, p_s: float, cfg: RiskConfig) -> Signal:
    """Entry rule from the latest increment and P_s.

    Long when -dy > 0 and P_s > 1 - alpha1; short when -dy < 0 and
    P_s < alpha1; otherwise hold.  Entry strength is |2 P_s - 1|.
    """
    if not 0.0 <= p_s <= 1.0:
        raise ValidationError(f"P_s must be in [0, 1], got {p_s}")
    strength = abs(2.0 * p_s - 1.0)
    if -dy > 0 and p_s > 1.0 - cfg.alpha1:
        return Signal(Action.ENTER_LONG, Source.DYNAMIC, strength)
    if -dy < 0 and p_s < cfg.alpha1:
        return Signal(Action.ENTER_SHORT, Source.DYNAMIC, strength)
    return _hold(Source.DYNAMIC)


def statistical_signal(p_s_conv: float, cfg: RiskConfig) -> Signal:
    """Exit rule on the shifted-convolution density mass.

    Resale (exit long) when P > 1 - alpha1, repurchase (exit short) when
    P < alpha1; otherwise hold.
    """
    if not 0.0 <= p_s_conv <= 1.0:
        raise ValidationError(f"P_s must be in [0, 1], got {p_s_conv}")
    strength = abs(2.0 * p_s_conv - 1.0)
    if p_s_conv > 1.0 - cfg.alpha1:
        return Signal(Action.EXIT_LONG, Source.CONVOLUTION, strength)
    if p_s_conv < cfg.alpha1:
        return Signal(Action.EXIT_SHORT, Source.CONVOLUTION, strength)
    return _hold(Source.CONVOLUTION)


def stationarity_gate(ks: KSResult, criterion: str) -> bool:
    """Permit a criterion family given the shift-stability test.

    Density-based criteria (dynamic/statistical on f_s) require the
    distribution to be stable under the shift (no rejection); the
    convolution criterion requires the shift to carry information
    (rejection).
    """
    if criterion == "dynamic":
        return not ks.reject_equality
    if criterion == "convolution":
        return ks.reject_equality
    raise ValidationError(f"unknown criterion {criterion!r}")


def ema(values, span: int) -> np.ndarray:
    """Exponential moving average, seeded at the first value (adjust=False)."""
    x = np.asarray(values, dtype=float)
    alpha = 2.0 / (span + 1.0)
    out, _ = lfilter([alpha], [1.0, alpha - 1.0], x, zi=[(1.0 - alpha) * x[0]])
    return out


def _wilder(values, period: int) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    alpha = 1.0 / period
    out, _ = lfilter([alpha], [1.0, alpha - 1.0], x, zi=[(1.0 - alpha) * x[0]])
    return out


def macd_lines(closes, fast: int = 12, slow: int = 26, signal_span: int = 9):
    line = ema(closes, fast) - ema(closes, slow)
    sig = ema(line, signal_span)
    return line, sig, line - sig


def rsi_values(closes, period: int = 14) -> np.ndarray:
    """Wilder's RSI; flat stretches (no gains, no losses) read as 50."""
    d = np.diff(np.asarray(closes, dtype=float))
    gain = _wilder(np.maximum(d, 0.0), period)
    loss = _wilder(np.maximum(-d, 0.0), period)
    out = np.full(len(d), 50.0)
    np.divide(100.0 * gain, gain + loss, out=out, where=(gain + loss) > 0)
    return out


def indicator_signal(series: QuoteSeries, kind: str, params: dict | None = None) -> Signal:
    """Classic indicator entries with textbook default parameters.

    MACD(12,26,9): signal-line cross at the final bar.  Bollinger(20, 2):
    band touch, traded mean-reversion (hold on zero bandwidth).  RSI(14):
    oversold below 30 enters long, overbought above 70 enters short.
    """
    p = params or {}
    closes = series.close if isinstance(series, QuoteSeries) else np.asarray(series, dtype=float)
    if kind == "macd":
        fast = int(p.get("fast", 12))
        slow = int(p.get("slow", 26))
        span = int(p.get("signal", 9))
        need = slow + span
        if len(closes) < need:
            raise SeriesTooShort(need, len(closes), "macd input")
        _, _, hist = macd_lines(closes, fast, slow, span)
        strength = min(1.0, abs(hist[-1]) / (abs(hist[-1]) + abs(hist[-2]) + 1e-300))
        if hist[-2] <= 0.0 < hist[-1]:
            return Signal(Action.ENTER_LONG, Source.MACD, strength)
        if hist[-2] >= 0.0 > hist[-1]:
            return Signal(Action.ENTER_SHORT, Source.MACD, strength)
        return _hold(Source.MACD)
    if kind == "bollinger":
        period = int(p.get("period", 20))
        width = float(p.get("width", 2.0))
        if len(closes) < period:
            raise SeriesTooShort(period, len(closes), "bollinger input")
        window = closes[-period:]
        std = float(np.std(window))
        if std == 0.0:
            return _hold(Source.BOLLINGER)
        z = (closes[-1] - float(np.mean(window))) / std
        strength = min(1.0, abs(z) / (2.0 * width))
        if z <= -width:
            return Signal(Action.ENTER_LONG, Source.BOLLINGER, strength)
        if z >= width:
            return Signal(Action.ENTER_SHORT, Source.BOLLINGER, strength)
        return _hold(Source.BOLLINGER)
    if kind == "rsi":
        period = int(p.get("period", 14))
        low = float(p.get("low", 30.0))
        high = float(p.get("high", 70.0))
        if len(closes) < period + 1:
            raise SeriesTooShort(period + 1, len(closes), "rsi input")
        r = float(rsi_values(closes, period)[-1])
        if r < low:
            return Signal(Action.ENTER_LONG, Source.RSI, min(1.0, (low - r) / low))
        if r > high:
            return Signal(Action.ENTER_SHORT, Source.RSI, min(1.0, (r - high) / (100.0 - high)))
        return _hold(Source.RSI)
    raise ValidationError(f"unknown indicator kind {kind!r}")

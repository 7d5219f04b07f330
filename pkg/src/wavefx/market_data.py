"""Quote series: CSV ingestion, timeframe resampling, synthetic path generation.

A quote series is a columnar store of OHLC bars for one symbol at one
timeframe.  Synthetic generators produce processes with known ground truth
(Wiener, Ornstein-Uhlenbeck, geometric Brownian motion, logistic map,
Lorenz x-component) wrapped as bars so every downstream consumer sees the
same shape as historical data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import DataError, ValidationError

CSV_HEADER = ["timestamp", "open", "high", "low", "close", "spread"]

SYNTHETIC_KINDS = ("wiener", "ornstein_uhlenbeck", "gbm", "logistic_map", "lorenz_x")


class ParseError(DataError):
    def __init__(self, row: int, detail: str = ""):
        self.row = row
        super().__init__(f"bad row {row}: {detail}" if detail else f"bad row {row}")


class NonMonotonicTimestamps(DataError):
    pass


class EmptySeries(ValidationError):
    pass


class InvalidParameter(ValidationError):
    def __init__(self, name: str, detail: str = ""):
        self.name = name
        super().__init__(f"invalid parameter {name!r}" + (f": {detail}" if detail else ""))


@dataclass(frozen=True)
class Bar:
    timestamp: int
    open: float
    high: float
    low: float
    close: float
    spread: float = 0.0


@dataclass(frozen=True)
class QuoteSeries:
    """Time-ascending OHLC bars, stored columnar for fast numerics.

    Invariants checked at construction: strictly increasing timestamps with
    spacing at least one timeframe (gaps allowed), low <= min(open, close),
    high >= max(open, close), spread >= 0.
    """

    symbol: str
    timeframe: int  # minutes
    time: np.ndarray
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    spread: np.ndarray

    def __post_init__(self):
        if self.timeframe <= 0:
            raise ValidationError(f"timeframe must be positive, got {self.timeframe}")
        n = len(self.time)
        for name in ("open", "high", "low", "close", "spread"):
            if len(getattr(self, name)) != n:
                raise ValidationError(f"column {name!r} length != {n}")
        if n:
            dt = np.diff(self.time)
            if np.any(dt < self.timeframe * 60):
                raise NonMonotonicTimestamps(
                    f"{self.symbol}: timestamps must increase by >= {self.timeframe} min"
                )
            if np.any(self.low > np.minimum(self.open, self.close)) or np.any(
                self.high < np.maximum(self.open, self.close)
            ):
                raise ValidationError(f"{self.symbol}: OHLC ordering violated")
            if np.any(self.spread < 0):
                raise ValidationError(f"{self.symbol}: negative spread")

    def __len__(self) -> int:
        return len(self.time)

    def bar(self, i: int) -> Bar:
        return Bar(
            int(self.time[i]),
            float(self.open[i]),
            float(self.high[i]),
            float(self.low[i]),
            float(self.close[i]),
            float(self.spread[i]),
        )

    @property
    def bars(self):
        return [self.bar(i) for i in range(len(self))]

    @classmethod
    def from_bars(cls, symbol: str, timeframe: int, bars) -> "QuoteSeries":
        cols = np.array(
            [[b.timestamp, b.open, b.high, b.low, b.close, b.spread] for b in bars],
            dtype=float,
        ).reshape(-1, 6)
        return cls(
            symbol,
            timeframe,
            cols[:, 0].astype(np.int64),
            cols[:, 1],
            cols[:, 2],
            cols[:, 3],
            cols[:, 4],
            cols[:, 5],
        )

    def slice(self, start: int, stop: int) -> "QuoteSeries":
        return QuoteSeries(
            self.symbol,
            self.timeframe,
            self.time[start:stop],
            self.open[start:stop],
            self.high[start:stop],
            self.low[start:stop],
            self.close[start:stop],
            self.spread[start:stop],
        )


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a ground-truth synthetic process.

    ``parameters`` holds named decimals (theta, sigma, mu, r, dt, y0,
    spread, ...); missing keys fall back to per-kind defaults.  Generation
    is bit-reproducible for a fixed seed.
    """

    kind: str
    parameters: dict
    length: int
    seed: int
    symbol: str = "synthetic"
    timeframe: int = 5
    start_time: int = 0

    def __post_init__(self):
        if self.kind not in SYNTHETIC_KINDS:
            raise InvalidParameter("kind", f"{self.kind!r} not one of {SYNTHETIC_KINDS}")
        if self.length < 2:
            raise InvalidParameter("length", "must be >= 2")
        if self.parameters.get("dt", 1.0) <= 0:
            raise InvalidParameter("dt", "must be > 0")
        if self.parameters.get("sigma", 0.0) < 0:
            raise InvalidParameter("sigma", "must be >= 0")


def _path_wiener(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    p = spec.parameters
    dt = p.get("dt", 1.0)
    sigma = p.get("sigma", 1.0)
    y0 = p.get("y0", 0.0)
    steps = sigma * np.sqrt(dt) * rng.standard_normal(spec.length - 1)
    return y0 + np.concatenate([[0.0], np.cumsum(steps)])


def _path_ou(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    # Euler-Maruyama: y[t+1] = y[t] + theta*(mu - y[t])*dt + sigma*sqrt(dt)*xi,
    # vectorized as a first-order linear recursion.
    p = spec.parameters
    theta = p.get("theta", 1.0)
    mu = p.get("mu", 0.0)
    sigma = p.get("sigma", 1.0)
    dt = p.get("dt", 0.01)
    y0 = p.get("y0", 0.0)
    a = 1.0 - theta * dt
    x = np.empty(spec.length)
    x[0] = y0
    x[1:] = theta * mu * dt + sigma * np.sqrt(dt) * rng.standard_normal(spec.length - 1)
    return lfilter([1.0], [1.0, -a], x)


def _path_gbm(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    p = spec.parameters
    mu = p.get("mu", 0.0)
    sigma = p.get("sigma", 0.2)
    dt = p.get("dt", 0.01)
    y0 = p.get("y0", 1.0)
    factors = 1.0 + mu * dt + sigma * np.sqrt(dt) * rng.standard_normal(spec.length - 1)
    return y0 * np.concatenate([[1.0], np.cumprod(factors)])


def _path_logistic(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    p = spec.parameters
    r = p.get("r", 4.0)
    x0 = p.get("y0", p.get("x0", 0.5))
    out = np.empty(spec.length)
    out[0] = x0
    x = x0
    for i in range(1, spec.length):
        x = r * x * (1.0 - x)
        out[i] = x
    return out


def _path_lorenz(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    # Classical Lorenz system (s=10, b=8/3, Rayleigh number r) integrated
    # with fixed-step RK4; the x-component is emitted.
    p = spec.parameters
    r = p.get("r", 28.0)
    s, b = 10.0, 8.0 / 3.0
    dt = p.get("dt", 0.01)
    state = np.array([p.get("y0", 1.0), 1.0, 1.05])

    def deriv(u):
        x, y, z = u
        return np.array([s * (y - x), x * (r - z) - y, x * y - b * z])

    out = np.empty(spec.length)
    out[0] = state[0]
    for i in range(1, spec.length):
        k1 = deriv(state)
        k2 = deriv(state + 0.5 * dt * k1)
        k3 = deriv(state + 0.5 * dt * k2)
        k4 = deriv(state + dt * k3)
        state = state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i] = state[0]
    return out


_GENERATORS = {
    "wiener": _path_wiener,
    "ornstein_uhlenbeck": _path_ou,
    "gbm": _path_gbm,
    "logistic_map": _path_logistic,
    "lorenz_x": _path_lorenz,
}


def generate(spec: SyntheticSpec) -> QuoteSeries:
    """Run the spec's process and wrap the scalar path as bars.

    Closes carry the path; each open is the previous close; high/low are
    the max/min of the (open, close) pair.  Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(spec.seed)
    closes = _GENERATORS[spec.kind](spec, rng)
    opens = np.concatenate([[closes[0]], closes[:-1]])
    highs = np.maximum(opens, closes)
    lows = np.minimum(opens, closes)
    spread = float(spec.parameters.get("spread", 0.0))
    n = spec.length
    times = spec.start_time + np.arange(n, dtype=np.int64) * spec.timeframe * 60
    return QuoteSeries(
        spec.symbol,
        spec.timeframe,
        times,
        opens,
        highs,
        lows,
        closes,
        np.full(n, spread),
    )


def resample(series: QuoteSeries, factor: int) -> QuoteSeries:
    """Aggregate ``factor`` consecutive bars into one coarser bar.

    open = first open, close = last close, high/low = extrema, spread =
    last spread.  A trailing incomplete group is dropped; the output
    timeframe is the input timeframe times ``factor``.
    """
    if len(series) == 0:
        raise EmptySeries(f"{series.symbol}: cannot resample empty series")
    if factor < 2:
        raise ValidationError(f"resample factor must be >= 2, got {factor}")
    n = (len(series) // factor) * factor
    if n == 0:
        return QuoteSeries(
            series.symbol,
            series.timeframe * factor,
            np.empty(0, dtype=np.int64),
            *[np.empty(0) for _ in range(5)],
        )

    def grp(a):
        return a[:n].reshape(-1, factor)

    return QuoteSeries(
        series.symbol,
        series.timeframe * factor,
        grp(series.time)[:, 0].copy(),
        grp(series.open)[:, 0].copy(),
        grp(series.high).max(axis=1),
        grp(series.low).min(axis=1),
        grp(series.close)[:, -1].copy(),
        grp(series.spread)[:, -1].copy(),
    )


def load_history(path, symbol: str, timeframe: int) -> QuoteSeries:
    """Read the CSV quote format (header ``timestamp,open,high,low,close,spread``).

    Malformed rows raise ``ParseError`` with the 1-based data-row number;
    out-of-order timestamps raise ``NonMonotonicTimestamps``.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(0, "empty file") from None
        if [h.strip().lower() for h in header] != CSV_HEADER:
            raise ParseError(0, f"expected header {','.join(CSV_HEADER)}")
        rows = []
        for i, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 6:
                raise ParseError(i, f"expected 6 columns, got {len(row)}")
            try:
                ts = int(row[0])
                o, h, l, c, s = (float(v) for v in row[1:])
            except ValueError as exc:
                raise ParseError(i, str(exc)) from None
            if l > min(o, c) or h < max(o, c):
                raise ParseError(i, "OHLC ordering violated")
            if s < 0:
                raise ParseError(i, "negative spread")
            rows.append((ts, o, h, l, c, s))
    if not rows:
        raise ParseError(0, "no data rows")
    arr = np.array(rows)
    ts = arr[:, 0].astype(np.int64)
    if np.any(np.diff(ts) <= 0):
        raise NonMonotonicTimestamps(f"{path}: timestamps not strictly increasing")
    return QuoteSeries(symbol, timeframe, ts, arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], arr[:, 5])


def write_csv(series: QuoteSeries, path) -> None:
    """Write the CSV quote format (LF endings, 5 fractional digits)."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for i in range(len(series)):
            fh.write(
                "%d,%.5f,%.5f,%.5f,%.5f,%.5f\n"
                % (
                    series.time[i],
                    series.open[i],
                    series.high[i],
                    series.low[i],
                    series.close[i],
                    series.spread[i],
                )
            )

"""Dyadic discrete wavelet analysis of price paths.

The close-price path is decomposed into per-scale detail coefficient
series by cascaded orthonormal filtering with dyadic decimation and
periodic boundary extension.  Periodic extension keeps the transform
exactly orthogonal, so the energy identity

    sum(x^2) == sum(approx^2) + sum_i sum(detail_i^2)

holds to round-off when the input length is divisible by 2**levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SeriesTooShort, ValidationError
from .market_data import QuoteSeries

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class WaveletFamily:
    """Orthonormal wavelet defined by its low-pass analysis taps.

    The high-pass taps follow by the quadrature-mirror rule
    g[k] = (-1)^k h[L-1-k].  Construction verifies orthonormality:
    sum(h^2) == 1 and sum_k h[k] h[k+2m] == 0 for m != 0 (within 1e-12).
    """

    name: str
    taps: tuple

    def __post_init__(self):
        h = np.asarray(self.taps)
        if len(h) % 2:
            raise ValidationError(f"{self.name}: tap count must be even")
        if abs(float(h @ h) - 1.0) > 1e-12:
            raise ValidationError(f"{self.name}: taps not unit-norm")
        for m in range(1, len(h) // 2):
            if abs(float(h[: -2 * m] @ h[2 * m :])) > 1e-12:
                raise ValidationError(f"{self.name}: taps not orthogonal at shift {2 * m}")

    @property
    def lowpass(self) -> np.ndarray:
        return np.asarray(self.taps, dtype=float)

    @property
    def highpass(self) -> np.ndarray:
        h = self.lowpass
        g = h[::-1].copy()
        g[1::2] *= -1.0
        return g


HAAR = WaveletFamily("haar", (1.0 / _SQRT2, 1.0 / _SQRT2))

# Classical 4-tap Daubechies filter (two vanishing moments).
DB4 = WaveletFamily(
    "db4",
    (
        (1.0 + _SQRT3) / (4.0 * _SQRT2),
        (3.0 + _SQRT3) / (4.0 * _SQRT2),
        (3.0 - _SQRT3) / (4.0 * _SQRT2),
        (1.0 - _SQRT3) / (4.0 * _SQRT2),
    ),
)

FAMILIES = {f.name: f for f in (HAAR, DB4)}


def family(name: str) -> WaveletFamily:
    try:
        return FAMILIES[name]
    except KeyError:
        raise ValidationError(f"unknown wavelet family {name!r}") from None


@dataclass(frozen=True)
class CoeffSeries:
    """Detail coefficients at one scale: values indexed by integer shifts."""

    scale: int
    shifts: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.scale < 1:
            raise ValidationError(f"scale must be >= 1, got {self.scale}")
        if len(self.shifts) != len(self.values):
            raise ValidationError("shifts and values lengths differ")

    def __len__(self) -> int:
        return len(self.values)


def _analyze_step(x: np.ndarray, fam: WaveletFamily):
    """One filter-and-decimate stage with periodic extension.

    Odd-length inputs drop their oldest sample first, giving floor(n/2)
    outputs while keeping the most recent data.
    """
    if len(x) % 2:
        x = x[1:]
    n = len(x)
    taps = len(fam.lowpass)
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(taps)[None, :]) % n
    win = x[idx]
    return win @ fam.lowpass, win @ fam.highpass


def dwt(values, levels: int, fam: WaveletFamily):
    """Full cascade: returns (approximation, [detail_1, ..., detail_levels])."""
    x = np.asarray(values, dtype=float)
    if levels < 1:
        raise ValidationError(f"levels must be >= 1, got {levels}")
    if len(x) < 2**levels:
        raise SeriesTooShort(2**levels, len(x))
    details = []
    for _ in range(levels):
        x, d = _analyze_step(x, fam)
        details.append(d)
    return x, details


def idwt(approx, details, fam: WaveletFamily) -> np.ndarray:
    """Inverse cascade (used to verify perfect reconstruction)."""
    h, g = fam.lowpass, fam.highpass
    taps = len(h)
    x = np.asarray(approx, dtype=float)
    for d in reversed(details):
        d = np.asarray(d, dtype=float)
        if len(d) != len(x):
            raise ValidationError("approximation/detail length mismatch")
        n = 2 * len(x)
        out = np.zeros(n)
        pos = (2 * np.arange(len(x))[:, None] + np.arange(taps)[None, :]) % n
        np.add.at(out, pos, x[:, None] * h[None, :])
        np.add.at(out, pos, d[:, None] * g[None, :])
        x = out
    return x


def decompose(series, levels: int, fam: WaveletFamily = HAAR):
    """Detail coefficient series for scales 1..levels of the close path."""
    values = series.close if isinstance(series, QuoteSeries) else np.asarray(series, dtype=float)
    _, details = dwt(values, levels, fam)
    return [
        CoeffSeries(i + 1, np.arange(len(d)), d) for i, d in enumerate(details)
    ]


def increments(coeffs) -> np.ndarray:
    """First differences over the shift index, paired with the pre-step value.

    Returns an (n-1, 2) array of rows (y_t, y_{t+1} - y_t); the pre-step
    value is kept for conditional-moment binning.
    """
    values = coeffs.values if isinstance(coeffs, CoeffSeries) else np.asarray(coeffs, dtype=float)
    if len(values) < 2:
        raise SeriesTooShort(2, len(values), "coefficient series")
    return np.column_stack([values[:-1], np.diff(values)])

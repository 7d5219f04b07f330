"""Drift/diffusion recovery and stationary densities for coefficient series.

The coefficient process is modeled as an Ito diffusion
``dY = F(Y) dtau + G(Y) dW``.  F and G^2 are recovered from (y, dy) pairs
by binned conditional moments (first and second Kramers-Moyal
coefficients) fitted in the probabilists' Hermite basis by count-weighted
least squares.  The stationary density follows by quadrature:

    f_s(y) ~ exp(W(y)),   W(y) = integral_0^y 2 F(u) / G(u)^2 du

normalized on a uniform grid.  A two-sample Kolmogorov-Smirnov test gates
whether the density is stable under a time shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e as herm
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import ValidationError

DEFAULT_BINS = 32
DEFAULT_ORDER_F = 3
DEFAULT_ORDER_G2 = 2
DEFAULT_GRID_POINTS = 512
MIN_BIN_COUNT = 5

# Relative floor applied to fitted G^2 before dividing: the quadrature
# integrand 2F/G^2 is singular where the diffusion vanishes.
G2_FLOOR_REL = 1e-8
G2_FLOOR_ABS = 1e-12


class InsufficientData(ValidationError):
    pass


class DegenerateDomain(ValidationError):
    pass


class NonNormalizable(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


@dataclass(frozen=True)
class DriftDiffusionFit:
    """Hermite-basis fit of drift F and squared diffusion G^2.

    Coefficients are in the probabilists' Hermite basis on y standardized
    by the sample mean/std (keeps them O(1) across instruments).  Binned
    conditional moments are retained for inspection and debug dumps.
    """

    hermite_f: np.ndarray
    hermite_g2: np.ndarray
    domain: tuple
    bin_centers: np.ndarray
    bin_counts: np.ndarray
    bin_f: np.ndarray
    bin_g2: np.ndarray
    dtau: float
    y_mean: float
    y_std: float
    g2_floor: float

    def _z(self, y):
        return (np.asarray(y, dtype=float) - self.y_mean) / self.y_std

    def drift(self, y):
        return herm.hermeval(self._z(y), self.hermite_f)

    def diffusion_sq(self, y):
        return np.maximum(herm.hermeval(self._z(y), self.hermite_g2), self.g2_floor)


@dataclass(frozen=True)
class StationaryDensity:
    """Gridded stationary pdf with its log weight W; integrates to one."""

    grid: np.ndarray
    pdf: np.ndarray
    log_weight: np.ndarray

    def __post_init__(self):
        if len(self.grid) < 2:
            raise ValidationError("density grid needs >= 2 points")
        steps = np.diff(self.grid)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]:
            raise ValidationError("density grid must be uniform and increasing")
        if np.any(self.pdf < 0):
            raise ValidationError("pdf must be nonnegative")
        total = trapezoid(self.pdf, self.grid)
        if abs(total - 1.0) > 1e-6:
            raise ValidationError(f"pdf integrates to {total}, not 1")

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def mean(self) -> float:
        return float(trapezoid(self.grid * self.pdf, self.grid))

    def variance(self) -> float:
        m = self.mean()
        return float(trapezoid((self.grid - m) ** 2 * self.pdf, self.grid))

    def shifted(self, offset: float) -> "StationaryDensity":
        return StationaryDensity(self.grid + offset, self.pdf, self.log_weight)

    def reflected(self) -> "StationaryDensity":
        return StationaryDensity(-self.grid[::-1], self.pdf[::-1], self.log_weight[::-1])


@dataclass(frozen=True)
class KSResult:
    statistic: float
    threshold: float
    reject_equality: bool
    n1: int
    n2: int

    def __post_init__(self):
        if self.reject_equality != (self.statistic > self.threshold):
            raise ValidationError("reject_equality inconsistent with statistic/threshold")


def estimate_fg(
    pairs,
    dtau: float,
    bins: int = DEFAULT_BINS,
    order_f: int = DEFAULT_ORDER_F,
    order_g2: int = DEFAULT_ORDER_G2,
) -> DriftDiffusionFit:
    """Recover F and G^2 from (y, dy) pairs.

    Bins span the [1st, 99th] percentile of y; per-bin conditional moments
    give F_hat = mean(dy)/dtau and G2_hat = mean(dy^2)/dtau; bins with
    fewer than 5 samples are excluded; the Hermite coefficients are the
    count-weighted least-squares fit of the surviving binned values.
    """
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValidationError("pairs must be an (n, 2) array of (y, dy)")
    if bins < 5:
        raise ValidationError(f"bins must be >= 5, got {bins}")
    if not (0 <= order_f <= 8 and 0 <= order_g2 <= 8):
        raise ValidationError("Hermite order must be in 0..8")
    if dtau <= 0:
        raise ValidationError("dtau must be positive")
    n = len(pairs)
    if n < 10 * bins:
        raise InsufficientData(f"need >= {10 * bins} pairs, got {n}")
    y, dy = pairs[:, 0], pairs[:, 1]
    lo, hi = np.percentile(y, [1.0, 99.0])
    if hi <= lo:
        raise DegenerateDomain("y values carry no spread")
    # The quadrature domain reaches past the binned range so densities with
    # Gaussian-like tails keep their mass (bins stay at [p1, p99]).
    dom_lo, dom_hi = np.percentile(y, [0.05, 99.95])
    y_mean = float(np.mean(y))
    y_std = float(np.std(y))

    edges = np.linspace(lo, hi, bins + 1)
    inside = (y >= lo) & (y <= hi)
    idx = np.clip(np.searchsorted(edges, y[inside], side="right") - 1, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        f_hat = np.bincount(idx, weights=dy[inside], minlength=bins) / counts / dtau
        g2_hat = np.bincount(idx, weights=dy[inside] ** 2, minlength=bins) / counts / dtau
    centers = 0.5 * (edges[:-1] + edges[1:])
    valid = counts >= MIN_BIN_COUNT
    max_order = max(order_f, order_g2)
    if valid.sum() < max_order + 1:
        raise InsufficientData(
            f"only {int(valid.sum())} populated bins for order-{max_order} fit"
        )

    z = (centers[valid] - y_mean) / y_std
    w = np.sqrt(counts[valid].astype(float))

    def wfit(target, order):
        a = herm.hermevander(z, order)
        coef, *_ = np.linalg.lstsq(a * w[:, None], target * w, rcond=None)
        return coef

    hermite_f = wfit(f_hat[valid], order_f)
    hermite_g2 = wfit(g2_hat[valid], order_g2)
    g2_max = float(np.max(g2_hat[valid]))
    g2_floor = G2_FLOOR_REL * g2_max if g2_max > 0 else G2_FLOOR_ABS
    return DriftDiffusionFit(
        hermite_f,
        hermite_g2,
        (float(dom_lo), float(dom_hi)),
        centers,
        counts,
        np.where(valid, f_hat, np.nan),
        np.where(valid, g2_hat, np.nan),
        float(dtau),
        y_mean,
        y_std,
        g2_floor,
    )


def fit_from_functions(
    drift,
    diffusion_sq,
    domain,
    order_f: int = DEFAULT_ORDER_F,
    order_g2: int = DEFAULT_ORDER_G2,
    points: int = 201,
) -> DriftDiffusionFit:
    """Build a fit directly from known F and G^2 (test/demo convenience)."""
    lo, hi = float(domain[0]), float(domain[1])
    grid = np.linspace(lo, hi, points)
    mean = 0.5 * (lo + hi)
    std = (hi - lo) / 4.0 or 1.0
    z = (grid - mean) / std
    cf = herm.hermefit(z, np.broadcast_to(drift(grid), grid.shape), order_f)
    g2 = np.broadcast_to(diffusion_sq(grid), grid.shape)
    cg = herm.hermefit(z, g2, order_g2)
    g2_max = float(np.max(g2))
    return DriftDiffusionFit(
        cf,
        cg,
        (lo, hi),
        grid,
        np.full(points, MIN_BIN_COUNT),
        np.asarray(drift(grid), dtype=float),
        g2,
        1.0,
        mean,
        std,
        G2_FLOOR_REL * g2_max if g2_max > 0 else G2_FLOOR_ABS,
    )


def stationary_density(fit: DriftDiffusionFit, grid_points: int = DEFAULT_GRID_POINTS) -> StationaryDensity:
    """Quadrature of exp(W) on a uniform grid covering the fit domain and 0.

    W is the cumulative trapezoid of 2F/G^2 anchored at 0 (the grid is
    extended to include 0 when the domain excludes it); the pdf is
    normalized by its trapezoidal integral.
    """
    if grid_points < 64:
        raise ValidationError(f"grid_points must be >= 64, got {grid_points}")
    lo = min(fit.domain[0], 0.0)
    hi = max(fit.domain[1], 0.0)
    grid = np.linspace(lo, hi, grid_points)
    integrand = 2.0 * fit.drift(grid) / fit.diffusion_sq(grid)
    w = cumulative_trapezoid(integrand, grid, initial=0.0)
    w -= np.interp(0.0, grid, w)  # anchor W(0) = 0
    if not np.all(np.isfinite(w)):
        raise NonNormalizable("log weight not finite")
    pdf = np.exp(w - np.max(w))
    z = trapezoid(pdf, grid)
    if not np.isfinite(z) or z <= 0:
        raise NonNormalizable(f"normalizer {z}")
    return StationaryDensity(grid, pdf / z, w)


def prob_nonpositive(density: StationaryDensity) -> float:
    """Probability mass on (-inf, 0]: trapezoid with interpolation at the crossing."""
    g, p = density.grid, density.pdf
    if g[0] > 0:
        return 0.0
    if g[-1] <= 0:
        return 1.0
    i = int(np.searchsorted(g, 0.0, side="right")) - 1
    area = float(trapezoid(p[: i + 1], g[: i + 1]))
    if g[i] < 0.0:
        p0 = float(np.interp(0.0, g, p))
        area += (0.0 - g[i]) * (p[i] + p0) / 2.0
    return float(min(max(area, 0.0), 1.0))


def _resample_to(density: StationaryDensity, h: float) -> StationaryDensity:
    ratio = density.spacing / h
    if abs(ratio - round(ratio)) > 1e-9:
        raise GridMismatch(
            f"grid spacings incommensurate: {density.spacing} vs {h}"
        )
    if round(ratio) == 1:
        return density
    lo, hi = density.grid[0], density.grid[-1]
    n = int(np.floor((hi - lo) / h + 1e-9)) + 1
    grid = lo + np.arange(n) * h
    pdf = np.interp(grid, density.grid, density.pdf)
    z = trapezoid(pdf, grid)
    return StationaryDensity(grid, pdf / z, np.log(np.maximum(pdf / z, 1e-300)))


def convolve_shifted(d_now: StationaryDensity, d_later: StationaryDensity) -> StationaryDensity:
    """Density of the shift z in f(z) = integral f_now(y) f_later(y + z) dy.

    Both inputs are resampled to the finer spacing, the cross-correlation
    is evaluated on the spanning z-grid, and the result is renormalized.
    """
    h = min(d_now.spacing, d_later.spacing)
    a = _resample_to(d_now, h)
    b = _resample_to(d_later, h)
    corr = np.convolve(a.pdf[::-1], b.pdf) * h
    z0 = (b.grid[0] - a.grid[0]) - (len(a.pdf) - 1) * h
    grid = z0 + np.arange(len(corr)) * h
    z = trapezoid(corr, grid)
    if not np.isfinite(z) or z <= 0:
        raise NonNormalizable(f"normalizer {z}")
    pdf = corr / z
    return StationaryDensity(grid, pdf, np.log(np.maximum(pdf, 1e-300)))


def ks_two_sample(a, b, alpha: float) -> KSResult:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic threshold.

    D = sup |ECDF_a - ECDF_b|; the null of equal distributions is rejected
    when D exceeds c(alpha) * sqrt((n1 + n2) / (n1 * n2)) with
    c(alpha) = sqrt(-ln(alpha / 2) / 2).
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must be in (0, 1), got {alpha}")
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    n1, n2 = len(a), len(b)
    if min(n1, n2) < 8:
        raise TooFewSamples(f"need >= 8 samples per side, got {n1} and {n2}")
    both = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, both, side="right") / n1
    cdf_b = np.searchsorted(b, both, side="right") / n2
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    c_alpha = np.sqrt(-np.log(alpha / 2.0) / 2.0)
    threshold = float(c_alpha * np.sqrt((n1 + n2) / (n1 * n2)))
    return KSResult(d, threshold, d > threshold, n1, n2)

import numpy as np
import pytest
from scipy.integrate import trapezoid

from wavefx.sde import (
    DegenerateDomain,
    GridMismatch,
    InsufficientData,
    StationaryDensity,
    TooFewSamples,
    convolve_shifted,
    estimate_fg,
    fit_from_functions,
    ks_two_sample,
    prob_nonpositive,
    stationary_density,
)


def drift_slope(fit):
    grid = np.linspace(*fit.domain, 101)
    return np.polyfit(grid, fit.drift(grid), 1)[0]


def gaussian_density(mean, std, lo, hi, n=513):
    grid = np.linspace(lo, hi, n)
    pdf = np.exp(-0.5 * ((grid - mean) / std) ** 2)
    pdf /= trapezoid(pdf, grid)
    return StationaryDensity(grid, pdf, np.log(np.maximum(pdf, 1e-300)))


class TestEstimateFG:
    def test_ou_recovery(self, ou_pairs):
        fit = estimate_fg(ou_pairs, 0.01, bins=32, order_f=1, order_g2=0)
        assert drift_slope(fit) == pytest.approx(-1.0, rel=0.10)
        assert fit.diffusion_sq(0.0) == pytest.approx(0.25, rel=0.10)

    def test_all_zero_increments(self):
        rng = np.random.default_rng(0)
        y = rng.standard_normal(2000)
        pairs = np.column_stack([y, np.zeros_like(y)])
        fit = estimate_fg(pairs, 1.0, bins=8)
        grid = np.linspace(*fit.domain, 50)
        assert np.max(np.abs(fit.drift(grid))) < 1e-9
        assert np.all(fit.diffusion_sq(grid) == fit.g2_floor)
        assert fit.g2_floor > 0

    def test_pure_wiener_flat_drift(self):
        rng = np.random.default_rng(8)
        n = 200_000
        dt = 0.01
        w = np.concatenate([[0.0], np.cumsum(np.sqrt(dt) * rng.standard_normal(n))])
        pairs = np.column_stack([w[:-1], np.diff(w)])
        fit = estimate_fg(pairs, dt, bins=32, order_f=1, order_g2=0)
        assert abs(drift_slope(fit)) < 0.05
        assert fit.diffusion_sq(0.0) == pytest.approx(1.0, rel=0.10)

    def test_shuffle_invariance(self, ou_pairs):
        sub = ou_pairs[:50_000]
        fit = estimate_fg(sub, 0.01, bins=16)
        rng = np.random.default_rng(1)
        shuffled = sub[rng.permutation(len(sub))]
        fit2 = estimate_fg(shuffled, 0.01, bins=16)
        assert np.allclose(fit.hermite_f, fit2.hermite_f)
        assert np.allclose(fit.hermite_g2, fit2.hermite_g2)
        assert fit.domain == fit2.domain

    def test_insufficient_data(self):
        pairs = np.zeros((40, 2))
        with pytest.raises(InsufficientData):
            estimate_fg(pairs, 1.0, bins=8)

    def test_degenerate_domain(self):
        pairs = np.column_stack([np.ones(200), np.zeros(200)])
        with pytest.raises(DegenerateDomain):
            estimate_fg(pairs, 1.0, bins=8)


class TestStationaryDensity:
    def test_zero_drift_uniform(self):
        fit = fit_from_functions(lambda y: 0.0 * y, lambda y: np.ones_like(y), (-1, 1), 0, 0)
        dens = stationary_density(fit)
        assert np.allclose(dens.pdf, 0.5, atol=1e-9)
        assert np.allclose(dens.log_weight, 0.0, atol=1e-12)

    def test_ou_gaussian(self):
        fit = fit_from_functions(lambda y: -y, lambda y: np.full_like(y, 0.25), (-3, 3), 1, 0)
        dens = stationary_density(fit)
        assert dens.variance() == pytest.approx(0.125, rel=0.05)
        assert dens.mean() == pytest.approx(0.0, abs=1e-9)

    def test_quartic_potential(self):
        fit = fit_from_functions(lambda y: -(y**3), lambda y: np.ones_like(y), (-3, 3), 3, 0)
        dens = stationary_density(fit)
        ref = np.exp(-dens.grid**4 / 2.0)
        ref /= trapezoid(ref, dens.grid)
        assert np.max(np.abs(dens.pdf - ref)) < 1e-4
        mid = dens.grid[np.argmax(dens.pdf)]
        assert abs(mid) < 0.05

    def test_estimated_ou_density_variance(self, ou_pairs):
        fit = estimate_fg(ou_pairs, 0.01)
        dens = stationary_density(fit)
        assert dens.variance() == pytest.approx(0.125, rel=0.05)

    def test_normalized_and_nonnegative(self, ou_pairs):
        fit = estimate_fg(ou_pairs[:100_000], 0.01)
        dens = stationary_density(fit)
        assert np.all(dens.pdf >= 0)
        assert trapezoid(dens.pdf, dens.grid) == pytest.approx(1.0, abs=1e-6)


class TestProbNonpositive:
    def test_symmetric(self):
        dens = gaussian_density(0.0, 1.0, -6, 6)
        assert prob_nonpositive(dens) == pytest.approx(0.5, abs=1e-6)

    def test_all_positive_grid(self):
        dens = gaussian_density(5.0, 0.5, 1.0, 9.0)
        assert prob_nonpositive(dens) == 0.0

    def test_shifted_less_than_half(self):
        dens = gaussian_density(0.1, np.sqrt(0.125), -4, 4)
        p = prob_nonpositive(dens)
        from scipy.stats import norm

        assert p < 0.5
        assert p == pytest.approx(norm.cdf(-0.1 / np.sqrt(0.125)), abs=1e-3)

    def test_reflection_identity(self):
        dens = gaussian_density(0.7, 0.6, -3, 4)
        assert prob_nonpositive(dens.reflected()) == pytest.approx(
            1.0 - prob_nonpositive(dens), abs=1e-6
        )


class TestConvolveShifted:
    def test_identical_symmetric(self):
        dens = gaussian_density(0.0, 1.0, -6, 6)
        out = convolve_shifted(dens, dens)
        assert prob_nonpositive(out) == pytest.approx(0.5, abs=1e-6)
        assert out.mean() == pytest.approx(0.0, abs=1e-9)

    def test_peak_at_shift(self):
        a = gaussian_density(0.3, 0.02, -1, 1, 801)
        b = gaussian_density(-0.5, 0.02, -1, 1, 801)
        out = convolve_shifted(a, b)
        peak = out.grid[np.argmax(out.pdf)]
        assert peak == pytest.approx(-0.8, abs=0.01)

    def test_variance_additivity(self):
        dens = gaussian_density(0.0, 0.5, -4, 4, 1001)
        out = convolve_shifted(dens, dens)
        assert out.variance() == pytest.approx(2.0 * dens.variance(), rel=0.05)

    def test_grid_mismatch(self):
        a = gaussian_density(0.0, 1.0, -4, 4, 257)
        b = gaussian_density(0.0, 1.0, -4, 4, 400)
        with pytest.raises(GridMismatch):
            convolve_shifted(a, b)

    def test_commensurate_grids_resampled(self):
        a = gaussian_density(0.0, 1.0, -4, 4, 129)
        b = gaussian_density(0.0, 1.0, -4, 4, 257)  # exactly half the spacing
        out = convolve_shifted(a, b)
        assert prob_nonpositive(out) == pytest.approx(0.5, abs=1e-3)


class TestKS:
    def test_identical_samples(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal(100)
        res = ks_two_sample(a, a, 0.05)
        assert res.statistic == 0.0
        assert not res.reject_equality

    def test_separated_normals(self):
        rng = np.random.default_rng(1)
        res = ks_two_sample(
            rng.standard_normal(500), rng.standard_normal(500) + 3.0, 0.05
        )
        assert res.reject_equality

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        a, b = rng.standard_normal(64), rng.standard_normal(97) * 1.5
        r1 = ks_two_sample(a, b, 0.05)
        r2 = ks_two_sample(b, a, 0.05)
        assert r1.statistic == r2.statistic
        assert r1.reject_equality == r2.reject_equality

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            ks_two_sample([1.0] * 4, [2.0] * 50, 0.05)

    def test_calibration_quick(self):
        rng = np.random.default_rng(3)
        trials = 300
        rejects = sum(
            ks_two_sample(rng.standard_normal(500), rng.standard_normal(500), 0.05).reject_equality
            for _ in range(trials)
        )
        assert 0.02 <= rejects / trials <= 0.08

import numpy as np
import pytest

from wavefx.errors import SeriesTooShort, ValidationError
from wavefx.market_data import SyntheticSpec, generate
from wavefx.wavelets import (
    DB4,
    HAAR,
    WaveletFamily,
    decompose,
    dwt,
    family,
    idwt,
    increments,
)

SQRT2 = np.sqrt(2.0)


class TestFamilies:
    @pytest.mark.parametrize("fam", [HAAR, DB4])
    def test_orthonormal_taps(self, fam):
        h = fam.lowpass
        assert abs(h @ h - 1.0) < 1e-12
        for m in range(1, len(h) // 2):
            assert abs(h[: -2 * m] @ h[2 * m :]) < 1e-12

    def test_bad_taps_rejected(self):
        with pytest.raises(ValidationError):
            WaveletFamily("bad", (0.5, 0.5))

    def test_lookup(self):
        assert family("haar") is HAAR
        assert family("db4") is DB4
        with pytest.raises(ValidationError):
            family("sym8")


class TestDecompose:
    @pytest.mark.parametrize("fam", [HAAR, DB4])
    def test_constants_annihilated(self, fam):
        out = decompose(np.full(64, 3.7), 3, fam)
        for cs in out:
            assert np.max(np.abs(cs.values)) < 1e-12

    def test_haar_equal_pairs(self):
        out = decompose(np.array([1.0, 1.0, -1.0, -1.0]), 1, HAAR)
        assert np.allclose(out[0].values, [0.0, 0.0], atol=1e-15)

    def test_haar_alternating(self):
        out = decompose(np.array([1.0, -1.0, 1.0, -1.0]), 1, HAAR)
        assert np.allclose(out[0].values, [2.0 / SQRT2, 2.0 / SQRT2])

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            decompose(np.ones(7), 3, HAAR)

    def test_scale_lengths(self):
        out = decompose(np.random.default_rng(0).standard_normal(100), 3, HAAR)
        assert [len(cs) for cs in out] == [50, 25, 12]
        assert [cs.scale for cs in out] == [1, 2, 3]

    def test_quote_series_input(self):
        series = generate(SyntheticSpec("wiener", {"sigma": 1.0}, 64, seed=3))
        out = decompose(series, 2, HAAR)
        assert len(out) == 2


class TestTransformProperties:
    @pytest.mark.parametrize("fam", [HAAR, DB4])
    def test_parseval_and_reconstruction(self, fam):
        rng = np.random.default_rng(11)
        for _ in range(5):
            x = rng.standard_normal(4096)
            approx, details = dwt(x, 6, fam)
            energy = np.sum(approx**2) + sum(np.sum(d**2) for d in details)
            assert abs(energy - np.sum(x**2)) <= 1e-9 * np.sum(x**2)
            assert np.max(np.abs(idwt(approx, details, fam) - x)) <= 1e-9

    @pytest.mark.parametrize("fam", [HAAR, DB4])
    def test_linearity(self, fam):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(256)
        z = rng.standard_normal(256)
        a, b = 2.5, -1.25
        left = decompose(a * x + b * z, 3, fam)
        rx = decompose(x, 3, fam)
        rz = decompose(z, 3, fam)
        for lc, xc, zc in zip(left, rx, rz):
            assert np.allclose(lc.values, a * xc.values + b * zc.values, atol=1e-9)


class TestIncrements:
    def test_first_differences(self):
        out = increments(np.array([0.0, 1.0, 3.0]))
        assert np.array_equal(out, [[0.0, 1.0], [1.0, 2.0]])

    def test_constant(self):
        out = increments(np.full(10, 2.0))
        assert np.all(out[:, 1] == 0.0)

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            increments(np.array([1.0]))

    def test_ou_coefficients_mean_revert(self):
        # Haar details of a mean-reverting path are themselves mean
        # reverting: conditioned on a high bin, the next increment is
        # negative on average (Monte-Carlo oracle).
        spec = SyntheticSpec(
            "ornstein_uhlenbeck",
            {"theta": 1.0, "sigma": np.sqrt(2.0), "dt": 0.5, "y0": 0.0},
            2**18,
            seed=21,
        )
        series = generate(spec)
        coeff = decompose(series, 1, HAAR)[0]
        pairs = increments(coeff)
        y, dy = pairs[:, 0], pairs[:, 1]
        sel = (y > 0.4) & (y < 0.6)
        assert sel.sum() > 100
        assert dy[sel].mean() < 0

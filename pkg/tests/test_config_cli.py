import json

import numpy as np
import pytest

from wavefx.cli import main
from wavefx.config import ConfigError, loads_config
from wavefx.market_data import load_history

MINIMAL = """
[run]
symbols = eurusd, gbpusd
"""


class TestConfig:
    def test_minimal_defaults(self):
        cfg = loads_config(MINIMAL)
        assert cfg.symbols == ("eurusd", "gbpusd")
        assert cfg.base_timeframe == 5
        assert cfg.homothetic_factors == (3,)
        assert cfg.alpha1 == 0.05
        assert cfg.symbol_config("eurusd").spread == 0.0

    def test_symbol_section(self):
        cfg = loads_config(MINIMAL + "\n[symbol:eurusd]\nspread = 0.0002\nswap_long = -0.5\n")
        assert cfg.symbol_config("eurusd").spread == 0.0002
        assert cfg.symbol_config("eurusd").swap_long == -0.5
        assert cfg.symbol_config("gbpusd").spread == 0.0

    def test_unknown_run_key_rejected(self):
        with pytest.raises(ConfigError):
            loads_config(MINIMAL + "turbo = yes\n")

    def test_unknown_symbol_key_rejected(self):
        with pytest.raises(ConfigError):
            loads_config(MINIMAL + "\n[symbol:eurusd]\ncolor = red\n")

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError):
            loads_config(MINIMAL + "\n[broker]\nx = 1\n")

    def test_alpha1_out_of_range(self):
        with pytest.raises(ConfigError):
            loads_config(MINIMAL + "alpha1 = 0.7\n")

    def test_missing_symbols(self):
        with pytest.raises(ConfigError):
            loads_config("[run]\nseed = 1\n")

    def test_k_max_enforced(self):
        with pytest.raises(ConfigError):
            loads_config(MINIMAL + "homothetic_factors = 2, 2\nk_max = 1\n")
        cfg = loads_config(MINIMAL + "homothetic_factors = 2, 2\nk_max = 2\n")
        assert cfg.homothetic_factors == (2, 2)

    def test_shift_t_key(self):
        cfg = loads_config(MINIMAL + "shift_T = 40\n")
        assert cfg.shift_T == 40


class TestCliSynth:
    def test_writes_csv(self, tmp_path):
        out = tmp_path / "w.csv"
        rc = main(
            [
                "synth", "--kind", "wiener", "--length", "50", "--seed", "3",
                "--out", str(out), "--param", "sigma=0", "--param", "y0=1.0",
            ]
        )
        assert rc == 0
        series = load_history(out, "synthetic", 5)
        assert len(series) == 50
        assert np.all(series.close == 1.0)

    def test_same_seed_identical_files(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["synth", "--kind", "gbm", "--length", "100", "--seed", "9"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_invalid_parameter_exit_2(self, tmp_path):
        rc = main(
            [
                "synth", "--kind", "wiener", "--length", "1",
                "--out", str(tmp_path / "x.csv"),
            ]
        )
        assert rc == 2


class TestCliDensity:
    def _ou_csv(self, tmp_path):
        out = tmp_path / "ou.csv"
        main(
            [
                "synth", "--kind", "ornstein_uhlenbeck", "--length", "40000",
                "--seed", "4", "--out", str(out),
                "--param", "theta=1.0", "--param", "sigma=0.5", "--param", "dt=0.01",
            ]
        )
        return out

    def test_end_to_end_ou(self, tmp_path):
        src = self._ou_csv(tmp_path)
        rc = main(
            [
                "density", "--input", str(src), "--raw", "--dtau", "0.01",
                "--bins", "24", "--order-f", "1", "--order-g2", "0",
                "--out-dir", str(tmp_path / "out"),
            ]
        )
        assert rc == 0
        fit_rows = (tmp_path / "out" / "fit.csv").read_text().splitlines()
        assert fit_rows[0] == "bin_center,count,F_hat,G2_hat"
        dens_rows = (tmp_path / "out" / "density.csv").read_text().splitlines()
        assert dens_rows[0] == "y,pdf,W"
        grid = np.array([r.split(",") for r in dens_rows[1:]], dtype=float)
        # integrates to 1 and is centered near zero
        from scipy.integrate import trapezoid

        y, pdf = grid[:, 0], grid[:, 1]
        assert trapezoid(pdf, y) == pytest.approx(1.0, abs=1e-6)
        assert abs((y * pdf).sum() / pdf.sum()) < 0.1

    def test_constant_input_exit_2(self, tmp_path):
        src = tmp_path / "const.csv"
        main(["synth", "--kind", "wiener", "--length", "2000", "--seed", "1",
              "--out", str(src), "--param", "sigma=0"])
        rc = main(["density", "--input", str(src), "--raw", "--out-dir", str(tmp_path)])
        assert rc == 2

    def test_missing_file_exit_1(self, tmp_path):
        rc = main(["density", "--input", str(tmp_path / "nope.csv"), "--out-dir", str(tmp_path)])
        assert rc == 1


class TestCliCoeffs:
    def test_dump(self, tmp_path, capsys):
        src = tmp_path / "w.csv"
        main(["synth", "--kind", "gbm", "--length", "64", "--seed", "2", "--out", str(src)])
        rc = main(["coeffs", "--input", str(src), "--levels", "2"])
        assert rc == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "scale,tau,value"
        assert out.count("\n2,") >= 1 or "\n2," in out


class TestCliReport:
    def test_fixture_report(self, fixture_statement_path, capsys):
        rc = main(["report", str(fixture_statement_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "Closed Trade P/L:\t5 683.62" in out
        assert "P/L convention:\tprofit_plus_swap" in out

    def test_empty_statement_exit_1(self, tmp_path):
        p = tmp_path / "empty.txt"
        p.write_text("")
        assert main(["report", str(p)]) == 1

    def test_json_dump(self, fixture_statement_path, tmp_path):
        rc = main(["report", str(fixture_statement_path), "--out-dir", str(tmp_path)])
        assert rc == 0
        data = json.loads((tmp_path / "summary.json").read_text())
        assert data["expected_payoff"] == "27.72"

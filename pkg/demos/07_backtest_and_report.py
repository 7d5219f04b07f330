"""Full offline run: data -> decision tree -> portfolio -> broker -> statement.

Uses the shipped reference configuration (eight pairs, 5-minute base bars,
one 15-minute self-homothetic layer).  The run is deterministic for the
configured seed: replaying it reproduces the statement byte for byte.
"""
import pathlib
import tempfile

from wavefx import load_config, run_backtest
from wavefx.report import read_statement, summarize

cfg_path = pathlib.Path(__file__).parent / "reference_config.cfg"
cfg = load_config(cfg_path)
print(f"symbols: {', '.join(cfg.symbols)}")
print(f"tree: {cfg.base_timeframe}-min elementary + layers x{list(cfg.homothetic_factors)}")

result = run_backtest(cfg)
print("\n--- summary report ---")
print(result.report_text)

out = pathlib.Path(tempfile.mkdtemp(prefix="wavefx_demo_"))
(out / "statement.txt").write_text(result.statement_text + "\n")
print(f"statement written to {out/'statement.txt'}")

# The emitted statement is a first-class input again: parse and re-sum.
st = read_statement(out / "statement.txt")
stats = summarize(st.records, st.open_trades, st.deposit, cfg.pl_convention, st.margin)
print(
    "re-summed from file: %d trades, closed P/L %.2f, balance %.2f"
    % (stats.total_trades, stats.closed_pl, stats.balance)
)

again = run_backtest(cfg)
print("deterministic replay:", again.statement_text == result.statement_text)

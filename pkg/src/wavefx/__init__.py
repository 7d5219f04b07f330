"""Wavelet-SDE multicurrency trading research engine.

Quote series are decomposed into wavelet coefficients modeled as an Ito
diffusion; entry/exit criteria derive from the coefficient's stationary
density.  Elementary decisions fuse through Boolean weight optimization
with random survival, correlation coupling, nested multi-timeframe
structures, and effectiveness-driven capital reallocation, all exercised
offline against a simulated broker with statement-compatible reporting.
"""

from .assembly import (
    AssemblyNode,
    AssemblyState,
    CouplingMatrix,
    GeneratorWeights,
    UnitState,
    capacity,
    couple,
    evaluate_node,
    optimize_weights,
    perturb,
    update_state,
    vertical_feedback,
)
from .backtest import Engine, run_backtest
from .config import RunConfig, SymbolConfig, load_config, loads_config
from .ledger import Account, Broker, SymbolSpec, TradeRecord, fill_profit
from .market_data import Bar, QuoteSeries, SyntheticSpec, generate, load_history, resample
from .portfolio import Allocation, EffectivenessRecord, enforce_margin, reallocate
from .report import (
    Statement,
    SummaryStats,
    parse_statement,
    read_statement,
    render_report,
    render_statement,
    summarize,
)
from .sde import (
    DriftDiffusionFit,
    KSResult,
    StationaryDensity,
    convolve_shifted,
    estimate_fg,
    ks_two_sample,
    prob_nonpositive,
    stationary_density,
)
from .signals import (
    Action,
    RiskConfig,
    Signal,
    Source,
    dynamic_signal,
    indicator_signal,
    stationarity_gate,
    statistical_signal,
)
from .wavelets import DB4, HAAR, CoeffSeries, WaveletFamily, decompose, dwt, idwt, increments

__version__ = "0.1.0"

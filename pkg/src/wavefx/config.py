"""Run configuration: flat ``key = value`` file with per-symbol sections.

Every field is range-checked at load and unknown keys are rejected, so a
config file pins a backtest completely (together with the seed).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .errors import ValidationError
from .market_data import SYNTHETIC_KINDS
from .report import PL_CONVENTIONS
from .wavelets import FAMILIES


class ConfigError(ValidationError):
    pass


@dataclass(frozen=True)
class SymbolConfig:
    symbol: str
    spread: float = 0.0
    swap_long: float = 0.0
    swap_short: float = 0.0
    price0: float = 1.0
    sigma: float = 0.002
    data: str = ""
    conversion_rate: float | None = None


@dataclass(frozen=True)
class RunConfig:
    symbols: tuple
    base_timeframe: int = 5
    homothetic_factors: tuple = (3,)
    k_max: int = 1
    feedback_depth: int = 1
    alpha1: float = 0.05
    ks_alpha: float = 0.05
    shift_T: int = 128
    hermite_order_f: int = 3
    hermite_order_g2: int = 2
    bins: int = 8
    coupling_kappa: float = 0.5
    q_hi: float = 0.55
    q_lo: float = 0.45
    lambda_risk: float = 1.0
    allocation_floor: float = 0.05
    exposure: float = 0.1
    leverage: int = 100
    pl_convention: str = "profit_plus_swap"
    seed: int = 0
    deposit: float = 5000.0
    wavelet_family: str = "haar"
    scale: int = 1
    window: int = 256
    refit_every: int = 16
    optimize_every: int = 64
    train_window: int = 160
    state_window: int = 64
    realloc_every: int = 32
    correlation_window: int = 64
    perturb_rounds: int = 8
    perturb_temperature: float = 0.15
    synthetic_kind: str = "gbm"
    synthetic_length: int = 3000
    synthetic_start: int = 1303948800
    data_dir: str = ""
    workers: int = 1
    symbol_configs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.symbols:
            raise ConfigError("symbols must not be empty")
        if self.base_timeframe < 1:
            raise ConfigError("base_timeframe must be >= 1")
        if any(f < 2 for f in self.homothetic_factors):
            raise ConfigError("homothetic factors must be >= 2")
        if len(self.homothetic_factors) > self.k_max:
            raise ConfigError(
                f"{len(self.homothetic_factors)} homothetic layers exceed k_max={self.k_max}"
            )
        if not 0.0 < self.alpha1 < 0.5:
            raise ConfigError(f"alpha1 must be in (0, 0.5), got {self.alpha1}")
        if not 0.0 < self.ks_alpha < 1.0:
            raise ConfigError("ks_alpha must be in (0, 1)")
        if self.shift_T < 1:
            raise ConfigError("shift_T must be >= 1")
        if not (0 <= self.hermite_order_f <= 8 and 0 <= self.hermite_order_g2 <= 8):
            raise ConfigError("hermite orders must be in 0..8")
        if self.bins < 5:
            raise ConfigError("bins must be >= 5")
        if self.coupling_kappa < 0:
            raise ConfigError("coupling_kappa must be >= 0")
        if not 0.0 < self.q_lo <= self.q_hi < 1.0:
            raise ConfigError("need 0 < q_lo <= q_hi < 1")
        if self.lambda_risk < 0:
            raise ConfigError("lambda_risk must be >= 0")
        if self.allocation_floor < 0 or self.allocation_floor * len(self.symbols) > 1.0:
            raise ConfigError("allocation_floor infeasible")
        if not 0.0 < self.exposure <= 1.0:
            raise ConfigError("exposure must be in (0, 1]")
        if self.leverage < 1:
            raise ConfigError("leverage must be >= 1")
        if self.pl_convention not in PL_CONVENTIONS:
            raise ConfigError(f"pl_convention must be one of {PL_CONVENTIONS}")
        if self.deposit <= 0:
            raise ConfigError("deposit must be positive")
        if self.wavelet_family not in FAMILIES:
            raise ConfigError(f"wavelet_family must be one of {tuple(FAMILIES)}")
        if self.scale < 1 or 2**self.scale > self.window:
            raise ConfigError("need 1 <= scale and 2**scale <= window")
        for name in (
            "refit_every",
            "optimize_every",
            "train_window",
            "state_window",
            "realloc_every",
            "correlation_window",
            "window",
            "workers",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.perturb_rounds < 0:
            raise ConfigError("perturb_rounds must be >= 0")
        if not 0.0 <= self.perturb_temperature <= 1.0:
            raise ConfigError("perturb_temperature must be in [0, 1]")
        if self.synthetic_kind not in SYNTHETIC_KINDS:
            raise ConfigError(f"synthetic_kind must be one of {SYNTHETIC_KINDS}")
        if self.synthetic_length < 2:
            raise ConfigError("synthetic_length must be >= 2")
        for sym in self.symbols:
            if sym not in self.symbol_configs:
                self.symbol_configs[sym] = SymbolConfig(sym)

    def symbol_config(self, symbol: str) -> SymbolConfig:
        return self.symbol_configs[symbol]


_RUN_PARSERS = {
    "symbols": lambda v: tuple(s.strip().lower() for s in v.split(",") if s.strip()),
    "base_timeframe": int,
    "homothetic_factors": lambda v: tuple(int(x) for x in v.split(",") if x.strip()),
    "k_max": int,
    "feedback_depth": int,
    "alpha1": float,
    "ks_alpha": float,
    "shift_T": int,
    "hermite_order_f": int,
    "hermite_order_g2": int,
    "bins": int,
    "coupling_kappa": float,
    "q_hi": float,
    "q_lo": float,
    "lambda_risk": float,
    "allocation_floor": float,
    "exposure": float,
    "leverage": int,
    "pl_convention": str,
    "seed": int,
    "deposit": float,
    "wavelet_family": str,
    "scale": int,
    "window": int,
    "refit_every": int,
    "optimize_every": int,
    "train_window": int,
    "state_window": int,
    "realloc_every": int,
    "correlation_window": int,
    "perturb_rounds": int,
    "perturb_temperature": float,
    "synthetic_kind": str,
    "synthetic_length": int,
    "synthetic_start": int,
    "data_dir": str,
    "workers": int,
}

_SYMBOL_PARSERS = {
    "spread": float,
    "swap_long": float,
    "swap_short": float,
    "price0": float,
    "sigma": float,
    "data": str,
    "conversion_rate": float,
}


def loads_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config: {exc}") from None
    if "run" not in parser:
        raise ConfigError("missing [run] section")
    run_kwargs = {}
    for key, value in parser["run"].items():
        if key == "shift_t":  # configparser lowercases option names
            key = "shift_T"
        if key not in _RUN_PARSERS:
            raise ConfigError(f"unknown [run] key {key!r}")
        try:
            run_kwargs[key] = _RUN_PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    symbol_configs = {}
    for section in parser.sections():
        if section == "run":
            continue
        if not section.startswith("symbol:"):
            raise ConfigError(f"unknown section [{section}]")
        sym = section.split(":", 1)[1].strip().lower()
        kwargs = {"symbol": sym}
        for key, value in parser[section].items():
            if key not in _SYMBOL_PARSERS:
                raise ConfigError(f"unknown [{section}] key {key!r}")
            if value.strip() == "":
                continue
            try:
                kwargs[key] = _SYMBOL_PARSERS[key](value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {exc}") from None
        symbol_configs[sym] = SymbolConfig(**kwargs)
    if "symbols" not in run_kwargs:
        raise ConfigError("missing required key symbols")
    run_kwargs["symbol_configs"] = symbol_configs
    return RunConfig(**run_kwargs)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return loads_config(fh.read())

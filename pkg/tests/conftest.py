import numpy as np
import pytest

from wavefx.market_data import SyntheticSpec, generate

FIXTURES = __file__.rsplit("/", 1)[0] + "/fixtures"


@pytest.fixture(scope="session")
def fixture_statement_path():
    return f"{FIXTURES}/reference_statement.txt"


@pytest.fixture(scope="session")
def ou_series():
    """10^6-step OU path (theta=1, sigma=0.5, dt=0.01), the main SDE oracle."""
    spec = SyntheticSpec(
        "ornstein_uhlenbeck",
        {"theta": 1.0, "sigma": 0.5, "dt": 0.01, "y0": 0.0},
        1_000_000,
        seed=42,
    )
    return generate(spec)


@pytest.fixture(scope="session")
def ou_pairs(ou_series):
    closes = ou_series.close
    return np.column_stack([closes[:-1], np.diff(closes)])

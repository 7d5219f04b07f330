import numpy as np
import pytest

from wavefx.portfolio import (
    Allocation,
    EffectivenessRecord,
    EmptyRecords,
    InfeasibleFloor,
    enforce_margin,
    reallocate,
)


def rec(symbol, pl, std=0.0, count=5, timeframe=5):
    return EffectivenessRecord(symbol, timeframe, pl, std, count)


class TestReallocate:
    def test_single_positive(self):
        alloc = reallocate([rec("eurusd", 10.0)])
        assert alloc.fractions["eurusd"] == pytest.approx(1.0)
        assert alloc.reserve == 0.0

    def test_identical_records_equal_fractions(self):
        alloc = reallocate([rec("a", 8.0, 1.0), rec("b", 8.0, 1.0)])
        assert alloc.fractions["a"] == pytest.approx(alloc.fractions["b"])

    def test_proportional(self):
        alloc = reallocate([rec("a", 10.0), rec("b", 5.0)], lambda_risk=0.0, floor=0.0)
        assert alloc.fractions["a"] == pytest.approx(2.0 / 3.0)
        assert alloc.fractions["b"] == pytest.approx(1.0 / 3.0)

    def test_all_negative_goes_to_reserve(self):
        alloc = reallocate([rec("a", -5.0), rec("b", -1.0, 3.0)])
        assert alloc.reserve == 1.0
        assert all(f == 0.0 for f in alloc.fractions.values())

    def test_floor_applied(self):
        alloc = reallocate([rec("a", 100.0), rec("b", 0.01)], floor=0.2)
        assert alloc.fractions["b"] == pytest.approx(0.2)
        assert alloc.fractions["a"] == pytest.approx(0.8)

    def test_infeasible_floor(self):
        with pytest.raises(InfeasibleFloor):
            reallocate([rec("a", 1.0), rec("b", 1.0)], floor=0.6)

    def test_empty(self):
        with pytest.raises(EmptyRecords):
            reallocate([])

    def test_simplex_invariant_random(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            records = [
                rec(f"s{i}", float(rng.normal(0, 10)), float(abs(rng.normal(0, 5))))
                for i in range(n)
            ]
            floor = float(rng.uniform(0, 1.0 / n))
            alloc = reallocate(records, float(rng.uniform(0, 2)), floor)
            total = sum(alloc.fractions.values()) + alloc.reserve
            assert total == pytest.approx(1.0, abs=1e-9)
            assert all(f >= -1e-12 for f in alloc.fractions.values())

    def test_scale_invariance(self):
        records = [rec("a", 10.0, 2.0), rec("b", 4.0, 1.0), rec("c", 7.0, 3.0)]
        a1 = reallocate(records, 1.0, 0.05)
        scaled = [rec(r.symbol, r.window_pl * 7.5, r.pl_std * 7.5) for r in records]
        a2 = reallocate(scaled, 1.0, 0.05)
        for s in a1.fractions:
            assert a1.fractions[s] == pytest.approx(a2.fractions[s], abs=1e-12)

    def test_lambda_monotonicity_on_riskiest(self):
        # With score-proportional fractions, raising lambda is guaranteed to
        # shrink the riskiest symbol's share when it also carries the worst
        # risk-adjusted score (the ratio ordering is lambda-invariant);
        # instances violating that precondition are regenerated.
        rng = np.random.default_rng(1)
        checked = 0
        while checked < 100:
            records = [
                rec(f"s{i}", float(rng.uniform(1, 10)), float(rng.uniform(0.1, 4)))
                for i in range(4)
            ]
            riskiest = max(records, key=lambda r: r.pl_std)
            worst_ratio = min(records, key=lambda r: r.window_pl / r.pl_std)
            if riskiest.symbol != worst_ratio.symbol:
                continue
            lo = reallocate(records, 0.5, 0.0)
            hi = reallocate(records, 1.5, 0.0)
            f_lo = lo.fractions[riskiest.symbol] if lo.reserve == 0.0 else 0.0
            f_hi = hi.fractions[riskiest.symbol] if hi.reserve == 0.0 else 0.0
            assert f_hi <= f_lo + 1e-12
            checked += 1

    def test_large_lambda_starves_risky_symbol(self):
        records = [rec("safe", 5.0, 0.1), rec("risky", 5.0, 3.0)]
        alloc = reallocate(records, 10.0, 0.0)
        assert alloc.fractions["risky"] == 0.0
        assert alloc.fractions["safe"] == pytest.approx(1.0)


class TestEnforceMargin:
    def test_full_allocation(self):
        alloc = Allocation({"gbpusd": 1.0}, 0.0)
        lots = enforce_margin(alloc, 5000.0, 100, {"gbpusd": 1.0})
        assert lots["gbpusd"] == pytest.approx(5.0)

    def test_zero_fraction(self):
        alloc = Allocation({"gbpusd": 0.0}, 1.0)
        assert enforce_margin(alloc, 5000.0, 100, {"gbpusd": 1.3})["gbpusd"] == 0.0

    def test_margin_never_exceeds_equity(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            n = int(rng.integers(1, 9))
            raw = rng.uniform(0, 1, size=n)
            raw /= raw.sum() / rng.uniform(0.3, 1.0)  # partial deployment allowed
            fractions = {f"s{i}": float(raw[i]) for i in range(n)}
            alloc = Allocation(fractions, 1.0 - sum(fractions.values()))
            equity = float(rng.uniform(500, 20000))
            leverage = int(rng.integers(1, 500))
            prices = {f"s{i}": float(rng.uniform(0.5, 120)) for i in range(n)}
            lots = enforce_margin(alloc, equity, leverage, prices)
            margin = sum(lots[s] * 100_000 * prices[s] / leverage for s in lots)
            assert margin <= equity + 1e-6
            assert all(round(l * 100) == pytest.approx(l * 100) for l in lots.values())

    def test_fixture_scale_positions_back_solve(self):
        # Open-trade sizes from the reference ledger (0.15-2.15 lots on
        # ~5-10k equity) correspond to feasible fractions at leverage
        # 100-200 and reproduce exactly through the lot formula.
        equity = 9522.25
        rows = [
            ("audusd", 0.20, 1.07058),
            ("eurusd", 0.19, 1.42211),
            ("eurusd", 0.28, 1.40284),
            ("usdcad", 0.19, 0.96360),
            ("usdcad", 0.15, 0.96452),
            ("euraud", 2.15, 1.33025),
            ("usdjpy", 1.39, 81.275),
        ]
        for leverage in (100, 200):
            for sym, lots, price in rows:
                frac = lots * 100_000 * price / (equity * leverage)
                if frac > 1.0:
                    continue  # not representable at this leverage
                out = enforce_margin(Allocation({sym: frac}, 1.0 - frac), equity, leverage, {sym: price})
                assert out[sym] == pytest.approx(lots, abs=1e-9)

    def test_validation(self):
        alloc = Allocation({"a": 1.0}, 0.0)
        with pytest.raises(Exception):
            enforce_margin(alloc, -5.0, 100, {"a": 1.0})
        with pytest.raises(Exception):
            enforce_margin(alloc, 100.0, 0, {"a": 1.0})


class TestAllocationInvariant:
    def test_sum_checked(self):
        with pytest.raises(Exception):
            Allocation({"a": 0.7}, 0.5)
        with pytest.raises(Exception):
            Allocation({"a": -0.1}, 1.1)

"""Capital reallocation and the simulated broker.

Reallocation trades profit against risk with a linear mean-risk score;
the broker fills at close plus or minus half the spread, accrues swap per
calendar day, and keeps the accounting identity equity = balance +
floating P/L at every step.
"""
from wavefx import Broker, EffectivenessRecord, SymbolSpec, enforce_margin, fill_profit, reallocate
from wavefx.market_data import Bar

records = [
    EffectivenessRecord("eurusd", 15, window_pl=120.0, pl_std=30.0, trade_count=14),
    EffectivenessRecord("gbpusd", 15, window_pl=80.0, pl_std=90.0, trade_count=9),
    EffectivenessRecord("usdchf", 15, window_pl=-40.0, pl_std=20.0, trade_count=11),
]
alloc = reallocate(records, lambda_risk=1.0, floor=0.05)
print("fractions:", {k: round(v, 3) for k, v in alloc.fractions.items()}, "reserve:", alloc.reserve)

lots = enforce_margin(alloc, equity=5000.0, leverage=100,
                      prices={"eurusd": 1.45, "gbpusd": 1.66, "usdchf": 0.87})
print("lot sizes:", lots)

# P/L conversion to USD: direct for USD-quoted pairs, divided by the close
# for USD-base pairs, via an explicit rate for crosses.
print("sell 1.00 gbpusd 1.66839 -> 1.66819:", fill_profit("sell", 1.0, "gbpusd", 1.66839, 1.66819))
print("buy 0.17 usdchf 0.87083 -> 0.87115:", fill_profit("buy", 0.17, "usdchf", 0.87083, 0.87115))
print("buy 0.15 euraud 1.33545 -> 1.33558 @1.0565:",
      fill_profit("buy", 0.15, "euraud", 1.33545, 1.33558, 1.0565))

# A round trip through the broker costs exactly one spread.
broker = Broker(5000.0, leverage=100,
                symbol_specs={"eurusd": SymbolSpec("eurusd", spread=0.0002, swap_long=-0.6)})
pos = broker.open_position("eurusd", "buy", 0.5, time=0, mid=1.4500)
print("opened at ask %.5f, margin %.2f" % (pos.open_price, pos.margin))

day = 86_400
broker.on_bar(2 * day, {"eurusd": Bar(2 * day, 1.4510, 1.4512, 1.4495, 1.4510, 0.0002)})
print("floating after 2 days (incl. swap): %.2f" % broker.floating())

rec = broker.close_position(pos.ticket, 2 * day + 300, 1.4510)
print("closed: profit %.2f swap %.2f" % (rec.profit, rec.swap))
acct = broker.account()
print("balance %.2f equity %.2f free margin %.2f" % (acct.balance, acct.equity, acct.free_margin))

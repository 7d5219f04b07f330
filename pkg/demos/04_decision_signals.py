"""The elementary decision rules, one by one.

Entries come from the dynamic criterion (sign of the latest coefficient
increment plus a P_s threshold at risk level alpha1); exits come from the
statistical criterion on the shifted-convolution density.  A shift-
stability test decides which family is allowed to speak.  Classic
indicators provide extra generators in the same Signal shape.
"""
import numpy as np

from wavefx import Action, RiskConfig, dynamic_signal, indicator_signal, statistical_signal
from wavefx.sde import KSResult
from wavefx.signals import stationarity_gate

cfg = RiskConfig(alpha1=0.05, ks_alpha=0.05, shift_T=64)

# Dynamic entry: falling coefficient (dy < 0) with almost all density mass
# at or below zero (P_s > 1 - alpha1) marks an optimal purchase.
for y, dy, p_s in [(0.1, -0.5, 0.97), (0.1, 0.5, 0.03), (0.1, 0.0, 0.97)]:
    sig = dynamic_signal(y, dy, p_s, cfg)
    print(f"dynamic(dy={dy:+.1f}, P_s={p_s:.2f}) -> {sig.action.value:12s} strength {sig.strength:.2f}")

# Statistical exits on the convolution mass.
for p in (0.99, 0.50, 0.01):
    sig = statistical_signal(p, cfg)
    print(f"statistical(P={p:.2f}) -> {sig.action.value}")

# The gate: density criteria need a stable distribution, the convolution
# criterion needs the shift to carry information.
stable = KSResult(0.01, 0.10, False, 500, 500)
moved = KSResult(0.40, 0.10, True, 500, 500)
print("stable  -> dynamic allowed:", stationarity_gate(stable, "dynamic"),
      "| convolution allowed:", stationarity_gate(stable, "convolution"))
print("shifted -> dynamic allowed:", stationarity_gate(moved, "dynamic"),
      "| convolution allowed:", stationarity_gate(moved, "convolution"))

# Indicators with textbook defaults.
rng = np.random.default_rng(0)
rising = np.linspace(1.0, 1.2, 60)
print("rsi on a straight rally ->", indicator_signal(rising, "rsi").action.value)
spike = np.concatenate([np.full(30, 1.0) + rng.normal(0, 1e-4, 30), [1.01]])
print("bollinger on an upside spike ->", indicator_signal(spike, "bollinger").action.value)
turn = list(np.linspace(2.0, 1.0, 60))
while indicator_signal(np.array(turn), "macd").action is not Action.ENTER_LONG:
    turn.append(turn[-1] + 0.03)  # extend the rally until the lines cross
print("macd after a V-turn (%d rally bars) ->" % (len(turn) - 60),
      indicator_signal(np.array(turn), "macd").action.value)

"""Boolean fusion weights: exhaustive optimum, survival kicks, coupling.

Each generator gets one weight per action class (long side, short side).
The objective counts bars whose fused decision sign disagrees with the
realized quote-change sign; random candidate solutions survive only when
they do not worsen it.
"""
import numpy as np

from wavefx import CouplingMatrix, capacity, couple, optimize_weights, perturb, update_state
from wavefx.assembly import UnitState, vertical_feedback
from wavefx.signals import Action

rng = np.random.default_rng(5)
bars = 200
realized = rng.choice([-1.0, 1.0], size=bars)

# Four generators: one perfect, one inverted, two noise.
history = np.column_stack([
    realized,
    -realized,
    rng.integers(-1, 2, size=bars),
    rng.integers(-1, 2, size=bars),
]).astype(float)

best = optimize_weights(history, realized)
print("optimal weights:", best.weights, "mismatches:", best.mismatch_norm)

# Survival perturbations can never make the incumbent worse.
w = best
for seed in range(50):
    w = perturb(w, history, realized, temperature=0.25, rng_seed=seed)
print("after 50 survival rounds:", w.mismatch_norm, "<=", best.mismatch_norm)

# Past decisions can feed back in as one more generator column; the
# optimizer is free to zero-weight them, so the optimum never degrades.
decisions = [Action.ENTER_LONG if r > 0 else Action.ENTER_SHORT for r in realized]
feedback = vertical_feedback(decisions, depth=1)
richer = optimize_weights(np.column_stack([history, feedback]), realized)
print("with feedback column:", richer.mismatch_norm, "<=", best.mismatch_norm)

# Correlation coupling: a short conviction propagates to a positively
# correlated symbol and flips on a negatively correlated one.
rho = CouplingMatrix(("eurusd", "gbpusd", "usdchf"),
                     np.array([[1.0, 0.8, -0.7], [0.8, 1.0, -0.5], [-0.7, -0.5, 1.0]]), 64)
raw = {"eurusd": -0.8, "gbpusd": 0.0, "usdchf": 0.0}
print("coupled scores:", {k: round(v, 3) for k, v in couple(raw, rho, kappa=0.5).items()})

# Unit states react to prediction quality.
pred = realized.copy()
st = update_state(UnitState(), pred, realized)
print("perfect unit ->", st.state, "hit rate", st.hit_rate)
st = update_state(st, -pred, realized)
print("inverted unit ->", st.state)

# The combinatorial budget of the full structure.
print("capacity(M=2, N=8, K=1) =", f"{capacity(2, 8, 1):,}".replace(",", " "))

"""Self-assembling fusion of elementary decision generators.

A unit fuses its generators with Boolean weights chosen to minimize the
count of bars whose fused decision sign disagrees with the realized
quote-change sign; random candidate solutions survive only when they do
not worsen that count.  Units are tightly coupled across symbols through
a correlation matrix, carry an activity state driven by prediction
quality, and nest: a whole structure can serve as a single generator at a
coarser timeframe, and past decisions can feed back as extra inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import numpy as np

from .errors import LengthMismatch, ValidationError
from .signals import Action, Signal

ACTIVE = "active"
SEMI_ACTIVE = "semi_active"
PASSIVE = "passive"

EXHAUSTIVE_LIMIT = 10  # generator count above which the seeded search takes over
MIN_TRAIN_ROWS = 30
_CHUNK = 1 << 13

_ACTION_CODE = {
    Action.ENTER_LONG: 1,
    Action.EXIT_SHORT: 1,
    Action.ENTER_SHORT: -1,
    Action.EXIT_LONG: -1,
    Action.HOLD: 0,
}


class EmptyHistory(ValidationError):
    pass


class UnknownSymbol(ValidationError):
    pass


class CapacityOverflow(ValidationError):
    pass


def encode_action(a) -> int:
    """Map a decision to the {-1, 0, +1} generator alphabet."""
    if isinstance(a, Signal):
        a = a.action
    if isinstance(a, str) and not isinstance(a, Action):
        a = Action(a)
    if isinstance(a, Action):
        return _ACTION_CODE[a]
    return int(np.sign(a))


@dataclass(frozen=True)
class GeneratorWeights:
    """Boolean weights, one slot per (generator, action-class).

    The first half of ``weights`` gates long-side contributions (positive
    actions), the second half short-side (negative actions).
    ``mismatch_norm`` is the certified objective on the training window.
    """

    weights: tuple
    mismatch_norm: int

    @property
    def generator_count(self) -> int:
        return len(self.weights) // 2

    @classmethod
    def certified(cls, bits, history, realized) -> "GeneratorWeights":
        bits = tuple(int(b) for b in bits)
        return cls(bits, int(mismatch_norm(bits, history, realized)))


def _stacked(history) -> np.ndarray:
    h = np.asarray(history, dtype=float)
    if h.ndim != 2:
        raise ValidationError("history must be a (bars, generators) matrix")
    return np.hstack([np.maximum(h, 0.0), np.minimum(h, 0.0)])


def _mismatch_matrix(stacked, realized, bit_matrix) -> np.ndarray:
    scores = stacked @ bit_matrix
    decided = np.sign(scores)
    relevant = realized != 0
    return ((decided != realized[:, None]) & relevant[:, None]).sum(axis=0)


def mismatch_norm(weights, history, realized) -> int:
    """Count of bars whose fused decision sign misses the realized sign.

    Bars with zero realized sign (no quote change) are excluded; an
    all-zero fused score counts as a miss on every remaining bar.
    """
    bits = np.asarray(tuple(weights), dtype=float).reshape(-1, 1)
    realized = np.asarray(realized, dtype=float)
    stacked = _stacked(history)
    if stacked.shape[1] != len(bits):
        raise LengthMismatch(
            f"{len(bits)} weights for {stacked.shape[1]} (generator, class) slots"
        )
    if stacked.shape[0] != len(realized):
        raise LengthMismatch(f"{stacked.shape[0]} bars vs {len(realized)} signs")
    return int(_mismatch_matrix(stacked, realized, bits)[0])


def _bit_columns(ints: np.ndarray, slots: int) -> np.ndarray:
    # Bit 0 of the candidate integer is the LAST weight, so numeric order
    # over candidates equals lexicographic order over weight tuples.
    shifts = np.arange(slots - 1, -1, -1, dtype=np.uint64)
    return ((ints[None, :].astype(np.uint64) >> shifts[:, None]) & 1).astype(float)


def optimize_weights(signal_history, realized_signs, rng_seed: int = 0) -> GeneratorWeights:
    """Boolean weight vector minimizing the sign-mismatch objective.

    Globally optimal by exhaustive search for up to 10 generators (ties
    broken by fewest active weights, then lexicographic); beyond that a
    seeded steepest-descent search with survival perturbations runs.
    """
    history = np.asarray(signal_history, dtype=float)
    realized = np.asarray(realized_signs, dtype=float)
    if history.ndim != 2 or history.shape[0] == 0 or history.shape[1] == 0:
        raise EmptyHistory("signal history is empty")
    if history.shape[0] != len(realized):
        raise LengthMismatch(f"{history.shape[0]} bars vs {len(realized)} signs")
    if history.shape[0] < MIN_TRAIN_ROWS:
        raise ValidationError(f"need >= {MIN_TRAIN_ROWS} bars, got {history.shape[0]}")
    m = history.shape[1]
    slots = 2 * m
    stacked = _stacked(history)

    if m <= EXHAUSTIVE_LIMIT:
        best = None  # (mismatch, active, candidate_int)
        total = 1 << slots
        for lo in range(0, total, _CHUNK):
            ints = np.arange(lo, min(lo + _CHUNK, total), dtype=np.uint64)
            bits = _bit_columns(ints, slots)
            mism = _mismatch_matrix(stacked, realized, bits)
            active = bits.sum(axis=0)
            order = np.lexsort((ints, active, mism))
            j = order[0]
            cand = (int(mism[j]), int(active[j]), int(ints[j]))
            if best is None or cand < best:
                best = cand
        bits = tuple(int(b) for b in _bit_columns(np.array([best[2]]), slots)[:, 0])
        return GeneratorWeights(bits, best[0])

    # Seeded greedy descent from both trivial corners, then survival kicks.
    def descend(bits):
        bits = bits.astype(float)
        cur = int(_mismatch_matrix(stacked, realized, bits.reshape(-1, 1))[0])
        while True:
            cands = np.tile(bits.reshape(-1, 1), (1, slots))
            cands[np.arange(slots), np.arange(slots)] = 1.0 - cands.diagonal()
            mism = _mismatch_matrix(stacked, realized, cands)
            j = int(np.argmin(mism))
            if mism[j] >= cur:
                return bits.astype(int), cur
            bits = cands[:, j].copy()
            cur = int(mism[j])

    options = [descend(np.zeros(slots)), descend(np.ones(slots))]
    bits, mism = min(options, key=lambda o: (o[1], int(o[0].sum())))
    incumbent = GeneratorWeights(tuple(int(b) for b in bits), mism)
    for r in range(4 * slots):
        incumbent = perturb(incumbent, history, realized, 1.0 / slots, (rng_seed, r))
    return incumbent


def perturb(
    weights: GeneratorWeights,
    signal_history,
    realized_signs,
    temperature: float,
    rng_seed,
) -> GeneratorWeights:
    """One random-survival step: flip bits independently, keep non-worse.

    Each bit flips with probability ``temperature``; the candidate
    replaces the incumbent only when its mismatch on the window does not
    exceed the incumbent's.  Deterministic under a fixed seed.
    """
    if not 0.0 <= temperature <= 1.0:
        raise ValidationError(f"temperature must be in [0, 1], got {temperature}")
    if temperature == 0.0:
        return weights
    rng = np.random.default_rng(rng_seed)
    flips = rng.random(len(weights.weights)) < temperature
    if not flips.any():
        return weights
    bits = np.asarray(weights.weights, dtype=int) ^ flips.astype(int)
    cand = GeneratorWeights.certified(bits, signal_history, realized_signs)
    return cand if cand.mismatch_norm <= weights.mismatch_norm else weights


def fused_score(weights: GeneratorWeights, actions) -> float:
    """Weighted action sum normalized to [-1, 1] by the active generator count."""
    a = np.asarray(actions, dtype=float)
    m = len(a)
    if len(weights.weights) != 2 * m:
        raise LengthMismatch(f"{len(weights.weights)} slots for {m} generators")
    wl = np.asarray(weights.weights[:m], dtype=float)
    ws = np.asarray(weights.weights[m:], dtype=float)
    total = float(wl @ np.maximum(a, 0.0) + ws @ np.minimum(a, 0.0))
    denom = max(1.0, float(np.sum(np.maximum(wl, ws))))
    return float(np.clip(total / denom, -1.0, 1.0))


@dataclass(frozen=True)
class CouplingMatrix:
    """Pairwise correlation of symbols over a trailing window."""

    symbols: tuple
    rho: np.ndarray
    window: int

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=float)
        n = len(self.symbols)
        if r.shape != (n, n):
            raise ValidationError(f"rho shape {r.shape} != ({n}, {n})")
        if np.max(np.abs(r - r.T)) > 1e-9:
            raise ValidationError("rho must be symmetric")
        if np.max(np.abs(r)) > 1.0 + 1e-9:
            raise ValidationError("correlations must lie in [-1, 1]")
        if np.max(np.abs(np.diag(r) - 1.0)) > 1e-9:
            raise ValidationError("rho diagonal must be 1")

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise UnknownSymbol(symbol) from None


def correlation_matrix(closes_by_symbol: Mapping[str, np.ndarray], window: int) -> CouplingMatrix:
    """Pearson correlation of close-to-close returns over the last ``window`` bars."""
    symbols = tuple(closes_by_symbol)
    rets = []
    for sym in symbols:
        c = np.asarray(closes_by_symbol[sym], dtype=float)[-(window + 1):]
        rets.append(np.diff(c) / c[:-1])
    n = len(symbols)
    rho = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            si, sj = np.std(rets[i]), np.std(rets[j])
            if si > 0 and sj > 0:
                r = float(np.corrcoef(rets[i], rets[j])[0, 1])
                rho[i, j] = rho[j, i] = float(np.clip(r, -1.0, 1.0))
    return CouplingMatrix(symbols, rho, window)


def couple(raw_scores: Mapping[str, float], rho: CouplingMatrix, kappa: float = 0.5) -> dict:
    """Propagate decision pressure between correlated symbols.

    adjusted_a = clamp(raw_a + kappa * sum_b rho_ab * raw_b / (n - 1)),
    so positively correlated symbols share direction and negatively
    correlated ones oppose it.  A single symbol passes through unchanged.
    """
    symbols = list(raw_scores)
    for sym in symbols:
        rho.index(sym)
    if len(symbols) < 2:
        return dict(raw_scores)
    n = len(symbols)
    raw = np.array([raw_scores[s] for s in symbols], dtype=float)
    sub = np.array(
        [[rho.rho[rho.index(a), rho.index(b)] for b in symbols] for a in symbols]
    )
    np.fill_diagonal(sub, 0.0)
    adjusted = np.clip(raw + kappa * (sub @ raw) / (n - 1), -1.0, 1.0)
    return dict(zip(symbols, adjusted.tolist()))


@dataclass(frozen=True)
class UnitState:
    """Activity state of a decision unit for one symbol.

    Units boot active (the reference system trades from the first bar);
    prediction quality then promotes or demotes them via update_state.
    """

    state: str = ACTIVE
    hit_rate: float = 0.5
    window: int = 0

    def __post_init__(self):
        if self.state not in (ACTIVE, SEMI_ACTIVE, PASSIVE):
            raise ValidationError(f"unknown state {self.state!r}")
        if not 0.0 <= self.hit_rate <= 1.0:
            raise ValidationError(f"hit_rate must be in [0, 1], got {self.hit_rate}")


def update_state(
    current: UnitState,
    predicted_signs,
    realized_signs,
    q_hi: float = 0.55,
    q_lo: float = 0.45,
) -> UnitState:
    """Transition by prediction quality over the window.

    hit_rate is the fraction of correct predictions among bars where both
    the prediction and the realized change are nonzero (0.5 when no such
    bar exists).  At or above q_hi the unit trades; at or below q_lo it
    goes passive; in between it discusses but does not trade.
    """
    pred = np.asarray(predicted_signs, dtype=float)
    real = np.asarray(realized_signs, dtype=float)
    if len(pred) != len(real):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(real)} outcomes")
    if q_lo > q_hi:
        raise ValidationError("q_lo must not exceed q_hi")
    mask = (pred != 0) & (real != 0)
    hit_rate = float(np.mean(np.sign(pred[mask]) == np.sign(real[mask]))) if mask.any() else 0.5
    if hit_rate >= q_hi:
        state = ACTIVE
    elif hit_rate <= q_lo:
        state = PASSIVE
    else:
        state = SEMI_ACTIVE
    return UnitState(state, hit_rate, int(len(pred)))


def vertical_feedback(decision_history, depth: int) -> np.ndarray:
    """Re-encode past decisions as extra generator columns.

    Column j carries the decision stream lagged by j bars (front-padded
    with holds), so depth 1 is the plain encoded stream and depth 0
    disables the feature.
    """
    if depth < 0:
        raise ValidationError(f"depth must be >= 0, got {depth}")
    encoded = np.array([encode_action(a) for a in decision_history], dtype=int)
    t = len(encoded)
    out = np.zeros((t, depth), dtype=int)
    for j in range(min(depth, t) if t else 0):
        out[j:, j] = encoded[: t - j]
    return out


def capacity(m: int, n: int, k: int) -> int:
    """Upper estimate (M! N!)^(K+1) of cross-symbol/timeframe couplings."""
    if m < 1 or n < 1 or k < 0:
        raise ValidationError("need M, N >= 1 and K >= 0")
    value = (math.factorial(m) * math.factorial(n)) ** (k + 1)
    if value >= 1 << 127:
        raise CapacityOverflow(f"capacity({m}, {n}, {k}) exceeds 128-bit range")
    return value


@dataclass(frozen=True)
class AssemblyNode:
    """Node of the decision graph.

    Elementary nodes run their generator pipeline at their timeframe;
    homothetic nodes additionally consume each child's output score as
    one more generator, at a timeframe that is an integer multiple >= 2
    of every child's.
    """

    kind: str
    timeframe: int
    children: tuple = ()
    feedback_depth: int = 0

    def __post_init__(self):
        if self.kind not in ("elementary", "homothetic"):
            raise ValidationError(f"unknown node kind {self.kind!r}")
        if self.timeframe < 1:
            raise ValidationError("node timeframe must be >= 1 minute")
        if self.feedback_depth < 0:
            raise ValidationError("feedback_depth must be >= 0")
        if self.kind == "elementary" and self.children:
            raise ValidationError("elementary nodes have no children")
        if self.kind == "homothetic":
            if not self.children:
                raise ValidationError("homothetic nodes need at least one child")
            for c in self.children:
                if self.timeframe % c.timeframe or self.timeframe // c.timeframe < 2:
                    raise ValidationError(
                        f"homothetic timeframe {self.timeframe} must be an integer "
                        f"multiple >= 2 of child timeframe {c.timeframe}"
                    )

    @property
    def depth(self) -> int:
        return 1 + max((c.depth for c in self.children), default=-1) if self.children else 0


class NodeView(Protocol):
    """Market access an assembly node needs; implemented by the backtest engine."""

    symbols: Sequence[str]
    kappa: float

    def history(self, node: AssemblyNode, symbol: str) -> np.ndarray: ...

    def realized(self, node: AssemblyNode, symbol: str) -> np.ndarray: ...

    def actions(self, node: AssemblyNode, symbol: str) -> np.ndarray: ...

    def correlation(self, node: AssemblyNode): ...

    def should_retrain(self, node: AssemblyNode) -> bool: ...

    def perturb_plan(self, node: AssemblyNode): ...

    def state_plan(self, node: AssemblyNode): ...


@dataclass
class AssemblyState:
    """Mutable per-(node, symbol) memory carried across bars."""

    weights: dict = field(default_factory=dict)
    child_rows: dict = field(default_factory=dict)
    score_hist: dict = field(default_factory=dict)
    states: dict = field(default_factory=dict)

    def unit_state(self, path: str, symbol: str) -> UnitState:
        return self.states.get((path, symbol), UnitState())


def evaluate_node(
    node: AssemblyNode,
    view: NodeView,
    state: AssemblyState,
    path: str = "0",
) -> dict:
    """Evaluate a node once at its own bar close; returns per-symbol scores.

    Children are evaluated first and their graded scores enter the
    parent's generator set.  Weights retrain on the view's cadence with
    survival perturbations; passive symbols are silenced before coupling.
    Pure given (node, view, state): identical inputs reproduce identical
    scores and state transitions.
    """
    child_scores = [
        evaluate_node(c, view, state, f"{path}.{i}") for i, c in enumerate(node.children)
    ]
    raw = {}
    trainsets = {}
    for sym in view.symbols:
        key = (path, sym)
        hist = np.asarray(view.history(node, sym), dtype=float)
        cur = np.asarray(view.actions(node, sym), dtype=float)
        realized = np.asarray(view.realized(node, sym), dtype=float)
        rows = state.child_rows.setdefault(key, [])
        if node.children:
            t = min(len(hist), len(rows), len(realized))
            past = np.asarray(rows[len(rows) - t:], dtype=float).reshape(t, len(node.children))
            hist = np.hstack([hist[len(hist) - t:], past])
            realized = realized[len(realized) - t:]
            cur = np.concatenate([cur, [cs[sym] for cs in child_scores]])
            rows.append(tuple(cs[sym] for cs in child_scores))
        else:
            t = min(len(hist), len(realized))
            hist = hist[len(hist) - t:]
            realized = realized[len(realized) - t:]
        trainsets[sym] = (hist, realized)

        slots = 2 * len(cur)
        w = state.weights.get(key)
        if w is None or len(w.weights) != slots:
            bits = (1,) * slots
            w = GeneratorWeights(
                bits, mismatch_norm(bits, hist, realized) if t else 0
            )
            state.weights[key] = w
        if view.should_retrain(node) and t >= MIN_TRAIN_ROWS:
            rounds, temperature, seed = view.perturb_plan(node)
            w = optimize_weights(hist, realized, rng_seed=seed)
            sym_ix = list(view.symbols).index(sym)
            for r in range(rounds):
                w = perturb(w, hist, realized, temperature, (seed, sym_ix, r))
            state.weights[key] = w
        score = fused_score(w, cur)
        if state.unit_state(path, sym).state == PASSIVE:
            score = 0.0
        raw[sym] = score

    rho = view.correlation(node)
    adjusted = couple(raw, rho, view.kappa) if rho is not None and len(raw) > 1 else dict(raw)

    do_update, window, q_hi, q_lo = view.state_plan(node)
    for sym in view.symbols:
        key = (path, sym)
        scores = state.score_hist.setdefault(key, [])
        if do_update:
            _, realized = trainsets[sym]
            k = min(window, len(scores), len(realized))
            if k >= 1:
                pred = np.sign(scores[-k:])
                state.states[key] = update_state(
                    state.unit_state(path, sym), pred, realized[-k:], q_hi, q_lo
                )
        scores.append(adjusted[sym])
    return adjusted

"""jSO: success-history adaptive DE with linear population size reduction,
an external archive and weighted current-to-pBest/1 mutation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bench_suite import EvalBudget, Objective, evaluate_batch
from .record import BestTracker, RunRecord

NP_MIN = 4
MEMORY_SIZE = 5
MEMORY_F_INIT = 0.3
MEMORY_CR_INIT = 0.8
PINNED = (0.9, 0.9)
P_MAX = 0.25
P_MIN = P_MAX / 2
TERMINAL = -1.0  # memory_CR marker: CR is forced to 0 from then on


def initial_population_size(dimension: int) -> int:
    return int(round(25.0 * math.sqrt(dimension) * math.log(dimension)))


def mutation_weight(F: float, fes_ratio: float) -> float:
    if fes_ratio < 0.2:
        return 0.7 * F
    if fes_ratio < 0.4:
        return 0.8 * F
    return 1.2 * F


def population_size(fes: int, max_fes: int, np_init: int) -> int:
    return int(round(np_init + (NP_MIN - np_init) * fes / max_fes))


@dataclass
class JsoState:
    X: np.ndarray
    cost: np.ndarray
    archive: np.ndarray
    memory_F: np.ndarray = field(default_factory=lambda: np.r_[np.full(MEMORY_SIZE - 1, MEMORY_F_INIT), PINNED[0]])
    memory_CR: np.ndarray = field(default_factory=lambda: np.r_[np.full(MEMORY_SIZE - 1, MEMORY_CR_INIT), PINNED[1]])
    k: int = 0

    @property
    def np(self) -> int:
        return len(self.cost)


def _sample_parameters(state: JsoState, ratio: float, rng: np.random.Generator):
    n = state.np
    r = rng.integers(0, MEMORY_SIZE, n)
    mu_cr = state.memory_CR[r]
    cr = np.clip(rng.normal(mu_cr, 0.1), 0.0, 1.0)
    cr[mu_cr == TERMINAL] = 0.0
    if ratio < 0.25:
        cr = np.maximum(cr, 0.7)
    elif ratio < 0.5:
        cr = np.maximum(cr, 0.6)

    mu_f = state.memory_F[r]
    F = np.empty(n)
    pending = np.arange(n)
    while pending.size:
        draw = mu_f[pending] + 0.1 * rng.standard_cauchy(pending.size)
        ok = draw > 0.0
        F[pending[ok]] = np.minimum(draw[ok], 1.0)
        pending = pending[~ok]
    if ratio < 0.6:
        F = np.minimum(F, 0.7)
    return F, cr


def _distinct(rng, n_rows: int, upper: int, *exclude: np.ndarray) -> np.ndarray:
    """Random indices in [0, upper) differing row-wise from every array in ``exclude``."""
    out = rng.integers(0, upper, n_rows)
    while True:
        clash = np.zeros(n_rows, dtype=bool)
        for e in exclude:
            clash |= out == e
        if not clash.any():
            return out
        out[clash] = rng.integers(0, upper, clash.sum())


def _generation(state: JsoState, obj: Objective, budget: EvalBudget, best: BestTracker,
                rng: np.random.Generator) -> bool:
    """One generation; returns False once the budget is exhausted."""
    lo, hi = obj.space.lower, obj.space.upper
    n, D = state.X.shape
    ratio = budget.used / budget.max_fes
    F, CR = _sample_parameters(state, ratio, rng)
    Fw = np.where(ratio < 0.2, 0.7 * F, np.where(ratio < 0.4, 0.8 * F, 1.2 * F))

    p = P_MIN + (P_MAX - P_MIN) * ratio
    top = max(2, int(round(p * n)))
    ranked = np.argsort(state.cost, kind="stable")
    pbest = ranked[rng.integers(0, top, n)]
    idx = np.arange(n)
    r1 = _distinct(rng, n, n, idx)
    pool = np.vstack([state.X, state.archive]) if len(state.archive) else state.X
    r2 = _distinct(rng, n, len(pool), idx, r1)

    X = state.X
    V = X + Fw[:, None] * (X[pbest] - X) + F[:, None] * (X[r1] - pool[r2])
    V = np.where(V < lo, (lo + X) / 2.0, V)
    V = np.where(V > hi, (hi + X) / 2.0, V)

    cross = rng.random((n, D)) < CR[:, None]
    cross[idx, rng.integers(0, D, n)] = True
    U = np.where(cross, V, X)

    m = min(n, budget.remaining)
    if m == 0:
        return False
    fes_before = budget.used
    trial_cost = evaluate_batch(obj, U[:m], budget)
    best.observe(trial_cost, U[:m], fes_before)

    old = state.cost[:m]
    better = trial_cost < old
    replace = trial_cost <= old
    if better.any():
        parents = X[:m][better]
        state.archive = np.vstack([state.archive, parents]) if len(state.archive) else parents.copy()
        delta = old[better] - trial_cost[better]
        _update_memory(state, F[:m][better], CR[:m][better], delta)
    state.X[:m][replace] = U[:m][replace]
    state.cost[:m][replace] = trial_cost[replace]

    target = max(NP_MIN, population_size(budget.used, budget.max_fes, state.np_init))
    if target < state.np:
        keep = np.sort(np.argsort(state.cost, kind="stable")[:target])
        state.X = state.X[keep]
        state.cost = state.cost[keep]
    if len(state.archive) > state.np:
        keep = rng.choice(len(state.archive), state.np, replace=False)
        state.archive = state.archive[np.sort(keep)]
    return not budget.exhausted


def _update_memory(state: JsoState, s_f, s_cr, delta) -> None:
    w = delta / delta.sum()
    k = state.k
    if state.memory_CR[k] == TERMINAL or s_cr.max() == 0.0:
        state.memory_CR[k] = TERMINAL
    else:
        lehmer_cr = np.sum(w * s_cr**2) / np.sum(w * s_cr)
        state.memory_CR[k] = (lehmer_cr + state.memory_CR[k]) / 2.0
    lehmer_f = np.sum(w * s_f**2) / np.sum(w * s_f)
    state.memory_F[k] = (lehmer_f + state.memory_F[k]) / 2.0
    # the last cell stays pinned
    state.k = (k + 1) % (MEMORY_SIZE - 1)


def jso_run(obj: Objective, budget: EvalBudget | None = None, seed: int = 0) -> RunRecord:
    D = obj.dimension
    budget = budget if budget is not None else EvalBudget.for_dimension(D)
    if budget.used != 0:
        raise ValueError("jso_run needs a fresh budget")
    rng = np.random.default_rng(seed)
    np_init = initial_population_size(D)
    best = BestTracker(D)

    X = rng.uniform(obj.space.lower, obj.space.upper, size=(np_init, D))
    m = min(np_init, budget.remaining)
    cost = evaluate_batch(obj, X[:m], budget)
    best.observe(cost, X[:m], 0)
    state = JsoState(X[:m].copy(), cost, np.empty((0, D)))
    state.np_init = np_init

    generations = 0
    while not budget.exhausted and _generation(state, obj, budget, best, rng):
        generations += 1

    best.finish(budget.used)
    return RunRecord(
        best_x=best.best_x,
        best_f=best.best_f,
        trace=best.trace,
        fes_total=budget.used,
        metadata={
            "algorithm": "jso",
            "function": obj.id,
            "dimension": D,
            "run_seed": seed,
            "objective_seed": obj.transform.seed,
            "np_init": np_init,
            "np_min": NP_MIN,
            "memory_size": MEMORY_SIZE,
            "memory_F_init": MEMORY_F_INIT,
            "memory_CR_init": MEMORY_CR_INIT,
            "p_range": [P_MIN, P_MAX],
            "generations": generations,
            "max_fes": budget.max_fes,
        },
    )

"""MaNet: a linear CNN whose filters are trained to map a frozen random
population onto low-cost points of the objective.

Two copies of the network run side by side, one trained with batch size 1 and
one with batch size 64.  They alternate epoch by epoch until the global best
stalls for ``patience`` epochs; then both are re-initialised and only the arm
with the better historical best keeps training until the next stall, after
which alternation resumes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .bench_suite import EvalBudget, Objective, evaluate_with_gradient
from .errors import DecodeOverflowError, NonFiniteGradientError
from .record import BestTracker, RunRecord
from .seeding import derive

POPULATION_SIZE = 5000
GENOTYPE_LOW, GENOTYPE_HIGH = -1.0, 1.0

# seed-derivation tags
_POP, _MODEL, _SHUFFLE = 1, 2, 3


@dataclass(frozen=True, eq=False)
class Population:
    samples: np.ndarray  # (n, 8, 8, 1), read-only
    seed: int

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    def digest(self) -> str:
        return hashlib.sha256(self.samples.tobytes()).hexdigest()


def init_population(seed: int, n: int = POPULATION_SIZE, bound: float = GENOTYPE_HIGH) -> Population:
    rng = np.random.default_rng(seed)
    samples = rng.uniform(-bound, bound, size=(n, ad.INPUT_SIDE, ad.INPUT_SIDE, 1))
    samples.setflags(write=False)
    return Population(samples, seed)


@dataclass
class ManetConfig:
    batch_sizes: tuple[int, int] = (1, 64)
    learning_rate: float = 0.001
    patience: int = 10
    improvement_tol: float = 1e-10
    budget: EvalBudget | None = None  # fresh 10,000 x D budget when None
    population_size: int = POPULATION_SIZE
    genotype_bound: float = GENOTYPE_HIGH

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if tuple(self.batch_sizes) != (1, 64):
            raise ValueError("batch sizes are fixed at (1, 64)")


@dataclass
class Arm:
    model: ad.Model
    adam: ad.AdamState
    batch_size: int
    historical_best: float = np.inf
    order: np.ndarray = field(default=None, repr=False)
    cursor: int = 0

    @classmethod
    def fresh(cls, dimension: int, batch_size: int, seed: int, lr: float, historical_best: float = np.inf):
        model = ad.init_model(dimension, seed)
        return cls(model, ad.AdamState.for_model(model, lr), batch_size, historical_best)

    def steps_per_epoch(self, n: int) -> int:
        return max(1, n // self.batch_size)

    def next_indices(self, k: int) -> np.ndarray:
        n = len(self.order)
        idx = self.order[(self.cursor + np.arange(k)) % n]
        self.cursor = (self.cursor + k) % n
        return idx


def decode(model: ad.Model, sample: np.ndarray, tape: ad.Tape | None = None, lower: float = -100.0,
           upper: float = 100.0):
    """Network output clamped to the box.

    With a tape, also returns the straight-through mask (1 inside, 0 where the
    clamp was active) needed to backpropagate through the clamp.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        out = ad.forward(model, sample, tape)
    if not np.all(np.isfinite(out)):
        raise DecodeOverflowError("network produced a non-finite candidate")
    x = np.clip(out, lower, upper)
    if tape is None:
        return x
    return x, (out >= lower) & (out <= upper)


def train_step(arm: Arm, pop: Population, obj: Objective, budget: EvalBudget, best: BestTracker) -> int:
    """One mini-batch: decode, evaluate, backpropagate the mean cost, Adam.

    Returns the number of FEs consumed.  A batch cut short by the budget is
    evaluated but does not update the model.
    """
    k = min(arm.batch_size, budget.remaining)
    if k <= 0:
        return 0
    tape = ad.Tape()
    X, inside = decode(arm.model, pop.samples[arm.next_indices(k)], tape, obj.space.lower, obj.space.upper)
    fes_before = budget.used
    costs, grads = evaluate_with_gradient(obj, X, budget)
    best.observe(costs, X, fes_before)
    batch_best = float(costs.min())
    if batch_best < arm.historical_best:
        arm.historical_best = batch_best
    if k < arm.batch_size:
        return k
    upstream = grads * inside / k
    ad.adam_step(arm.model, ad.backward(tape, upstream), arm.adam)
    return k


def _run_epoch(arm: Arm, pop: Population, obj: Objective, budget: EvalBudget, best: BestTracker,
               shuffle_seed: int) -> None:
    arm.order = np.random.default_rng(shuffle_seed).permutation(pop.size)
    arm.cursor = 0
    for _ in range(arm.steps_per_epoch(pop.size)):
        if budget.exhausted:
            return
        train_step(arm, pop, obj, budget, best)


def optimize(obj: Objective, cfg: ManetConfig | None = None, seed: int = 0) -> RunRecord:
    cfg = cfg or ManetConfig()
    D = obj.dimension
    budget = cfg.budget if cfg.budget is not None else EvalBudget.for_dimension(D)
    if budget.used != 0:
        raise ValueError("optimize needs a fresh budget")
    pop = init_population(derive(seed, _POP), cfg.population_size, cfg.genotype_bound)
    generation = 0

    def new_arms(previous=None):
        hist = [a.historical_best for a in previous] if previous else [np.inf, np.inf]
        return [
            Arm.fresh(D, b, derive(seed, _MODEL, generation, i), cfg.learning_rate, hist[i])
            for i, b in enumerate(cfg.batch_sizes)
        ]

    arms = new_arms()
    best = BestTracker(D)
    solo: int | None = None  # index of the arm running alone, None while alternating
    turn = 0
    epoch = 0
    stalled = 0
    restarts = 0
    reference = np.inf

    while not budget.exhausted:
        idx = solo if solo is not None else turn % 2
        turn += 1
        overflow = False
        try:
            _run_epoch(arms[idx], pop, obj, budget, best, derive(seed, _SHUFFLE, epoch))
        except (DecodeOverflowError, NonFiniteGradientError):
            overflow = True
        epoch += 1

        if reference - best.best_f > cfg.improvement_tol:
            stalled = 0
        else:
            stalled += 1
        reference = min(reference, best.best_f)

        if (overflow or stalled >= cfg.patience) and not budget.exhausted:
            generation += 1
            restarts += 1
            stalled = 0
            arms = new_arms(arms)
            if solo is None:
                solo = 0 if arms[0].historical_best <= arms[1].historical_best else 1
            else:
                solo = None
                turn = 0

    best.finish(budget.used)
    return RunRecord(
        best_x=best.best_x,
        best_f=best.best_f,
        trace=best.trace,
        fes_total=budget.used,
        restarts=restarts,
        metadata={
            "algorithm": "manet",
            "function": obj.id,
            "dimension": D,
            "run_seed": seed,
            "objective_seed": obj.transform.seed,
            "learning_rate": cfg.learning_rate,
            "patience": cfg.patience,
            "improvement_tol": cfg.improvement_tol,
            "batch_sizes": list(cfg.batch_sizes),
            "population_size": cfg.population_size,
            "genotype_range": [-cfg.genotype_bound, cfg.genotype_bound],
            "parameter_count": ad.parameter_count(D),
            "population_sha256": pop.digest(),
            "max_fes": budget.max_fes,
        },
    )

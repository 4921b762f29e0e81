"""Run records and best-so-far tracking shared by both optimizers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TRACE_EVERY = 1000


@dataclass
class RunRecord:
    best_x: np.ndarray
    best_f: float
    trace: list[tuple[int, float]]
    fes_total: int
    restarts: int = 0
    metadata: dict = field(default_factory=dict)

    def trace_csv(self) -> str:
        lines = ["fes,best_f"]
        lines.extend(f"{fes},{best!r}" for fes, best in self.trace)
        return "\n".join(lines) + "\n"


class BestTracker:
    """Best-so-far point plus a convergence trace.

    A trace point is written at every improvement and every ``every`` FEs.
    """

    def __init__(self, dimension: int, every: int = TRACE_EVERY):
        self.best_f = np.inf
        self.best_x = np.full(dimension, np.nan)
        self.trace: list[tuple[int, float]] = []
        self.every = every
        self._next_mark = every

    def observe(self, costs: np.ndarray, X: np.ndarray, fes_before: int) -> bool:
        """Feed costs of consecutive evaluations starting after ``fes_before`` FEs.

        Returns True if the best improved.
        """
        n = len(costs)
        fes_after = fes_before + n
        i = int(np.argmin(costs))
        improved = costs[i] < self.best_f
        if n == 1 and fes_after < self._next_mark:
            # fast path for batch-size-one steps
            if improved:
                self.best_f = float(costs[0])
                self.best_x = X[0].copy()
                self.trace.append((fes_after, self.best_f))
            return bool(improved)
        if not improved and fes_after < self._next_mark:
            return False
        running = np.minimum.accumulate(costs)
        for k in range(n):
            fes = fes_before + k + 1
            if running[k] < self.best_f:
                self.best_f = float(running[k])
                self.best_x = X[k].copy()
                self.trace.append((fes, self.best_f))
            elif fes == self._next_mark:
                self.trace.append((fes, self.best_f))
            if fes == self._next_mark:
                self._next_mark += self.every
        return bool(improved)

    def finish(self, fes_total: int) -> None:
        if not self.trace or self.trace[-1][0] != fes_total:
            self.trace.append((fes_total, self.best_f))

"""Shifted/rotated CEC2017-style objectives F1, F3-F10 with analytic gradients.

Every objective is built as ``z = M @ (scale * (x - o)) + offset`` followed by a
base function, so the global minimum sits at the shift vector ``o`` with value
exactly 0.  Lunacek bi-Rastrigin (F7) follows its own CEC construction and the
non-continuous Rastrigin (F8) rounds in ``z`` space.

Gradients never consume budget.  Subgradient conventions at non-smooth points:

* ``sqrt(s)`` style terms at ``s == 0`` get derivative 0 (F6, F10 at z == 0);
* the rounding in F8 is straight-through (derivative 1 in the rounded branch);
* F10's boundary ``|z| == 500`` belongs to the inner branch;
* F7's ``min`` of the two funnels picks the first funnel on ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .seeding import derive
from .errors import BudgetExhaustedError, DimensionMismatchError, InvalidDimensionError

FUNCTION_IDS = (1, 3, 4, 5, 6, 7, 8, 9, 10)
MIN_DIMENSION = 2
MAX_DIMENSION = 100

BASE_TAGS = {
    1: "bent_cigar",
    3: "zakharov",
    4: "rosenbrock",
    5: "rastrigin",
    6: "schaffer_f7",
    7: "lunacek_bi_rastrigin",
    8: "noncontinuous_rastrigin",
    9: "levy",
    10: "schwefel",
}

SCALES = {
    1: 1.0,
    3: 1.0,
    4: 2.048 / 100.0,
    5: 5.12 / 100.0,
    6: 0.5 / 100.0,
    7: 600.0 / 100.0,
    8: 5.12 / 100.0,
    9: 5.12 / 100.0,
    10: 1000.0 / 100.0,
}

SCHWEFEL_OFFSET = 4.209687462275036e2
# Per-coordinate value of z*sin(sqrt|z|) at the offset, computed with the same
# arithmetic the evaluator uses so that the minimum is an exact zero.
SCHWEFEL_PEAK = SCHWEFEL_OFFSET * math.sin(math.sqrt(SCHWEFEL_OFFSET))

LUNACEK_MU0 = 2.5
LUNACEK_D = 1.0


@dataclass(frozen=True)
class SearchSpace:
    dimension: int
    lower: float = -100.0
    upper: float = 100.0

    def __post_init__(self):
        if not (MIN_DIMENSION <= self.dimension <= MAX_DIMENSION):
            raise InvalidDimensionError(
                f"dimension must be in [{MIN_DIMENSION}, {MAX_DIMENSION}], got {self.dimension}"
            )
        if not self.lower < self.upper:
            raise ValueError("lower bound must be below upper bound")


@dataclass(frozen=True, eq=False)
class TransformData:
    shift: np.ndarray
    rotation: np.ndarray
    seed: int

    @classmethod
    def generate(cls, dimension: int, seed: int, function_id: int = 0) -> "TransformData":
        rng = np.random.default_rng(derive(seed, function_id, 0))
        shift = rng.uniform(-80.0, 80.0, size=dimension)
        rotation = random_orthogonal(dimension, derive(seed, function_id, 1))
        shift.setflags(write=False)
        rotation.setflags(write=False)
        return cls(shift, rotation, seed)

    @classmethod
    def identity(cls, dimension: int) -> "TransformData":
        shift = np.zeros(dimension)
        rotation = np.eye(dimension)
        shift.setflags(write=False)
        rotation.setflags(write=False)
        return cls(shift, rotation, -1)


@dataclass
class EvalBudget:
    """Function-evaluation counter with a hard cap."""

    max_fes: int
    used: int = 0

    @classmethod
    def for_dimension(cls, dimension: int, multiplier: int = 10_000) -> "EvalBudget":
        return cls(max_fes=multiplier * dimension)

    @property
    def remaining(self) -> int:
        return self.max_fes - self.used

    @property
    def exhausted(self) -> bool:
        return self.used >= self.max_fes

    def charge(self, k: int = 1) -> None:
        if k > self.remaining:
            raise BudgetExhaustedError(
                f"requested {k} evaluation(s) with {self.remaining} of {self.max_fes} left"
            )
        self.used += k


@dataclass(frozen=True, eq=False)
class Objective:
    id: int
    space: SearchSpace
    transform: TransformData
    base: str = field(init=False)
    scale: float = field(init=False)

    def __post_init__(self):
        if self.id not in BASE_TAGS:
            raise ValueError(f"unknown function id {self.id}")
        object.__setattr__(self, "base", BASE_TAGS[self.id])
        object.__setattr__(self, "scale", SCALES[self.id])

    @property
    def dimension(self) -> int:
        return self.space.dimension

    @property
    def shift(self) -> np.ndarray:
        return self.transform.shift

    def with_transform(self, transform: TransformData) -> "Objective":
        return Objective(self.id, self.space, transform)

    def describe(self) -> str:
        """Plain-text self-description for reproducibility records."""
        shift = " ".join(repr(float(v)) for v in self.transform.shift)
        return (
            f"id: {self.id}\n"
            f"base: {self.base}\n"
            f"dimension: {self.dimension}\n"
            f"scale: {self.scale!r}\n"
            f"rotation_seed: {self.transform.seed}\n"
            f"shift: {shift}\n"
        )


def random_orthogonal(D: int, seed: int) -> np.ndarray:
    """Seeded orthogonal matrix from the QR factors of a Gaussian matrix.

    Columns are sign-fixed so that R has a positive diagonal; the first column
    is then flipped if needed so the determinant is +1.
    """
    if D < 1:
        raise InvalidDimensionError("D must be >= 1")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((D, D)))
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def make_suite(dimension: int, seed: int) -> list[Objective]:
    if dimension < MIN_DIMENSION:
        raise InvalidDimensionError(f"dimension must be >= {MIN_DIMENSION}, got {dimension}")
    space = SearchSpace(dimension)
    return [
        Objective(fid, space, TransformData.generate(dimension, seed, fid))
        for fid in FUNCTION_IDS
    ]


def make_objective(function_id: int, dimension: int, seed: int) -> Objective:
    return Objective(function_id, SearchSpace(dimension), TransformData.generate(dimension, seed, function_id))


# ---------------------------------------------------------------------------
# base functions: value and gradient w.r.t. z, batched over rows


def _bent_cigar(z):
    f = z[:, 0] ** 2 + 1e6 * np.sum(z[:, 1:] ** 2, axis=1)
    g = 2e6 * z
    g[:, 0] = 2.0 * z[:, 0]
    return f, g


def _zakharov(z):
    w = 0.5 * np.arange(1, z.shape[1] + 1)
    s2 = z @ w
    f = np.sum(z**2, axis=1) + s2**2 + s2**4
    g = 2.0 * z + (2.0 * s2 + 4.0 * s2**3)[:, None] * w
    return f, g


def _rosenbrock(z):
    a = z[:, :-1]
    b = z[:, 1:]
    t = a**2 - b
    f = np.sum(100.0 * t**2 + (a - 1.0) ** 2, axis=1)
    g = np.zeros_like(z)
    g[:, :-1] += 400.0 * t * a + 2.0 * (a - 1.0)
    g[:, 1:] -= 200.0 * t
    return f, g


def _rastrigin(z):
    f = np.sum(z**2 - 10.0 * np.cos(2.0 * np.pi * z) + 10.0, axis=1)
    g = 2.0 * z + 20.0 * np.pi * np.sin(2.0 * np.pi * z)
    return f, g


def _schaffer_f7(z):
    D = z.shape[1]
    s = np.sqrt(z[:, :-1] ** 2 + z[:, 1:] ** 2)
    pos = s > 0.0
    safe = np.where(pos, s, 1.0)
    p02 = safe**0.2
    sin_t = np.sin(50.0 * p02)
    term = np.where(pos, np.sqrt(safe) * (1.0 + sin_t**2), 0.0)
    mean = np.sum(term, axis=1) / (D - 1)
    f = mean**2
    dterm_ds = 0.5 * (1.0 + sin_t**2) / np.sqrt(safe) + 10.0 * np.sin(100.0 * p02) / safe**0.3
    coef = np.where(pos, (2.0 * mean / (D - 1))[:, None] * dterm_ds / safe, 0.0)
    g = np.zeros_like(z)
    g[:, :-1] += coef * z[:, :-1]
    g[:, 1:] += coef * z[:, 1:]
    return f, g


def _levy(z):
    w = 1.0 + z / 4.0
    wi = w[:, :-1]
    wl = w[:, -1]
    s1 = np.sin(np.pi * wi + 1.0)
    s2 = np.sin(2.0 * np.pi * wl)
    f = (
        np.sin(np.pi * w[:, 0]) ** 2
        + np.sum((wi - 1.0) ** 2 * (1.0 + 10.0 * s1**2), axis=1)
        + (wl - 1.0) ** 2 * (1.0 + s2**2)
    )
    gw = np.zeros_like(w)
    gw[:, 0] += np.pi * np.sin(2.0 * np.pi * w[:, 0])
    gw[:, :-1] += 2.0 * (wi - 1.0) * (1.0 + 10.0 * s1**2) + (wi - 1.0) ** 2 * 10.0 * np.pi * np.sin(
        2.0 * (np.pi * wi + 1.0)
    )
    gw[:, -1] += 2.0 * (wl - 1.0) * (1.0 + s2**2) + (wl - 1.0) ** 2 * 2.0 * np.pi * np.sin(4.0 * np.pi * wl)
    return f, gw / 4.0


def _h(y):
    """y * sin(sqrt|y|) and its derivative."""
    r = np.sqrt(np.abs(y))
    return y * np.sin(r), np.sin(r) + 0.5 * r * np.cos(r)


def _schwefel(z):
    D = z.shape[1]
    upper = z > 500.0
    lower = z < -500.0
    inner = ~(upper | lower)
    hv, hd = _h(z)
    u = 500.0 - np.fmod(z, 500.0)
    hu, hud = _h(u)
    v = np.fmod(np.abs(z), 500.0) - 500.0
    hvv, hvd = _h(v)
    pen = 10000.0 * D
    val = np.where(inner, hv, np.where(upper, hu - (z - 500.0) ** 2 / pen, hvv - (z + 500.0) ** 2 / pen))
    der = np.where(inner, hd, np.where(upper, -hud - 2.0 * (z - 500.0) / pen, -hvd - 2.0 * (z + 500.0) / pen))
    f = np.sum(SCHWEFEL_PEAK - val, axis=1)
    return f, -der


_BASES = {
    1: _bent_cigar,
    3: _zakharov,
    4: _rosenbrock,
    5: _rastrigin,
    6: _schaffer_f7,
    8: _rastrigin,
    9: _levy,
    10: _schwefel,
}


def _lunacek_parts(obj: Objective, X):
    D = obj.dimension
    s = 1.0 - 1.0 / (2.0 * math.sqrt(D + 20.0) - 8.2)
    mu1 = -math.sqrt((LUNACEK_MU0**2 - LUNACEK_D) / s)
    sign = np.where(obj.transform.shift < 0.0, -1.0, 1.0)
    t = 2.0 * obj.scale * (X - obj.transform.shift) * sign
    z = _rotate(t, obj.transform.rotation)
    first = np.sum(t**2, axis=1)
    second = LUNACEK_D * D + s * np.sum((t + LUNACEK_MU0 - mu1) ** 2, axis=1)
    return t, z, first, second, s, mu1, sign


def _lunacek(obj: Objective, X, need_grad: bool):
    t, z, first, second, s, mu1, sign = _lunacek_parts(obj, X)
    D = obj.dimension
    f = np.minimum(first, second) + 10.0 * (D - np.sum(np.cos(2.0 * np.pi * z), axis=1))
    if not need_grad:
        return f, None
    gt = np.where((first <= second)[:, None], 2.0 * t, 2.0 * s * (t + LUNACEK_MU0 - mu1))
    gt += (20.0 * np.pi * np.sin(2.0 * np.pi * z)) @ obj.transform.rotation
    return f, gt * (2.0 * obj.scale) * sign


def _rotate(Y, M):
    # einsum keeps each row's arithmetic independent of the batch size, so a
    # point evaluated inside a batch re-evaluates to the identical float
    return np.einsum("ij,kj->ik", Y, M)


def _inner(obj: Objective, X):
    z = _rotate(obj.scale * (X - obj.transform.shift), obj.transform.rotation)
    if obj.id == 4:
        z = z + 1.0
    elif obj.id == 10:
        z = z + SCHWEFEL_OFFSET
    elif obj.id == 8:
        z = np.where(np.abs(z) > 0.5, np.floor(2.0 * z + 0.5) / 2.0, z)
    return z


def _value_and_grad(obj: Objective, X, need_grad: bool = True):
    if obj.id == 7:
        return _lunacek(obj, X, need_grad)
    f, gz = _BASES[obj.id](_inner(obj, X))
    if not need_grad:
        return f, None
    return f, obj.scale * (gz @ obj.transform.rotation)


def _as_batch(obj: Objective, x) -> tuple[np.ndarray, bool]:
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.ndim != 2 or X.shape[1] != obj.dimension:
        raise DimensionMismatchError(f"expected length-{obj.dimension} vector(s), got shape {np.shape(x)}")
    return X, single


def evaluate(obj: Objective, x, budget: EvalBudget) -> float:
    """Cost of one point; charges exactly one FE."""
    X, single = _as_batch(obj, x)
    if not single:
        raise DimensionMismatchError("evaluate takes a single vector; use evaluate_batch")
    budget.charge(1)
    return float(_value_and_grad(obj, X, need_grad=False)[0][0])


def evaluate_batch(obj: Objective, X, budget: EvalBudget) -> np.ndarray:
    """Costs of the rows of ``X``; charges one FE per row (all or nothing)."""
    X, _ = _as_batch(obj, X)
    budget.charge(X.shape[0])
    return _value_and_grad(obj, X, need_grad=False)[0]


def evaluate_with_gradient(obj: Objective, X, budget: EvalBudget) -> tuple[np.ndarray, np.ndarray]:
    """Batched costs and gradients; only the costs are charged."""
    X, _ = _as_batch(obj, X)
    budget.charge(X.shape[0])
    return _value_and_grad(obj, X)


def value(obj: Objective, x):
    """Budget-exempt evaluation, for verification only."""
    X, single = _as_batch(obj, x)
    f = _value_and_grad(obj, X, need_grad=False)[0]
    return float(f[0]) if single else f


def gradient(obj: Objective, x) -> np.ndarray:
    X, single = _as_batch(obj, x)
    g = _value_and_grad(obj, X)[1]
    return g[0] if single else g


def distance_to_nonsmooth(obj: Objective, x) -> np.ndarray:
    """Lower estimate of the x-space distance to the objective's non-smooth set.

    Smooth objectives return +inf.  For F8 the whole rounded region counts as
    non-smooth, since the straight-through gradient is a convention there.
    """
    X, single = _as_batch(obj, x)
    if obj.id in (1, 3, 4, 5, 9):
        d = np.full(X.shape[0], np.inf)
    elif obj.id == 7:
        t, z, first, second, s, mu1, sign = _lunacek_parts(obj, X)
        diff_grad = (2.0 * t - 2.0 * s * (t + LUNACEK_MU0 - mu1)) * (2.0 * obj.scale)
        d = np.abs(first - second) / np.maximum(np.linalg.norm(diff_grad, axis=1), 1e-300)
    else:
        z = (obj.scale * (X - obj.transform.shift)) @ obj.transform.rotation.T
        if obj.id == 6:
            dz = np.min(np.sqrt(z[:, :-1] ** 2 + z[:, 1:] ** 2), axis=1)
        elif obj.id == 8:
            dz = np.min(0.5 - np.abs(z), axis=1)
        else:
            zz = np.abs(z + SCHWEFEL_OFFSET)
            k = np.round(zz / 500.0)
            dz = np.min(np.abs(zz - 500.0 * k), axis=1)
        d = dz / obj.scale
    return float(d[0]) if single else d

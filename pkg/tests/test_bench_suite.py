import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manetlab.bench_suite import (
    FUNCTION_IDS,
    EvalBudget,
    Objective,
    SearchSpace,
    TransformData,
    distance_to_nonsmooth,
    evaluate,
    evaluate_batch,
    evaluate_with_gradient,
    gradient,
    make_objective,
    make_suite,
    random_orthogonal,
    value,
)
from manetlab.errors import BudgetExhaustedError, DimensionMismatchError, InvalidDimensionError

SMOOTH = (1, 3, 4, 5, 9)
NONSMOOTH = (6, 7, 8, 10)


def identity_objective(fid, D):
    return Objective(fid, SearchSpace(D), TransformData.identity(D))


def central_difference(obj, x, h=1e-5):
    g = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (value(obj, x + e) - value(obj, x - e)) / (2 * h)
    return g


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1.0)


class TestSuiteConstruction:
    def test_ids_in_order(self):
        suite = make_suite(30, 7)
        assert [o.id for o in suite] == list(FUNCTION_IDS)
        assert all(o.dimension == 30 and o.shift.shape == (30,) for o in suite)

    def test_deterministic(self):
        a, b = make_suite(10, 3), make_suite(10, 3)
        for oa, ob in zip(a, b):
            assert np.array_equal(oa.shift, ob.shift)
            assert np.array_equal(oa.transform.rotation, ob.transform.rotation)

    def test_distinct_functions_get_distinct_transforms(self):
        suite = make_suite(10, 3)
        assert not np.array_equal(suite[0].shift, suite[1].shift)

    @pytest.mark.parametrize("D", [0, 1, 101])
    def test_invalid_dimension(self, D):
        with pytest.raises(InvalidDimensionError):
            make_suite(D, 0)

    def test_shift_range_and_read_only(self):
        for obj in make_suite(50, 11):
            assert np.all(np.abs(obj.shift) <= 80)
            with pytest.raises(ValueError):
                obj.shift[0] = 1.0

    def test_describe_lists_the_transform(self):
        text = make_objective(5, 4, 2).describe()
        assert "id: 5" in text and "rastrigin" in text and "shift:" in text


class TestRandomOrthogonal:
    def test_one_by_one_is_plus_one(self):
        for seed in range(20):
            assert random_orthogonal(1, seed)[0, 0] == 1.0

    @given(st.integers(1, 40), st.integers(0, 2**63 - 1))
    @settings(max_examples=40, deadline=None)
    def test_orthogonal_and_deterministic(self, D, seed):
        m = random_orthogonal(D, seed)
        assert np.max(np.abs(m.T @ m - np.eye(D))) <= 1e-10
        assert np.array_equal(m, random_orthogonal(D, seed))


class TestHandValues:
    def test_bent_cigar_unit_vector(self):
        obj = identity_objective(1, 5)
        x = np.array([1.0, 0, 0, 0, 0])
        assert evaluate(obj, x, EvalBudget(10)) == 1.0
        assert np.allclose(gradient(obj, x), [2, 0, 0, 0, 0])

    def test_bent_cigar_conditioning(self):
        obj = identity_objective(1, 3)
        assert value(obj, np.array([0.0, 1.0, 0.0])) == 1e6

    def test_rastrigin_half_step(self):
        obj = identity_objective(5, 4)
        x = np.array([0.5 * 100 / 5.12, 0, 0, 0])
        assert value(obj, x) == pytest.approx(20.25, abs=1e-12)

    def test_zakharov(self):
        # z = (1, 1): sum z^2 = 2, s = 0.5 + 1 = 1.5 -> 2 + 2.25 + 5.0625
        assert value(identity_objective(3, 2), np.ones(2)) == pytest.approx(9.3125)

    def test_rosenbrock_offset_puts_minimum_at_shift(self):
        # identity transform: z = 0.02048 * x + 1; x = 0 gives z = 1 (the optimum)
        assert value(identity_objective(4, 6), np.zeros(6)) == 0.0


class TestGlobalMinimum:
    @pytest.mark.parametrize("fid", FUNCTION_IDS)
    @pytest.mark.parametrize("D", [2, 10, 30, 50])
    def test_zero_at_shift(self, fid, D):
        obj = make_objective(fid, D, 2024)
        assert abs(value(obj, obj.shift)) <= 1e-12

    @pytest.mark.parametrize("fid", FUNCTION_IDS)
    def test_rotation_does_not_move_minimum(self, fid):
        obj = make_objective(fid, 12, 5)
        other = obj.with_transform(TransformData(obj.shift, random_orthogonal(12, 99), 99))
        assert abs(value(other, other.shift)) <= 1e-12

    @pytest.mark.parametrize("fid", SMOOTH)
    def test_stationary_at_shift(self, fid):
        obj = make_objective(fid, 30, 1)
        assert np.max(np.abs(gradient(obj, obj.shift))) <= 1e-10

    @pytest.mark.parametrize("fid", FUNCTION_IDS)
    def test_nonnegative_and_finite_in_box(self, fid):
        obj = make_objective(fid, 30, 3)
        X = np.random.default_rng(fid).uniform(-100, 100, (20_000, 30))
        f = value(obj, X)
        assert np.all(np.isfinite(f)) and np.all(f >= 0)

    @pytest.mark.parametrize("fid", FUNCTION_IDS)
    def test_corners_are_finite(self, fid):
        obj = make_objective(fid, 10, 3)
        for x in (np.full(10, 100.0), np.full(10, -100.0)):
            assert np.isfinite(value(obj, x)) and value(obj, x) >= 0


class TestGradients:
    @pytest.mark.parametrize("fid", SMOOTH)
    def test_finite_difference_smooth(self, fid):
        obj = make_objective(fid, 10, 8)
        rng = np.random.default_rng(fid)
        for _ in range(20):
            x = rng.uniform(-100, 100, 10)
            assert rel_err(gradient(obj, x), central_difference(obj, x)) <= 1e-5

    @pytest.mark.parametrize("fid", NONSMOOTH)
    def test_finite_difference_away_from_kinks(self, fid):
        obj = make_objective(fid, 10, 8)
        rng = np.random.default_rng(fid)
        checked = 0
        while checked < 20:
            if fid == 8:
                # rounding region has a straight-through gradient by convention
                x = obj.shift + rng.uniform(-5, 5, 10)
            else:
                x = rng.uniform(-100, 100, 10)
            if distance_to_nonsmooth(obj, x) < 1e-3:
                continue
            assert rel_err(gradient(obj, x), central_difference(obj, x)) <= 1e-5
            checked += 1

    def test_batched_gradient_matches_single(self):
        obj = make_objective(7, 6, 1)
        X = np.random.default_rng(0).uniform(-100, 100, (5, 6))
        G = gradient(obj, X)
        for x, g in zip(X, G):
            assert np.allclose(gradient(obj, x), g, rtol=1e-12, atol=0)

    def test_schaffer_subgradient_at_zero_pair(self):
        obj = identity_objective(6, 4)
        g = gradient(obj, np.zeros(4))
        assert np.all(np.isfinite(g)) and np.all(g == 0)

    def test_schwefel_outer_branch_finite(self):
        obj = identity_objective(10, 3)
        assert np.all(np.isfinite(gradient(obj, np.full(3, 100.0))))


class TestBudget:
    def test_each_call_charges_one(self):
        obj = make_objective(5, 4, 0)
        b = EvalBudget(5)
        for k in range(5):
            evaluate(obj, np.zeros(4), b)
            assert b.used == k + 1
        with pytest.raises(BudgetExhaustedError):
            evaluate(obj, np.zeros(4), b)
        assert b.used == 5

    def test_gradient_is_free(self):
        obj = make_objective(5, 4, 0)
        b = EvalBudget(3)
        gradient(obj, np.ones(4))
        value(obj, np.ones(4))
        assert b.used == 0

    def test_batch_is_all_or_nothing(self):
        obj = make_objective(1, 4, 0)
        b = EvalBudget(5)
        evaluate_batch(obj, np.zeros((3, 4)), b)
        with pytest.raises(BudgetExhaustedError):
            evaluate_with_gradient(obj, np.zeros((3, 4)), b)
        assert b.used == 3

    def test_default_cap(self):
        assert EvalBudget.for_dimension(30).max_fes == 300_000

    @given(st.lists(st.integers(1, 7), max_size=30))
    def test_used_never_exceeds_cap(self, chunks):
        obj = make_objective(1, 2, 0)
        b = EvalBudget(40)
        for k in chunks:
            before = b.used
            try:
                evaluate_batch(obj, np.zeros((k, 2)), b)
            except BudgetExhaustedError:
                assert b.used == before
            assert b.used <= b.max_fes

    def test_dimension_mismatch(self):
        obj = make_objective(1, 4, 0)
        with pytest.raises(DimensionMismatchError):
            evaluate(obj, np.zeros(3), EvalBudget(1))


def test_levy_minimum_value_is_exact():
    obj = identity_objective(9, 30)
    assert value(obj, np.zeros(30)) <= 1e-30

"""Terracini matrix assembly and the condition number."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from cpdlab import (
    NormalStream,
    Rank1Tensor,
    Rank1Tuple,
    SampleSpec,
    TensorFormat,
    condition_number,
    condition_numbers_batch,
    condition_oracle,
    illposed_shared_first_factor,
    random_rank1_tuple,
    tangent_basis,
    terracini_matrix,
)
from cpdlab.condition import INFINITY_RTOL, kappa_from_singular_values
from cpdlab.errors import InvalidArgumentError

from conftest import random_tensor, random_tuple


def e(i, n):
    v = np.zeros(n)
    v[i] = 1.0
    return v


class TestTerraciniMatrix:
    @pytest.mark.parametrize("n, shape", [(5, (245, 119)), (2, (98, 98))])
    def test_dimensions(self, rng, n, shape):
        T = terracini_matrix(random_tuple(rng, (7, 7, n), 7))
        assert (T.rows, T.cols) == shape

    def test_blocks_are_tangent_bases(self, rng):
        t = random_tuple(rng, (4, 3, 3), 3)
        T = terracini_matrix(t)
        for i, term in enumerate(t.terms):
            assert np.array_equal(T.block(i), tangent_basis(term).matrix)

    def test_single_term_orthonormal(self, rng):
        T = terracini_matrix(random_tuple(rng, (5, 4, 3), 1)).data
        assert np.max(np.abs(T.T @ T - np.eye(T.shape[1]))) < 1e-13

    def test_deterministic(self, rng):
        t = random_tuple(rng, (3, 3, 3), 2)
        assert np.array_equal(terracini_matrix(t).data, terracini_matrix(t).data)

    def test_csv_dump(self, rng, tmp_path):
        T = terracini_matrix(random_tuple(rng, (2, 3, 2), 2))
        T.to_csv(tmp_path / "t.csv")
        back = np.loadtxt(tmp_path / "t.csv", delimiter=",")
        assert np.array_equal(back, T.data)

    def test_norm_bound(self, rng):
        T = terracini_matrix(random_tuple(rng, (4, 4, 3), 3))
        assert np.linalg.norm(T.data, 2) <= T.norm_bound() * (1 + 1e-14)


class TestConditionNumber:
    @pytest.mark.parametrize("dims", [(2, 2, 2), (7, 7, 5), (3, 5), (3, 2, 2, 2)])
    def test_single_term_is_one(self, rng, dims):
        res = condition_number(random_tuple(rng, dims, 1))
        assert abs(res.kappa - 1.0) < 1e-12
        assert not res.infinite

    def test_diagonal_tuple(self):
        t = Rank1Tuple([[e(0, 2)] * 3, [e(1, 2)] * 3])
        assert condition_number(t).kappa == pytest.approx(1.0, abs=1e-14)

    def test_shared_first_factor_infinite(self):
        t = illposed_shared_first_factor(TensorFormat((11, 10, 5)), 3, NormalStream(7))
        res = condition_number(t)
        assert res.infinite and math.isinf(res.kappa)
        assert not res.shape_forced_infinite

    def test_shape_forced(self, rng):
        # (2,2,2) has n = 4, so r = 3 gives 12 columns > 8 rows
        res = condition_number(random_tuple(rng, (2, 2, 2), 3))
        assert res.infinite and res.shape_forced_infinite
        assert (res.rows, res.cols) == (8, 12)
        assert res.as_dict()["kappa"] is None

    def test_as_dict_keys(self, rng):
        d = condition_number(random_tuple(rng, (3, 3, 3), 2)).as_dict()
        assert list(d) == ["kappa", "sigma_min", "rows", "cols", "infinite", "shape_forced_infinite"]

    def test_lower_bound(self):
        spec = SampleSpec((5, 4, 3), r=3, seed=11, count=200)
        for i in range(spec.count):
            assert condition_number(random_rank1_tuple(spec, i)).kappa >= 1 - 1e-12

    def test_scale_invariance(self, rng):
        t = random_tuple(rng, (5, 4, 3), 3)
        base = condition_number(t).kappa
        scales = rng.uniform(0.1, 10, 3) * rng.choice([-1, 1], 3)
        scaled = Rank1Tuple([term.scaled(s) for term, s in zip(t.terms, scales)])
        assert abs(condition_number(scaled).kappa - base) / base < 1e-10

    @settings(max_examples=30, deadline=None)
    @given(st.permutations(range(4)), st.integers(0, 2**32 - 1))
    def test_permutation_invariance(self, perm, seed):
        t = random_rank1_tuple(SampleSpec((4, 3, 3), r=4, seed=seed), 0)
        base = condition_number(t).kappa
        shuffled = Rank1Tuple([t.terms[i] for i in perm])
        assert abs(condition_number(shuffled).kappa - base) <= 1e-12 * base

    def test_threshold_rule(self):
        assert kappa_from_singular_values(np.array([1.0, 0.5]), 2.0) == (2.0, 0.5)
        k, s = kappa_from_singular_values(np.array([1.0, 1e-15]), 1.0)
        assert math.isinf(k) and s == 1e-15
        assert INFINITY_RTOL == 1e-14

    def test_two_equal_terms_infinite(self, rng):
        a = random_tensor(rng, (3, 3, 3))
        assert condition_number(Rank1Tuple([a, a.scaled(2.0)])).infinite


class TestBatch:
    def test_matches_single(self):
        spec = SampleSpec((4, 4, 3), r=4, seed=5, count=20)
        tuples = [random_rank1_tuple(spec, i) for i in range(spec.count)]
        stacks = [np.stack([[term.factors[k] for term in t.terms] for t in tuples]) for k in range(3)]
        batch = condition_numbers_batch(stacks)
        single = [condition_number(t).kappa for t in tuples]
        assert np.array_equal(batch, single)

    def test_shape_forced(self, rng):
        stacks = [rng.standard_normal((3, 3, 2)) for _ in range(3)]
        assert np.all(np.isinf(condition_numbers_batch(stacks)))


class TestOracle:
    def test_single_term(self, rng):
        assert condition_oracle(random_tuple(rng, (5, 4, 3), 1)) == pytest.approx(1.0, abs=1e-12)

    def test_agrees(self):
        spec = SampleSpec((5, 4, 3), r=2, seed=99, count=100)
        for i in range(spec.count):
            t = random_rank1_tuple(spec, i)
            k, o = condition_number(t).kappa, condition_oracle(t)
            assert abs(k - o) / k < 1e-9

    def test_scaled_terms(self, rng):
        t = random_tuple(rng, (5, 4, 3), 3)
        scaled = Rank1Tuple([term.scaled(s) for term, s in zip(t.terms, [3.0, -0.2, 7.0])])
        assert abs(condition_oracle(scaled) - condition_oracle(t)) <= 1e-10 * condition_oracle(t)

    def test_rejects_wide(self, rng):
        with pytest.raises(InvalidArgumentError):
            condition_oracle(random_tuple(rng, (2, 2, 2), 3))

"""Moment estimation tests: exact diagonals, the factorization identity
between the enumeration oracle and the closed form, and Monte Carlo
consistency of the sampled estimators."""

import itertools

import numpy as np
import pytest

from summa.exceptions import InvalidInput, TooFewMethods
from summa.moments import (
    ConditionalRankModel,
    compute_moments,
    covariance_matrix,
    exact_central_moment,
    predicted_central_moment,
    third_moment_lookup,
    third_moment_offdiag,
)
from summa.ranking import RankMatrix, ScoreMatrix, rank_transform


def random_model(rng, n_methods=3, support=6, rho=None):
    p0 = rng.random((n_methods, support)) + 0.05
    p1 = rng.random((n_methods, support)) + 0.05
    p0 /= p0.sum(axis=1, keepdims=True)
    p1 /= p1.sum(axis=1, keepdims=True)
    if rho is None:
        rho = float(rng.uniform(0.05, 0.95))
    return ConditionalRankModel(p0, p1, rho)


class TestCovariance:
    def test_strict_diagonal_exact(self):
        # population variance of any tie-free rank row is (N^2 - 1) / 12
        for n in (4, 5, 8, 100):
            rng = np.random.default_rng(n)
            rows = np.array([rng.permutation(np.arange(1, n + 1)) for _ in range(3)])
            q2 = covariance_matrix(rows.astype(float))
            for i in range(3):
                assert q2[i, i] == (n * n - 1) / 12

    def test_identical_rows(self):
        row = np.arange(1, 5, dtype=float)
        q2 = covariance_matrix(np.array([row, row]))
        assert q2[0, 1] == pytest.approx(15 / 12, abs=1e-14)

    def test_anticorrelated_rows(self):
        row = np.arange(1, 5, dtype=float)
        q2 = covariance_matrix(np.array([row, 5 - row]))
        assert q2[0, 1] == pytest.approx(-15 / 12, abs=1e-14)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        ranks = np.array([rng.permutation(np.arange(1, 31)) for _ in range(6)], float)
        q2 = covariance_matrix(ranks)
        assert np.array_equal(q2, q2.T)

    def test_accepts_rank_matrix(self):
        sm = ScoreMatrix.from_array(np.random.default_rng(0).normal(size=(4, 12)))
        rm = rank_transform(sm, "strict")
        assert covariance_matrix(rm).shape == (4, 4)


class TestThirdMoment:
    def test_too_few_methods(self):
        with pytest.raises(TooFewMethods):
            third_moment_offdiag(np.ones((2, 5)))

    def test_identical_strict_rows_vanish(self):
        # third central moment of a symmetric distribution is zero
        n = 9
        row = np.arange(1, n + 1, dtype=float)
        q3 = third_moment_offdiag(np.array([row, row, row]))
        assert q3[(0, 1, 2)] == pytest.approx(0.0, abs=1e-12)

    def test_balanced_prevalence_vanishes_in_expectation(self):
        rng = np.random.default_rng(21)
        model = random_model(rng, n_methods=3, support=8, rho=0.5)
        ranks, _ = model.sample(200_000, rng)
        q3 = third_moment_offdiag(ranks)
        scale = abs(model.delta(0) * model.delta(1) * model.delta(2))
        assert abs(q3[(0, 1, 2)]) < 0.05 * max(scale, 1.0)

    def test_matches_enumeration_on_sampled_data(self):
        rng = np.random.default_rng(5)
        model = random_model(rng, n_methods=3, support=5, rho=0.3)
        exact = exact_central_moment(model, (0, 1, 2))
        ranks, _ = model.sample(100_000, rng)
        q3 = third_moment_offdiag(ranks)
        assert q3[(0, 1, 2)] == pytest.approx(exact, abs=0.3)

    def test_lookup_symmetric(self):
        rng = np.random.default_rng(9)
        ranks = rng.random((4, 50))
        q3 = third_moment_offdiag(ranks)
        for key in itertools.permutations((0, 2, 3)):
            assert third_moment_lookup(q3, *key) == q3[(0, 2, 3)]
        with pytest.raises(InvalidInput):
            third_moment_lookup(q3, 0, 0, 1)

    def test_method_permutation_invariance(self):
        rng = np.random.default_rng(13)
        ranks = rng.random((4, 60))
        q3 = third_moment_offdiag(ranks)
        perm = [2, 0, 3, 1]
        q3p = third_moment_offdiag(ranks[perm])
        for (i, j, l), value in q3p.items():
            original = tuple(sorted((perm[i], perm[j], perm[l])))
            assert value == pytest.approx(q3[original], rel=1e-12)


class TestFactorizationIdentity:
    """Enumeration oracle vs the closed form, orders 2 through 4."""

    def test_order2_equals_covariance_form(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            model = random_model(rng, n_methods=2, support=6)
            lhs = exact_central_moment(model, (0, 1))
            rhs = model.rho * (1 - model.rho) * model.delta(0) * model.delta(1)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_order3_balanced_vanishes(self):
        rng = np.random.default_rng(19)
        model = random_model(rng, n_methods=3, support=6, rho=0.5)
        assert exact_central_moment(model, (0, 1, 2)) == pytest.approx(0.0, abs=1e-12)

    def test_order3_closed_form(self):
        rng = np.random.default_rng(23)
        model = random_model(rng, n_methods=3, support=4, rho=0.3)
        deltas = [model.delta(i) for i in range(3)]
        expected = 0.3 * 0.7 * (0.3**2 - (-0.7) ** 2) * np.prod(deltas)
        assert exact_central_moment(model, (0, 1, 2)) == pytest.approx(expected, abs=1e-12)
        assert predicted_central_moment(0.3, deltas) == pytest.approx(expected, abs=1e-14)

    def test_order3_two_point_conditionals(self):
        # three perfect two-point methods at rho=0.3: each delta is 1 and
        # the moment is 0.3 * 0.7 * (0.3^2 - (-0.7)^2) = -0.084
        p1 = np.tile([1.0, 0.0], (3, 1))
        p0 = np.tile([0.0, 1.0], (3, 1))
        model = ConditionalRankModel(p0, p1, 0.3)
        assert model.delta(0) == 1.0
        assert exact_central_moment(model, (0, 1, 2)) == pytest.approx(-0.084, abs=1e-15)

    @pytest.mark.parametrize("order", [2, 3, 4])
    def test_random_models(self, order):
        rng = np.random.default_rng(100 + order)
        for _ in range(25):
            model = random_model(rng, n_methods=order, support=int(rng.integers(2, 9)))
            enumerated = exact_central_moment(model, tuple(range(order)))
            deltas = [model.delta(i) for i in range(order)]
            closed = predicted_central_moment(model.rho, deltas)
            assert enumerated == pytest.approx(closed, abs=1e-12)

    @pytest.mark.parametrize("order", [2, 3, 4])
    def test_class_relabel_symmetry(self, order):
        # swapping class names maps rho -> 1-rho, delta -> -delta; Q_l is unchanged
        rng = np.random.default_rng(200 + order)
        model = random_model(rng, n_methods=order, support=5)
        swapped = ConditionalRankModel(model.p1, model.p0, 1.0 - model.rho)
        a = exact_central_moment(model, tuple(range(order)))
        b = exact_central_moment(swapped, tuple(range(order)))
        assert a == pytest.approx(b, abs=1e-12)

    def test_oracle_caps(self):
        rng = np.random.default_rng(31)
        big_support = random_model(rng, n_methods=2, support=13)
        with pytest.raises(InvalidInput):
            exact_central_moment(big_support, (0, 1))
        with pytest.raises(InvalidInput):
            exact_central_moment(random_model(rng, 3, 4), (0, 1, 1))
        with pytest.raises(InvalidInput):
            exact_central_moment(random_model(rng, 3, 4), (0, 1, 2), order=2)


class TestMonteCarloConsistency:
    def test_off_diagonal_rate(self):
        """Sampled Q2(i,j) approaches rho(1-rho) delta_i delta_j at ~1/sqrt(N)."""
        rng = np.random.default_rng(37)
        model = random_model(rng, n_methods=2, support=8, rho=0.35)
        target = model.rho * (1 - model.rho) * model.delta(0) * model.delta(1)
        errors = {}
        for n in (1_000, 10_000, 100_000):
            reps = [
                abs(covariance_matrix(model.sample(n, rng)[0])[0, 1] - target)
                for _ in range(5)
            ]
            errors[n] = np.mean(reps)
        # rate check: error * sqrt(N) stays bounded (within a loose factor)
        scaled = [errors[n] * np.sqrt(n) for n in (1_000, 10_000, 100_000)]
        assert max(scaled) < 8 * min(scaled)
        assert errors[100_000] < errors[1_000]


def test_compute_moments_bundles_everything():
    rng = np.random.default_rng(41)
    ranks = np.array([rng.permutation(np.arange(1, 21)) for _ in range(5)], float)
    stats = compute_moments(ranks)
    assert stats.q2.shape == (5, 5)
    assert stats.n_samples == 20
    assert len(stats.q3_offdiag) == 10  # C(5,3)
    assert np.allclose(stats.mean_ranks, 10.5)
    no_third = compute_moments(ranks, include_third=False)
    assert no_third.q3_offdiag is None

import math

import numpy as np
import pytest

from gla.errors import InvalidInput, MissingClassError
from gla.numerics import LabelledLogits, LogitTable, ProbabilitySimplex
from gla.prior_estimation import (
    BoundQuery,
    Method1Config,
    PowerIterConfig,
    TransitionMatrix,
    build_transition_matrix,
    estimate_prior_m1,
    estimate_prior_m2,
    estimate_prior_naive,
    m2_error_bound,
    power_iterate,
)
from gla.synthlab import SyntheticTaskConfig, make_task, sample_shots


def logits_for_probs(rows):
    """Invert softmax (up to a constant) so the table softmaxes to `rows`."""
    return LogitTable(np.log(np.asarray(rows, dtype=np.float64)))


class TestTransitionMatrix:
    def test_rejects_non_stochastic(self):
        with pytest.raises(InvalidInput):
            TransitionMatrix([[0.7, 0.2], [0.2, 0.8]])

    def test_column_means(self):
        # class-0 rows softmax to [0.9,0.1] and [0.7,0.3]; class-1 to [0.2,0.8]
        data = LabelledLogits(
            logits_for_probs([[0.9, 0.1], [0.7, 0.3], [0.2, 0.8]]), [0, 0, 1]
        )
        p = build_transition_matrix(data)
        assert np.allclose(p.entries, [[0.8, 0.2], [0.2, 0.8]])

    def test_uniform_rows(self):
        data = LabelledLogits(LogitTable(np.zeros((4, 3))), [0, 1, 2, 0])
        p = build_transition_matrix(data)
        assert np.allclose(p.entries, 1 / 3)

    def test_one_hot_gives_identity(self):
        eps = 1e-12
        rows = [[1 - eps, eps], [eps, 1 - eps]]
        data = LabelledLogits(logits_for_probs(rows), [0, 1])
        p = build_transition_matrix(data)
        assert np.allclose(p.entries, np.eye(2), atol=1e-9)

    def test_missing_class(self):
        data = LabelledLogits(LogitTable(np.zeros((2, 3))), [0, 0])
        with pytest.raises(MissingClassError) as exc:
            build_transition_matrix(data)
        assert exc.value.class_index == 1

    def test_columns_stochastic_for_random_input(self):
        rng = np.random.default_rng(5)
        data = LabelledLogits(
            LogitTable(rng.normal(size=(50, 4))), rng.integers(0, 4, 50)
        )
        p = build_transition_matrix(data)
        assert np.allclose(p.entries.sum(axis=0), 1.0, atol=1e-9)


def analytic_stationary_2x2(p: TransitionMatrix) -> np.ndarray:
    """Independent oracle: solve q1 = p11 q1 + p12 (1 - q1) analytically."""
    p11, p12 = p.entries[0, 0], p.entries[0, 1]
    q1 = p12 / (1.0 - p11 + p12)
    return np.array([q1, 1.0 - q1])


class TestPowerIterate:
    def test_identity_returns_uniform(self):
        q, iters, residual = power_iterate(TransitionMatrix(np.eye(2)))
        assert np.allclose(q.probs, 0.5)
        assert iters == 1
        assert residual == 0.0

    def test_rank_one(self):
        p = TransitionMatrix([[0.6, 0.6], [0.4, 0.4]])
        q, iters, _ = power_iterate(p)
        assert np.allclose(q.probs, [0.6, 0.4])
        assert iters <= 2

    def test_analytic_two_by_two(self):
        p = TransitionMatrix([[0.7, 0.4], [0.3, 0.6]])
        q, _, _ = power_iterate(p, PowerIterConfig(tol=1e-10, max_iters=10_000))
        assert np.allclose(q.probs, [4 / 7, 3 / 7], atol=1e-4)
        assert np.allclose(q.probs, analytic_stationary_2x2(p), atol=1e-8)

    def test_residual_below_tol_when_converged(self):
        rng = np.random.default_rng(11)
        cfg = PowerIterConfig(tol=1e-8, max_iters=5000)
        for _ in range(20):
            k = int(rng.integers(2, 6))
            p = TransitionMatrix(rng.dirichlet(np.ones(k), size=k).T)
            q, iters, residual = power_iterate(p, cfg)
            if iters < cfg.max_iters:
                assert residual <= cfg.tol

    def test_matches_dense_eigensolve(self):
        rng = np.random.default_rng(3)
        cfg = PowerIterConfig(tol=1e-12, max_iters=100_000)
        for k in (2, 3, 4, 8):
            for _ in range(10):
                p = TransitionMatrix(rng.dirichlet(np.ones(k), size=k).T)
                q, _, _ = power_iterate(p, cfg)
                w, v = np.linalg.eig(p.entries)
                lead = np.argmin(np.abs(w - 1.0))
                target = np.real(v[:, lead])
                target = target / target.sum()
                assert np.abs(q.probs - target).sum() < 1e-6


class TestEstimatePriorM2:
    def test_one_hot_predictions_give_uniform(self):
        eps = 1e-12
        rows = [[1 - eps, eps], [eps, 1 - eps]]
        data = LabelledLogits(logits_for_probs(rows), [0, 1])
        q = estimate_prior_m2(data)
        assert np.allclose(q.probs, 0.5)

    def test_mass_on_single_class(self):
        eps = 1e-9
        rows = [[1 - eps, eps]] * 4
        data = LabelledLogits(logits_for_probs(rows), [0, 1, 0, 1])
        q = estimate_prior_m2(data, PowerIterConfig(tol=1e-10, max_iters=5000))
        assert q.probs[0] > 1.0 - 1e-6

    def test_recovers_synthetic_prior(self):
        errs = []
        for seed in range(5):
            cfg = SyntheticTaskConfig(
                k=2, pretrain_prior=ProbabilitySimplex([0.7, 0.3]), seed=seed
            )
            batch = sample_shots(make_task(cfg), 1000, seed=50 + seed)
            q = estimate_prior_m2(batch.labelled_zs())
            errs.append(abs(q.probs[0] - 0.7))
        assert np.mean(errs) <= 0.05


class TestEstimatePriorM1:
    def test_single_step_returns_simplex(self):
        rng = np.random.default_rng(2)
        data = LabelledLogits(LogitTable(rng.normal(size=(10, 3))), rng.integers(0, 3, 10))
        q = estimate_prior_m1(data, Method1Config(steps=1))
        assert np.all(q.probs >= 0)
        assert abs(q.probs.sum() - 1.0) <= 1e-9

    def test_missing_class(self):
        data = LabelledLogits(LogitTable(np.zeros((2, 3))), [0, 1])
        with pytest.raises(MissingClassError):
            estimate_prior_m1(data)

    def test_uniform_pretrain_prior_gives_uniform(self):
        cfg = SyntheticTaskConfig(k=3, dim=3, seed=4)
        batch = sample_shots(make_task(cfg), 400, seed=9)
        q = estimate_prior_m1(batch.labelled_zs())
        assert np.abs(q.probs - 1 / 3).sum() <= 0.05

    def test_recovers_skewed_prior(self):
        errs = []
        for seed in range(5):
            cfg = SyntheticTaskConfig(
                k=2, pretrain_prior=ProbabilitySimplex([2 / 3, 1 / 3]), seed=seed
            )
            batch = sample_shots(make_task(cfg), 500, seed=70 + seed)
            q = estimate_prior_m1(batch.labelled_zs())
            errs.append(abs(q.probs[0] - 2 / 3))
        assert np.mean(errs) <= 0.05


class TestEstimatePriorNaive:
    def test_uniform_rows(self):
        q = estimate_prior_naive(LogitTable(np.zeros((5, 4))))
        assert np.allclose(q.probs, 0.25)

    def test_mean_of_rows(self):
        q = estimate_prior_naive(logits_for_probs([[0.9, 0.1], [0.5, 0.5]]))
        assert np.allclose(q.probs, [0.7, 0.3])

    def test_balanced_equals_transition_times_uniform(self):
        rng = np.random.default_rng(8)
        scores = rng.normal(size=(60, 3))
        labels = np.repeat(np.arange(3), 20)
        data = LabelledLogits(LogitTable(scores), labels)
        p = build_transition_matrix(data)
        naive = estimate_prior_naive(data.logits)
        assert np.abs(naive.probs - p.entries @ np.full(3, 1 / 3)).sum() <= 1e-9

    def test_population_bias_identity(self):
        # exact P built from (p11, p12); true prior solves the fixed point
        for p11, p12 in [(0.9, 0.2), (0.8, 0.3), (0.7, 0.35)]:
            q_true = p12 / (1 - p11 + p12)
            measured_naive = 0.5 * (p11 + p12)
            error = q_true - measured_naive
            assert error == pytest.approx((q_true - 0.5) * (p11 - p12), abs=1e-10)
            if p11 > 0.5 and (1 - p12) > 0.5:
                assert error > (q_true - 0.5) ** 2 / q_true


class TestM2ErrorBound:
    def test_value_k2_n100(self):
        b = m2_error_bound(BoundQuery(2, 100, 0.05))
        assert b == pytest.approx(math.sqrt(0.02 * math.log(160)), abs=1e-12)
        assert b == pytest.approx(0.3186, abs=1e-4)

    def test_value_k2_n1000(self):
        assert m2_error_bound(BoundQuery(2, 1000, 0.05)) == pytest.approx(0.1008, abs=1e-4)

    def test_quadruple_n_halves_bound(self):
        for k, n, d in [(2, 50, 0.1), (5, 200, 0.05), (10, 16, 0.01)]:
            assert m2_error_bound(BoundQuery(k, 4 * n, d)) == pytest.approx(
                m2_error_bound(BoundQuery(k, n, d)) / 2
            )

    def test_query_validation(self):
        with pytest.raises(InvalidInput):
            BoundQuery(1, 10, 0.05)
        with pytest.raises(InvalidInput):
            BoundQuery(2, 0, 0.05)
        with pytest.raises(InvalidInput):
            BoundQuery(2, 10, 1.5)

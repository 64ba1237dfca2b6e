import numpy as np
import pytest

from swarmfe.bqabc import (BqabcConfig, FoodSource, INV_SQRT2,
                           observe, onlooker_probabilities, repair,
                           rotate_toward, run_bqabc, uniform_string)


class TestObserve:
    def test_collapsed_one(self, rng):
        alpha, beta = np.zeros(8), np.ones(8)
        for _ in range(20):
            assert observe(alpha, beta, rng).all()

    def test_collapsed_zero(self, rng):
        alpha, beta = np.ones(8), np.zeros(8)
        for _ in range(20):
            assert not observe(alpha, beta, rng).any()

    def test_uniform_set_rate(self, rng):
        alpha, beta = uniform_string(1)
        draws = np.array([observe(alpha, beta, rng)[0] for _ in range(10_000)])
        assert abs(draws.mean() - 0.5) < 0.02  # 4 sigma for p=0.5, n=1e4


class TestRepair:
    def test_noop(self):
        mask = np.array([0, 1, 1, 0], dtype=np.uint8)
        beta = np.full(4, INV_SQRT2)
        assert np.array_equal(repair(mask, beta), mask)

    def test_empty_sets_most_probable(self):
        beta = np.sqrt(np.array([0.1, 0.7, 0.3, 0.7]))
        fixed = repair(np.zeros(4, dtype=np.uint8), beta)
        assert fixed.tolist() == [0, 1, 0, 0]  # tie between 1 and 3 -> low index

    def test_repaired_mask_nonempty(self, rng):
        for _ in range(50):
            beta = rng.random(6)
            assert repair(np.zeros(6, dtype=np.uint8), beta).any()


class TestRotateToward:
    def test_zero_angle_identity(self, rng):
        alpha, beta = uniform_string(5)
        target = np.array([1, 0, 1, 0, 1], dtype=np.uint8)
        a2, b2 = rotate_toward(alpha, beta, target, 0.0, 0.0, rng)
        assert np.allclose(a2, alpha) and np.allclose(b2, beta)

    def test_quarter_turn_collapses(self, rng):
        alpha, beta = uniform_string(1)
        angle = np.pi / 4
        a2, b2 = rotate_toward(alpha, beta, np.array([1], dtype=np.uint8),
                               angle, angle, rng)
        assert a2[0] == pytest.approx(0.0, abs=1e-12)
        assert b2[0] == pytest.approx(1.0, abs=1e-12)

    def test_normalization_preserved(self, rng):
        for _ in range(200):
            theta = rng.random() * np.pi / 4
            alpha = rng.random(10)
            beta = np.sqrt(1 - alpha ** 2)
            target = (rng.random(10) < 0.5).astype(np.uint8)
            a2, b2 = rotate_toward(alpha, beta, target, theta / 2, theta, rng)
            assert np.abs(a2 ** 2 + b2 ** 2 - 1).max() < 1e-12

    def test_direction(self, rng):
        alpha, beta = uniform_string(2)
        target = np.array([1, 0], dtype=np.uint8)
        a2, b2 = rotate_toward(alpha, beta, target, 0.01, 0.05, rng)
        assert b2[0] > beta[0]   # toward set bit
        assert b2[1] < beta[1]   # away from unset bit

    def test_first_quadrant_clamp(self, rng):
        alpha, beta = np.array([0.05]), np.array([np.sqrt(1 - 0.05 ** 2)])
        a2, b2 = rotate_toward(alpha, beta, np.array([1], dtype=np.uint8),
                               0.2, 0.2, rng)
        assert a2[0] == 0.0 and b2[0] == 1.0


class TestOnlookerProbabilities:
    def test_symmetry(self):
        assert onlooker_probabilities([1, 1, 1, 1]).tolist() == [0.25] * 4

    def test_already_normalized(self):
        p = onlooker_probabilities([0.9, 0.1])
        assert np.allclose(p, [0.9, 0.1])

    def test_sums_to_one(self, rng):
        for _ in range(50):
            p = onlooker_probabilities(rng.random(10) + 1e-6)
            assert abs(p.sum() - 1.0) < 1e-12

    def test_all_zero_uniform(self):
        assert np.allclose(onlooker_probabilities([0.0, 0.0]), [0.5, 0.5])


class TestRunBqabc:
    def test_init_uniform_superposition(self):
        alpha, beta = uniform_string(41)
        assert np.allclose(alpha, INV_SQRT2) and np.allclose(beta, INV_SQRT2)

    def test_history_monotone(self):
        config = BqabcConfig(population=8, max_iterations=15, master_seed=3)
        result = run_bqabc(10, config, lambda mask: float(mask.sum()) / 10)
        assert all(b >= a for a, b in zip(result.history, result.history[1:]))
        assert result.best_fitness == result.history[-1]

    def test_deterministic(self):
        config = BqabcConfig(population=6, max_iterations=10, master_seed=42)
        r1 = run_bqabc(8, config, lambda mask: float(mask.sum()) / 8)
        r2 = run_bqabc(8, config, lambda mask: float(mask.sum()) / 8)
        assert np.array_equal(r1.best_mask, r2.best_mask)
        assert r1.history == r2.history

    def test_worker_count_irrelevant(self):
        config = BqabcConfig(population=6, max_iterations=8, master_seed=5)
        fitness = lambda mask: float(mask.sum()) / 8
        r1 = run_bqabc(8, config, fitness, workers=1)
        r2 = run_bqabc(8, config, fitness, workers=4)
        assert np.array_equal(r1.best_mask, r2.best_mask)
        assert r1.history == r2.history

    def test_evaluation_budget(self):
        config = BqabcConfig(population=7, max_iterations=12, master_seed=0)
        calls = [0]

        def fitness(mask):
            calls[0] += 1
            return float(mask.sum()) / 9

        result = run_bqabc(9, config, fitness)
        s, iters = config.population, config.max_iterations
        assert calls[0] == result.evaluations
        assert calls[0] <= s + iters * (2 * s + 1)

    def test_repaired_masks_only(self):
        config = BqabcConfig(population=5, max_iterations=5, master_seed=1)

        def fitness(mask):
            assert mask.any()
            return float(mask.sum()) / 6

        run_bqabc(6, config, fitness)

    def test_scout_replaces_stagnant(self):
        # constant fitness: nothing ever improves, so trials hit the limit fast
        config = BqabcConfig(population=4, max_iterations=10,
                             abandonment_limit=2, master_seed=7)
        result = run_bqabc(6, config, lambda mask: 0.5)
        # scout evaluations push the count past the no-scout budget floor
        assert result.evaluations > 4 + 10 * 8

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BqabcConfig(theta_min=0.0)
        with pytest.raises(ValueError):
            BqabcConfig(theta_min=0.1, theta_max=0.05)
        with pytest.raises(ValueError):
            BqabcConfig(population=0)

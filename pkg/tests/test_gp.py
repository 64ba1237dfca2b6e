import numpy as np
import pytest

from swarmfe.gp import (GpConfig, Node, crossover, depth, eval_tree,
                        init_population, mutate, normalize_column, parse_sexp,
                        random_tree, run_gp, size, terminal, to_sexp,
                        tournament_select)


def assert_valid(node, s, max_depth):
    assert depth(node) <= max_depth
    stack = [node]
    while stack:
        n = stack.pop()
        arity = {"f": 0, "sin": 1, "cos": 1, "+": 2, "-": 2, "*": 2}[n.op]
        assert len(n.children) == arity
        if n.op == "f":
            assert 0 <= n.feature < s
        stack.extend(n.children)


class TestRandomTree:
    def test_degenerate_depth(self, rng):
        t = random_tree((0, 0), 4, rng)
        assert t.op == "f" and depth(t) == 0

    def test_depth_range_respected(self, rng):
        for _ in range(300):
            t = random_tree((2, 6), 5, rng)
            assert 2 <= depth(t) <= 6
            assert_valid(t, 5, 6)

    def test_single_feature_terminals(self, rng):
        for _ in range(30):
            t = random_tree((1, 3), 1, rng)
            for node, _d in _walk(t):
                if node.op == "f":
                    assert node.feature == 0


def _walk(node, d=0):
    yield node, d
    for c in node.children:
        yield from _walk(c, d + 1)


class TestEvalTree:
    def test_addition(self):
        t = Node("+", (terminal(0), terminal(1)))
        col, clamped = eval_tree(t, np.array([[0.2, 0.3]]))
        assert col[0] == pytest.approx(0.5)
        assert not clamped

    def test_sin_zero(self):
        t = Node("sin", (terminal(0),))
        col, _ = eval_tree(t, np.array([[0.0]]))
        assert col[0] == 0.0

    def test_nested_arithmetic(self):
        t = Node("*", (terminal(0), Node("-", (terminal(1), terminal(2)))))
        col, _ = eval_tree(t, np.array([[0.5, 0.8, 0.3]]))
        assert col[0] == pytest.approx(0.25)

    def test_pure_function(self, rng):
        t = random_tree((2, 5), 3, rng)
        X = rng.random((40, 3))
        a, _ = eval_tree(t, X)
        b, _ = eval_tree(t, X)
        assert np.array_equal(a, b)

    def test_closure_no_nan(self, rng):
        # +, -, * and sin/cos are total on [0,1] inputs at bounded depth
        X = rng.random((20, 4))
        for _ in range(200):
            t = random_tree((0, 8), 4, rng)
            col, _ = eval_tree(t, X)
            assert np.isfinite(col).all()

    def test_normalize_column(self):
        col, lo, hi = normalize_column(np.array([2.0, 4.0, 6.0]))
        assert col.tolist() == [0.0, 0.5, 1.0]
        again, _, _ = normalize_column(np.array([8.0, 0.0]), lo, hi)
        assert again.tolist() == [1.0, 0.0]  # clamped with fit-time range


class TestSexp:
    def test_format(self):
        t = Node("+", (terminal(3), Node("sin", (terminal(7),))))
        assert to_sexp(t) == "(+ f3 (sin f7))"

    def test_roundtrip(self, rng):
        for _ in range(50):
            t = random_tree((0, 5), 6, rng)
            assert parse_sexp(to_sexp(t)) == t

    def test_parse_errors(self):
        with pytest.raises(ValueError):
            parse_sexp("(+ f0 f1) junk")
        with pytest.raises(ValueError):
            parse_sexp("(+ f0)")


class TestVariation:
    def test_crossover_terminals_swap(self, rng):
        a, b = terminal(1), terminal(2)
        ca, cb = crossover(a, b, rng)
        assert ca == b and cb == a

    def test_crossover_valid_offspring(self, rng):
        for _ in range(300):
            a = random_tree((1, 5), 4, rng)
            b = random_tree((1, 5), 4, rng)
            ca, cb = crossover(a, b, rng, max_depth=8)
            assert_valid(ca, 4, 8)
            assert_valid(cb, 4, 8)

    def test_mutate_valid(self, rng):
        for _ in range(300):
            t = random_tree((0, 6), 4, rng)
            assert_valid(mutate(t, 4, rng, max_depth=8), 4, 8)

    def test_mutate_terminal_can_grow(self, rng):
        depths = {depth(mutate(terminal(0), 3, rng, max_depth=8)) for _ in range(200)}
        assert max(depths) > 0


class TestTournament:
    def test_full_size_always_best(self, rng):
        pop = [terminal(i) for i in range(5)]
        fits = [0.1, 0.9, 0.3, 0.2, 0.5]
        for _ in range(20):
            assert tournament_select(pop, fits, 5, rng) == pop[1]

    def test_size_one_uniform(self, rng):
        pop = [terminal(i) for i in range(4)]
        fits = [0.0, 0.0, 0.0, 1.0]
        seen = {tournament_select(pop, fits, 1, rng).feature for _ in range(200)}
        assert seen == {0, 1, 2, 3}

    def test_selection_pressure_by_rank(self, rng):
        pop = [terminal(i) for i in range(6)]
        fits = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
        counts = np.zeros(6)
        for _ in range(10_000):
            counts[tournament_select(pop, fits, 3, rng).feature] += 1
        # rank r wins C(r,2) of C(6,3) tournaments: non-decreasing in rank,
        # and the two lowest ranks can never win a size-3 tournament
        assert (np.diff(counts) >= 0).all()
        assert counts[0] == counts[1] == 0
        assert counts[5] > counts[2]


class TestRunGp:
    def test_bare_terminal_found_at_gen_zero(self):
        fitness = lambda t: 1.0 if t.op == "f" else 0.0
        config = GpConfig(population=50, max_generations=0, master_seed=13)
        result = run_gp(config, 5, fitness)
        assert result.best_fitness == 1.0
        assert result.history[0] == 1.0

    def test_history_non_decreasing(self, rng):
        fitness = lambda t: 1.0 / (1.0 + abs(size(t) - 7))
        config = GpConfig(population=20, max_generations=15, master_seed=2)
        result = run_gp(config, 3, fitness)
        assert all(b >= a for a, b in zip(result.history, result.history[1:]))

    def test_population_size_constant(self):
        sizes = []
        calls = [0]

        def fitness(t):
            calls[0] += 1
            return 0.5

        config = GpConfig(population=17, max_generations=4, master_seed=1)
        run_gp(config, 3, fitness)
        assert calls[0] == 17 * 5  # init + 4 generations, exactly S' each

    def test_deterministic(self):
        fitness = lambda t: 1.0 / (1.0 + size(t))
        config = GpConfig(population=12, max_generations=8, master_seed=4)
        r1 = run_gp(config, 4, fitness)
        r2 = run_gp(config, 4, fitness)
        assert r1.best_tree == r2.best_tree
        assert r1.history == r2.history

    def test_init_population_pins_terminal(self, rng):
        config = GpConfig(population=30, master_seed=0)
        pop = init_population(config, 4, rng)
        assert len(pop) == 30
        assert pop[0].op == "f"
        for t in pop:
            assert_valid(t, 4, config.max_depth)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GpConfig(crossover_rate=0.9, mutation_rate=0.2)
        with pytest.raises(ValueError):
            GpConfig(init_depth_range=(2, 9), max_depth=8)

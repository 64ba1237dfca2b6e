"""Genetic programming over expression trees that combine selected features.

Trees use feature terminals f0..f{s-1}, binary ops {+, -, *} and unary ops
{sin, cos}. The best evolved tree becomes one constructed feature column.
Serialized form is a prefix s-expression, e.g. ``(+ f3 (sin f7))``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

BINARY_OPS = ("+", "-", "*")
UNARY_OPS = ("sin", "cos")


@dataclass(frozen=True)
class Node:
    op: str                     # "+", "-", "*", "sin", "cos" or "f" (terminal)
    children: tuple = ()
    feature: int = -1           # terminal only

    def __post_init__(self):
        arity = {"f": 0, "sin": 1, "cos": 1, "+": 2, "-": 2, "*": 2}[self.op]
        if len(self.children) != arity:
            raise ValueError(f"op {self.op!r} needs {arity} children, got {len(self.children)}")
        if self.op == "f" and self.feature < 0:
            raise ValueError("terminal needs a feature index")


def terminal(index: int) -> Node:
    return Node("f", feature=index)


def depth(node: Node) -> int:
    if not node.children:
        return 0
    return 1 + max(depth(c) for c in node.children)


def size(node: Node) -> int:
    return 1 + sum(size(c) for c in node.children)


def to_sexp(node: Node) -> str:
    if node.op == "f":
        return f"f{node.feature}"
    return "(" + " ".join([node.op] + [to_sexp(c) for c in node.children]) + ")"


def parse_sexp(text: str) -> Node:
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def parse() -> Node:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            op = tokens[pos]
            pos += 1
            children = []
            while tokens[pos] != ")":
                children.append(parse())
            pos += 1
            return Node(op, tuple(children))
        if not tok.startswith("f"):
            raise ValueError(f"bad token {tok!r}")
        return terminal(int(tok[1:]))

    node = parse()
    if pos != len(tokens):
        raise ValueError("trailing tokens in expression")
    return node


def eval_tree(node: Node, values: np.ndarray) -> tuple[np.ndarray, bool]:
    """Row-wise evaluation against an (N, s) matrix of selected features.

    Returns the raw column and a flag that is True when non-finite values
    had to be clamped to the finite range observed in the column.
    """

    def rec(n: Node) -> np.ndarray:
        if n.op == "f":
            return values[:, n.feature]
        if n.op == "sin":
            return np.sin(rec(n.children[0]))
        if n.op == "cos":
            return np.cos(rec(n.children[0]))
        a, b = rec(n.children[0]), rec(n.children[1])
        if n.op == "+":
            return a + b
        if n.op == "-":
            return a - b
        return a * b

    with np.errstate(over="ignore", invalid="ignore"):
        col = rec(node)
    finite = np.isfinite(col)
    clamped = not finite.all()
    if clamped:
        if finite.any():
            lo, hi = col[finite].min(), col[finite].max()
        else:
            lo = hi = 0.0
        col = np.clip(np.nan_to_num(col, nan=lo, posinf=hi, neginf=lo), lo, hi)
    return col, clamped


def normalize_column(col: np.ndarray, lo: float | None = None, hi: float | None = None):
    """Min-max scale a constructed column; fit range comes from training rows."""
    if lo is None:
        lo, hi = float(col.min()), float(col.max())
    if hi == lo:
        return np.zeros_like(col), lo, hi
    return np.clip((col - lo) / (hi - lo), 0.0, 1.0), lo, hi


def _grow(target: int, min_depth: int, s: int, rng: np.random.Generator, full: bool) -> Node:
    if target == 0:
        return terminal(int(rng.integers(s)))
    if not full and min_depth <= 0 and rng.random() < 0.3:
        return terminal(int(rng.integers(s)))
    op = (BINARY_OPS + UNARY_OPS)[int(rng.integers(5))]
    arity = 1 if op in UNARY_OPS else 2
    # at least one branch must reach the remaining minimum depth
    deep_child = int(rng.integers(arity))
    children = tuple(
        _grow(target - 1, (min_depth - 1) if i == deep_child else 0, s, rng, full)
        for i in range(arity))
    return Node(op, children)


def random_tree(depth_range: tuple[int, int], s: int, rng: np.random.Generator) -> Node:
    """One ramped-half-and-half tree: random target depth, grow or full."""
    lo, hi = depth_range
    target = int(rng.integers(lo, hi + 1))
    if target == 0:
        return terminal(int(rng.integers(s)))
    full = bool(rng.integers(2))
    return _grow(target, target if full else lo, s, rng, full)


def _nodes_with_depth(node: Node, d: int = 0):
    yield node, d
    for c in node.children:
        yield from _nodes_with_depth(c, d + 1)


def _replace_at(node: Node, index: int, replacement: Node, counter: list[int]) -> Node:
    if counter[0] == index:
        counter[0] += 1
        return replacement
    counter[0] += 1
    if not node.children:
        return node
    return Node(node.op, tuple(_replace_at(c, index, replacement, counter) for c in node.children),
                node.feature)


def _subtree_at(node: Node, index: int) -> Node:
    for i, (n, _) in enumerate(_nodes_with_depth(node)):
        if i == index:
            return n
    raise IndexError(index)


def crossover(a: Node, b: Node, rng: np.random.Generator, max_depth: int = 8) -> tuple[Node, Node]:
    """Swap uniformly chosen subtrees; a too-deep offspring reverts to its parent."""
    ia = int(rng.integers(size(a)))
    ib = int(rng.integers(size(b)))
    sub_a, sub_b = _subtree_at(a, ia), _subtree_at(b, ib)
    child_a = _replace_at(a, ia, sub_b, [0])
    child_b = _replace_at(b, ib, sub_a, [0])
    if depth(child_a) > max_depth:
        child_a = a
    if depth(child_b) > max_depth:
        child_b = b
    return child_a, child_b


def mutate(t: Node, s: int, rng: np.random.Generator, max_depth: int = 8) -> Node:
    """Replace a uniformly chosen subtree with a fresh one that fits the depth cap."""
    nodes = list(_nodes_with_depth(t))
    idx = int(rng.integers(len(nodes)))
    node_depth = nodes[idx][1]
    budget = max_depth - node_depth
    fresh = random_tree((0, budget), s, rng)
    return _replace_at(t, idx, fresh, [0])


def tournament_select(population: list[Node], fitnesses: list[float], tournament_size: int,
                      rng: np.random.Generator) -> Node:
    """Best of a uniformly drawn subset; fitness ties go to the lower index."""
    entrants = rng.choice(len(population), size=tournament_size, replace=False)
    best = min(entrants, key=lambda i: (-fitnesses[i], i))
    return population[int(best)]


@dataclass(frozen=True)
class GpConfig:
    population: int = 50
    max_generations: int = 100
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    tournament_size: int = 3
    init_depth_range: tuple[int, int] = (2, 6)
    max_depth: int = 8
    elitism_count: int = 1
    master_seed: int = 0

    def __post_init__(self):
        if self.crossover_rate + self.mutation_rate > 1.0 + 1e-12:
            raise ValueError("crossover_rate + mutation_rate must not exceed 1")
        if self.init_depth_range[1] > self.max_depth:
            raise ValueError("init depths must fit under max_depth")


@dataclass
class GpResult:
    best_tree: Node
    best_fitness: float
    history: list[float] = field(default_factory=list)
    evaluations: int = 0


def init_population(config: GpConfig, s: int, rng: np.random.Generator) -> list[Node]:
    """Ramped half-and-half, with slot 0 pinned to a bare terminal.

    The pinned terminal guarantees the evolved feature can never do worse
    than carrying one selected feature through unchanged (with elitism).
    """
    population = [terminal(0)]
    while len(population) < config.population:
        population.append(random_tree(config.init_depth_range, s, rng))
    return population[: config.population]


def _evaluate(fitness, trees, workers):
    if workers and workers > 1 and len(trees) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fitness, trees))
    return [fitness(t) for t in trees]


def run_gp(config: GpConfig, s: int, fitness, workers: int | None = None) -> GpResult:
    """Generational GP loop with elitism; deterministic for a fixed seed."""
    rng = np.random.default_rng(config.master_seed)
    population = init_population(config, s, rng)
    fitnesses = _evaluate(fitness, population, workers)
    evaluations = len(population)

    order = sorted(range(len(population)), key=lambda i: (-fitnesses[i], i))
    best_tree, best_fitness = population[order[0]], fitnesses[order[0]]
    history = [best_fitness]

    for _ in range(config.max_generations):
        next_pop = [population[i] for i in order[: config.elitism_count]]
        while len(next_pop) < config.population:
            r = rng.random()
            if r < config.crossover_rate:
                pa = tournament_select(population, fitnesses, config.tournament_size, rng)
                pb = tournament_select(population, fitnesses, config.tournament_size, rng)
                ca, cb = crossover(pa, pb, rng, config.max_depth)
                next_pop.append(ca)
                if len(next_pop) < config.population:
                    next_pop.append(cb)
            elif r < config.crossover_rate + config.mutation_rate:
                parent = tournament_select(population, fitnesses, config.tournament_size, rng)
                next_pop.append(mutate(parent, s, rng, config.max_depth))
            else:
                next_pop.append(tournament_select(population, fitnesses, config.tournament_size, rng))
        population = next_pop
        fitnesses = _evaluate(fitness, population, workers)
        evaluations += len(population)
        order = sorted(range(len(population)), key=lambda i: (-fitnesses[i], i))
        if fitnesses[order[0]] > best_fitness:
            best_tree, best_fitness = population[order[0]], fitnesses[order[0]]
        history.append(fitnesses[order[0]])

    return GpResult(best_tree=best_tree, best_fitness=best_fitness,
                    history=history, evaluations=evaluations)

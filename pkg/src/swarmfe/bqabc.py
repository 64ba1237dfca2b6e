"""Binary quantum-inspired artificial bee colony search over feature masks.

Each food source is a string of amplitude pairs (alpha, beta) with
alpha^2 + beta^2 = 1; beta^2 is the probability that observing the qubit
yields a set bit. The colony refines sources with rotation-gate moves toward
peers' observed masks (employed phase), reinforces good sources by
fitness-proportional roulette (onlooker phase) and replaces stagnant sources
with fresh uniform superpositions (scout phase).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass
class FoodSource:
    alpha: np.ndarray  # (m,)
    beta: np.ndarray   # (m,)
    mask: np.ndarray   # (m,) uint8, repaired observation of (alpha, beta)
    fitness: float
    trials: int = 0    # consecutive non-improvements


@dataclass(frozen=True)
class BqabcConfig:
    population: int = 50
    max_iterations: int = 100
    theta_min: float = 0.001 * np.pi
    theta_max: float = 0.05 * np.pi
    abandonment_limit: int | None = None  # None -> population * m / 2
    master_seed: int = 0

    def __post_init__(self):
        if not 0 < self.theta_min <= self.theta_max < np.pi / 2:
            raise ValueError("need 0 < theta_min <= theta_max < pi/2")
        if self.population < 1 or self.max_iterations < 1:
            raise ValueError("population and max_iterations must be positive")


@dataclass
class BqabcResult:
    best_mask: np.ndarray
    best_fitness: float
    history: list[float] = field(default_factory=list)
    evaluations: int = 0
    iterations: int = 0


def uniform_string(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Amplitudes putting every qubit in equal superposition."""
    return np.full(m, INV_SQRT2), np.full(m, INV_SQRT2)


def observe(alpha: np.ndarray, beta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Collapse each qubit independently: bit j is 1 with probability beta_j^2."""
    return (rng.random(beta.shape[0]) < beta ** 2).astype(np.uint8)


def repair(mask: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Guarantee at least one set bit; an empty mask gets its most probable bit."""
    if mask.any():
        return mask
    fixed = mask.copy()
    fixed[int(np.argmax(beta ** 2))] = 1  # argmax ties resolve to lowest index
    return fixed


def rotate_toward(alpha: np.ndarray, beta: np.ndarray, target: np.ndarray,
                  theta_min: float, theta_max: float,
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Rotate each qubit toward (target=1) or away from (target=0) the set state.

    Rotation magnitude is drawn per qubit, uniform in [theta_min, theta_max].
    Amplitudes are clamped to the closed first quadrant so beta^2 stays
    monotone in the rotation direction.
    """
    m = alpha.shape[0]
    delta = rng.uniform(theta_min, theta_max, size=m)
    delta = np.where(target.astype(bool), delta, -delta)
    cos_d, sin_d = np.cos(delta), np.sin(delta)
    new_alpha = alpha * cos_d - beta * sin_d
    new_beta = alpha * sin_d + beta * cos_d
    # quadrant clamp: a crossing amplitude collapses to the nearer basis state
    crossed_low = new_beta < 0.0
    crossed_high = new_alpha < 0.0
    new_alpha = np.where(crossed_low, 1.0, np.where(crossed_high, 0.0, new_alpha))
    new_beta = np.where(crossed_low, 0.0, np.where(crossed_high, 1.0, new_beta))
    return new_alpha, new_beta


def onlooker_probabilities(fitnesses: np.ndarray) -> np.ndarray:
    """Fitness-proportional selection probabilities; uniform if all zero."""
    fitnesses = np.asarray(fitnesses, dtype=np.float64)
    total = fitnesses.sum()
    if total <= 0.0:
        return np.full(len(fitnesses), 1.0 / len(fitnesses))
    return fitnesses / total


def _roulette(probs: np.ndarray, rng: np.random.Generator) -> int:
    return int(np.searchsorted(np.cumsum(probs), rng.random(), side="right").clip(0, len(probs) - 1))


def _evaluate(fitness, masks, workers):
    if workers and workers > 1 and len(masks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fitness, masks))
    return [fitness(mask) for mask in masks]


def run_bqabc(m: int, config: BqabcConfig, fitness, workers: int | None = None) -> BqabcResult:
    """Run the colony; returns the best mask found across all evaluations.

    ``fitness`` maps a repaired uint8 mask to a real in [0, 1] and must be
    pure. All randomness is drawn on the driving thread, so results do not
    depend on the worker count.
    """
    rng = np.random.default_rng(config.master_seed)
    s = config.population
    limit = config.abandonment_limit
    if limit is None:
        limit = max(1, (s * m) // 2)

    result = BqabcResult(best_mask=np.zeros(m, dtype=np.uint8), best_fitness=-np.inf)

    def note(mask, fit):
        if fit > result.best_fitness:
            result.best_fitness = fit
            result.best_mask = mask.copy()

    sources = []
    init_masks = []
    for _ in range(s):
        alpha, beta = uniform_string(m)
        mask = repair(observe(alpha, beta, rng), beta)
        sources.append(FoodSource(alpha, beta, mask, fitness=0.0))
        init_masks.append(mask)
    for src, fit in zip(sources, _evaluate(fitness, init_masks, workers)):
        src.fitness = fit
        note(src.mask, fit)
    result.evaluations = s

    for _ in range(config.max_iterations):
        # employed phase: each source probes toward a random peer's mask
        proposals = []
        for i, src in enumerate(sources):
            peer = _roulette(np.full(s - 1, 1.0 / (s - 1)), rng) if s > 1 else i
            if s > 1 and peer >= i:
                peer += 1
            alpha, beta = rotate_toward(src.alpha, src.beta, sources[peer].mask,
                                        config.theta_min, config.theta_max, rng)
            mask = repair(observe(alpha, beta, rng), beta)
            proposals.append((i, alpha, beta, mask))
        fits = _evaluate(fitness, [p[3] for p in proposals], workers)
        result.evaluations += len(proposals)
        for (i, alpha, beta, mask), fit in zip(proposals, fits):
            note(mask, fit)
            src = sources[i]
            if fit > src.fitness:
                src.alpha, src.beta, src.mask, src.fitness, src.trials = alpha, beta, mask, fit, 0
            else:
                src.trials += 1

        # onlooker phase: roulette-selected sources get the same move
        probs = onlooker_probabilities([src.fitness for src in sources])
        proposals = []
        for _ in range(s):
            i = _roulette(probs, rng)
            src = sources[i]
            peer = _roulette(np.full(s - 1, 1.0 / (s - 1)), rng) if s > 1 else i
            if s > 1 and peer >= i:
                peer += 1
            alpha, beta = rotate_toward(src.alpha, src.beta, sources[peer].mask,
                                        config.theta_min, config.theta_max, rng)
            mask = repair(observe(alpha, beta, rng), beta)
            proposals.append((i, alpha, beta, mask))
        fits = _evaluate(fitness, [p[3] for p in proposals], workers)
        result.evaluations += len(proposals)
        for (i, alpha, beta, mask), fit in zip(proposals, fits):
            note(mask, fit)
            src = sources[i]
            if fit > src.fitness:
                src.alpha, src.beta, src.mask, src.fitness, src.trials = alpha, beta, mask, fit, 0
            else:
                src.trials += 1

        # scout phase: replace the worst over-limit source, at most one
        over = [i for i, src in enumerate(sources) if src.trials >= limit]
        if over:
            worst = min(over, key=lambda i: (sources[i].fitness, i))
            alpha, beta = uniform_string(m)
            mask = repair(observe(alpha, beta, rng), beta)
            fit = fitness(mask)
            result.evaluations += 1
            note(mask, fit)
            sources[worst] = FoodSource(alpha, beta, mask, fitness=fit)

        result.iterations += 1
        result.history.append(result.best_fitness)

    return result

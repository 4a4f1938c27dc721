"""Genetic algorithm over bounded, ordered genomes.

The canonical genome (HYPERPARAM_GENES) encodes the LSTM hyperparameters
learning_rate / hidden_units / num_layers / lookback, in that fixed
order — crossover cut points depend on it. The machinery is generic over
any GeneSpec, which the tests use with tiny analytic fitness functions.

Fitness is "higher is better"; for hyperparameter search it is the
negative validation MAE, so a perfect model scores 0. Anything that goes
wrong while evaluating a genome (divergence, impossible lookback, ...)
maps to SENTINEL_FITNESS rather than an exception: the GA must tolerate
bad genomes.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .data import WindowedDataset
from .errors import GalstmError
from .lstm import TrainConfig, forward_batch, train
from .rng import Rng, derive_seed

SENTINEL_FITNESS = -1e9


@dataclass(frozen=True)
class Gene:
    name: str
    lo: float
    hi: float
    kind: str = "real"  # "real" or "int"
    scale: str = "linear"  # "linear" or "log"

    def __post_init__(self):
        if self.kind not in ("real", "int"):
            raise ValueError(f"gene {self.name}: kind must be real or int")
        if self.scale not in ("linear", "log"):
            raise ValueError(f"gene {self.name}: scale must be linear or log")
        if not self.hi > self.lo:
            raise ValueError(f"gene {self.name}: needs hi > lo")
        if self.scale == "log" and self.lo <= 0:
            raise ValueError(f"gene {self.name}: log scale needs lo > 0")

    def clamp(self, value):
        value = min(max(value, self.lo), self.hi)
        if self.kind == "int":
            return int(min(max(int(round(value)), int(self.lo)), int(self.hi)))
        return float(value)

    def sample(self, rng: Rng):
        if self.scale == "log":
            v = 10.0 ** rng.uniform(math.log10(self.lo), math.log10(self.hi))
        else:
            v = rng.uniform(self.lo, self.hi)
        return self.clamp(v)

    def perturb(self, value, rng: Rng):
        """Mutation step: Gaussian for reals, spanned redraw for ints.

        Integer redraws exclude the current value (window at least +-1),
        so a mutated gene actually changes whenever bounds allow.
        """
        if self.kind == "int":
            width = max(1, int(round(0.2 * (self.hi - self.lo))))
            lo = max(int(self.lo), int(value) - width)
            hi = min(int(self.hi), int(value) + width)
            candidates = [v for v in range(lo, hi + 1) if v != int(value)]
            if not candidates:
                return int(value)
            return candidates[rng.index(len(candidates))]
        if self.scale == "log":
            span = math.log10(self.hi) - math.log10(self.lo)
            return self.clamp(10.0 ** (math.log10(value) + rng.normal(0.0, 0.1 * span)))
        span = self.hi - self.lo
        return self.clamp(value + rng.normal(0.0, 0.1 * span))


HYPERPARAM_GENES: tuple[Gene, ...] = (
    Gene("learning_rate", 1e-4, 1e-1, kind="real", scale="log"),
    Gene("hidden_units", 4, 128, kind="int"),
    Gene("num_layers", 1, 3, kind="int"),
    Gene("lookback", 5, 60, kind="int"),
)


def genome_to_dict(spec: Sequence[Gene], values: Sequence) -> dict:
    return {gene.name: value for gene, value in zip(spec, values)}


@dataclass
class Individual:
    genome: tuple
    fitness: float | None = None


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 20
    max_generations: int = 10
    crossover_rate: float = 0.9
    mutation_rate: float = 0.2
    selection: str = "tournament"  # "roulette" or "tournament"
    tournament_k: int = 3
    crossover: str = "single_point"  # "single_point", "multi_point", "uniform"
    crossover_points: int = 2
    elite_count: int = 2
    stagnation_patience: int | None = None
    stagnation_epsilon: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        problems = []
        if self.population_size < 2:
            problems.append(f"population_size must be >= 2, got {self.population_size}")
        if self.max_generations < 1:
            problems.append(f"max_generations must be >= 1, got {self.max_generations}")
        if not 0.0 <= self.crossover_rate <= 1.0:
            problems.append(f"crossover_rate must be in [0, 1], got {self.crossover_rate}")
        if not 0.0 <= self.mutation_rate <= 1.0:
            problems.append(f"mutation_rate must be in [0, 1], got {self.mutation_rate}")
        if self.selection not in ("roulette", "tournament"):
            problems.append(f"selection must be roulette or tournament, got {self.selection!r}")
        if self.tournament_k < 1:
            problems.append(f"tournament_k must be >= 1, got {self.tournament_k}")
        if self.crossover not in ("single_point", "multi_point", "uniform"):
            problems.append(f"unknown crossover mode {self.crossover!r}")
        if self.crossover_points < 1:
            problems.append(f"crossover_points must be >= 1, got {self.crossover_points}")
        if not 0 <= self.elite_count < self.population_size:
            problems.append(f"elite_count must be in [0, population_size), got {self.elite_count}")
        if self.stagnation_patience is not None and self.stagnation_patience < 1:
            problems.append(f"stagnation_patience must be >= 1 or None, got {self.stagnation_patience}")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_genome: tuple
    fitnesses: tuple[float, ...]


@dataclass
class GaHistory:
    records: list[GenerationRecord]

    def __len__(self) -> int:
        return len(self.records)

    def best_fitness_series(self) -> list[float]:
        return [r.best_fitness for r in self.records]

    def to_csv(self, spec: Sequence[Gene]) -> str:
        header = "generation,best_fitness,mean_fitness," + ",".join(g.name for g in spec)
        lines = [header]
        for r in self.records:
            genes = ",".join(repr(v) for v in r.best_genome)
            lines.append(f"{r.generation},{r.best_fitness!r},{r.mean_fitness!r},{genes}")
        return "\n".join(lines) + "\n"


def init_population(spec: Sequence[Gene], size: int, rng: Rng) -> list[Individual]:
    """size random genomes, every gene uniform within its bounds."""
    if size < 2:
        raise ValueError(f"population size must be >= 2, got {size}")
    return [Individual(genome=tuple(g.sample(rng) for g in spec)) for _ in range(size)]


def evaluate_fitness(
    genome: Mapping[str, float],
    train_windows: WindowedDataset,
    val_windows: WindowedDataset,
    budget: TrainConfig,
) -> float:
    """-MAE of a budget-trained model on the validation windows.

    Bad genomes (diverged training and friends) return SENTINEL_FITNESS.
    """
    try:
        cfg = replace(budget, learning_rate=float(genome["learning_rate"]))
        model = train(train_windows, int(genome["hidden_units"]), int(genome["num_layers"]), cfg)
        preds, _ = forward_batch(val_windows.windows, model.params)
        mae = float(np.mean(np.abs(preds - val_windows.targets)))
    except GalstmError:
        return SENTINEL_FITNESS
    if not np.isfinite(mae):
        return SENTINEL_FITNESS
    return -mae


def _rank_weights(fitnesses: Sequence[float]) -> list[float]:
    # Fractional ranks, worst=1 .. best=N; ties share their average rank
    # so equal fitness means equal selection probability.
    n = len(fitnesses)
    order = sorted(range(n), key=lambda k: fitnesses[k])
    weights = [0.0] * n
    pos = 0
    while pos < n:
        end = pos
        while end + 1 < n and fitnesses[order[end + 1]] == fitnesses[order[pos]]:
            end += 1
        avg_rank = (pos + end) / 2.0 + 1.0
        for k in range(pos, end + 1):
            weights[order[k]] = avg_rank
        pos = end + 1
    return weights


def select_roulette(population: Sequence[Individual], rng: Rng) -> Individual:
    """Probability proportional to fitness rank (raw fitness is <= 0 here)."""
    weights = _rank_weights([ind.fitness for ind in population])
    cumulative = list(np.cumsum(weights))
    u = rng.uniform(0.0, cumulative[-1])
    return population[bisect_right(cumulative, u)]


def select_tournament(population: Sequence[Individual], k: int, rng: Rng) -> Individual:
    """Best of k distinct uniform draws; ties go to the lowest index."""
    if not 1 <= k <= len(population):
        raise ValueError(f"tournament size {k} not in [1, {len(population)}]")
    drawn = rng.sample_indices(len(population), k)
    best = min(drawn, key=lambda idx: (-population[idx].fitness, idx))
    return population[best]


def crossover(a: tuple, b: tuple, rng: Rng, mode: str = "single_point", points: int = 2) -> tuple[tuple, tuple]:
    """Exchange whole genes between two parents; bounds hold by construction."""
    n = len(a)
    if len(b) != n:
        raise ValueError(f"parents have different gene counts: {n} vs {len(b)}")
    if mode == "uniform":
        c1, c2 = list(a), list(b)
        for i in range(n):
            if rng.uniform() < 0.5:
                c1[i], c2[i] = c2[i], c1[i]
        return tuple(c1), tuple(c2)
    if mode == "single_point":
        cuts = [1 + rng.index(n - 1)] if n > 1 else []
    elif mode == "multi_point":
        avail = n - 1
        cuts = sorted(i + 1 for i in rng.sample_indices(avail, min(points, avail))) if avail else []
    else:
        raise ValueError(f"unknown crossover mode {mode!r}")
    c1, c2 = list(a), list(b)
    swapped = False
    for i in range(n):
        if cuts and i == cuts[0]:
            cuts.pop(0)
            swapped = not swapped
        while cuts and i == cuts[0]:  # coincident cuts collapse (defensive)
            cuts.pop(0)
            swapped = not swapped
        if swapped:
            c1[i], c2[i] = c2[i], c1[i]
    return tuple(c1), tuple(c2)


def mutate(genome: tuple, spec: Sequence[Gene], rate: float, rng: Rng) -> tuple:
    """Independently perturb each gene with probability `rate`."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"mutation rate must be in [0, 1], got {rate}")
    out = list(genome)
    for i, gene in enumerate(spec):
        if rng.uniform() < rate:
            out[i] = gene.perturb(out[i], rng)
    return tuple(out)


def _evaluate(population, generation, master_seed, fitness_fn, jobs):
    # Per-individual seeds derive from (master, generation, index), so
    # values are identical whether this runs serially or threaded.
    pending = [i for i, ind in enumerate(population) if ind.fitness is None]
    if jobs > 1 and len(pending) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(
                pool.map(
                    lambda i: fitness_fn(population[i].genome, derive_seed(master_seed, generation, i)),
                    pending,
                )
            )
        for i, fit in zip(pending, results):
            population[i].fitness = float(fit)
    else:
        for i in pending:
            population[i].fitness = float(fitness_fn(population[i].genome, derive_seed(master_seed, generation, i)))


def _select(population, cfg, rng) -> Individual:
    if cfg.selection == "roulette":
        return select_roulette(population, rng)
    return select_tournament(population, min(cfg.tournament_k, len(population)), rng)


def evolve(
    cfg: GaConfig,
    spec: Sequence[Gene],
    fitness_fn: Callable[[tuple, int], float],
    jobs: int = 1,
    on_generation: Callable[[GenerationRecord], None] | None = None,
) -> tuple[Individual, GaHistory]:
    """Elitist generational GA.

    fitness_fn(genome_values, derived_seed) must be pure. Returns the
    best individual ever seen and the per-generation history.
    """
    rng = Rng(derive_seed(cfg.seed, 2))
    population = init_population(spec, cfg.population_size, rng)
    records: list[GenerationRecord] = []
    best_ever: Individual | None = None
    stagnant = 0

    for generation in range(cfg.max_generations):
        _evaluate(population, generation, cfg.seed, fitness_fn, jobs)
        fitnesses = [ind.fitness for ind in population]
        best_idx = min(range(len(population)), key=lambda k: (-fitnesses[k], k))
        best = population[best_idx]
        record = GenerationRecord(
            generation=generation,
            best_fitness=best.fitness,
            mean_fitness=float(np.mean(fitnesses)),
            best_genome=best.genome,
            fitnesses=tuple(fitnesses),
        )
        records.append(record)
        if on_generation is not None:
            on_generation(record)

        if best_ever is None or best.fitness > best_ever.fitness:
            if best_ever is not None and best.fitness <= best_ever.fitness + cfg.stagnation_epsilon:
                stagnant += 1
            else:
                stagnant = 0
            best_ever = Individual(genome=best.genome, fitness=best.fitness)
        else:
            stagnant += 1
        if cfg.stagnation_patience is not None and stagnant >= cfg.stagnation_patience:
            break
        if generation == cfg.max_generations - 1:
            break

        ranked = sorted(range(len(population)), key=lambda k: (-fitnesses[k], k))
        next_gen = [
            Individual(genome=population[k].genome, fitness=population[k].fitness)
            for k in ranked[: cfg.elite_count]
        ]
        while len(next_gen) < cfg.population_size:
            parent_a = _select(population, cfg, rng)
            parent_b = _select(population, cfg, rng)
            if rng.uniform() < cfg.crossover_rate:
                child_a, child_b = crossover(
                    parent_a.genome, parent_b.genome, rng, mode=cfg.crossover, points=cfg.crossover_points
                )
            else:
                child_a, child_b = parent_a.genome, parent_b.genome
            for child in (child_a, child_b):
                if len(next_gen) >= cfg.population_size:
                    break
                next_gen.append(Individual(genome=mutate(child, spec, cfg.mutation_rate, rng)))
        population = next_gen

    return best_ever, GaHistory(records=records)

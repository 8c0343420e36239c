"""Genetic algorithm over binary feature-inclusion chromosomes.

Each generation keeps the two fittest chromosomes unchanged (elitism),
then fills up with children made by fitness-weighted parent selection,
single-point crossover, and single-gene mutation. A chromosome must always
keep at least one gene set: all-zero draws are re-sampled and an all-zero
mutation result gets a second gene flipped back on.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Rng, as_matrix

Chromosome = np.ndarray  # 1-D uint8 array of 0/1 genes
FitnessFunction = Callable[[Chromosome], float]


class GaError(RuntimeError):
    pass


@dataclass
class GaConfig:
    population_size: int
    max_generations: int
    gene_one_prob: float = 0.5
    mutation_prob: float = 0.25
    elite_count: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 4:
            raise ValueError(f"population_size must be >= 4, got {self.population_size}")
        if self.max_generations < 1:
            raise ValueError(f"max_generations must be >= 1, got {self.max_generations}")
        if not (0.0 <= self.gene_one_prob <= 1.0):
            raise ValueError(f"gene_one_prob must be in [0, 1], got {self.gene_one_prob}")
        if not (0.0 <= self.mutation_prob <= 1.0):
            raise ValueError(f"mutation_prob must be in [0, 1], got {self.mutation_prob}")
        if not (0 <= self.elite_count < self.population_size):
            raise ValueError("elite_count must be < population_size")


@dataclass
class GaHistory:
    best_fitness: list[float] = field(default_factory=list)
    mean_fitness: list[float] = field(default_factory=list)
    best_chromosome: list[Chromosome] = field(default_factory=list)

    def __len__(self):
        return len(self.best_fitness)


def chromosome_to_int(genes: Chromosome) -> int:
    """Bit pattern as an unsigned big-endian integer (gene 0 most significant)."""
    value = 0
    for g in genes:
        value = (value << 1) | int(g)
    return value


def chromosome_to_hex(genes: Chromosome) -> str:
    width = (len(genes) + 3) // 4
    return format(chromosome_to_int(genes), f"0{width}x")


def hex_to_chromosome(text: str, length: int) -> Chromosome:
    value = int(text, 16)
    genes = np.zeros(length, dtype=np.uint8)
    for i in range(length - 1, -1, -1):
        genes[i] = value & 1
        value >>= 1
    return genes


def _random_chromosome(length: int, gene_one_prob: float, rng: Rng) -> Chromosome:
    genes = np.zeros(length, dtype=np.uint8)
    for i in range(length):
        if rng.next_f64() < gene_one_prob:
            genes[i] = 1
    return genes


def init_population(cfg: GaConfig, length: int, rng: Rng) -> list[Chromosome]:
    """Generation 0: genes are 1 with probability gene_one_prob each.

    All-zero draws are retried up to 100 times, then one random gene is
    forced to 1.
    """
    if length < 1:
        raise ValueError(f"chromosome length must be >= 1, got {length}")
    population = []
    for _ in range(cfg.population_size):
        genes = _random_chromosome(length, cfg.gene_one_prob, rng)
        retries = 0
        while genes.sum() == 0 and retries < 100:
            genes = _random_chromosome(length, cfg.gene_one_prob, rng)
            retries += 1
        if genes.sum() == 0:
            genes[rng.next_range(length)] = 1
        population.append(genes)
    return population


def rank_population(
    population: list[Chromosome], fitness: FitnessFunction
) -> list[tuple[Chromosome, float]]:
    """Sort descending by fitness; ties favor the larger bit pattern."""
    if not population:
        raise ValueError("population is empty")
    scored = []
    for genes in population:
        score = float(fitness(genes))
        if not (0.0 <= score <= 1.0):
            raise ValueError(f"fitness {score} outside [0, 1]")
        scored.append((genes, score))
    return sorted(scored, key=lambda it: (-it[1], -chromosome_to_int(it[0])))


def select_parent_pairs(
    ranked: list[tuple[Chromosome, float]], rng: Rng
) -> list[tuple[Chromosome, Chromosome]]:
    """Fitness-weighted sampling without replacement, paired in draw order.

    Draws floor(pop/2) rounded down to even distinct members, renormalizing
    the weights after each draw. A remaining pool with zero total fitness
    falls back to uniform sampling.
    """
    if len(ranked) < 4:
        raise ValueError(f"population must have >= 4 members, got {len(ranked)}")
    n_parents = (len(ranked) // 2) // 2 * 2
    remaining = list(range(len(ranked)))
    drawn = []
    for _ in range(n_parents):
        total = sum(ranked[i][1] for i in remaining)
        if total <= 0.0:
            pick = rng.next_range(len(remaining))
        else:
            u = rng.next_f64() * total
            acc = 0.0
            pick = len(remaining) - 1
            for pos, i in enumerate(remaining):
                acc += ranked[i][1]
                if u < acc:
                    pick = pos
                    break
        drawn.append(ranked[remaining.pop(pick)][0])
    return [(drawn[i], drawn[i + 1]) for i in range(0, len(drawn), 2)]


def crossover(parent_a: Chromosome, parent_b: Chromosome, rng: Rng):
    """Single-point crossover at a cut drawn uniformly from [1, L-1]."""
    if len(parent_a) != len(parent_b):
        raise ValueError("parents must have equal length")
    length = len(parent_a)
    if length < 2:
        raise ValueError(f"crossover needs length >= 2, got {length}")
    cut = 1 + rng.next_range(length - 1)
    child_a = np.concatenate([parent_a[:cut], parent_b[cut:]])
    child_b = np.concatenate([parent_b[:cut], parent_a[cut:]])
    return child_a, child_b


def mutate(child: Chromosome, cfg: GaConfig, rng: Rng) -> Chromosome:
    """Flip one uniformly chosen gene with probability mutation_prob.

    If the flip empties the chromosome, a second distinct gene is set to 1;
    with a single gene there is no distinct one, so the flip is undone.
    """
    if rng.next_f64() >= cfg.mutation_prob:
        return child
    genes = child.copy()
    pos = rng.next_range(len(genes))
    genes[pos] ^= 1
    if genes.sum() == 0:
        if len(genes) == 1:
            genes[0] = 1
        else:
            other = rng.next_range(len(genes) - 1)
            if other >= pos:
                other += 1
            genes[other] = 1
    return genes


def evolve(
    cfg: GaConfig, length: int, fitness: FitnessFunction
) -> tuple[Chromosome, GaHistory]:
    """Run the GA and return (best chromosome, per-generation history).

    Stops at max_generations or as soon as the best fitness reaches 1.0.
    Fitness values are cached per bit pattern for the duration of the call.
    With length 1 the search space is the single chromosome [1], which is
    evaluated and returned without evolving.
    """
    rng = Rng(cfg.seed)
    cache: dict[bytes, float] = {}
    current_generation = 0

    def cached_fitness(genes: Chromosome) -> float:
        key = genes.tobytes()
        if key not in cache:
            try:
                cache[key] = float(fitness(genes))
            except Exception as exc:
                raise GaError(
                    f"fitness evaluation failed at generation {current_generation} "
                    f"for chromosome {chromosome_to_hex(genes)}: {exc}"
                ) from exc
        return cache[key]

    history = GaHistory()

    if length == 1:
        only = np.ones(1, dtype=np.uint8)
        score = cached_fitness(only)
        if not (0.0 <= score <= 1.0):
            raise ValueError(f"fitness {score} outside [0, 1]")
        history.best_fitness.append(score)
        history.mean_fitness.append(score)
        history.best_chromosome.append(only.copy())
        return only, history

    population = init_population(cfg, length, rng)
    best_genes, best_score = None, -1.0

    for generation in range(cfg.max_generations):
        current_generation = generation
        ranked = rank_population(population, cached_fitness)
        top_genes, top_score = ranked[0]
        history.best_fitness.append(top_score)
        history.mean_fitness.append(sum(s for _, s in ranked) / len(ranked))
        history.best_chromosome.append(top_genes.copy())
        if top_score > best_score:
            best_genes, best_score = top_genes.copy(), top_score
        if top_score == 1.0 or generation == cfg.max_generations - 1:
            break

        next_population = [genes.copy() for genes, _ in ranked[: cfg.elite_count]]
        while len(next_population) < cfg.population_size:
            for parent_a, parent_b in select_parent_pairs(ranked, rng):
                if len(next_population) >= cfg.population_size:
                    break
                child_a, child_b = crossover(parent_a, parent_b, rng)
                next_population.append(mutate(child_a, cfg, rng))
                if len(next_population) < cfg.population_size:
                    next_population.append(mutate(child_b, cfg, rng))
        population = next_population

    return best_genes, history


def apply_mask(X, chromosome: Chromosome):
    """Keep the columns whose gene is 1, in order."""
    X = as_matrix(X, "X")
    if X.shape[1] != len(chromosome):
        raise ValueError(
            f"X has {X.shape[1]} columns but chromosome has {len(chromosome)} genes"
        )
    return X[:, np.asarray(chromosome, dtype=bool)]


def history_to_csv(history: GaHistory, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["generation", "best_fitness", "mean_fitness", "best_chromosome_hex"])
        for g in range(len(history)):
            writer.writerow(
                [
                    g,
                    f"{history.best_fitness[g]:.6f}",
                    f"{history.mean_fitness[g]:.6f}",
                    chromosome_to_hex(history.best_chromosome[g]),
                ]
            )

"""Genetic search over two-part variable-length cut chromosomes.

All randomness comes from one ``numpy.random.Generator`` seeded from
``GAConfig.seed`` and consumed in a fixed order by the generational loop.
Fitness evaluation draws nothing, so it could run in any order or in
parallel without changing results.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .classifier import build_models, classify_batch
from .imaging import LabeledSet, Rect, crop
from .partitions import (DEFAULT_CUT_BOUNDS, Chromosome, FuzzyParams, axis_bounds,
                         extract_batch, random_chromosome)

log = logging.getLogger(__name__)

SHIFT_STEPS = (1, 2, 3)


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 50
    max_generations: int = 100
    stall_generations: int = 20
    tournament_size: int = 3
    crossover_prob: float = 0.8
    mutation_prob: float = 0.1
    elite_count: int = 2
    cut_bounds: tuple[int, int] = DEFAULT_CUT_BOUNDS
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not 0 <= self.elite_count < self.population_size:
            raise ValueError("elite_count must be in [0, population_size)")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        for name in ("crossover_prob", "mutation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a probability")
        if self.max_generations < 0 or self.stall_generations < 1:
            raise ValueError("max_generations must be >= 0 and stall_generations >= 1")
        lo, hi = self.cut_bounds
        if not 2 <= lo <= hi:
            raise ValueError(f"cut bounds must satisfy 2 <= min <= max, got {self.cut_bounds}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class Individual:
    chromosome: Chromosome
    fitness: float


@dataclass
class EvolutionTrace:
    best_fitness: list[float] = field(default_factory=list)
    mean_fitness: list[float] = field(default_factory=list)
    best_chromosome: list[Chromosome] = field(default_factory=list)

    def record(self, best: Individual, fits: list[float]) -> None:
        self.best_fitness.append(best.fitness)
        self.mean_fitness.append(float(np.mean(fits)))
        self.best_chromosome.append(best.chromosome)

    def __len__(self) -> int:
        return len(self.best_fitness)

    def to_tsv(self) -> str:
        rows = ["generation\tbest_fitness\tmean_fitness"]
        rows += [f"{g}\t{b!r}\t{m!r}" for g, (b, m) in enumerate(zip(self.best_fitness, self.mean_fitness))]
        return "\n".join(rows) + "\n"


class FitnessEvaluator:
    """Resubstitution recognition rate of the prototype classifier a chromosome induces.

    Results are memoised per chromosome; the computation is deterministic.
    """

    def __init__(self, data: LabeledSet, region: Rect, fp: FuzzyParams,
                 allowed: Iterable[int] | None = None):
        allowed = data.classes if allowed is None else tuple(sorted(set(int(a) for a in allowed)))
        present = set(data.classes)
        empty = [c for c in allowed if c not in present]
        if empty:
            raise ValueError(f"no samples of allowed classes {empty}")
        sub = data.subset(allowed)
        self.region = region
        self.fp = fp
        self.allowed = allowed
        self.labels = sub.labels
        self.windows = np.ascontiguousarray(crop(sub.images, region))
        self._cache: dict[Chromosome, float] = {}

    def __call__(self, ch: Chromosome) -> float:
        if ch.region != self.region:
            raise ValueError(f"chromosome region {ch.region} != evaluator region {self.region}")
        hit = self._cache.get(ch)
        if hit is None:
            feats = extract_batch(self.windows, ch, self.fp, cropped=True)
            ms = build_models(feats, self.labels, ch, self.fp)
            pred, _, _ = classify_batch(feats, ms, self.allowed)
            hit = self._cache[ch] = float(np.mean(pred == self.labels))
        return hit


def fitness(ch: Chromosome, data: LabeledSet, fp: FuzzyParams, allowed: Iterable[int] | None = None) -> float:
    return FitnessEvaluator(data, ch.region, fp, allowed)(ch)


# ---------------------------------------------------------------- operators

def repair_cuts(cuts: Iterable[int], lo: int, hi: int, bounds: tuple[int, int],
                rng: np.random.Generator) -> tuple[int, ...]:
    """Sort, deduplicate, pin the endpoints and bring the count within bounds."""
    min_n, max_n = axis_bounds(lo, hi, bounds)
    inner = sorted({int(c) for c in cuts if lo < c < hi})
    while len(inner) + 2 > max_n:
        inner.pop(int(rng.integers(len(inner))))
    if len(inner) + 2 < min_n:
        free = np.array(sorted(set(range(lo + 1, hi)) - set(inner)))
        extra = rng.choice(free, size=min_n - 2 - len(inner), replace=False)
        inner = sorted(inner + [int(c) for c in extra])
    return (lo, *inner, hi)


def _split_part(a, b, x):
    return [c for c in a if c < x] + [c for c in b if c >= x]


def crossover(a: Chromosome, b: Chromosome, rng: np.random.Generator,
              bounds: tuple[int, int] = DEFAULT_CUT_BOUNDS,
              splits: tuple[int, int] | None = None) -> tuple[Chromosome, Chromosome]:
    """Coordinate-split crossover, done separately on the row and column parts.

    ``splits`` pins the (row, column) split coordinates instead of drawing them.
    """
    if a.region != b.region:
        raise ValueError(f"crossover across regions {a.region} and {b.region}")
    kids1, kids2 = [], []
    for i, ((ca, lo, hi), (cb, _, _)) in enumerate(zip(a.parts(), b.parts())):
        x = int(rng.integers(lo, hi + 1)) if splits is None else splits[i]
        kids1.append(repair_cuts(_split_part(ca, cb, x), lo, hi, bounds, rng))
        kids2.append(repair_cuts(_split_part(cb, ca, x), lo, hi, bounds, rng))
    return a.with_parts(*kids1), a.with_parts(*kids2)


def legal_moves(ch: Chromosome, bounds: tuple[int, int] = DEFAULT_CUT_BOUNDS) -> list[tuple[int, str]]:
    """(part, kind) pairs that mutation may pick; part 0 = rows, 1 = columns."""
    moves = []
    for part, (cuts, lo, hi) in enumerate(ch.parts()):
        min_n, max_n = axis_bounds(lo, hi, bounds)
        if _shifts(cuts):
            moves.append((part, "shift"))
        if len(cuts) < max_n and len(cuts) < hi - lo + 1:
            moves.append((part, "insert"))
        if len(cuts) > max(min_n, 2):
            moves.append((part, "delete"))
    return moves


def _shifts(cuts) -> list[tuple[int, int]]:
    out = []
    for i in range(1, len(cuts) - 1):
        for d in SHIFT_STEPS:
            for step in (-d, d):
                if cuts[i - 1] < cuts[i] + step < cuts[i + 1]:
                    out.append((i, step))
    return out


def mutate(ch: Chromosome, rng: np.random.Generator,
           bounds: tuple[int, int] = DEFAULT_CUT_BOUNDS) -> Chromosome:
    """Apply one shift, insert or delete move, picked uniformly among the legal ones."""
    moves = legal_moves(ch, bounds)
    if not moves:
        return ch
    part, kind = moves[int(rng.integers(len(moves)))]
    cuts, lo, hi = ch.parts()[part]
    cuts = list(cuts)
    if kind == "shift":
        options = _shifts(cuts)
        i, step = options[int(rng.integers(len(options)))]
        cuts[i] += step
    elif kind == "insert":
        free = sorted(set(range(lo + 1, hi)) - set(cuts))
        cuts = sorted(cuts + [free[int(rng.integers(len(free)))]])
    else:
        cuts.pop(int(rng.integers(1, len(cuts) - 1)))
    parts = [ch.h_cuts, ch.v_cuts]
    parts[part] = tuple(cuts)
    return ch.with_parts(*parts)


def _tournament(pop: list[Individual], k: int, rng: np.random.Generator) -> Individual:
    picks = rng.integers(len(pop), size=k)
    return max((pop[i] for i in picks), key=lambda ind: ind.fitness)


# --------------------------------------------------------------------- loop

GenerationHook = Callable[[int, list[Individual]], None]


def evolve(data: LabeledSet, region: Rect, cfg: GAConfig, fp: FuzzyParams,
           allowed: Iterable[int] | None = None,
           on_generation: GenerationHook | None = None) -> tuple[Chromosome, EvolutionTrace]:
    """Run the GA and return the best chromosome ever evaluated, plus the trace.

    Stops after ``max_generations`` or once ``stall_generations`` pass without
    the best fitness improving. ``on_generation`` sees every population.
    """
    evaluate = FitnessEvaluator(data, region, fp, allowed)
    rng = np.random.default_rng(cfg.seed)
    bounds = cfg.cut_bounds

    def scored(chromosomes):
        return [Individual(c, evaluate(c)) for c in chromosomes]

    pop = scored(random_chromosome(region, bounds, rng) for _ in range(cfg.population_size))
    best = max(pop, key=lambda ind: ind.fitness)
    trace = EvolutionTrace()
    trace.record(best, [ind.fitness for ind in pop])
    if on_generation:
        on_generation(0, pop)

    stall = 0
    for gen in range(1, cfg.max_generations + 1):
        if stall >= cfg.stall_generations:
            break
        ranked = sorted(pop, key=lambda ind: -ind.fitness)
        children = [ind.chromosome for ind in ranked[:cfg.elite_count]]
        while len(children) < cfg.population_size:
            a = _tournament(pop, cfg.tournament_size, rng).chromosome
            b = _tournament(pop, cfg.tournament_size, rng).chromosome
            if rng.random() < cfg.crossover_prob:
                a, b = crossover(a, b, rng, bounds)
            for child in (a, b):
                if rng.random() < cfg.mutation_prob:
                    child = mutate(child, rng, bounds)
                if len(children) < cfg.population_size:
                    children.append(child)
        pop = scored(children)
        leader = max(pop, key=lambda ind: ind.fitness)
        if leader.fitness > best.fitness:
            best, stall = leader, 0
        else:
            stall += 1
        trace.record(best, [ind.fitness for ind in pop])
        if on_generation:
            on_generation(gen, pop)
        log.debug("generation %d: best %.4f mean %.4f", gen, best.fitness, trace.mean_fitness[-1])
    return best.chromosome, trace

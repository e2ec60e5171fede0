"""Island-model binary GA over 24-hour price vectors.

Each island runs a generational GA (tournament selection, uniform crossover,
bit-flip mutation, elitism). Every ``migration_interval`` generations the
best members of island ``i`` replace the worst members of island ``i + 1``.
Candidates are ranked with the feasibility rules from :mod:`.retailer`.

Random streams are keyed by ``(seed, island, generation)`` so results do not
depend on how fitness evaluation is scheduled.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .domain import HORIZON, round_money
from .retailer import EvaluatedPricing, RetailerConstraints, deb_key

Evaluator = Callable[[np.ndarray], Sequence[EvaluatedPricing]]

_INIT, _EVOLVE = 0, 1


class EvaluatorFailure(RuntimeError):
    """The fitness evaluator could not produce results for a batch."""


@dataclass(frozen=True)
class GaParams:
    num_islands: int = 15
    island_size: int = 40
    migration_rate: float = 0.2
    migration_interval: int = 10
    bits_per_gene: int = 10
    mutation_prob: float = 0.01
    crossover_prob: float = 0.9
    tournament_size: int = 2
    elitism: int = 1
    max_generations: int = 100
    seed: int = 0

    def __post_init__(self):
        for name in ("num_islands", "island_size", "migration_interval",
                     "bits_per_gene", "tournament_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.migration_rate < 1:
            raise ValueError("migration_rate must lie in (0, 1)")
        if not 0 <= self.mutation_prob <= 1 or not 0 <= self.crossover_prob <= 1:
            raise ValueError("probabilities must lie in [0, 1]")
        if self.max_generations < 0 or self.elitism < 0:
            raise ValueError("max_generations and elitism must be >= 0")
        if self.elitism > self.island_size or self.tournament_size > self.island_size:
            raise ValueError("elitism and tournament_size cannot exceed island_size")

    @property
    def chromosome_length(self) -> int:
        return HORIZON * self.bits_per_gene

    @property
    def migrants(self) -> int:
        return math.ceil(self.migration_rate * self.island_size)

    def to_dict(self):
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class Chromosome:
    bits: np.ndarray
    evaluation: EvaluatedPricing | None = None

    def copy(self) -> "Chromosome":
        return Chromosome(self.bits.copy(), self.evaluation)


@dataclass
class Island:
    members: list[Chromosome]
    stream: int


def rng_for(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), *key]))


def decode_batch(bits: np.ndarray, constraints: RetailerConstraints, bits_per_gene: int):
    """Map ``(B, 24*bits)`` bit arrays to ``(B, 24)`` prices on the grid."""
    bits = np.asarray(bits, dtype=np.int64).reshape(len(bits), HORIZON, bits_per_gene)
    weights = 1 << np.arange(bits_per_gene - 1, -1, -1, dtype=np.int64)
    v = bits @ weights
    lo = np.asarray(constraints.price_min)
    hi = np.asarray(constraints.price_max)
    return round_money(lo + v * (hi - lo) / (2 ** bits_per_gene - 1))


def decode(chrom: Chromosome, constraints: RetailerConstraints, bits_per_gene: int) -> np.ndarray:
    return decode_batch(chrom.bits[None], constraints, bits_per_gene)[0]


def _rank(members: Sequence[Chromosome]) -> list[int]:
    """Member indices best-first; equal fitness keeps index order."""
    return sorted(range(len(members)), key=lambda i: (deb_key(members[i].evaluation), i))


def tournament_select(island: Island, k: int, rng: np.random.Generator) -> Chromosome:
    """Best of ``k`` distinct members drawn uniformly."""
    idx = rng.choice(len(island.members), size=k, replace=False)
    best = min(idx, key=lambda i: (deb_key(island.members[i].evaluation), i))
    return island.members[best]


def uniform_crossover(a: Chromosome, b: Chromosome, rng: np.random.Generator,
                      crossover_prob: float = 1.0) -> tuple[Chromosome, Chromosome]:
    if a.bits.shape != b.bits.shape:
        raise ValueError("parents differ in length")
    if rng.random() >= crossover_prob:
        return a.copy(), b.copy()
    swap = rng.random(a.bits.shape) < 0.5
    return (Chromosome(np.where(swap, b.bits, a.bits)),
            Chromosome(np.where(swap, a.bits, b.bits)))


def bitflip_mutate(chrom: Chromosome, rng: np.random.Generator,
                   mutation_prob: float) -> Chromosome:
    flips = rng.random(chrom.bits.shape) < mutation_prob
    if not flips.any():
        return chrom
    return Chromosome(chrom.bits ^ flips)


def ring_migrate(islands: list[Island], n_migrants: int) -> list[Island]:
    """Island ``i``'s top members replace the worst of island ``i + 1``.

    Emigrants are chosen from the pre-migration state of every island.
    """
    S = len(islands)
    if S < 2 or n_migrants < 1:
        return islands
    emigrants = []
    for isl in islands:
        order = _rank(isl.members)
        emigrants.append([isl.members[i].copy() for i in order[:n_migrants]])
    for i in range(S):
        dest = islands[(i + 1) % S]
        worst = _rank(dest.members)[::-1][:n_migrants]
        for slot, migrant in zip(sorted(worst), emigrants[i]):
            dest.members[slot] = migrant
    return islands


@dataclass
class GenerationStats:
    generation: int
    best_profit: float | None
    mean_profit: float
    feasible_fraction: float

    def to_json(self) -> str:
        return json.dumps(self.__dict__)


@dataclass
class OptimizeResult:
    best: EvaluatedPricing
    history: list[float]
    telemetry: list[GenerationStats] = field(default_factory=list)
    evaluations: int = 0

    def __iter__(self):
        # allows ``best, history = optimize(...)``
        return iter((self.best, self.history))


class _Evaluator:
    """Score unevaluated chromosomes in one batch.

    Evaluation is a pure function of the bit string, so results are memoized
    and each distinct string is sent to the evaluator once.
    """

    def __init__(self, evaluator, constraints, bits_per_gene):
        self.evaluator = evaluator
        self.constraints = constraints
        self.bits = bits_per_gene
        self.memo: dict[bytes, EvaluatedPricing] = {}
        self.count = 0

    def __call__(self, chromosomes: list[Chromosome]):
        pending: dict[bytes, list[Chromosome]] = {}
        for c in chromosomes:
            if c.evaluation is not None:
                continue
            key = np.packbits(c.bits).tobytes()
            if key in self.memo:
                c.evaluation = self.memo[key]
            else:
                pending.setdefault(key, []).append(c)
        if not pending:
            return
        groups = list(pending.items())
        bits = np.array([g[0].bits for _, g in groups])
        prices = decode_batch(bits, self.constraints, self.bits)
        try:
            results = list(self.evaluator(prices))
        except EvaluatorFailure:
            raise
        except Exception as exc:
            raise EvaluatorFailure(f"{type(exc).__name__}: {exc}") from exc
        if len(results) != len(groups):
            raise EvaluatorFailure(f"evaluator returned {len(results)} results "
                                   f"for {len(groups)} candidates")
        self.count += len(groups)
        for (key, members), ev in zip(groups, results):
            self.memo[key] = ev
            for c in members:
                c.evaluation = ev


def _stats(gen: int, islands: list[Island]) -> GenerationStats:
    evs = [m.evaluation for isl in islands for m in isl.members]
    feas = [e.profit for e in evs if e.feasible]
    return GenerationStats(generation=gen,
                           best_profit=max(feas) if feas else None,
                           mean_profit=float(np.mean([e.profit for e in evs])),
                           feasible_fraction=len(feas) / len(evs))


def _best(islands: list[Island]) -> EvaluatedPricing:
    evs = [m.evaluation for isl in islands for m in isl.members]
    return min(evs, key=deb_key)


def _next_generation(island: Island, params: GaParams, rng: np.random.Generator) -> None:
    order = _rank(island.members)
    children = [island.members[i] for i in order[:params.elitism]]
    while len(children) < params.island_size:
        a = tournament_select(island, params.tournament_size, rng)
        b = tournament_select(island, params.tournament_size, rng)
        c1, c2 = uniform_crossover(a, b, rng, params.crossover_prob)
        for child in (c1, c2):
            if len(children) < params.island_size:
                children.append(bitflip_mutate(child, rng, params.mutation_prob))
    island.members = children


def optimize(params: GaParams, evaluator: Evaluator, constraints: RetailerConstraints,
             telemetry: Callable[[GenerationStats], None] | None = None) -> OptimizeResult:
    """Search the decoded price lattice for the most profitable pricing.

    ``evaluator`` maps a ``(B, 24)`` price array to ``B`` evaluations.
    ``history[g]`` is the best feasible profit after generation ``g``
    (``nan`` while nothing feasible has been found).
    """
    L = params.chromosome_length
    islands = []
    for i in range(params.num_islands):
        rng = rng_for(params.seed, _INIT, i)
        bits = rng.integers(0, 2, (params.island_size, L), dtype=np.uint8)
        islands.append(Island([Chromosome(b) for b in bits], stream=i))

    evaluate = _Evaluator(evaluator, constraints, params.bits_per_gene)
    evaluate([m for isl in islands for m in isl.members])

    trace: list[GenerationStats] = []

    def record(gen):
        st = _stats(gen, islands)
        trace.append(st)
        if telemetry is not None:
            telemetry(st)

    record(0)
    for gen in range(1, params.max_generations + 1):
        for isl in islands:
            _next_generation(isl, params, rng_for(params.seed, _EVOLVE, isl.stream, gen))
        evaluate([m for isl in islands for m in isl.members])
        if gen % params.migration_interval == 0:
            ring_migrate(islands, params.migrants)
        record(gen)

    history = [math.nan if st.best_profit is None else st.best_profit for st in trace]
    return OptimizeResult(best=_best(islands), history=history, telemetry=trace,
                          evaluations=evaluate.count)

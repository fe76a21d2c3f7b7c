"""Evolutionary search over leader mixed strategies against a biased follower.

A chromosome is a small support of reduced pure strategies with
probabilities summing to one. Fitness is the leader's undistorted expected
utility against the follower's distorted best response, so selection pushes
toward commitments that exploit the bias while the score itself stays
honest. Crossover unions two supports with halved probabilities, mutation
rewrites one pure strategy from a random depth downward, and survivor
selection is elitist binary tournament.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import anchoring
from .efg import (
    LEADER,
    Game,
    MixedStrategy,
    PureStrategy,
    mixed_to_realization,
    realization_to_behavior,
    random_reduced_strategy,
)
from .lp import ResourceLimit
from .results import SolveResult
from .rng import substream

FITNESS_TOL = 1e-9


@dataclass(frozen=True)
class Chromosome:
    """Mixed leader strategy with merged support; probabilities sum to 1."""

    entries: tuple[tuple[PureStrategy, float], ...]

    def key(self) -> tuple:
        return tuple((ps.choices, round(p, 12)) for ps, p in self.entries)

    def mixed(self) -> MixedStrategy:
        return MixedStrategy(LEADER, self.entries)


def make_chromosome(pairs) -> Chromosome:
    """Merge duplicate strategies, drop zero mass, canonicalize order."""
    acc: dict[tuple, tuple[PureStrategy, float]] = {}
    for ps, p in pairs:
        if ps.choices in acc:
            acc[ps.choices] = (ps, acc[ps.choices][1] + p)
        else:
            acc[ps.choices] = (ps, p)
    entries = tuple(
        (ps, p) for _, (ps, p) in sorted(acc.items()) if p > 0.0
    )
    total = sum(p for _, p in entries)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"chromosome mass {total} != 1")
    return Chromosome(entries)


@dataclass
class EasgConfig:
    population: int = 30
    crossover_prob: float = 0.8
    mutation_prob: float = 0.5
    pressure: float = 0.9
    elites: int = 2
    max_generations: int = 1000
    stagnation: int = 20
    alpha: float = 0.0
    at_mode: str = "linear"
    seed: int = 0

    def __post_init__(self):
        for name in ("crossover_prob", "mutation_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not 0.5 <= self.pressure <= 1.0:
            raise ValueError(f"pressure must be in [0.5, 1], got {self.pressure}")
        if not 0 <= self.elites < self.population:
            raise ValueError("elite count must be smaller than the population")
        if self.max_generations < 1 or self.stagnation < 1:
            raise ValueError("generation caps must be positive")
        anchoring.check_alpha(self.alpha)
        if self.at_mode not in anchoring.MODES:
            raise ValueError(f"at_mode must be one of {anchoring.MODES}")


def init_population(game: Game, cfg: EasgConfig, rng: np.random.Generator) -> list[Chromosome]:
    return [
        make_chromosome([(random_reduced_strategy(game, LEADER, rng), 1.0)])
        for _ in range(cfg.population)
    ]


def crossover(a: Chromosome, b: Chromosome) -> Chromosome:
    pairs = [(ps, 0.5 * p) for ps, p in a.entries]
    pairs += [(ps, 0.5 * p) for ps, p in b.entries]
    return make_chromosome(pairs)


def _resample_below(
    game: Game, ps: PureStrategy, depth: int, rng: np.random.Generator
) -> PureStrategy:
    # keep choices above the cut, redraw everything at depth >= cut while
    # walking only the branch the (partially new) strategy actually reaches
    t = game.table(LEADER)
    choices: dict[str, int] = {}
    stack = list(t.children_infosets[0])
    while stack:
        iid = stack.pop()
        iset = game.infosets[iid]
        if iset.depth < depth:
            a = ps.action(iid)
        else:
            a = int(rng.integers(len(iset.actions)))
        choices[iid] = a
        stack.extend(t.children_infosets[t.action_seq[(iid, a)]])
    return PureStrategy.from_mapping(LEADER, choices)


def mutate(game: Game, c: Chromosome, rng: np.random.Generator) -> Chromosome:
    """Redraw one strategy from a uniformly chosen (entry, depth) downward."""
    if not c.entries or not game.infosets_of[LEADER]:
        return c
    idx = int(rng.integers(len(c.entries)))
    ps, p = c.entries[idx]
    depths = sorted({game.infosets[iid].depth for iid in ps.as_dict()})
    if not depths:
        return c
    depth = depths[int(rng.integers(len(depths)))]
    fresh = _resample_below(game, ps, depth, rng)
    pairs = list(c.entries)
    pairs[idx] = (fresh, p)
    return make_chromosome(pairs)


def evaluate(game: Game, c: Chromosome, alpha: float, mode: str) -> float:
    """Leader's undistorted utility against the distorted best response."""
    plan = mixed_to_realization(game, c.mixed())
    _, actual = anchoring.distorted_response_values(game, plan, alpha, mode)
    return actual


def select(
    scored: list[tuple[Chromosome, float]],
    cfg: EasgConfig,
    rng: np.random.Generator,
) -> list[tuple[Chromosome, float]]:
    """Elites survive unconditionally; the rest win binary tournaments."""
    ranked = sorted(enumerate(scored), key=lambda t: (-t[1][1], t[0]))
    out = [pair for _, pair in ranked[: cfg.elites]]
    while len(out) < cfg.population:
        i = int(rng.integers(len(scored)))
        j = int(rng.integers(len(scored)))
        better, worse = (i, j) if scored[i][1] >= scored[j][1] else (j, i)
        pick = better if rng.random() < cfg.pressure else worse
        out.append(scored[pick])
    return out


@dataclass
class _EvalCache:
    game: Game
    alpha: float
    mode: str
    hits: int = 0
    misses: int = 0
    table: dict = field(default_factory=dict)

    def fitness(self, c: Chromosome) -> float:
        k = c.key()
        if k in self.table:
            self.hits += 1
            return self.table[k]
        self.misses += 1
        v = evaluate(self.game, c, self.alpha, self.mode)
        self.table[k] = v
        return v


def run(game: Game, cfg: EasgConfig, deadline: float | None = None) -> SolveResult:
    t0 = time.perf_counter()
    if deadline is not None and time.monotonic() >= deadline:
        raise ResourceLimit("deadline exhausted before the first generation")
    rng = substream(cfg.seed, "easg")
    cache = _EvalCache(game, cfg.alpha, cfg.at_mode)

    population = init_population(game, cfg, rng)
    scored = [(c, cache.fitness(c)) for c in population]
    best_c, best_f = max(scored, key=lambda t: t[1])
    generations = 1  # the seeded population counts as the first generation
    stale = 0

    while generations < cfg.max_generations and stale < cfg.stagnation:
        if deadline is not None and time.monotonic() >= deadline:
            raise ResourceLimit("deadline exhausted during evolution")
        pool = [c for c, _ in scored if rng.random() < cfg.crossover_prob]
        order = rng.permutation(len(pool))
        children = [
            crossover(pool[order[k]], pool[order[k + 1]])
            for k in range(0, len(pool) - 1, 2)
        ]
        candidates = [c for c, _ in scored] + children
        candidates = [
            mutate(game, c, rng) if rng.random() < cfg.mutation_prob else c
            for c in candidates
        ]
        evaluated = [(c, cache.fitness(c)) for c in candidates]
        scored = select(evaluated, cfg, rng)
        generations += 1

        gen_c, gen_f = max(scored, key=lambda t: t[1])
        if gen_f > best_f + FITNESS_TOL:
            best_c, best_f = gen_c, gen_f
            stale = 0
        else:
            stale += 1

    plan = mixed_to_realization(game, best_c.mixed())
    response, perceived, actual = anchoring.distorted_best_response(
        game, plan, cfg.alpha, cfg.at_mode
    )
    return SolveResult(
        method="easg",
        alpha=cfg.alpha,
        at_mode=cfg.at_mode,
        leader_plan=plan,
        leader_behavior=realization_to_behavior(game, plan),
        follower_strategy=response,
        leader_utility=actual,
        follower_utility=perceived,
        stats={
            "generations": generations,
            "evaluations": cache.misses,
            "cache_hits": cache.hits,
            "support": len(best_c.entries),
            "wall_time_ms": (time.perf_counter() - t0) * 1e3,
        },
    )

"""Classic binary GA with schema instrumentation.

A schema is a template over {0, 1, *} matching every bit-string that
agrees with it on the fixed (non-*) positions. The lab runs a plain
generational GA (roulette selection, single-point crossover on
consecutive pairs, per-bit mutation, optional elitism) and compares the
observed growth of a schema's instance count against the expected-count
lower bound

    count * (schema_fitness / mean_fitness)
          * (1 - p_c * defining_length / (m - 1))
          * (1 - p_m) ** order
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .core import ConfigurationError, RngStream, ViralSearchError, child_seed, make_rng

WILDCARD = "*"


class NoInstancesError(ViralSearchError):
    """The schema has no instances in the population."""


def _as_pattern(schema: Union[str, tuple, list]) -> str:
    if not isinstance(schema, str):
        schema = "".join(str(s) for s in schema)
    if len(schema) < 1:
        raise ValueError("schema must have at least one position")
    bad = set(schema) - {"0", "1", WILDCARD}
    if bad:
        raise ValueError(f"schema may only contain 0, 1, {WILDCARD}; got {sorted(bad)}")
    return schema


def _fixed_positions(schema: str) -> tuple[np.ndarray, np.ndarray]:
    pattern = _as_pattern(schema)
    idx = np.array([i for i, ch in enumerate(pattern) if ch != WILDCARD], dtype=int)
    vals = np.array([int(pattern[i]) for i in idx], dtype=np.uint8)
    return idx, vals


def defining_length(schema) -> int:
    """Index distance between the first and last fixed position."""
    idx, _ = _fixed_positions(schema)
    if idx.size == 0:
        raise ValueError("defining length is undefined for an all-wildcard schema")
    return int(idx[-1] - idx[0])


def order(schema) -> int:
    """Number of fixed (non-wildcard) positions."""
    idx, _ = _fixed_positions(schema)
    return int(idx.size)


def matches(schema, candidate) -> bool:
    """True when the candidate bit-string agrees with every fixed position."""
    pattern = _as_pattern(schema)
    if isinstance(candidate, str):
        bits = np.array([int(ch) for ch in candidate], dtype=np.uint8)
    else:
        bits = np.asarray(candidate, dtype=np.uint8)
    if bits.size != len(pattern):
        raise ValueError(
            f"candidate has {bits.size} bits, schema has {len(pattern)} positions"
        )
    idx, vals = _fixed_positions(pattern)
    return bool((bits[idx] == vals).all())


@dataclass
class BinaryPopulation:
    """Fixed-length bit-string population with a strictly positive fitness.

    `fitness_fn` is vectorized: it receives the (n, m) member matrix and
    returns n values.
    """

    members: np.ndarray
    fitness_fn: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        members = np.asarray(self.members, dtype=np.uint8)
        if members.ndim != 2:
            raise ValueError("members must be a 2-D bit matrix")
        if not np.isin(members, (0, 1)).all():
            raise ValueError("members must contain only 0/1 bits")
        self.members = members

    @property
    def size(self) -> int:
        return self.members.shape[0]

    @property
    def length(self) -> int:
        return self.members.shape[1]

    def fitness(self) -> np.ndarray:
        return np.asarray(self.fitness_fn(self.members), dtype=float)


@dataclass(frozen=True)
class GAParams:
    p_c: float = 0.7
    p_m: float = 0.01
    elitism: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_c <= 1.0:
            raise ConfigurationError(f"p_c must be in [0, 1], got {self.p_c}")
        if not 0.0 <= self.p_m <= 1.0:
            raise ConfigurationError(f"p_m must be in [0, 1], got {self.p_m}")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")


def onemax_fitness(members: np.ndarray) -> np.ndarray:
    """1 + number of ones: strictly positive, favors all-ones strings."""
    return 1.0 + np.asarray(members, dtype=float).sum(axis=1)


def random_population(
    n: int, length: int, fitness_fn: Callable, rng: RngStream
) -> BinaryPopulation:
    members = rng.integers(0, 2, size=(n, length), dtype=np.uint8)
    return BinaryPopulation(members, fitness_fn)


def match_mask(schema, pop: BinaryPopulation) -> np.ndarray:
    idx, vals = _fixed_positions(schema)
    pattern = _as_pattern(schema)
    if len(pattern) != pop.length:
        raise ValueError(
            f"schema has {len(pattern)} positions, members have {pop.length} bits"
        )
    if idx.size == 0:
        return np.ones(pop.size, dtype=bool)
    return (pop.members[:, idx] == vals).all(axis=1)


def count_matches(schema, pop: BinaryPopulation) -> int:
    return int(match_mask(schema, pop).sum())


def schema_fitness(schema, pop: BinaryPopulation) -> float:
    """Mean fitness of the members matching the schema."""
    mask = match_mask(schema, pop)
    if not mask.any():
        raise NoInstancesError(f"schema {schema!r} has no instances in the population")
    return float(pop.fitness()[mask].mean())


def expected_count_bound(schema, pop: BinaryPopulation, params: GAParams) -> float:
    """Lower bound on the expected next-generation instance count of the
    schema under selection, crossover, and mutation."""
    m = pop.length
    if m < 2:
        raise ValueError("the crossover survival factor needs strings of length >= 2")
    xi = count_matches(schema, pop)
    if xi < 1:
        raise NoInstancesError(f"schema {schema!r} has no instances in the population")
    mean_fitness = float(pop.fitness().mean())
    growth = xi * schema_fitness(schema, pop) / mean_fitness
    crossover_survival = 1.0 - params.p_c * defining_length(schema) / (m - 1)
    mutation_survival = (1.0 - params.p_m) ** order(schema)
    return growth * crossover_survival * mutation_survival


def classic_ga_step(
    pop: BinaryPopulation, params: GAParams, rng: RngStream
) -> BinaryPopulation:
    """One generational cycle: roulette selection, single-point crossover on
    consecutive pairs, independent per-bit mutation, optional elitism."""
    fitness = pop.fitness()
    if (fitness <= 0).any():
        raise ValueError("all fitness values must be strictly positive")
    n, m = pop.members.shape

    selected = rng.choice(n, size=n, p=fitness / fitness.sum())
    children = pop.members[selected].copy()

    if m >= 2:
        for k in range(0, n - 1, 2):
            if rng.random() < params.p_c:
                cut = int(rng.integers(1, m))
                tail = children[k, cut:].copy()
                children[k, cut:] = children[k + 1, cut:]
                children[k + 1, cut:] = tail

    flips = rng.random((n, m)) < params.p_m
    children = np.where(flips, 1 - children, children).astype(np.uint8)

    new_pop = BinaryPopulation(children, pop.fitness_fn)
    if params.elitism:
        best_parent = int(np.argmax(fitness))
        worst_child = int(np.argmin(new_pop.fitness()))
        new_pop.members[worst_child] = pop.members[best_parent]
    return new_pop


@dataclass
class GrowthReport:
    """Aggregated observed-vs-bound statistics from repeated GA runs.

    Arrays are indexed by generation; a generation is "valid" in a trial
    when the schema still has instances there (the bound is undefined
    otherwise and that cell is skipped).
    """

    schema: str
    generations: int
    trials: int
    mean_counts: np.ndarray
    mean_observed_next: np.ndarray
    mean_bounds: np.ndarray
    generation_pass: np.ndarray
    frac_generations_pass: float
    frac_cells_pass: float


def schema_growth_experiment(
    pop0: BinaryPopulation,
    schema,
    params: GAParams,
    generations: int,
    trials: int,
) -> GrowthReport:
    """Evolve `trials` independent populations from `pop0` and compare the
    schema's observed next-generation counts to the expected-count bound."""
    if count_matches(schema, pop0) < 1:
        raise NoInstancesError(
            f"schema {schema!r} must be instantiated in the starting population"
        )
    counts = np.zeros((trials, generations + 1))
    bounds_ = np.full((trials, generations), np.nan)
    for trial in range(trials):
        rng = make_rng(child_seed(params.seed, trial))
        pop = pop0
        counts[trial, 0] = count_matches(schema, pop)
        for g in range(generations):
            if counts[trial, g] >= 1:
                bounds_[trial, g] = expected_count_bound(schema, pop, params)
            pop = classic_ga_step(pop, params, rng)
            counts[trial, g + 1] = count_matches(schema, pop)

    valid = ~np.isnan(bounds_)
    observed_next = counts[:, 1:]
    mean_observed = np.full(generations, np.nan)
    mean_bound = np.full(generations, np.nan)
    gen_pass = np.zeros(generations, dtype=bool)
    for g in range(generations):
        v = valid[:, g]
        if v.any():
            mean_observed[g] = observed_next[v, g].mean()
            mean_bound[g] = bounds_[v, g].mean()
            gen_pass[g] = mean_observed[g] >= mean_bound[g] - 1e-9
    has_any = ~np.isnan(mean_bound)
    frac_generations = float(gen_pass[has_any].mean()) if has_any.any() else 1.0
    frac_cells = (
        float((observed_next[valid] >= bounds_[valid] - 1e-9).mean())
        if valid.any()
        else 1.0
    )
    return GrowthReport(
        schema=_as_pattern(schema),
        generations=generations,
        trials=trials,
        mean_counts=counts.mean(axis=0),
        mean_observed_next=mean_observed,
        mean_bounds=mean_bound,
        generation_pass=gen_pass,
        frac_generations_pass=frac_generations,
        frac_cells_pass=frac_cells,
    )

"""Differential evolution hosting the AOS loop.

One call to :func:`run` is one optimisation run: uniform initialisation, then
per generation every parent picks an operator (mutation strategy), builds a
trial by mutation and binomial crossover, and competes with it.  The offspring
metrics of the generation feed the credit memories, which produce the operator
probabilities used by the next generation.

Mutation, crossover and evaluation are vectorised across the population; the
random stream is consumed in a fixed order so runs are bit-reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import (ALL_STRATEGIES, AosConfig, ConfigError, DEParams, MutationStrategy,
                     RewardType, validate)
from .core import ContractViolation, GenerationMemory, OMRecord, WindowMemory, make_rng, \
    window_insert
from .metrics import compute_om, population_refs
from .policy import AosState, select_operators, update_probability, update_quality
from .reward import compute_rewards, counts_in_scope

DEFAULT_TARGET = 1e-8

# Distinct random indices (all != i) each strategy draws from the population.
N_RANDOM = {
    MutationStrategy.RAND_1: 3,
    MutationStrategy.RAND_2: 5,
    MutationStrategy.RAND_TO_BEST_2: 5,
    MutationStrategy.CURR_TO_RAND_1: 3,
    MutationStrategy.CURR_TO_PBEST_1: 2,
    MutationStrategy.CURR_TO_PBEST_1_ARCHIVED: 1,
    MutationStrategy.BEST_1: 2,
    MutationStrategy.BEST_2: 4,
    MutationStrategy.CURR_TO_BEST_1: 2,
}
MAX_RANDOM = max(N_RANDOM.values())


def min_population(strategies) -> int:
    """Smallest NP for which every strategy finds its distinct indices."""
    need = 0
    for s in strategies:
        n = N_RANDOM[s]
        if s is MutationStrategy.CURR_TO_PBEST_1_ARCHIVED:
            n += 1  # the archive draw must differ from i and r1 when taken from P
        need = max(need, n)
    return need + 1


class RunError(RuntimeError):
    """A run had to be aborted (e.g. the objective returned a non-finite value)."""


@dataclass
class Population:
    positions: np.ndarray
    fitness: np.ndarray

    @property
    def size(self) -> int:
        return len(self.fitness)

    def best_index(self) -> int:
        return int(np.argmin(self.fitness))


@dataclass
class Archive:
    capacity: int
    entries: list = field(default_factory=list)

    def add(self, position: np.ndarray, rng: np.random.Generator) -> None:
        if self.capacity <= 0:
            return
        if len(self.entries) >= self.capacity:
            self.entries[int(rng.integers(len(self.entries)))] = np.array(position)
        else:
            self.entries.append(np.array(position))

    def as_array(self, dim: int) -> np.ndarray:
        if not self.entries:
            return np.empty((0, dim))
        return np.asarray(self.entries, dtype=float)


# --- variation ----------------------------------------------------------------

def draw_random_indices(rng: np.random.Generator, np_: int, rows: np.ndarray,
                        count: int) -> np.ndarray:
    """For each target index in ``rows``, ``count`` mutually exclusive indices != row."""
    if count > np_ - 1:
        raise ContractViolation(f"need {count} distinct indices but NP={np_}")
    keys = rng.random((len(rows), np_))
    keys[np.arange(len(rows)), rows] = 2.0
    return np.argsort(keys, axis=1, kind="stable")[:, :count]


def mutate_batch(strategy: MutationStrategy, pop: Population, rows: np.ndarray,
                 params: DEParams, archive: Archive | None, rng: np.random.Generator,
                 r: np.ndarray | None = None) -> np.ndarray:
    """Donor vectors for the parents ``rows``.

    ``r`` optionally supplies the random indices (shape ``(len(rows), >= needed)``);
    otherwise they are drawn here."""
    rows = np.asarray(rows, dtype=np.int64)
    x = pop.positions
    np_ = pop.size
    need = N_RANDOM[strategy]
    if r is None:
        r = draw_random_indices(rng, np_, rows, need)
    f = params.f_scale
    xi = x[rows]
    best = x[pop.best_index()]
    s = MutationStrategy
    if strategy is s.RAND_1:
        return x[r[:, 0]] + f * (x[r[:, 1]] - x[r[:, 2]])
    if strategy is s.RAND_2:
        return x[r[:, 0]] + f * (x[r[:, 1]] - x[r[:, 2]] + x[r[:, 3]] - x[r[:, 4]])
    if strategy is s.RAND_TO_BEST_2:
        return x[r[:, 0]] + f * (best - x[r[:, 0]] + x[r[:, 1]] - x[r[:, 2]]
                                 + x[r[:, 3]] - x[r[:, 4]])
    if strategy is s.CURR_TO_RAND_1:
        return xi + f * (x[r[:, 0]] - xi + x[r[:, 1]] - x[r[:, 2]])
    if strategy is s.BEST_1:
        return best + f * (x[r[:, 0]] - x[r[:, 1]])
    if strategy is s.BEST_2:
        return best + f * (x[r[:, 0]] - x[r[:, 1]] + x[r[:, 2]] - x[r[:, 3]])
    if strategy is s.CURR_TO_BEST_1:
        return xi + f * (best - xi + x[r[:, 0]] - x[r[:, 1]])
    # pbest variants
    top = max(1, math.ceil(params.top_np * np_))
    ranked = np.argsort(pop.fitness, kind="stable")[:top]
    pbest = x[ranked[rng.integers(top, size=len(rows))]]
    if strategy is s.CURR_TO_PBEST_1:
        return xi + f * (pbest - xi + x[r[:, 0]] - x[r[:, 1]])
    if strategy is s.CURR_TO_PBEST_1_ARCHIVED:
        stored = archive.as_array(x.shape[1]) if archive is not None else np.empty((0, x.shape[1]))
        pool = np.vstack([x, stored])
        pick = rng.integers(len(pool), size=len(rows))
        # Redraw picks that hit the parent or r1 (both live in the first NP slots).
        clash = (pick == rows) | (pick == r[:, 0])
        while clash.any():
            pick[clash] = rng.integers(len(pool), size=int(clash.sum()))
            clash = (pick == rows) | (pick == r[:, 0])
        return xi + f * (pbest - xi + x[r[:, 0]] - pool[pick])
    raise ValueError(f"unknown strategy {strategy!r}")


def mutate(strategy: MutationStrategy, pop: Population, i: int, params: DEParams,
           archive: Archive | None, rng: np.random.Generator) -> np.ndarray:
    return mutate_batch(strategy, pop, np.array([i]), params, archive, rng)[0]


def crossover_batch(parents: np.ndarray, donors: np.ndarray, cr: float,
                    rng: np.random.Generator) -> np.ndarray:
    n, dim = parents.shape
    take = rng.random((n, dim)) < cr
    take[np.arange(n), rng.integers(dim, size=n)] = True
    return np.where(take, donors, parents)


def crossover(parent: np.ndarray, donor: np.ndarray, cr: float,
              rng: np.random.Generator) -> np.ndarray:
    parent = np.asarray(parent, dtype=float)
    donor = np.asarray(donor, dtype=float)
    if parent.shape != donor.shape:
        raise ContractViolation("parent and donor lengths differ")
    return crossover_batch(parent[None, :], donor[None, :], cr, rng)[0]


def reflect_into_box(x: np.ndarray, lower, upper) -> np.ndarray:
    """Mirror out-of-box components at the violated bound; clip what is still out."""
    x = np.where(x < lower, 2.0 * lower - x, x)
    x = np.where(x > upper, 2.0 * upper - x, x)
    return np.clip(x, lower, upper)


def survival_select(parent, offspring):
    """Offspring replaces the parent on ties (``<=``)."""
    return offspring if offspring.fitness <= parent.fitness else parent


# --- run ------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceRow:
    generation: int
    evals: int
    best_f: float
    applications: tuple[int, ...]
    probabilities: tuple[float, ...]
    rewards: tuple[float, ...]
    quality: tuple[float, ...]


@dataclass
class RunTrace:
    rows: list[TraceRow] = field(default_factory=list)
    # (evaluations, precision) after initialisation and after every generation.
    history: list[tuple[int, float]] = field(default_factory=list)


@dataclass
class RunResult:
    best_fitness: float
    best_position: np.ndarray
    evaluations_used: int
    trace: RunTrace
    f_opt: float | None = None

    @property
    def precision(self) -> float | None:
        return None if self.f_opt is None else self.best_fitness - self.f_opt


def _evaluate(problem, x: np.ndarray) -> np.ndarray:
    values = np.asarray(problem.evaluate(x), dtype=float).reshape(len(x))
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise RunError(f"objective returned {values[bad]!r} at {x[bad].tolist()}")
    return values


def _choose_operators(state: AosState, aos: AosConfig, fraction: float,
                      rng: np.random.Generator, np_: int) -> np.ndarray:
    k = aos.n_ops
    ops = np.empty(np_, dtype=np.int64)
    unapplied = [op for op in range(k) if state.total_applications[op] == 0]
    i = 0
    # Parents take never-applied operators first, one uniform pick at a time.
    while unapplied and i < np_:
        ops[i] = unapplied.pop(int(rng.integers(len(unapplied))))
        i += 1
    if i < np_:
        ops[i:] = select_operators(aos.selection, state.probability, fraction, rng, np_ - i)
    return ops


def run(problem, de: DEParams, aos: AosConfig, budget_evals: int, seed: int,
        target: float | None = DEFAULT_TARGET) -> RunResult:
    """Optimise ``problem`` until ``budget_evals`` is spent or precision <= ``target``.

    ``problem`` needs ``dim``, ``lower``, ``upper``, ``evaluate(X)`` (batched)
    and optionally ``f_opt``; ``target=None`` disables the precision stop.
    Only whole generations are run, so at most ``budget_evals`` evaluations are used.
    """
    validate(aos, de)
    np_ = de.np
    need = min_population(aos.enabled_strategies)
    if np_ < need:
        raise ConfigError(f"de.np={np_} too small for the enabled strategies (need >= {need})")
    if budget_evals < np_:
        raise ContractViolation(f"budget {budget_evals} < population size {np_}")
    rng = make_rng(seed)
    dim = problem.dim
    lower = np.broadcast_to(np.asarray(problem.lower, dtype=float), (dim,))
    upper = np.broadcast_to(np.asarray(problem.upper, dtype=float), (dim,))
    f_opt = getattr(problem, "f_opt", None)
    k = aos.n_ops
    om_choice = aos.om_choice.index
    params = aos.reward.params
    tag = aos.reward.tag
    uses_window = tag in (RewardType.AUC, RewardType.SUM_OF_RANK,
                          RewardType.NORM_SUCCESS_SUM_WINDOW)
    mem = GenerationMemory(k, om_choice, recent_capacity=max(50, params.fix_appl))
    win = WindowMemory(params.window_w, om_choice) if uses_window else None
    state = AosState.initial(k)
    strategies = aos.enabled_strategies
    archived = MutationStrategy.CURR_TO_PBEST_1_ARCHIVED in strategies
    archive = Archive(np_) if archived else None

    x = lower + rng.random((np_, dim)) * (upper - lower)
    pop = Population(x, _evaluate(problem, x))
    evals = np_
    best = pop.best_index()
    best_f, best_x = float(pop.fitness[best]), pop.positions[best].copy()
    trace = RunTrace()

    def precision() -> float | None:
        return None if f_opt is None else best_f - f_opt

    def reached() -> bool:
        return target is not None and f_opt is not None and precision() <= target

    if f_opt is not None:
        trace.history.append((evals, precision()))
    generation = 0
    while evals + np_ <= budget_evals and not reached():
        ops = _choose_operators(state, aos, evals / budget_evals, rng, np_)
        r = draw_random_indices(rng, np_, np.arange(np_), MAX_RANDOM)
        donors = np.empty_like(pop.positions)
        for op in range(k):
            rows = np.flatnonzero(ops == op)
            if rows.size:
                donors[rows] = mutate_batch(strategies[op], pop, rows, de, archive, rng,
                                            r=r[rows])
        trials = crossover_batch(pop.positions, donors, de.cr, rng)
        trials = reflect_into_box(trials, lower, upper)
        trial_f = _evaluate(problem, trials)
        evals += np_

        refs = population_refs(pop.fitness, best_f)
        metrics = compute_om(pop.fitness, trial_f, refs)
        stats = mem.commit_arrays(ops, metrics)
        if win is not None:
            for i in np.flatnonzero(metrics[:, 1] > 0.0):
                window_insert(win, OMRecord(int(ops[i]), generation,
                                            tuple(metrics[i].tolist())))

        wins = trial_f <= pop.fitness
        if archive is not None:
            for i in np.flatnonzero(wins):
                archive.add(pop.positions[i], rng)
        pop.positions[wins] = trials[wins]
        pop.fitness[wins] = trial_f[wins]
        best = pop.best_index()
        if pop.fitness[best] < best_f:
            best_f, best_x = float(pop.fitness[best]), pop.positions[best].copy()

        state.total_applications += stats.n_apps
        state.prev_reward = state.reward
        state.reward = compute_rewards(aos.reward, mem, win, np_)
        counts = counts_in_scope(tag, params, mem, win)
        state.quality = update_quality(aos.quality, state, counts)
        state.probability = update_probability(aos.probability, state.quality,
                                               state.probability)
        trace.rows.append(TraceRow(
            generation=generation, evals=evals, best_f=best_f,
            applications=tuple(int(v) for v in stats.n_apps),
            probabilities=tuple(float(v) for v in state.probability),
            rewards=tuple(float(v) for v in state.reward),
            quality=tuple(float(v) for v in state.quality)))
        if f_opt is not None:
            trace.history.append((evals, precision()))
        generation += 1

    return RunResult(best_fitness=best_f, best_position=best_x, evaluations_used=evals,
                     trace=trace, f_opt=f_opt)

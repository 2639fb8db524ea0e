"""Credit memories shared by every AOS component.

Two stores feed credit assignment:

* ``GenerationMemory`` keeps one ``GenerationStats`` per completed generation
  (success/failure counters plus the raw offspring metrics), and a per-operator
  FIFO of the most recent chosen-metric values.
* ``WindowMemory`` keeps a bounded list of *improving* applications, newest
  first, evicting by operator-FIFO or, failing that, by worst metric value.

All randomness in the package goes through a single ``numpy.random.Generator``
built by :func:`make_rng` (PCG64 bit generator).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

N_METRICS = 6
# Index of "fitness improvement w.r.t. parent": drives the success/failure split.
PARENT_IMPROVEMENT = 1


class ContractViolation(ValueError):
    """Raised when a documented precondition is not met."""


def make_rng(seed: int) -> np.random.Generator:
    """The one random stream of a run: PCG64 seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Solution:
    position: np.ndarray
    fitness: float


@dataclass(frozen=True)
class OMRecord:
    """Offspring metrics of one operator application."""

    op: int
    generation: int
    metrics: tuple[float, ...]

    @property
    def improved(self) -> bool:
        return self.metrics[PARENT_IMPROVEMENT] > 0.0


class GenerationStats:
    """Counters and metrics of one generation, stored column-wise.

    ``ops[i]`` is the operator applied to parent ``i`` and ``metrics[i]`` its six
    offspring-metric values.  Per-operator sum and best of the chosen metric over
    *successful* applications are precomputed; the generation-based rewards
    read nothing else.
    """

    __slots__ = ("generation", "ops", "metrics", "n_succ", "n_fail",
                 "metric_sum", "metric_best")

    def __init__(self, generation: int, ops: np.ndarray, metrics: np.ndarray,
                 n_ops: int, om_choice: int):
        self.generation = generation
        self.ops = np.asarray(ops, dtype=np.int64)
        self.metrics = np.asarray(metrics, dtype=float).reshape(-1, N_METRICS)
        succ = self.metrics[:, PARENT_IMPROVEMENT] > 0.0
        self.n_succ = np.bincount(self.ops[succ], minlength=n_ops)
        self.n_fail = np.bincount(self.ops[~succ], minlength=n_ops)
        chosen = self.metrics[:, om_choice]
        self.metric_sum = np.bincount(self.ops[succ], weights=chosen[succ],
                                      minlength=n_ops)
        # Best chosen-metric value among successful applications; NaN if none.
        best = np.full(n_ops, -np.inf)
        np.maximum.at(best, self.ops[succ], chosen[succ])
        best[np.isneginf(best)] = np.nan
        self.metric_best = best
        for arr in (self.ops, self.metrics, self.n_succ, self.n_fail,
                    self.metric_sum, self.metric_best):
            arr.setflags(write=False)

    @property
    def n_apps(self) -> np.ndarray:
        return self.n_succ + self.n_fail

    @property
    def records(self) -> list[OMRecord]:
        return [OMRecord(int(op), self.generation, tuple(float(v) for v in m))
                for op, m in zip(self.ops, self.metrics)]


@dataclass
class GenerationMemory:
    n_ops: int
    om_choice: int = PARENT_IMPROVEMENT
    recent_capacity: int = 50
    history: list[GenerationStats] = field(default_factory=list)
    per_op_recent: list[deque] = field(default_factory=list)

    def __post_init__(self):
        if not self.per_op_recent:
            self.per_op_recent = [deque(maxlen=self.recent_capacity)
                                  for _ in range(self.n_ops)]

    def __len__(self) -> int:
        return len(self.history)

    def recent(self, max_gen: int) -> list[GenerationStats]:
        return self.history[-max_gen:] if max_gen > 0 else []

    def commit_arrays(self, ops: np.ndarray, metrics: np.ndarray) -> GenerationStats:
        stats = GenerationStats(len(self.history), ops, metrics, self.n_ops,
                                self.om_choice)
        self.history.append(stats)
        chosen = stats.metrics[:, self.om_choice]
        for op, value in zip(stats.ops.tolist(), chosen.tolist()):
            self.per_op_recent[op].append(value)
        return stats


def commit_generation(mem: GenerationMemory,
                      records: Sequence[OMRecord]) -> GenerationMemory:
    """Append one generation's records; returns ``mem`` for chaining."""
    expected = len(mem.history)
    for rec in records:
        if rec.generation != expected:
            raise ContractViolation(
                f"record generation {rec.generation} != next generation {expected}")
    ops = np.array([r.op for r in records], dtype=np.int64)
    metrics = np.array([r.metrics for r in records], dtype=float).reshape(-1, N_METRICS)
    mem.commit_arrays(ops, metrics)
    return mem


def applications_in_horizon(mem: GenerationMemory, op: int, max_gen: int
                            ) -> tuple[int, int, list[float]]:
    """Successes, failures and chosen-metric values of ``op`` over the last
    ``max_gen`` completed generations."""
    if max_gen < 1:
        raise ContractViolation("max_gen must be >= 1")
    succ = fail = 0
    values: list[float] = []
    for stats in mem.recent(max_gen):
        succ += int(stats.n_succ[op])
        fail += int(stats.n_fail[op])
        values.extend(stats.metrics[stats.ops == op, mem.om_choice].tolist())
    return succ, fail, values


@dataclass
class WindowMemory:
    """Sliding window of improving applications, ``entries[0]`` is the newest."""

    capacity: int
    om_choice: int = PARENT_IMPROVEMENT
    entries: list[OMRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def values(self) -> np.ndarray:
        return np.array([e.metrics[self.om_choice] for e in self.entries], dtype=float)

    def ops(self) -> np.ndarray:
        return np.array([e.op for e in self.entries], dtype=np.int64)

    def counts(self, n_ops: int) -> np.ndarray:
        return np.bincount(self.ops(), minlength=n_ops) if self.entries \
            else np.zeros(n_ops, dtype=np.int64)


def window_insert(win: WindowMemory, rec: OMRecord) -> WindowMemory:
    """Insert an improving record.  Non-improving records leave ``win`` unchanged."""
    if not rec.improved:
        return win
    entries = win.entries
    if len(entries) >= win.capacity:
        victim = None
        for idx in range(len(entries) - 1, -1, -1):
            if entries[idx].op == rec.op:
                victim = idx
                break
        if victim is None:
            # Worst value of the chosen metric; scanning oldest-first keeps the
            # oldest on ties.
            worst = np.inf
            for idx in range(len(entries) - 1, -1, -1):
                value = entries[idx].metrics[win.om_choice]
                if value < worst:
                    worst, victim = value, idx
        del entries[victim]
    entries.insert(0, rec)
    return win


def window_insert_many(win: WindowMemory, records: Iterable[OMRecord]) -> WindowMemory:
    for rec in records:
        window_insert(win, rec)
    return win

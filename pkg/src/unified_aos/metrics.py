"""Offspring metrics: how much an offspring achieved relative to a reference.

All six are oriented for maximisation of a minimised objective.  Order:

0. negated offspring fitness
1. improvement over the parent
2. improvement over the best parent of the generation
3. improvement over the best fitness seen so far
4. improvement over the median parent
5. parent improvement scaled by ``f_bsf / f(offspring)``
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ContractViolation

METRIC_NAMES = (
    "offspring_fitness",
    "improvement_parent",
    "improvement_best_parent",
    "improvement_best_so_far",
    "improvement_median",
    "relative_improvement",
)

EPS_DIV = 1e-12


@dataclass(frozen=True)
class PopulationRefs:
    f_best: float
    f_bsf: float
    f_median: float


def population_refs(parent_fitnesses: Sequence[float], bsf_so_far: float) -> PopulationRefs:
    f = np.asarray(parent_fitnesses, dtype=float)
    if f.size == 0:
        raise ContractViolation("population_refs needs at least one parent fitness")
    f_best = float(f.min())
    return PopulationRefs(f_best=f_best, f_bsf=min(float(bsf_so_far), f_best),
                          f_median=float(np.median(f)))


def compute_om(parent_f, offspring_f, refs: PopulationRefs) -> np.ndarray:
    """Six metric values; accepts scalars or equal-length arrays.

    Returns shape ``(6,)`` for scalar input and ``(n, 6)`` otherwise.
    """
    parent_f = np.asarray(parent_f, dtype=float)
    offspring_f = np.asarray(offspring_f, dtype=float)
    gain = np.maximum(0.0, parent_f - offspring_f)
    # The ratio only makes sense for same-signed, non-vanishing fitness values;
    # elsewhere it falls back to 1 and the metric equals the parent improvement.
    safe = (offspring_f > EPS_DIV) & (refs.f_bsf >= 0.0)
    denom = np.where(safe, offspring_f, 1.0)
    ratio = np.where(safe, refs.f_bsf / denom, 1.0)
    out = np.stack([
        -offspring_f,
        gain,
        np.maximum(0.0, refs.f_best - offspring_f),
        np.maximum(0.0, refs.f_bsf - offspring_f),
        np.maximum(0.0, refs.f_median - offspring_f),
        ratio * gain,
    ], axis=-1)
    return out

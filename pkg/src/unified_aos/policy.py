"""Decision layer: reward -> quality -> probability -> selected operator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import (ProbabilityChoice, ProbabilityType, QualityChoice, QualityType,
                     SelectionChoice, SelectionType)
from .core import ContractViolation

# Offset that keeps shifted Bellman qualities strictly positive.
BELLMAN_SHIFT = 1e-6


@dataclass
class AosState:
    reward: np.ndarray
    prev_reward: np.ndarray
    quality: np.ndarray
    probability: np.ndarray
    total_applications: np.ndarray

    @classmethod
    def initial(cls, n_ops: int) -> "AosState":
        zeros = np.zeros(n_ops)
        return cls(reward=zeros.copy(), prev_reward=zeros.copy(), quality=zeros.copy(),
                   probability=np.full(n_ops, 1.0 / n_ops),
                   total_applications=np.zeros(n_ops, dtype=np.int64))

    @property
    def n_ops(self) -> int:
        return len(self.probability)


def bellman_solve(target: np.ndarray, prob: np.ndarray, gamma: float) -> np.ndarray:
    """Solve ``(I - gamma * P) q = target`` where every row of ``P`` is ``prob``."""
    k = len(target)
    lhs = np.eye(k) - gamma * np.tile(prob, (k, 1))
    return np.linalg.solve(lhs, target)


def update_quality(choice: QualityChoice, state: AosState,
                   counts_in_scope: np.ndarray) -> np.ndarray:
    r = np.asarray(state.reward, dtype=float)
    q_prev = np.asarray(state.quality, dtype=float)
    tag = choice.tag
    if tag is QualityType.WEIGHTED_SUM:
        return choice.delta * r + (1.0 - choice.delta) * q_prev
    if tag is QualityType.IDENTITY:
        return r.copy()
    if tag is QualityType.UCB:
        n = np.asarray(counts_in_scope, dtype=float)
        total = n.sum()
        bonus = np.full(len(r), np.inf)
        played = n > 0
        # log(1) = 0 when only one application exists: no bonus yet.
        bonus[played] = choice.c_ucb * np.sqrt(np.log(total) / n[played])
        return r + bonus
    if tag is QualityType.WEIGHTED_NORMALISED_SUM:
        total = r.sum()
        norm = np.maximum(choice.q_min, r / total) if total != 0.0 \
            else np.full(len(r), choice.q_min)
        return choice.delta * norm + (1.0 - choice.delta) * q_prev
    if tag is QualityType.BELLMAN:
        target = choice.c1 * r + choice.c2 * np.asarray(state.prev_reward, dtype=float)
        q = bellman_solve(target, np.asarray(state.probability, dtype=float),
                          choice.gamma_b)
        if q.min() < 0.0:
            q = q - q.min() + BELLMAN_SHIFT
        return q
    raise ValueError(f"unknown quality choice {tag!r}")


def _normalise(p: np.ndarray) -> np.ndarray:
    total = p.sum()
    if not np.isfinite(total) or total <= 0.0:
        return np.full(len(p), 1.0 / len(p))
    return p / total


def update_probability(choice: ProbabilityChoice, quality: np.ndarray,
                       prev_prob: np.ndarray) -> np.ndarray:
    q = np.asarray(quality, dtype=float)
    k = len(q)
    if np.isposinf(q).any():
        # Unplayed operators (UCB sentinel) share all the mass.
        q = np.where(np.isposinf(q), 1.0, 0.0)
    tag = choice.tag
    if tag is ProbabilityType.NORMALISED_QUALITY:
        q = np.maximum(q, 0.0)
        denom = q.sum() + choice.eps_p
        if denom <= 0.0:
            return np.full(k, 1.0 / k)
        raw = choice.p_min + (1.0 - k * choice.p_min) * (q + choice.eps_p) / denom
    elif tag is ProbabilityType.BIASED_RULE:
        prev = np.asarray(prev_prob, dtype=float)
        raw = choice.mu * choice.p_min + (1.0 - choice.mu) * prev
        best = int(np.argmax(q))
        raw[best] = choice.mu * choice.p_max + (1.0 - choice.mu) * prev[best]
    elif tag is ProbabilityType.IDENTITY:
        raw = np.maximum(q, 0.0)
    else:
        raise ValueError(f"unknown probability choice {tag!r}")
    return _normalise(raw)


def _effective_eps(choice: SelectionChoice, fraction: float) -> float:
    if choice.tag is SelectionType.LINEAR_ANNEALED:
        return 1.0 - min(max(fraction, 0.0), 1.0)
    return choice.eps


def select_operator(choice: SelectionChoice, prob: np.ndarray, budget_consumed_fraction: float,
                    rng: np.random.Generator) -> int:
    """One operator index; see :func:`select_operators` for the batched form."""
    return int(select_operators(choice, prob, budget_consumed_fraction, rng, 1)[0])


def select_operators(choice: SelectionChoice, prob: np.ndarray, budget_consumed_fraction: float,
                     rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent draws.  A draw of size 1 consumes the stream exactly
    as :func:`select_operator` does."""
    prob = np.asarray(prob, dtype=float)
    if prob.ndim != 1 or len(prob) == 0:
        raise ContractViolation("prob must be a non-empty vector")
    k = len(prob)
    greedy = int(np.argmax(prob))
    tag = choice.tag

    def proportional(n):
        cdf = np.cumsum(prob)
        u = rng.random(n) * cdf[-1]
        return np.minimum(np.searchsorted(cdf, u, side="right"), k - 1)

    if tag is SelectionType.PROPORTIONAL:
        return proportional(size)
    if tag is SelectionType.GREEDY:
        return np.full(size, greedy, dtype=np.int64)
    eps = _effective_eps(choice, budget_consumed_fraction)
    explore = rng.random(size) < eps
    out = np.full(size, greedy, dtype=np.int64)
    n_explore = int(explore.sum())
    if n_explore:
        if tag is SelectionType.PROPORTIONAL_GREEDY:
            out[explore] = proportional(n_explore)
        else:
            out[explore] = rng.integers(k, size=n_explore)
    return out

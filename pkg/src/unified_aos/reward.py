"""Reward choices: turn the credit memories into one reward per operator.

Five families are implemented:

* diversity/quality coordinates (Pareto dominance, Pareto rank, compass projection)
* rank-based window rewards (area under the curve, sum of ranks)
* success counting (success rate, immediate success)
* fitness sums (success sum, normalised window sum, normalised generation sum)
* best offspring (best-of-two-generations, normalised best sum)

Every function is total: zero denominators yield a zero reward instead of an
exception, so any state reachable in a run produces a finite vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import RewardChoice, RewardParams, RewardType
from .core import ContractViolation, GenerationMemory, WindowMemory


@dataclass(frozen=True)
class OperatorCoordinate:
    diversity: float
    quality: float


def operator_coordinate(mem: GenerationMemory, op: int, fix_appl: int) -> OperatorCoordinate:
    """Population std and mean of the last ``fix_appl`` metric values of ``op``."""
    if fix_appl < 1:
        raise ContractViolation("fix_appl must be >= 1")
    recent = mem.per_op_recent[op]
    if not recent:
        return OperatorCoordinate(0.0, 0.0)
    values = np.fromiter(recent, dtype=float)[-fix_appl:]
    return OperatorCoordinate(float(values.std()), float(values.mean()))


def _dominates(a: OperatorCoordinate, b: OperatorCoordinate) -> bool:
    return (a.diversity >= b.diversity and a.quality >= b.quality
            and (a.diversity > b.diversity or a.quality > b.quality))


def diversity_quality_reward(choice: RewardType, coords: Sequence[OperatorCoordinate],
                             theta: float) -> np.ndarray:
    k = len(coords)
    if choice is RewardType.COMPASS_PROJECTION:
        angle = math.radians(theta)
        proj = np.empty(k)
        for j, c in enumerate(coords):
            norm = math.hypot(c.diversity, c.quality)
            # atan2 gives the div -> 0 limit of atan(qual / div).
            alpha = math.atan2(c.quality, c.diversity) - angle
            proj[j] = norm * math.cos(alpha)
        return proj - proj.min()
    counts = np.zeros(k)
    for a in range(k):
        for b in range(k):
            if a == b:
                continue
            if choice is RewardType.PARETO_DOMINANCE and _dominates(coords[a], coords[b]):
                counts[a] += 1
            elif choice is RewardType.PARETO_RANK and _dominates(coords[b], coords[a]):
                counts[a] += 1
    if choice not in (RewardType.PARETO_DOMINANCE, RewardType.PARETO_RANK):
        raise ValueError(f"{choice} is not a diversity/quality reward")
    total = counts.sum()
    return counts / total if total > 0 else np.zeros(k)


# --- rank based ---------------------------------------------------------------

def _tie_groups(values: np.ndarray) -> list[np.ndarray]:
    """Entry indices grouped by equal value, best (largest) group first.

    Within the window the newest entry sits at index 0; the stable sort keeps
    that order inside a group."""
    order = np.argsort(-values, kind="stable")
    groups, start = [], 0
    for pos in range(1, len(order) + 1):
        if pos == len(order) or values[order[pos]] != values[order[start]]:
            groups.append(order[start:pos])
            start = pos
    return groups


def _rank_weights(values: np.ndarray, capacity: int, decay: float) -> tuple[list, np.ndarray]:
    """Decayed rank weights ``D**r * (W - r)``; tied entries share the mean
    weight of the ranks they occupy."""
    groups = _tie_groups(values)
    weights = np.empty(len(values))
    rank = 1
    for group in groups:
        ranks = np.arange(rank, rank + len(group), dtype=float)
        weights[group] = np.mean(decay ** ranks * (capacity - ranks))
        rank += len(group)
    return groups, weights


def rank_rewards(choice: RewardType, win: WindowMemory, decay_d: float,
                 n_ops: int) -> np.ndarray:
    if not win.entries:
        return np.zeros(n_ops)
    values = win.values()
    ops = win.ops()
    groups, weights = _rank_weights(values, win.capacity, decay_d)
    if choice is RewardType.SUM_OF_RANK:
        total = weights.sum()
        if total <= 0.0:
            return np.zeros(n_ops)
        return np.bincount(ops, weights=weights, minlength=n_ops) / total
    if choice is not RewardType.AUC:
        raise ValueError(f"{choice} is not a rank reward")
    out = np.zeros(n_ops)
    for op in np.unique(ops):
        height = width = area = 0.0
        for group in groups:
            own = ops[group] == op
            w = weights[group[0]]
            up = w * own.sum()
            right = w * (len(group) - own.sum())
            # Diagonal segment for mixed ties: trapezoid under it.
            area += right * (height + up / 2.0)
            height += up
            width += right
        if height <= 0.0:
            out[op] = 0.0
        elif width <= 0.0:
            out[op] = 1.0
        else:
            out[op] = area / (height * width)
    return out


def rank_reward(choice: RewardType, win: WindowMemory, op: int, decay_d: float) -> float:
    n_ops = max(int(win.ops().max()) + 1 if win.entries else 0, op + 1)
    return float(rank_rewards(choice, win, decay_d, n_ops)[op])


# --- success counting -----------------------------------------------------------

def success_reward(choice: RewardType, mem: GenerationMemory, op: int,
                   params: RewardParams, np_: int) -> float:
    if np_ < 1:
        raise ContractViolation("population size must be >= 1")
    if not mem.history:
        return 0.0
    if choice is RewardType.IMMEDIATE_SUCCESS:
        return float(mem.history[-1].n_succ[op]) / np_
    if choice is not RewardType.SUCCESS_RATE:
        raise ValueError(f"{choice} is not a success reward")
    total = 0.0
    for stats in mem.recent(params.max_gen):
        apps = stats.n_succ[op] + stats.n_fail[op]
        if apps == 0:
            continue
        total += (float(stats.n_succ[op]) ** params.gamma_sr
                  + params.frac * float(stats.n_succ.sum())) / apps
    return total + params.eps_noise


# --- fitness sums ---------------------------------------------------------------

def _window_means(win: WindowMemory, n_ops: int) -> tuple[np.ndarray, np.ndarray]:
    counts = win.counts(n_ops)
    if not win.entries:
        return np.zeros(n_ops), counts
    sums = np.bincount(win.ops(), weights=win.values(), minlength=n_ops)
    means = np.divide(sums, counts, out=np.zeros(n_ops), where=counts > 0)
    return means, counts


def fitness_sum_reward(choice: RewardType, mem: GenerationMemory, win: WindowMemory | None,
                       op: int, params: RewardParams) -> float:
    if choice is RewardType.NORM_SUCCESS_SUM_WINDOW:
        if win is None or not win.entries:
            return 0.0
        means, counts = _window_means(win, max(mem.n_ops, op + 1))
        if counts[op] == 0:
            return 0.0
        if params.omega == 0:
            return float(means[op])
        best = means[counts > 0].max()
        return float(means[op] / best) if best != 0.0 else 0.0
    recent = mem.recent(params.max_gen)
    if choice is RewardType.SUCCESS_SUM:
        num = sum(float(s.metric_sum[op]) for s in recent)
        den = sum(int(s.n_apps[op]) for s in recent)
        return num / den if den > 0 else 0.0
    if choice is RewardType.NORM_SUCCESS_SUM_GEN:
        total = 0.0
        for s in recent:
            apps = int(s.n_apps[op])
            if apps > 0:
                total += float(s.metric_sum[op]) / apps
        return total
    raise ValueError(f"{choice} is not a fitness-sum reward")


# --- best offspring ---------------------------------------------------------------

def _best(stats, op: int) -> float:
    value = stats.metric_best[op]
    return 0.0 if math.isnan(value) else float(value)


def best_offspring_reward(choice: RewardType, mem: GenerationMemory, op: int,
                          params: RewardParams) -> float:
    if not mem.history:
        return 0.0
    if choice is RewardType.BEST_2_GEN:
        cur = mem.history[-1]
        prev = mem.history[-2] if len(mem.history) > 1 else None
        b_now = _best(cur, op)
        b_prev = _best(prev, op) if prev is not None else 0.0
        a_now = int(cur.n_apps[op])
        a_prev = int(prev.n_apps[op]) if prev is not None else 0
        f_best = b_prev ** params.alpha if b_prev != 0.0 else 1.0
        d_apps = abs(a_now - a_prev)
        f_apps = float(d_apps) ** params.beta if d_apps != 0 else 1.0
        return params.c_scale * (b_now - b_prev) / (f_best * f_apps)
    if choice is RewardType.NORM_BEST_SUM:
        return _norm_best_sums(mem, params)[op]
    raise ValueError(f"{choice} is not a best-offspring reward")


def _norm_best_sums(mem: GenerationMemory, params: RewardParams) -> np.ndarray:
    recent = mem.recent(params.max_gen)
    bests = np.array([np.nan_to_num(s.metric_best, nan=0.0) for s in recent])
    numer = (bests ** params.rho).sum(axis=0) / params.max_gen
    if params.alpha == 0:
        return numer
    denom = bests.sum(axis=0).max()
    if denom == 0.0:
        return np.zeros(mem.n_ops)
    return numer / denom


# --- dispatcher -----------------------------------------------------------------

def compute_rewards(choice: RewardChoice, mem: GenerationMemory, win: WindowMemory | None,
                    np_: int) -> np.ndarray:
    """Reward of every operator for the next generation."""
    tag, params, k = choice.tag, choice.params, mem.n_ops
    if tag in (RewardType.PARETO_DOMINANCE, RewardType.PARETO_RANK,
               RewardType.COMPASS_PROJECTION):
        coords = [operator_coordinate(mem, op, params.fix_appl) for op in range(k)]
        out = diversity_quality_reward(tag, coords, params.theta)
    elif tag in (RewardType.AUC, RewardType.SUM_OF_RANK):
        out = rank_rewards(tag, win, params.decay_d, k)
    elif tag in (RewardType.SUCCESS_RATE, RewardType.IMMEDIATE_SUCCESS):
        out = np.array([success_reward(tag, mem, op, params, np_) for op in range(k)])
    elif tag in (RewardType.SUCCESS_SUM, RewardType.NORM_SUCCESS_SUM_WINDOW,
                 RewardType.NORM_SUCCESS_SUM_GEN):
        out = np.array([fitness_sum_reward(tag, mem, win, op, params) for op in range(k)])
    elif tag is RewardType.NORM_BEST_SUM:
        out = _norm_best_sums(mem, params) if mem.history else np.zeros(k)
    else:
        out = np.array([best_offspring_reward(tag, mem, op, params) for op in range(k)])
    return np.asarray(out, dtype=float)


def counts_in_scope(tag: RewardType, params: RewardParams, mem: GenerationMemory,
                    win: WindowMemory | None) -> np.ndarray:
    """Per-operator application counts seen by the active reward, used by UCB.

    Window rewards count window entries, diversity/quality rewards the
    applications behind each coordinate, and the rest successful applications
    over the ``max_gen`` horizon."""
    k = mem.n_ops
    if tag in (RewardType.AUC, RewardType.SUM_OF_RANK, RewardType.NORM_SUCCESS_SUM_WINDOW):
        return win.counts(k) if win is not None else np.zeros(k, dtype=np.int64)
    if tag in (RewardType.PARETO_DOMINANCE, RewardType.PARETO_RANK,
               RewardType.COMPASS_PROJECTION):
        return np.array([min(params.fix_appl, len(d)) for d in mem.per_op_recent],
                        dtype=np.int64)
    out = np.zeros(k, dtype=np.int64)
    for stats in mem.recent(params.max_gen):
        out += stats.n_succ
    return out

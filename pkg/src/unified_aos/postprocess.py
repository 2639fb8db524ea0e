"""Run summaries, target hits, ECDF and average runtime (aRT).

A *summary* is the JSON-able dict written per run::

    {"function_id", "instance_id", "dim", "seed", "budget", "best_fitness",
     "f_opt", "precision", "evaluations", "targets_hit", "history"}

``targets_hit`` maps each precision target to the first evaluation count at
which it was reached (``null`` if never); ``history`` is the list of
``[evaluations, precision]`` pairs, one per generation.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class TargetGrid:
    """Precision targets, log-uniform and strictly decreasing."""

    high: float = 1e2
    low: float = 1e-8
    count: int = 51

    @property
    def values(self) -> np.ndarray:
        return np.logspace(math.log10(self.high), math.log10(self.low), self.count)


def first_hits(history: Sequence[Sequence[float]], targets: Iterable[float]) -> list[int | None]:
    out = []
    for t in targets:
        hit = next((int(e) for e, prec in history if prec <= t), None)
        out.append(hit)
    return out


def summarize(result, problem, seed: int, budget: int,
              grid: TargetGrid = TargetGrid()) -> dict:
    history = [[int(e), float(p)] for e, p in result.trace.history]
    targets = grid.values
    hits = first_hits(history, targets)
    return {
        "function_id": getattr(problem, "function_id", None),
        "instance_id": getattr(problem, "instance_id", None),
        "dim": problem.dim,
        "seed": seed,
        "budget": budget,
        "best_fitness": result.best_fitness,
        "f_opt": result.f_opt,
        "precision": result.precision,
        "evaluations": result.evaluations_used,
        "targets_hit": [{"target": float(t), "evals": h} for t, h in zip(targets, hits)],
        "history": history,
    }


def load_summaries(paths: Iterable) -> list[dict]:
    """Read summaries from JSON files holding one object, a list, or JSON lines."""
    out: list[dict] = []
    for path in paths:
        text = Path(path).read_text().strip()
        if not text:
            continue
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            out.extend(json.loads(line) for line in text.splitlines() if line.strip())
            continue
        out.extend(data if isinstance(data, list) else [data])
    return out


def _hits_for(summary: dict, target: float) -> int | None:
    for entry in summary["targets_hit"]:
        if math.isclose(entry["target"], target, rel_tol=1e-9, abs_tol=0.0):
            return entry["evals"]
    # Target not on the stored grid: fall back to the history.
    return first_hits(summary.get("history", []), [target])[0]


def default_budgets(summaries: Sequence[dict], per_decade: int = 10) -> np.ndarray:
    firsts = [s["history"][0][0] for s in summaries if s.get("history")]
    lo = max(1, min(firsts)) if firsts else 1
    hi = max(max(s.get("budget") or s["evaluations"] for s in summaries), lo)
    n = max(2, int(math.ceil(per_decade * math.log10(hi / lo))) + 1) if hi > lo else 1
    return np.unique(np.round(np.geomspace(lo, hi, n)).astype(np.int64))


def compute_ecdf(summaries: Sequence[dict], targets: Iterable[float] | None = None,
                 budgets: Iterable[float] | None = None) -> list[tuple[float, float]]:
    """Fraction of (run, target) pairs reached within each budget."""
    if not summaries:
        warnings.warn("compute_ecdf: no run summaries given", stacklevel=2)
        return []
    targets = list(TargetGrid().values if targets is None else targets)
    budgets = default_budgets(summaries) if budgets is None else np.asarray(list(budgets))
    hits = []
    for s in summaries:
        for t in targets:
            h = _hits_for(s, t)
            hits.append(np.inf if h is None else h)
    hits = np.sort(np.asarray(hits, dtype=float))
    total = len(hits)
    counts = np.searchsorted(hits, budgets, side="right")
    return [(float(b), float(c) / total) for b, c in zip(budgets, counts)]


def _trial_outcomes(summaries: Sequence[dict], target: float) -> tuple[list, list]:
    successes, failures = [], []
    for s in summaries:
        h = _hits_for(s, target)
        if h is None:
            failures.append(s.get("budget") or s["evaluations"])
        else:
            successes.append(h)
    return successes, failures


def compute_art(summaries: Sequence[dict], target: float) -> float:
    """(success evaluations + failure budgets) / number of successes."""
    if not summaries:
        raise ValueError("compute_art needs at least one trial")
    successes, failures = _trial_outcomes(summaries, target)
    if not successes:
        return math.inf
    return (sum(successes) + sum(failures)) / len(successes)


def bootstrap_runtimes(summaries: Sequence[dict], target: float, n: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Simulated-restart runtimes: draw trials with replacement until one
    succeeds, summing the failures' budgets and the success's evaluations."""
    successes, failures = _trial_outcomes(summaries, target)
    if not successes:
        return np.full(n, np.inf)
    outcomes = [(float(e), True) for e in successes] + [(float(b), False) for b in failures]
    out = np.empty(n)
    for k in range(n):
        total = 0.0
        while True:
            evals, ok = outcomes[int(rng.integers(len(outcomes)))]
            total += evals
            if ok:
                break
        out[k] = total
    return out

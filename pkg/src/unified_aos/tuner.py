"""Offline configuration by iterated racing.

Each iteration samples candidates around the current elites, races them over
the training instances and keeps the survivors as the next elites.  The race
is a simplified F-race: after ``min_instances`` instances, any candidate whose
mean rank trails the leader's by ``margin`` or more is dropped.

Determinism: instance ``j`` of the (cyclic) instance stream always uses the
same run seed, so a candidate met again in a later race reuses its cached
cost instead of spending budget.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata, truncnorm

from .config import (AosConfig, DEParams, MutationStrategy, OffspringMetric,
                     ProbabilityChoice, ProbabilityType, QualityChoice, QualityType,
                     RewardChoice, RewardParams, RewardType, SelectionChoice, SelectionType,
                     aos_to_dict, de_to_dict, validate)
from .core import ContractViolation, make_rng

PRECISION_FLOOR = 1e-8


@dataclass(frozen=True)
class Parameter:
    name: str
    kind: str  # "real", "integer" or "categorical"
    domain: tuple
    condition: tuple[str, tuple] | None = None  # (parent name, activating values)

    def active(self, values: dict) -> bool:
        if self.condition is None:
            return True
        parent, allowed = self.condition
        return values.get(parent) in allowed


@dataclass
class ParameterSpace:
    parameters: list[Parameter]
    # Values for fields no parameter controls, e.g. the enabled strategies.
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for p in self.parameters:
            if p.kind not in ("real", "integer", "categorical"):
                raise ContractViolation(f"{p.name}: unknown kind {p.kind!r}")
            if p.condition is not None and p.condition[0] not in seen:
                raise ContractViolation(f"{p.name}: parent {p.condition[0]!r} must come first")
            seen.add(p.name)

    def names(self) -> list[str]:
        return [p.name for p in self.parameters]

    def to_json(self) -> str:
        data = {"parameters": [
            {"name": p.name, "kind": p.kind, "domain": list(p.domain),
             "condition": None if p.condition is None
             else {"parent": p.condition[0], "values": list(p.condition[1])}}
            for p in self.parameters], "fixed": self.fixed}
        return json.dumps(data, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ParameterSpace":
        data = json.loads(text)
        params = []
        for entry in data["parameters"]:
            cond = entry.get("condition")
            params.append(Parameter(entry["name"], entry["kind"], tuple(entry["domain"]),
                                    None if cond is None
                                    else (cond["parent"], tuple(cond["values"]))))
        return cls(params, dict(data.get("fixed", {})))

    @classmethod
    def load(cls, path) -> "ParameterSpace":
        return cls.from_json(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())


def _tags(*members) -> tuple:
    return tuple(m.value for m in members)


def default_space() -> ParameterSpace:
    """The full joint space: DE parameters, component choices, conditional
    hyper-parameters.  ``p_min`` and ``p_max`` are narrowed so every sample
    satisfies ``K * p_min < 1`` and ``p_min < p_max`` for nine operators."""
    R, Q, P, S = RewardType, QualityType, ProbabilityType, SelectionType
    dq = _tags(R.PARETO_DOMINANCE, R.PARETO_RANK, R.COMPASS_PROJECTION)
    ranked = _tags(R.AUC, R.SUM_OF_RANK)
    horizon = _tags(R.SUCCESS_RATE, R.SUCCESS_SUM, R.NORM_SUCCESS_SUM_GEN, R.NORM_BEST_SUM)
    p = Parameter
    return ParameterSpace([
        p("f_scale", "real", (0.1, 2.0)),
        p("cr", "real", (0.1, 1.0)),
        p("np", "integer", (50, 400)),
        p("top_np", "real", (0.02, 1.0)),
        p("om_choice", "categorical", tuple(m.value for m in OffspringMetric)),
        p("reward", "categorical", tuple(m.value for m in R)),
        p("quality", "categorical", tuple(m.value for m in Q)),
        p("probability", "categorical", tuple(m.value for m in P)),
        p("selection", "categorical", tuple(m.value for m in S)),
        p("fix_appl", "integer", (10, 50), ("reward", dq)),
        p("max_gen", "integer", (1, 50), ("reward", horizon)),
        p("theta", "categorical", (36, 45, 54, 90), ("reward", _tags(R.COMPASS_PROJECTION))),
        p("window_w", "integer", (20, 150), ("reward", ranked + _tags(R.NORM_SUCCESS_SUM_WINDOW))),
        p("decay_d", "real", (0.0, 1.0), ("reward", ranked)),
        p("gamma_sr", "categorical", (1, 2), ("reward", _tags(R.SUCCESS_RATE))),
        p("frac", "real", (0.0, 1.0), ("reward", _tags(R.SUCCESS_RATE))),
        p("eps_noise", "real", (0.0, 1.0), ("reward", _tags(R.SUCCESS_RATE))),
        p("omega", "categorical", (0, 1), ("reward", _tags(R.NORM_SUCCESS_SUM_WINDOW))),
        p("c_scale", "real", (0.001, 1.0), ("reward", _tags(R.BEST_2_GEN))),
        p("alpha", "categorical", (0, 1), ("reward", _tags(R.BEST_2_GEN, R.NORM_BEST_SUM))),
        p("beta", "categorical", (0, 1), ("reward", _tags(R.BEST_2_GEN))),
        p("rho", "categorical", (1, 2, 3), ("reward", _tags(R.NORM_BEST_SUM))),
        p("delta", "real", (0.0, 1.0), ("quality", _tags(Q.WEIGHTED_SUM, Q.WEIGHTED_NORMALISED_SUM))),
        p("c_ucb", "real", (0.0, 1.0), ("quality", _tags(Q.UCB))),
        p("q_min", "real", (0.01, 1.0), ("quality", _tags(Q.WEIGHTED_NORMALISED_SUM))),
        p("c1", "real", (0.0, 1.0), ("quality", _tags(Q.BELLMAN))),
        p("c2", "real", (0.0, 1.0), ("quality", _tags(Q.BELLMAN))),
        p("gamma_b", "real", (0.01, 0.99), ("quality", _tags(Q.BELLMAN))),
        p("p_min", "real", (0.0, 0.1), ("probability", _tags(P.NORMALISED_QUALITY, P.BIASED_RULE))),
        p("eps_p", "real", (0.0, 1.0), ("probability", _tags(P.NORMALISED_QUALITY))),
        p("mu", "real", (0.0, 1.0), ("probability", _tags(P.BIASED_RULE))),
        p("p_max", "real", (0.2, 1.0), ("probability", _tags(P.BIASED_RULE))),
        p("eps", "real", (0.0, 1.0), ("selection", _tags(S.EPSILON_GREEDY,
                                                        S.PROPORTIONAL_GREEDY))),
    ])


_REWARD_FIELDS = set(RewardParams.__dataclass_fields__)
_QUALITY_FIELDS = set(QualityChoice.__dataclass_fields__) - {"tag"}
_PROB_FIELDS = set(ProbabilityChoice.__dataclass_fields__) - {"tag"}
_SEL_FIELDS = set(SelectionChoice.__dataclass_fields__) - {"tag"}
_DE_FIELDS = set(DEParams.__dataclass_fields__)


def values_to_config(values: dict, fixed: dict | None = None) -> tuple[AosConfig, DEParams]:
    """Build a configuration; parameters absent from ``values`` keep their defaults."""
    merged = {**(fixed or {}), **values}
    pick = lambda keys: {k: v for k, v in merged.items() if k in keys}  # noqa: E731
    kwargs = {}
    if "om_choice" in merged:
        kwargs["om_choice"] = OffspringMetric.parse(merged["om_choice"])
    kwargs["reward"] = RewardChoice(RewardType.parse(merged.get("reward", RewardType.IMMEDIATE_SUCCESS)),
                                    RewardParams(**pick(_REWARD_FIELDS)))
    kwargs["quality"] = QualityChoice(QualityType.parse(merged.get("quality", QualityType.WEIGHTED_SUM)),
                                      **pick(_QUALITY_FIELDS))
    kwargs["probability"] = ProbabilityChoice(
        ProbabilityType.parse(merged.get("probability", ProbabilityType.NORMALISED_QUALITY)),
        **pick(_PROB_FIELDS))
    kwargs["selection"] = SelectionChoice(
        SelectionType.parse(merged.get("selection", SelectionType.PROPORTIONAL)),
        **pick(_SEL_FIELDS))
    if "enabled_strategies" in merged:
        kwargs["enabled_strategies"] = tuple(MutationStrategy.parse(s)
                                             for s in merged["enabled_strategies"])
    aos = AosConfig(**kwargs)
    de = DEParams(**pick(_DE_FIELDS))
    validate(aos, de)
    return aos, de


def config_to_values(aos: AosConfig, de: DEParams, space: ParameterSpace) -> dict:
    """Project a configuration onto the active parameters of ``space``."""
    flat = {**de_to_dict(de)}
    d = aos_to_dict(aos)
    flat.update(om_choice=d["om_choice"], reward=d["reward"]["tag"],
                quality=d["quality"]["tag"], probability=d["probability"]["tag"],
                selection=d["selection"]["tag"])
    flat.update(d["reward"]["params"])
    for section in ("quality", "probability", "selection"):
        flat.update({k: v for k, v in d[section].items() if k != "tag"})
    values: dict = {}
    for p in space.parameters:
        if p.active(values) and p.name in flat:
            values[p.name] = flat[p.name]
    return values


@dataclass
class Candidate:
    values: dict
    fixed: dict = field(default_factory=dict)
    costs: list[float] = field(default_factory=list)
    alive: bool = True
    cid: int = -1
    label: str = ""

    @property
    def config(self) -> tuple[AosConfig, DEParams]:
        return values_to_config(self.values, self.fixed)

    @property
    def key(self) -> str:
        return json.dumps([self.values, self.fixed], sort_keys=True)


@dataclass(frozen=True)
class RaceBudget:
    total_runs: int = 1000
    min_instances_before_elimination: int = 5
    survivors_floor: int = 1
    margin: float = 1.0

    def __post_init__(self):
        if min(self.total_runs, self.min_instances_before_elimination,
               self.survivors_floor) < 1:
            raise ContractViolation("race budget fields must all be positive")


# --- sampling -----------------------------------------------------------------

def _sample_numeric(p: Parameter, centre, sigma_frac: float, rng) -> float:
    lo, hi = float(p.domain[0]), float(p.domain[1])
    if centre is None or hi == lo:
        value = rng.uniform(lo, hi) if hi > lo else lo
    else:
        sigma = max(sigma_frac * (hi - lo), 1e-12)
        a, b = (lo - centre) / sigma, (hi - centre) / sigma
        value = float(truncnorm.rvs(a, b, loc=centre, scale=sigma, random_state=rng))
    if p.kind == "integer":
        return int(min(max(round(value), lo), hi))
    return float(min(max(value, lo), hi))


def sample_candidates(space: ParameterSpace, n: int, elites: Sequence[Candidate],
                      rng: np.random.Generator, sigma_frac: float = 0.2,
                      keep_prob: float = 0.8) -> list[Candidate]:
    """``n`` new candidates.  With elites, each candidate picks a parent elite
    (better-ranked elites more likely) and perturbs it: numeric values follow a
    normal truncated to the domain, categorical values are kept with
    ``keep_prob`` and otherwise redrawn uniformly."""
    if n < 1:
        raise ContractViolation("n must be >= 1")
    out = []
    weights = None
    if elites:
        w = np.arange(len(elites), 0, -1, dtype=float)
        weights = w / w.sum()
    for _ in range(n):
        parent = elites[int(rng.choice(len(elites), p=weights))].values if elites else None
        values: dict = {}
        for p in space.parameters:
            if not p.active(values):
                continue
            centre = parent.get(p.name) if parent is not None else None
            if p.kind == "categorical":
                if centre is not None and centre in p.domain and rng.random() < keep_prob:
                    values[p.name] = centre
                else:
                    values[p.name] = p.domain[int(rng.integers(len(p.domain)))]
            else:
                values[p.name] = _sample_numeric(p, centre, sigma_frac, rng)
        out.append(Candidate(values, dict(space.fixed)))
    return out


# --- racing -------------------------------------------------------------------

EvalFn = Callable[[Candidate, object, int], float]


def precision_cost(best_f: float, f_opt: float) -> float:
    return math.log10(max(best_f - f_opt, PRECISION_FLOOR))


def make_run_eval(evals_per_dim: int = 1000, cost: str = "precision") -> EvalFn:
    """Evaluation function running the engine once; ``cost`` is ``"precision"``
    (log10 precision, floored at 1e-8) or ``"raw"`` (best fitness)."""
    from .engine import run

    def evaluate(cand: Candidate, problem, seed: int) -> float:
        aos, de = cand.config
        # Large populations at least get their initial evaluation.
        result = run(problem, de, aos, max(evals_per_dim * problem.dim, de.np), seed)
        if cost == "raw":
            return result.best_fitness
        return precision_cost(result.best_fitness, problem.f_opt)
    return evaluate


@dataclass
class RaceLog:
    rows: list[tuple] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "candidate", "instance", "cost", "alive"])
            writer.writerows(self.rows)


@dataclass
class _Runner:
    """Cached, budget-counting evaluator over the cyclic instance stream."""

    instances: Sequence
    seeds: list[int]
    eval_fn: EvalFn
    limit: int
    runs: int = 0
    cache: dict = field(default_factory=dict)

    def cost(self, cand: Candidate, j: int) -> float:
        key = (cand.key, j)
        if key not in self.cache:
            if self.runs >= self.limit:
                raise ContractViolation("run budget exhausted")
            self.runs += 1
            problem = self.instances[j % len(self.instances)]
            self.cache[key] = float(self.eval_fn(cand, problem, self.seeds[j]))
        return self.cache[key]

    def pending(self, cands: Sequence[Candidate], j: int) -> int:
        return sum((c.key, j) not in self.cache for c in cands)


def mean_ranks(costs: np.ndarray) -> np.ndarray:
    """Mean over instances (rows) of per-instance ranks, ties averaged."""
    return rankdata(costs, axis=1).mean(axis=0)


def _race(cands: list[Candidate], runner: _Runner, budget: RaceBudget, max_instances: int,
          log: RaceLog | None, iteration: int) -> list[Candidate]:
    for c in cands:
        c.costs, c.alive = [], True
    for j in range(max_instances):
        alive = [c for c in cands if c.alive]
        if j > 0 and (runner.pending(alive, j) > runner.limit - runner.runs
                      or len(alive) <= budget.survivors_floor):
            break
        for c in alive:
            c.costs.append(runner.cost(c, j))
        if log is not None:
            for c in alive:
                log.rows.append((iteration, c.cid, j, c.costs[-1], 1))
        if j + 1 >= budget.min_instances_before_elimination and len(alive) > 1:
            ranks = mean_ranks(np.array([c.costs for c in alive]).T)
            gap = ranks - ranks.min()
            # Worst first, never below the survivors floor.
            for idx in np.argsort(-gap, kind="stable"):
                if gap[idx] < budget.margin:
                    break
                if sum(c.alive for c in cands) <= budget.survivors_floor:
                    break
                alive[idx].alive = False
                if log is not None:
                    log.rows.append((iteration, alive[idx].cid, j, alive[idx].costs[-1], 0))
    return cands


def race(candidates: list[Candidate], instances: Sequence, budget: RaceBudget,
         eval_fn: EvalFn, seed: int = 0, log: RaceLog | None = None,
         max_instances: int | None = None) -> list[Candidate]:
    """Race ``candidates`` over ``instances`` (cycled if the budget allows more
    instances than given).  Returns all candidates with ``alive`` flags set."""
    if len(candidates) < 2:
        raise ContractViolation("a race needs at least two candidates")
    if not instances:
        raise ContractViolation("a race needs at least one instance")
    need = len(candidates) * budget.min_instances_before_elimination
    if budget.total_runs < need:
        raise ContractViolation(f"budget of {budget.total_runs} runs is below "
                                f"candidates x min_instances = {need}")
    rng = make_rng(seed)
    horizon = max_instances or budget.total_runs
    seeds = rng.integers(0, 2 ** 31 - 1, size=horizon).tolist()
    for n, c in enumerate(candidates):
        if c.cid < 0:
            c.cid = n
    runner = _Runner(instances, seeds, eval_fn, budget.total_runs)
    return _race(candidates, runner, budget, horizon, log, 0)


def _best(cands: Sequence[Candidate]) -> Candidate:
    alive = [c for c in cands if c.alive]
    depth = min(len(c.costs) for c in alive)
    if len(alive) == 1:
        return alive[0]
    ranks = mean_ranks(np.array([c.costs[:depth] for c in alive]).T)
    return alive[int(np.argmin(ranks))]


def tune(space: ParameterSpace, train: Sequence, budget: RaceBudget,
         starting: Sequence[Candidate] = (), seed: int = 0, eval_fn: EvalFn | None = None,
         n_iterations: int | None = None, max_candidates: int = 20, n_elites: int = 4,
         log: RaceLog | None = None) -> Candidate:
    """Iterated racing; returns the best surviving candidate of the final race."""
    if not train:
        raise ContractViolation("training set must not be empty")
    eval_fn = eval_fn or make_run_eval()
    rng = make_rng(seed)
    mu = budget.min_instances_before_elimination
    if n_iterations is None:
        n_iterations = 2 + int(math.log2(max(len(space.parameters), 1)))
    seeds = rng.integers(0, 2 ** 31 - 1, size=budget.total_runs).tolist()
    runner = _Runner(train, seeds, eval_fn, budget.total_runs)
    elites: list[Candidate] = []
    next_id = 0
    best: Candidate | None = None
    for it in range(n_iterations):
        remaining = budget.total_runs - runner.runs
        share = remaining // (n_iterations - it)
        n_cand = int(min(max_candidates, max(2, share // (mu + 2))))
        pool: list[Candidate] = [] if it else [Candidate(dict(c.values), dict(c.fixed or space.fixed),
                                                         label=c.label) for c in starting]
        unique: dict[str, Candidate] = {}
        for c in elites + pool:
            unique.setdefault(c.key, c)
        # Redraw duplicates a bounded number of times; small spaces may run dry.
        attempts = 0
        while len(unique) < n_cand and attempts < 50 * n_cand:
            new = sample_candidates(space, 1, elites, rng, sigma_frac=0.2 * (0.7 ** it))[0]
            unique.setdefault(new.key, new)
            attempts += 1
        pool = list(unique.values())
        for c in pool:
            if c.cid < 0:
                c.cid, next_id = next_id, next_id + 1
        if len(pool) < 2:
            # Nothing to race; give the lone candidate its minimum evaluations.
            only = pool[0]
            if runner.limit - runner.runs < mu and not only.costs:
                raise ContractViolation("budget below min_instances for a single candidate")
            only.costs = [runner.cost(only, j) for j in range(mu)]
            only.alive = True
            best = only
            elites = [only]
            continue
        need = sum(runner.pending(pool, j) for j in range(mu))
        if need > remaining:
            if it == 0:
                raise ContractViolation(f"budget of {budget.total_runs} runs is below "
                                        f"candidates x min_instances = {len(pool) * mu}")
            break
        limit = runner.limit
        runner.limit = runner.runs + max(share, need) if it < n_iterations - 1 else limit
        _race(pool, runner, budget, budget.total_runs, log, it)
        runner.limit = limit
        best = _best(pool)
        survivors = sorted((c for c in pool if c.alive),
                           key=lambda c: float(np.mean(c.costs)))
        elites = [best] + [c for c in survivors if c is not best][:n_elites - 1]
    if best is None:
        raise ContractViolation("tuning budget too small for a single race")
    return best


def starting_candidates(space: ParameterSpace, configs) -> list[Candidate]:
    """Wrap ``(name, AosConfig, DEParams)`` triples as candidates of ``space``."""
    out = []
    for name, aos, de in configs:
        fixed = dict(space.fixed)
        fixed["enabled_strategies"] = [s.value for s in aos.enabled_strategies]
        out.append(Candidate(config_to_values(aos, de, space), fixed, label=name))
    return out

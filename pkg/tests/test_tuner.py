import csv

import numpy as np
import pytest
from scipy import stats

from unified_aos.config import DEParams
from unified_aos.core import ContractViolation, make_rng
from unified_aos.presets import tuned_starting_configs
from unified_aos.tuner import (Candidate, Parameter, ParameterSpace, RaceBudget, RaceLog,
                               config_to_values, default_space, make_run_eval, mean_ranks,
                               precision_cost, race, sample_candidates, starting_candidates,
                               tune, values_to_config)
from unified_aos.bench import make_problem


def counting(fn):
    calls = []

    def wrapped(cand, problem, seed):
        calls.append((cand.key, seed))
        return fn(cand, problem, seed)
    wrapped.calls = calls
    return wrapped


def noisy_cost(cand, problem, seed):
    # Lower f_scale is better; seeded noise keeps ranks imperfect.
    return cand.values.get("f_scale", 1.0) + 0.05 * make_rng(seed).normal()


def test_default_space_structure():
    space = default_space()
    names = space.names()
    assert names[:4] == ["f_scale", "cr", "np", "top_np"]
    assert len(space.parameters) == 33
    theta = next(p for p in space.parameters if p.name == "theta")
    assert theta.domain == (36, 45, 54, 90)
    assert ParameterSpace.from_json(space.to_json()).to_json() == space.to_json()


def test_samples_valid_and_conditional():
    space = default_space()
    for cand in sample_candidates(space, 300, [], make_rng(1)):
        cand.config  # validates
        for p in space.parameters:
            assert (p.name in cand.values) == p.active(cand.values)
            if p.name in cand.values and p.kind != "categorical":
                lo, hi = p.domain
                assert lo <= cand.values[p.name] <= hi


def test_uniform_categorical_marginal():
    space = ParameterSpace([Parameter("reward", "categorical", tuple(range(12)))])
    draws = [c.values["reward"] for c in sample_candidates(space, 10_000, [], make_rng(3))]
    counts = np.bincount(draws, minlength=12)
    p = 1 / 12
    sigma = np.sqrt(10_000 * p * (1 - p))
    assert (np.abs(counts - 10_000 * p) <= 3 * sigma).all()
    assert stats.chisquare(counts).pvalue > 0.01


def test_truncated_normal_around_elite():
    lo, hi = 0.1, 2.0
    space = ParameterSpace([Parameter("f_scale", "real", (lo, hi))])
    elite = Candidate({"f_scale": 0.5})
    sigma = 0.2
    draws = np.array([c.values["f_scale"] for c in
                      sample_candidates(space, 1000, [elite], make_rng(4),
                                        sigma_frac=sigma / (hi - lo))])
    exact = stats.truncnorm.mean((lo - 0.5) / sigma, (hi - 0.5) / sigma, loc=0.5, scale=sigma)
    sd = stats.truncnorm.std((lo - 0.5) / sigma, (hi - 0.5) / sigma, loc=0.5, scale=sigma)
    assert abs(draws.mean() - exact) < 4 * sd / np.sqrt(1000)
    assert abs(draws.mean() - 0.5) < 0.1
    assert ((draws >= lo) & (draws <= hi)).all()


def test_degenerate_categorical():
    space = ParameterSpace([Parameter("selection", "categorical", ("Greedy",))])
    assert {c.values["selection"] for c in sample_candidates(space, 50, [], make_rng(0))} == {"Greedy"}


def test_value_round_trip():
    space = default_space()
    for name, aos, de in tuned_starting_configs():
        values = config_to_values(aos, de, space)
        assert values_to_config(values) == (aos, de), name


def test_mean_ranks_ties():
    costs = np.array([[1.0, 1.0, 2.0], [0.0, 3.0, 3.0]])
    assert mean_ranks(costs).tolist() == [1.25, 2.0, 2.75]


def cands(*fs):
    return [Candidate({"f_scale": f}) for f in fs]


def test_race_dominant_candidate():
    pool = cands(0.2, 0.9)
    race(pool, ["a"], RaceBudget(20, 3), lambda c, p, s: c.values["f_scale"])
    assert pool[0].alive and not pool[1].alive
    assert len(pool[1].costs) == 3


def test_race_identical_candidates():
    pool = cands(0.5, 0.5, 0.5)
    race(pool, ["a"], RaceBudget(30, 3), lambda c, p, s: 1.0)
    assert all(c.alive for c in pool)


def test_race_survivors_floor():
    pool = cands(*np.linspace(0.1, 1.0, 10))
    race(pool, ["a"], RaceBudget(200, 2, survivors_floor=3), lambda c, p, s: c.values["f_scale"])
    assert sum(c.alive for c in pool) == 3


def test_race_setup_errors():
    with pytest.raises(ContractViolation):
        race(cands(0.1), ["a"], RaceBudget(10, 2), noisy_cost)
    with pytest.raises(ContractViolation):
        race(cands(0.1, 0.2, 0.3), ["a"], RaceBudget(5, 2), noisy_cost)


def test_race_budget_and_monotone_elimination():
    fn = counting(noisy_cost)
    log = RaceLog()
    pool = cands(*np.linspace(0.1, 1.0, 8))
    race(pool, ["a", "b"], RaceBudget(60, 3), fn, seed=2, log=log)
    assert len(fn.calls) <= 60
    dropped = {}
    for _, cid, inst, _, alive in log.rows:
        if alive == 0:
            dropped[cid] = inst
        else:
            assert cid not in dropped, "eliminated candidate evaluated again"


def test_tune_collapsed_space():
    space = ParameterSpace([Parameter("f_scale", "real", (0.3, 0.3))], fixed={"np": 20})
    best = tune(space, ["a"], RaceBudget(20, 3), eval_fn=noisy_cost)
    assert best.values == {"f_scale": 0.3}
    assert best.config[1] == DEParams(f_scale=0.3, np=20)
    assert len(best.costs) >= 3


def test_tune_finds_low_cost_and_is_reproducible():
    space = ParameterSpace([Parameter("f_scale", "real", (0.1, 2.0))])
    fn = counting(noisy_cost)
    budget = RaceBudget(150, 3)
    best = tune(space, ["a", "b"], budget, seed=5, eval_fn=fn)
    assert len(fn.calls) <= 150
    assert best.alive and len(best.costs) >= 3
    assert best.values["f_scale"] < 0.6
    again = tune(space, ["a", "b"], budget, seed=5, eval_fn=noisy_cost)
    assert again.values == best.values


def test_starting_configs_raced_first(tmp_path):
    space = default_space()
    start = starting_candidates(space, tuned_starting_configs())
    log = RaceLog()
    fn = counting(lambda c, p, s: 0.0)
    tune(space, ["a"], RaceBudget(200, 2), starting=start, eval_fn=fn, log=log)
    # The starting configurations open the first race.
    assert [key for key, _ in fn.calls[:len(start)]] == [c.key for c in start]
    path = tmp_path / "log.csv"
    log.write_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["iteration", "candidate", "instance", "cost", "alive"]
    assert len(rows) == len(log.rows) + 1


def test_precision_cost_floor():
    assert precision_cost(5.0, 5.0) == -8.0
    assert precision_cost(105.0, 5.0) == 2.0


def test_run_eval_on_real_problem():
    cand = Candidate({"f_scale": 0.5}, {"np": 20})
    cost = make_run_eval(evals_per_dim=40)(cand, make_problem(1, 1, 2), 3)
    assert -8.0 <= cost < 3.0

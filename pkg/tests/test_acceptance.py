"""Acceptance suite: one PASS/FAIL line per criterion, printed uncaptured."""
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from oracles import ReferenceWindow, art_reference, ecdf_pairs
from unified_aos.bench import ScaledProblem, make_problem
from unified_aos.cli import combinations, main, smoke_one
from unified_aos.config import (AosConfig, DEParams, OffspringMetric, QualityChoice, QualityType,
                                RewardChoice, RewardType, SelectionChoice, SelectionType)
from unified_aos.core import OMRecord, WindowMemory, make_rng, window_insert
from unified_aos.engine import run
from unified_aos.policy import AosState, bellman_solve, select_operators, update_quality
from unified_aos.postprocess import compute_art, compute_ecdf, first_hits
from unified_aos.presets import preset
from unified_aos.tuner import Parameter, ParameterSpace, RaceBudget, make_run_eval, tune

TESTS = Path(__file__).parent


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {title}"
                  + (f" ({detail})" if detail else ""))
        assert ok, detail
    return emit


def test_c01_full_space_smoke(report):
    combos = combinations()
    failures = []
    for combo in combos:
        names, err = smoke_one((combo, 5, 5, 50, 1))
        if err:
            failures.append((names, err))
    report(1, "all component combinations run 5 generations with valid probabilities",
           len(combos) == 5400 and not failures,
           f"{len(combos)} combinations, {len(failures)} failed {failures[:3]}")


def test_c02_scaling_invariance(report):
    worst, same_traces, runs = 0.0, True, 0
    for tag in (RewardType.AUC, RewardType.SUM_OF_RANK):
        for om in (OffspringMetric.OFFSPRING_FITNESS, OffspringMetric.IMPROVEMENT_PARENT,
                       OffspringMetric.IMPROVEMENT_BEST_SO_FAR):
            for fid in (1, 8, 15):
                aos = AosConfig(om_choice=om, reward=RewardChoice(tag))
                base = make_problem(fid, 1, 5)
                a = run(base, DEParams(np=30), aos, 30 * 41, 3, target=None)
                b = run(ScaledProblem(base, 10.0), DEParams(np=30), aos, 30 * 41, 3, target=None)
                for ra, rb in zip(a.trace.rows, b.trace.rows):
                    worst = max(worst, float(np.max(np.abs(np.subtract(ra.rewards, rb.rewards)))))
                    same_traces &= ra.applications == rb.applications
                same_traces &= len(a.trace.rows) == len(b.trace.rows)
                runs += 1
    report(2, "AUC and SumOfRank rewards invariant under f -> 10 f",
           worst <= 1e-12 and same_traces,
           f"{runs} run pairs, max reward difference {worst:.1e}, traces identical {same_traces}")


def test_c03_formula_oracles(report):
    files = ["test_metrics.py", "test_reward.py", "test_policy.py", "test_core.py",
             "test_presets.py", "test_postprocess.py"]
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           *[str(TESTS / f) for f in files]],
                          capture_output=True, text=True, cwd=TESTS.parent)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    report(3, "formula oracles and tuned-table byte comparison", proc.returncode == 0, tail)


def test_c04_bellman_consistency(report):
    rng = make_rng(41)
    worst_zero = 0.0
    for _ in range(200):
        r, prev = rng.uniform(0, 5, 4), rng.uniform(0, 5, 4)
        c1, c2 = rng.uniform(0, 1, 2)
        s = AosState.initial(4)
        s.reward, s.prev_reward = r, prev
        s.probability = rng.dirichlet(np.ones(4))
        q = update_quality(QualityChoice(QualityType.BELLMAN, c1=c1, c2=c2, gamma_b=0.0), s,
                           np.ones(4))
        worst_zero = max(worst_zero, float(np.max(np.abs(q - (c1 * r + c2 * prev)))))
    worst_res = 0.0
    for gamma in np.round(np.arange(0.1, 1.0, 0.1), 1):
        for _ in range(50):
            k = int(rng.integers(2, 10))
            target = rng.uniform(0, 5, k)
            # General row-stochastic matrix.
            p = rng.dirichlet(np.ones(k), size=k)
            q = np.linalg.solve(np.eye(k) - gamma * p, target)
            worst_res = max(worst_res, float(np.max(np.abs((np.eye(k) - gamma * p) @ q - target))))
            # The engine's matrix: every row is the probability vector.
            prob = rng.dirichlet(np.ones(k))
            q = bellman_solve(target, prob, gamma)
            lhs = np.eye(k) - gamma * np.tile(prob, (k, 1))
            worst_res = max(worst_res, float(np.max(np.abs(lhs @ q - target))))
    report(4, "Bellman quality reduces to weighted rewards and solves the linear system",
           worst_zero <= 1e-12 and worst_res < 1e-9,
           f"gamma=0 error {worst_zero:.1e}, max residual {worst_res:.1e}")


def test_c05_selection_statistics(report):
    prob = np.array([0.05, 0.15, 0.3, 0.1, 0.4])
    draws = select_operators(SelectionChoice(SelectionType.PROPORTIONAL), prob, 0.0,
                             make_rng(2), 100_000)
    pvalue = stats.chisquare(np.bincount(draws, minlength=5), 100_000 * prob).pvalue
    greedy = select_operators(SelectionChoice(SelectionType.GREEDY), prob, 0.5, make_rng(8), 5000)
    eps0 = select_operators(SelectionChoice(SelectionType.EPSILON_GREEDY, eps=0.0), prob, 0.5,
                            make_rng(8), 5000)
    la = SelectionChoice(SelectionType.LINEAR_ANNEALED)
    at_end = select_operators(la, prob, 1.0, make_rng(8), 5000)
    at_start = select_operators(la, prob, 0.0, make_rng(9), 100_000)
    uniform_p = stats.chisquare(np.bincount(at_start, minlength=5)).pvalue
    ok = (pvalue > 0.01 and np.array_equal(greedy, eps0) and (at_end == 4).all()
          and uniform_p > 0.01)
    report(5, "proportional frequencies, eps=0 greedy, linear annealing ends", ok,
           f"proportional p={pvalue:.3f}, annealed-start uniform p={uniform_p:.3f}")


def test_c06_convergence(report):
    aos, de = preset("U-AOS-FW")
    results = {}
    for fid in (1, 2):
        problem = make_problem(fid, 1, 5)
        results[fid] = sum(run(problem, de, aos, 20_000 * 5, seed).precision <= 1e-8
                           for seed in range(1, 16))
    report(6, "U-AOS-FW reaches 1e-8 on sphere and ellipsoid in 5D",
           all(v >= 14 for v in results.values()),
           f"f01 {results[1]}/15, f02 {results[2]}/15")


def test_c07_window_semantics(report):
    rng = make_rng(77)
    mismatches = 0
    for _ in range(10_000):
        cap = int(rng.integers(1, 8))
        win, ref = WindowMemory(capacity=cap), ReferenceWindow(cap)
        for g in range(int(rng.integers(0, 30))):
            op = int(rng.integers(0, 4))
            gain = float(rng.integers(0, 5)) if rng.random() < 0.5 else float(rng.random())
            improved = gain > 0
            window_insert(win, OMRecord(op, g, (-1.0, gain, 0.0, 0.0, 0.0, 0.0)))
            ref.insert(op, gain, improved)
            if len(win) > cap or not all(e.improved for e in win.entries):
                mismatches += 1
                break
        else:
            mismatches += [(e.op, e.metrics[1]) for e in win.entries] != ref.entries
    report(7, "window memory matches the reference model over 1e4 sequences", mismatches == 0,
           f"{mismatches} mismatching sequences")


def test_c08_tuner_sanity(report):
    # Lunacek bi-Rastrigin is deceptive: greedy locks onto one operator early.
    train = [make_problem(24, i, 5) for i in range(1, 6)]
    space = ParameterSpace([Parameter("selection", "categorical", ("Greedy", "Proportional"))],
                           fixed={"np": 50})
    budget = RaceBudget(total_runs=40, min_instances_before_elimination=5)
    wins, max_calls = 0, 0
    for seed in range(10):
        calls = []
        inner = make_run_eval(300)

        def counted(cand, problem, s, inner=inner, calls=calls):
            calls.append(1)
            return inner(cand, problem, s)
        best = tune(space, train, budget, seed=seed, eval_fn=counted)
        wins += best.values["selection"] == "Proportional"
        max_calls = max(max_calls, len(calls))
    report(8, "racing picks the dominant configuration within budget",
           wins >= 9 and max_calls <= budget.total_runs,
           f"proportional won {wins}/10, at most {max_calls} of {budget.total_runs} runs")


def _summary(history, budget, targets):
    return {"budget": budget, "evaluations": history[-1][0], "history": history,
            "targets_hit": [{"target": t, "evals": h}
                            for t, h in zip(targets, first_hits(history, targets))]}


def test_c09_ecdf_art(report):
    art = compute_art([_summary([[100, 0.0]], 1000, [1e-8]),
                       _summary([[1000, 1.0]], 1000, [1e-8])], 1e-8)
    art_ok = art == 1100 == art_reference([(True, 100), (False, 1000)])
    targets = [10.0, 1.0, 1e-3]
    p1 = _summary([[20, 50.0], [40, 5.0], [60, 0.5], [80, 1e-4]], 80, targets)
    p2 = _summary([[20, 8.0], [40, 8.0], [60, 2.0], [80, 2.0]], 80, targets)
    budgets = [10, 20, 40, 60, 80, 100]
    got = [f for _, f in compute_ecdf([p1, p2], targets, budgets)]
    # Hand count over 6 pairs: p1 hits 10 at 40, 1 at 60, 1e-3 at 80; p2 hits 10 at 20.
    hand = [0, 1 / 6, 2 / 6, 3 / 6, 4 / 6, 4 / 6]
    oracle = [float(x) for x in ecdf_pairs([first_hits(p["history"], targets) for p in (p1, p2)],
                                           budgets)]
    exact_ok = got == hand == oracle
    rng = make_rng(5)
    monotone = True
    for _ in range(500):
        runs = []
        for _ in range(int(rng.integers(1, 6))):
            evals = np.cumsum(rng.integers(1, 50, int(rng.integers(1, 10))))
            precs = np.minimum.accumulate(10.0 ** rng.uniform(-9, 3, len(evals)))
            runs.append(_summary([[int(e), float(p)] for e, p in zip(evals, precs)],
                                 int(evals[-1]), list(10.0 ** rng.uniform(-8, 2, 4))))
        fr = [f for _, f in compute_ecdf(runs, None, np.sort(rng.integers(0, 500, 20)))]
        monotone &= all(b >= a for a, b in zip(fr, fr[1:]))
    report(9, "aRT worked example, hand-enumerated ECDF, ECDF monotonicity",
           art_ok and exact_ok and monotone,
           f"aRT {art}, ECDF {got}, monotone {monotone}")


def test_c10_cli_determinism(report, tmp_path):
    identical = True
    cases = [["--preset", "U-AOS-FW", "--function", "2"],
             ["--preset", "F-AUC-MAB", "--np", "40", "--function", "15"],
             ["--preset", "Compass", "--tuned", "--four-operators", "--function", "21"]]
    for i, case in enumerate(cases):
        outputs = []
        for rep in range(2):
            trace, summary = tmp_path / f"t{i}{rep}.csv", tmp_path / f"s{i}{rep}.json"
            code = main(["run", *case, "--budget", "4000", "--seed", "9",
                         "--trace", str(trace), "--summary", str(summary)])
            identical &= code == 0
            outputs.append((trace.read_bytes(), summary.read_bytes()))
        identical &= outputs[0] == outputs[1]
    report(10, "repeated CLI runs give byte-identical trace and summary files", identical,
           f"{len(cases)} argument sets")

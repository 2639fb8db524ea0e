"""Command-line entry point: ``unified-aos <subcommand>`` or ``python -m unified_aos``.

Exit codes: 0 success, 1 run failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .bench import UnsupportedFunction, load_manifest, make_problem, training_manifest
from .config import (AosConfig, ConfigError, DEParams, OffspringMetric, ProbabilityChoice,
                     ProbabilityType, QualityChoice, QualityType, RewardChoice, RewardType,
                     SelectionChoice, SelectionType, load_config, replace, save_config)
from .core import ContractViolation, make_rng
from .engine import RunError, RunResult, run
from .postprocess import (TargetGrid, bootstrap_runtimes, compute_art, compute_ecdf,
                          load_summaries, summarize)
from .presets import FOUR_OPERATORS, catalog, preset, tuned_starting_configs
from .tuner import (ParameterSpace, RaceBudget, RaceLog, default_space, make_run_eval,
                    starting_candidates, tune)

EXIT_OK, EXIT_RUN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --- files ------------------------------------------------------------------------

def trace_csv(result: RunResult) -> str:
    rows = result.trace.rows
    k = len(rows[0].applications) if rows else 0
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["generation", "evals", "best_f"] + [f"app_op{j}" for j in range(k)]
                    + [f"p_op{j}" for j in range(k)])
    for row in rows:
        writer.writerow([row.generation, row.evals, repr(row.best_f)]
                        + list(row.applications) + [repr(p) for p in row.probabilities])
    return buf.getvalue()


def dump_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _write(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# --- configuration from arguments ----------------------------------------------------

def _configure(args) -> tuple[AosConfig, DEParams]:
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        aos, de = load_config(path)
    elif getattr(args, "preset", None):
        strategies = FOUR_OPERATORS if getattr(args, "four_operators", False) else None
        aos, de = preset(args.preset, tuned=getattr(args, "tuned", False),
                         enabled_strategies=strategies)
    else:
        raise UsageError("give --config FILE or --preset NAME")
    if getattr(args, "np", None):
        de = replace(de, np=args.np)
    return aos, de


def _single_run(job):
    aos, de, fid, iid, dim, budget, seed = job
    problem = make_problem(fid, iid, dim)
    result = run(problem, de, aos, budget, seed)
    return summarize(result, problem, seed, budget), trace_csv(result)


def _map(fn, jobs, parallel: int):
    if parallel and parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


# --- subcommands ----------------------------------------------------------------

def cmd_run(args) -> int:
    aos, de = _configure(args)
    budget = args.budget if args.budget else 10_000 * args.dim
    summary, trace = _single_run((aos, de, args.function, args.instance, args.dim, budget,
                                  args.seed))
    if args.trace:
        _write(args.trace, trace)
    _write(args.summary, dump_json(summary))
    return EXIT_OK


def cmd_trace(args) -> int:
    aos, de = _configure(args)
    budget = args.budget if args.budget else 10_000 * args.dim
    _, trace = _single_run((aos, de, args.function, args.instance, args.dim, budget,
                            args.seed))
    _write(args.out, trace)
    return EXIT_OK


_COMPONENT_ENUMS = {"om": OffspringMetric, "reward": RewardType, "quality": QualityType,
                    "probability": ProbabilityType, "selection": SelectionType}


def combinations(restrict: dict[str, list[str]] | None = None):
    """Every component tuple, optionally restricted per component."""
    restrict = restrict or {}
    axes = []
    for key, enum in _COMPONENT_ENUMS.items():
        axes.append([enum.parse(v) for v in restrict[key]] if key in restrict else list(enum))
    return list(itertools.product(*axes))


def _parse_components(items) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--component expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        if key not in _COMPONENT_ENUMS:
            raise UsageError(f"unknown component {key!r}; use one of {list(_COMPONENT_ENUMS)}")
        try:
            _COMPONENT_ENUMS[key].parse(value)
        except ConfigError as exc:
            raise UsageError(str(exc)) from exc
        out.setdefault(key, []).append(value)
    return out


def smoke_one(job) -> tuple[tuple, str | None]:
    combo, generations, dim, np_, seed = job
    om, r, q, p, s = combo
    aos = AosConfig(om, RewardChoice(r), QualityChoice(q), ProbabilityChoice(p),
                    SelectionChoice(s))
    names = tuple(c.value for c in combo)
    try:
        result = run(make_problem(1, 1, dim), DEParams(np=np_), aos, np_ * (generations + 1),
                     seed, target=None)
        if len(result.trace.rows) != generations:
            return names, f"ran {len(result.trace.rows)} generations"
        for row in result.trace.rows:
            prob = np.asarray(row.probabilities)
            if abs(prob.sum() - 1.0) > 1e-9 or (prob < 0).any():
                return names, f"invalid probabilities at generation {row.generation}"
            if sum(row.applications) != np_:
                return names, f"applications do not sum to NP at generation {row.generation}"
    except Exception as exc:  # noqa: BLE001 - every failure is reported, not raised
        return names, f"{type(exc).__name__}: {exc}"
    return names, None


def cmd_enumerate(args) -> int:
    combos = combinations(_parse_components(args.component))
    jobs = [(c, args.generations, args.dim, args.np, args.seed) for c in combos]
    results = _map(smoke_one, jobs, args.parallel)
    failures = [(names, err) for names, err in results if err]
    if args.report:
        with open(args.report, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["om", "reward", "quality", "probability", "selection", "status"])
            for names, err in results:
                writer.writerow(list(names) + [err or "ok"])
    for names, err in failures:
        print(f"FAIL {'/'.join(names)}: {err}", file=sys.stderr)
    print(f"{len(results)} combinations attempted, {len(results) - len(failures)} passed, "
          f"{len(failures)} failed")
    return EXIT_RUN if failures else EXIT_OK


def cmd_replicate(args) -> int:
    aos, de = _configure(args)
    budget = args.budget if args.budget else 10_000 * args.dim
    jobs = [(aos, de, fid, iid, args.dim, budget, seed)
            for fid in args.functions for iid in args.instances
            for seed in range(args.seed, args.seed + args.runs)]
    for fid in args.functions:
        make_problem(fid, 1, args.dim)  # unsupported ids fail before any run
    results = _map(_single_run, jobs, args.parallel)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for (summary, trace), job in zip(results, jobs):
        _, _, fid, iid, dim, _, seed = job
        stem = f"f{fid:02d}_i{iid:02d}_d{dim}_s{seed}"
        (out / f"{stem}.trace.csv").write_text(trace)
        lines.append(json.dumps(summary, sort_keys=True))
    (out / "summaries.jsonl").write_text("\n".join(lines) + "\n")
    print(f"{len(results)} runs written to {out}")
    return EXIT_OK


def cmd_tune(args) -> int:
    space = ParameterSpace.load(args.space) if args.space else default_space()
    if args.manifest:
        if not Path(args.manifest).exists():
            raise UsageError(f"manifest not found: {args.manifest}")
        train = load_manifest(args.manifest)
    else:
        train = [make_problem(e["function_id"], e["instance_id"], e["dim"])
                 for e in training_manifest(args.dim)]
    budget = RaceBudget(total_runs=args.budget, min_instances_before_elimination=args.min_instances,
                        survivors_floor=args.survivors_floor, margin=args.margin)
    starting = starting_candidates(space, tuned_starting_configs()) if args.starting_presets else []
    if budget.total_runs < 2 * budget.min_instances_before_elimination:
        raise ContractViolation(f"budget of {budget.total_runs} runs cannot race two candidates "
                                f"over {budget.min_instances_before_elimination} instances")
    log = RaceLog()
    best = tune(space, train, budget, starting, seed=args.seed,
                eval_fn=make_run_eval(args.evals_per_dim, args.cost), log=log)
    aos, de = best.config
    save_config(args.out, aos, de)
    if args.log:
        log.write_csv(args.log)
    print(f"winner written to {args.out} (mean cost {float(np.mean(best.costs)):.4g} over "
          f"{len(best.costs)} instances)")
    return EXIT_OK


def _inputs(paths) -> list[dict]:
    for p in paths:
        if not Path(p).exists():
            raise UsageError(f"summary file not found: {p}")
    return load_summaries(paths)


def cmd_ecdf(args) -> int:
    table = compute_ecdf(_inputs(args.summaries))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["budget", "fraction"])
    for b, f in table:
        writer.writerow([repr(b), repr(f)])
    _write(args.out, buf.getvalue())
    return EXIT_OK


def cmd_art(args) -> int:
    summaries = _inputs(args.summaries)
    targets = args.target if args.target else list(TargetGrid().values)
    rng = make_rng(args.seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["target", "art"]
    if args.bootstrap:
        header += ["bootstrap_median", "bootstrap_p10", "bootstrap_p90"]
    writer.writerow(header)
    for t in targets:
        art = compute_art(summaries, t)
        row = [repr(float(t)), "" if math.isinf(art) else repr(art)]
        if args.bootstrap:
            sample = bootstrap_runtimes(summaries, t, args.bootstrap, rng)
            stats = np.percentile(sample, [50, 10, 90])
            row += ["" if math.isinf(v) else repr(float(v)) for v in stats]
        writer.writerow(row)
    _write(args.out, buf.getvalue())
    return EXIT_OK


# --- parser ---------------------------------------------------------------------

def _add_config_args(p, with_problem=True):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="configuration JSON file")
    src.add_argument("--preset", help=f"named method, one of: {', '.join(catalog())}")
    p.add_argument("--tuned", action="store_true", help="use the tuned version of --preset")
    p.add_argument("--four-operators", action="store_true",
                   help="enable only rand/1, rand/2, rand-to-best/2, curr-to-rand/1")
    p.add_argument("--np", type=int, help="override the population size")
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--budget", type=int, help="evaluations per run (default 1e4 * dim)")
    p.add_argument("--seed", type=int, default=1)
    if with_problem:
        p.add_argument("--function", type=int, default=1)
        p.add_argument("--instance", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unified-aos", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one run; writes the summary JSON and optional trace CSV")
    _add_config_args(p)
    p.add_argument("--trace", help="trace CSV path")
    p.add_argument("--summary", default="-", help="summary JSON path (default stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("trace", help="one run; writes only the per-generation trace CSV")
    _add_config_args(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("enumerate", help="smoke-run every component combination")
    p.add_argument("--generations", type=int, default=5)
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--np", type=int, default=50)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--component", action="append", metavar="KEY=VALUE",
                   help="restrict a component (om, reward, quality, probability, selection)")
    p.add_argument("--report", help="pass/fail CSV path")
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("replicate", help="run a preset over functions, instances and seeds")
    _add_config_args(p, with_problem=False)
    p.add_argument("--functions", type=int, nargs="+", default=[1, 2])
    p.add_argument("--instances", type=int, nargs="+", default=[1])
    p.add_argument("--runs", type=int, default=15)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("tune", help="iterated racing over the configuration space")
    p.add_argument("--space", help="parameter-space JSON (default: the full space)")
    p.add_argument("--manifest", help="training-set manifest JSON (default: built-in set)")
    p.add_argument("--dim", type=int, default=5, help="dimension of the built-in training set")
    p.add_argument("--budget", type=int, default=1000, help="total number of runs")
    p.add_argument("--min-instances", type=int, default=5)
    p.add_argument("--survivors-floor", type=int, default=1)
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--evals-per-dim", type=int, default=1000)
    p.add_argument("--cost", choices=("precision", "raw"), default="precision")
    p.add_argument("--starting-presets", action="store_true",
                   help="seed the first race with the four tuned starting configurations")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True, help="winning configuration JSON")
    p.add_argument("--log", help="tuning log CSV")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("ecdf", help="ECDF of (run, target) pairs over budgets")
    p.add_argument("summaries", nargs="+")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_ecdf)

    p = sub.add_parser("art", help="average runtime per target")
    p.add_argument("summaries", nargs="+")
    p.add_argument("--target", type=float, action="append")
    p.add_argument("--bootstrap", type=int, default=0, help="simulated restarts per target")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_art)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigError, UnsupportedFunction, ContractViolation, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RunError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())

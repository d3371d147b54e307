"""Command line entry point (``cycledesign`` / ``python -m cycledesign``)."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .design_space import default_schema, load_schema, read_designs_csv, write_designs_csv


def _evaluators(config):
    from .evaluation import Evaluators

    schema = load_schema(config["schema_path"]) if config.get("schema_path") else default_schema()
    return Evaluators(schema, config)


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_evaluate(args) -> int:
    from .conditions import load_conditions
    from .evaluation import evaluate_design

    config = load_config(args.config)
    ev = _evaluators(config)
    designs = read_designs_csv(args.designs, ev.schema)
    conditions = load_conditions(args.conditions, config)
    if len(conditions) == 1:
        conditions = conditions * len(designs)
    if len(conditions) != len(designs):
        print(f"error: {len(designs)} designs but {len(conditions)} conditions", file=sys.stderr)
        return 2
    reports = [evaluate_design(d, c, ev).to_dict() for d, c in zip(designs, conditions)]
    _write(json.dumps(reports, indent=1, sort_keys=True) + "\n", args.out)
    failed = sum(1 for r in reports if r["errors"])
    if failed:
        print(f"{failed} design(s) had evaluator errors", file=sys.stderr)
    return 0


def cmd_sample_conditions(args) -> int:
    from .conditions import sample_conditions, save_conditions

    config = load_config(args.config)
    ev = _evaluators(config)
    save_conditions(args.out, sample_conditions(args.n, args.seed, config, ev.embedder, ev.schema))
    return 0


def cmd_optimize(args) -> int:
    from .conditions import sample_conditions
    from .harness import build_context
    from .optimize.gradient import grad_penalty_descent
    from .optimize.nsga2 import nsga2
    from .optimize.problem import DesignProblem

    config = load_config(args.config)
    ctx = build_context(config, args.scale, _evaluators(config))
    condition = sample_conditions(1, args.seed, config, ctx.evaluators.embedder, ctx.schema)[0]
    problem = DesignProblem(ctx.evaluators, condition, ctx.weights)
    if args.algo == "nsga2":
        pop = nsga2(problem, config["optimizers"]["nsga2"], seed=args.seed,
                    checkpoint_dir=args.checkpoint_dir, resume=args.resume)
        X, G = pop.X, pop.G
    else:
        res = grad_penalty_descent(problem, config["optimizers"]["grad"], seed=args.seed)
        X, G = res.X, res.G
    feasible = np.all(G <= 0, axis=1)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    designs = ctx.schema.from_mixed(ctx.schema.continuous_to_mixed(X))
    write_designs_csv(out / "designs.csv", designs, ctx.schema)
    summary = {
        "algo": args.algo,
        "seed": args.seed,
        "n_designs": len(designs),
        "validity": float(feasible.mean()),
        "evaluations": problem.n_evaluations,
        "condition": condition.text(),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


def cmd_benchmark(args) -> int:
    from .harness import build_context, run_benchmark

    config = load_config(args.config)
    ctx = build_context(config, args.scale, _evaluators(config))
    run = run_benchmark(args.mode, args.generator, config, args.scale, args.seed, ctx)
    _write(run.to_json(), args.out)
    return 1 if run.aggregate is None else 0


def cmd_report(args) -> int:
    from .harness import BenchmarkRun
    from .report import report

    runs = [BenchmarkRun.load(p) for p in args.run]
    _write(report(runs[0] if len(runs) == 1 else runs, args.format), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cycledesign", description="Bicycle design benchmark tools.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("evaluate", help="score designs under conditions")
    e.add_argument("--designs", required=True, help="design CSV")
    e.add_argument("--conditions", required=True, help="condition JSON (one record, or one per design)")
    e.add_argument("--out", help="output JSON (default stdout)")
    e.add_argument("--config")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("sample-conditions", help="write seeded conditions to a JSON file")
    c.add_argument("--n", type=int, default=10)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.add_argument("--config")
    c.set_defaults(func=cmd_sample_conditions)

    o = sub.add_parser("optimize", help="run an optimizer on one seeded condition")
    o.add_argument("--algo", choices=("nsga2", "grad"), required=True)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--config")
    o.add_argument("--scale", choices=("full", "desk"), default="desk")
    o.add_argument("--out-dir", default="optimize_out")
    o.add_argument("--checkpoint-dir")
    o.add_argument("--resume", action="store_true")
    o.set_defaults(func=cmd_optimize)

    b = sub.add_parser("benchmark", help="run a benchmark protocol")
    b.add_argument("--mode", choices=("unconditional", "conditional"), required=True)
    b.add_argument("--generator", required=True, help="dataset, random, constant, nsga2 or grad")
    b.add_argument("--scale", choices=("full", "desk"), default="desk")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--config")
    b.add_argument("--out", help="structured report path (default stdout)")
    b.set_defaults(func=cmd_benchmark)

    r = sub.add_parser("report", help="render saved runs")
    r.add_argument("--run", nargs="+", required=True)
    r.add_argument("--format", choices=("table", "structured"), default="table")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return int(args.func(args))


if __name__ == "__main__":
    raise SystemExit(main())

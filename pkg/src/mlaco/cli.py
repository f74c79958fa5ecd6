"""Command-line interface: ``mlaco gen | train | solve | bench``.

Exit codes: 0 success, 1 solver error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import glob
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .aco import AcoConfig, ConfigurationError
from .bnp import run_bnp
from .cg import CgConfig, CgStatus, PricingKind, run_cg
from .instance import GenConfig, Instance, ParseError, apply_capacity_multiplier, generate_conflicts, generate_instance, read_instance, write_instance
from .ml import SvmConfig, TrainingError, accuracy, train_svm
from .rng import derive_seeds
from .simplex import LpSolution, LpStatus, format_tableau
from .training import RECORD_ITERATIONS, collect_training_data, write_training_csv

log = logging.getLogger("mlaco")

RESULTS_HEADER = ("instance", "strategy", "multiplier", "status", "lp_objective", "wall_s", "iters", "cols", "fallbacks")

EXIT_OK, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _weights_spec(text: str) -> tuple[int, int]:
    kind, _, rest = text.partition(":")
    parts = rest.split(":")
    if kind != "uniform" or len(parts) != 2:
        raise argparse.ArgumentTypeError("expected uniform:LO:HI")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError("expected uniform:LO:HI with integers") from None


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def _add_gen_args(p: argparse.ArgumentParser, count_default: int) -> None:
    p.add_argument("--items", type=int, default=120)
    p.add_argument("--cap", type=int, default=150, help="base bin capacity")
    p.add_argument("--weights", type=_weights_spec, default=(20, 100), help="uniform:LO:HI")
    p.add_argument("--density", "--conflict-density", dest="density", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=count_default)


def _add_aco_args(p: argparse.ArgumentParser) -> None:
    d = AcoConfig()
    p.add_argument("--alpha", type=float, default=d.alpha)
    p.add_argument("--beta", type=float, default=d.beta)
    p.add_argument("--rho", type=float, default=d.rho)
    p.add_argument("--lambda", dest="lam", type=float, default=d.lam)
    p.add_argument("--aco-iters", type=int, default=d.iterations)
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--rc-threshold", type=float, default=d.rc_threshold)
    p.add_argument("--no-diversity", action="store_true", help="plain repeated sampling without per-item seeds")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--time-limit", type=float, default=1800.0)
    p.add_argument("--model", default=None, help="trained model file (needed by ML pricing kinds)")
    p.add_argument("--max-cols-per-iter", type=int, default=None)
    p.add_argument("--rng-seed", type=int, default=0)
    _add_aco_args(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlaco", description="Column generation and branch-and-price for bin packing with conflicts.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate instance files")
    _add_gen_args(g, 1)
    g.add_argument("--multiplier", type=int, default=1)
    g.add_argument("--out", default=".", help="output directory")

    t = sub.add_parser("train", help="collect pricing data and train the membership model")
    _add_gen_args(t, 20)
    t.add_argument("--instances", nargs="*", default=None, help="instance files instead of generated ones")
    t.add_argument("--multiplier", type=int, default=1)
    t.add_argument("--lam", type=float, default=SvmConfig.lam, help="SVM regularization")
    t.add_argument("--node-budget", type=int, default=None)
    t.add_argument("--instance-time-limit", type=float, default=None)
    t.add_argument("--dump-data", default=None, help="write the training set as CSV")
    t.add_argument("--out", required=True, help="model file")

    s = sub.add_parser("solve", help="solve one instance (LP by CG or IP by branch-and-price)")
    s.add_argument("instance")
    s.add_argument("--conflicts", default=None, help="conflict file; otherwise generated with --conflict-density/--seed")
    s.add_argument("--conflict-density", type=float, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--multiplier", type=int, default=1)
    s.add_argument("--mode", choices=("lp", "ip"), default="lp")
    s.add_argument("--pricing", choices=[k.value for k in PricingKind], default="exact")
    s.add_argument("--node-limit", type=int, default=None)
    s.add_argument("--lp-dump", default=None, help="write the final master LP tableau")
    s.add_argument("--iter-log", default=None, help="per-iteration CSV (lp mode)")
    s.add_argument("--node-log", default=None, help="per-node CSV (ip mode)")
    s.add_argument("--out", default=None, help="result JSON (default stdout)")
    _add_solver_args(s)

    b = sub.add_parser("bench", help="run a grid of instances and strategies")
    b.add_argument("--instances", default=None, help="glob of instance files (conflicts from NAME.conflicts)")
    _add_gen_args(b, 10)
    b.add_argument("--sizes", type=_int_list, default=None, help="comma list of item counts (overrides --items)")
    b.add_argument("--multipliers", type=_int_list, default=[1])
    b.add_argument("--strategies", default="exact,aco", help="comma list of pricing kinds")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", required=True, help="output directory")
    _add_solver_args(b)
    return parser


def _aco_config(args) -> AcoConfig:
    return AcoConfig(
        alpha=args.alpha, beta=args.beta, rho=args.rho, lam=args.lam, iterations=args.aco_iters,
        population=args.population, rc_threshold=args.rc_threshold, diversity=not args.no_diversity,
    )


def _cg_config(args, kind: str) -> CgConfig:
    cfg = CgConfig(
        pricing_kind=PricingKind(kind), time_limit=args.time_limit, rng_seed=args.rng_seed,
        aco=_aco_config(args), model_path=args.model, max_cols_per_iter=args.max_cols_per_iter,
    )
    try:
        cfg.resolve_model()
    except FileNotFoundError:
        raise UsageError(f"--model: cannot read {args.model}") from None
    return cfg


def _generated(args, multiplier: int, sizes=None) -> list[Instance]:
    out = []
    for n in sizes or [args.items]:
        for seed in derive_seeds(args.seed, args.count):
            out.append(generate_instance(n, args.cap, args.weights, GenConfig(args.density, seed, multiplier),
                                         name=f"u{n}_{seed:016x}"))
    return out


def _conflict_path(path: Path) -> Path | None:
    cand = path.with_suffix(".conflicts")
    return cand if cand.exists() else None


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for inst in _generated(args, args.multiplier):
        path = out / f"{inst.name}.txt"
        write_instance(inst, path, path.with_suffix(".conflicts"))
        print(path)
    return EXIT_OK


def cmd_train(args) -> int:
    if args.instances:
        instances = [apply_capacity_multiplier(read_instance(p, _conflict_path(Path(p))), args.multiplier) for p in args.instances]
    else:
        instances = _generated(args, args.multiplier)
    data = collect_training_data(instances, args.seed, RECORD_ITERATIONS, args.node_budget, args.instance_time_limit)
    if args.dump_data:
        write_training_csv(data, args.dump_data)
    pos = sum(e.label for e in data)
    print(f"examples {len(data)} positive {pos} negative {len(data) - pos}")
    model = train_svm(data, cfg=SvmConfig(lam=args.lam, seed=args.seed))
    x = np.array([e.features for e in data])
    y = np.array([e.label for e in data])
    print(f"training accuracy {accuracy(model, x, y):.4f}")
    model.save(args.out)
    print(f"model written to {args.out}")
    return EXIT_OK


def _load_solve_instance(args) -> Instance:
    path = Path(args.instance)
    conflicts = args.conflicts or _conflict_path(path)
    inst = read_instance(path, conflicts)
    if conflicts is None and args.conflict_density is not None:
        inst = generate_conflicts(inst, GenConfig(args.conflict_density, args.seed))
    return apply_capacity_multiplier(inst, args.multiplier)


def _write_lp_dump(path: str, result, n_items: int) -> None:
    status = LpStatus.OPTIMAL if result.status is not CgStatus.INFEASIBLE else LpStatus.INFEASIBLE
    sol = LpSolution(result.lp_objective, result.primal, result.duals, status)
    Path(path).write_text(format_tableau(result.final_columns, n_items, sol))


def _config_echo(args) -> dict:
    keep = {k: v for k, v in vars(args).items() if k not in ("func",)}
    return json.loads(json.dumps(keep, default=str))


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    return obj


def cmd_solve(args) -> int:
    inst = _load_solve_instance(args)
    cfg = _cg_config(args, args.pricing)
    if args.mode == "lp":
        result = run_cg(inst, cfg)
        if args.iter_log:
            Path(args.iter_log).write_text(result.iteration_csv())
        if args.lp_dump:
            _write_lp_dump(args.lp_dump, result, inst.n_items)
    else:
        result = run_bnp(inst, cfg, node_limit=args.node_limit)
        if args.node_log:
            Path(args.node_log).write_text(result.node_csv())
    payload = {"instance": inst.name, "mode": args.mode, "result": result.summary(), "config": _config_echo(args)}
    text = json.dumps(_json_safe(payload), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _bench_cell(inst: Instance, multiplier: int, kind: str, cfg: CgConfig) -> tuple:
    try:
        r = run_cg(inst, dataclasses.replace(cfg, pricing_kind=PricingKind(kind)))
        return (inst.name, kind, multiplier, r.status.value, repr(r.lp_objective), f"{r.wall_time:.3f}",
                r.iterations, r.columns_generated, r.exact_fallback_calls)
    except Exception as exc:  # a failing cell must not stop the grid
        log.error("cell %s/%s failed: %s", inst.name, kind, exc)
        return (inst.name, kind, multiplier, "Error", "nan", "nan", 0, 0, 0)


def summarize(rows, time_limit: float) -> str:
    """Solved counts and mean wall time per (strategy, multiplier); unsolved runs count as ``time_limit``."""
    groups: dict[tuple[str, int], list] = {}
    for r in rows:
        groups.setdefault((r[1], int(r[2])), []).append(r)
    lines = [f"{'strategy':<20} {'mult':>4} {'solved':>8} {'mean_s':>10}"]
    for (kind, mult), rs in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        solved = sum(r[3] == CgStatus.OPTIMAL.value for r in rs)
        times = [float(r[5]) if r[3] == CgStatus.OPTIMAL.value else time_limit for r in rs]
        lines.append(f"{kind:<20} {mult:>4} {f'{solved}/{len(rs)}':>8} {np.mean(times):>10.3f}")
    return "\n".join(lines) + "\n"


def cmd_bench(args) -> int:
    kinds = [k for k in args.strategies.split(",") if k]
    for k in kinds:
        try:
            PricingKind(k)
        except ValueError:
            raise UsageError(f"--strategies: unknown pricing kind {k!r}") from None
    needs_model = any(PricingKind(k).needs_model for k in kinds)
    cfg = _cg_config(args, "mlaco" if needs_model else "exact")

    cells = []
    for m in args.multipliers:
        if args.instances:
            paths = sorted(glob.glob(args.instances))
            if not paths:
                raise UsageError(f"--instances: no files match {args.instances}")
            insts = [apply_capacity_multiplier(read_instance(p, _conflict_path(Path(p))), m) for p in paths]
        else:
            insts = _generated(args, m, args.sizes)
        cells += [(inst, m, k) for inst in insts for k in kinds]
    if not cells:
        raise UsageError("bench plan has no instances")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            futures = [pool.submit(_bench_cell, inst, m, k, cfg) for inst, m, k in cells]
            rows = [f.result() for f in futures]
    else:
        rows = [_bench_cell(inst, m, k, cfg) for inst, m, k in cells]

    with (out / "results.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        w.writerows(rows)
    summary = summarize(rows, args.time_limit)
    summary += f"# jobs={args.jobs} (wall times measured under this concurrency)\n"
    (out / "summary.txt").write_text(summary)
    print(summary, end="")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "solve": cmd_solve, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigurationError, ParseError, ValueError) as exc:
        print(f"mlaco {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE if not isinstance(exc, TrainingError) else EXIT_SOLVER
    except OSError as exc:
        print(f"mlaco {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except Exception as exc:
        print(f"mlaco {args.command}: solver error: {exc!r}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: solve, reduce, export, verify, bench and generate."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .bnb import LIMIT, OPTIMAL, SolveParams, SolveReport, solve_milp
from .instance import (
    BaseGraph,
    GeneratorParams,
    Instance,
    format_number,
    generate_instance,
    parse_base_stp,
    read_stp,
    write_stp,
)
from .milp import export_lp, export_mps
from .popmodel import VARIANTS, ModelVariant, PopVariableIndex, build_pop, decode_solution, start_assignment
from .reduce import ReductionLog, eurc_reduce, shortest_paths, trim_unreachable
from .tree import SteinerTree
from .verify import VerifyReport, verify_solution

log = logging.getLogger("stprbh")

SOLVE_VARIANTS = ("pop1", "pop1r", "pop2", "pop2r")
BENCH_HEADER = ["instance", "V", "E", "Vr", "Er", "variant", "status", "lb", "ub", "time_s"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_LIMIT = 2
EXIT_INVALID = 3


@dataclass
class PipelineResult:
    instance: Instance
    model_instance: Instance
    reduction: ReductionLog | None
    index: PopVariableIndex
    report: SolveReport
    tree: SteinerTree | None
    check: VerifyReport | None


def run_pipeline(instance: Instance, variant: ModelVariant, params: SolveParams | None = None) -> PipelineResult:
    """Reduce (for the R variants), build, solve from the root start, decode and verify.

    EURC only deletes edges, so node ids and every tree of the reduced graph
    carry over to the original instance unchanged.
    """
    reduction = None
    work = instance
    if variant.apply_eurc:
        work, reduction = eurc_reduce(instance)
    model, index = build_pop(work, variant)
    report = solve_milp(model, params, start=start_assignment(work, model, index))
    tree = check = None
    if report.incumbent is not None:
        tree = decode_solution(work, index, report.incumbent)
        check = verify_solution(instance, tree)
    return PipelineResult(instance, work, reduction, index, report, tree, check)


# ---------------------------------------------------------------------------
# Solution files


def format_solution(tree: SteinerTree) -> str:
    lines = [f"OBJ {format_number(tree.objective)}"]
    lines += [f"ARC {u + 1} {v + 1}" for u, v in sorted(tree.arcs)]
    return "\n".join(lines) + "\n"


def parse_solution(text: str) -> SteinerTree:
    """Read ``OBJ`` / ``ARC`` lines (1-based node ids) into an unchecked tree."""
    objective = math.nan
    arcs = []
    root = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0].upper()
        try:
            if key == "OBJ" and len(tok) == 2:
                objective = float(tok[1])
            elif key == "ARC" and len(tok) == 3:
                arcs.append((int(tok[1]) - 1, int(tok[2]) - 1))
            elif key == "ROOT" and len(tok) == 2:
                root = int(tok[1]) - 1
            else:
                raise ValueError
        except ValueError:
            raise ValueError(f"line {lineno}: cannot read {raw!r}") from None
    return SteinerTree(-1 if root is None else root, tuple(arcs), objective)


# ---------------------------------------------------------------------------
# Commands


def _params(args) -> SolveParams:
    return SolveParams(
        time_limit_seconds=args.time_limit,
        mip_gap=args.mip_gap,
        node_limit=args.node_limit,
        branching_rule=args.branching,
        seed=args.seed,
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    instance = read_stp(args.path)
    result = run_pipeline(instance, VARIANTS[args.variant], _params(args))
    report = result.report
    data = report.to_dict(with_incumbent=False)
    timing = {"wall_time": data.pop("wall_time")}
    payload = {"instance": instance.name, "variant": args.variant, **data}
    if result.tree is not None:
        payload["objective"] = result.tree.objective
        payload["arcs"] = [[u + 1, v + 1] for u, v in sorted(result.tree.arcs)]
        payload["valid"] = result.check.valid
        payload["violations"] = result.check.violations
    if result.reduction is not None:
        payload["removed_edges"] = len(result.reduction.removed_edges)
    payload["timing"] = timing
    _emit(json.dumps(payload, indent=2) + "\n", args.out)

    if result.tree is None or not result.check.valid:
        log.error("no verified incumbent: %s", result.check.violations if result.check else report.message)
        return EXIT_ERROR
    if args.write_solution:
        Path(args.write_solution).write_text(format_solution(result.tree))
    if report.status == OPTIMAL:
        return EXIT_OK
    if report.status == LIMIT:
        return EXIT_LIMIT
    return EXIT_ERROR


def cmd_reduce(args) -> int:
    instance = read_stp(args.path)
    dist = shortest_paths(instance)
    reduced, first = eurc_reduce(instance, dist)
    trimmed, second = trim_unreachable(reduced)
    combined = first.merge(second)
    _emit(write_stp(trimmed), args.out)
    if args.log:
        Path(args.log).write_text(combined.to_json() + "\n")
    if args.out:
        summary = {
            "instance": instance.name,
            "original": [instance.node_count, instance.edge_count],
            "reduced": [trimmed.node_count, trimmed.edge_count],
            "removed_edges": len(combined.removed_edges),
        }
        print(json.dumps(summary))
    return EXIT_OK


def cmd_export(args) -> int:
    instance = read_stp(args.path)
    variant = VARIANTS[args.variant]
    if variant.apply_eurc:
        instance, _ = eurc_reduce(instance)
    model, _ = build_pop(instance, variant)
    text = export_lp(model) if args.format == "lp" else export_mps(model)
    _emit(text, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    instance = read_stp(args.instance)
    claimed = parse_solution(Path(args.solution).read_text())
    problems = []
    if claimed.root not in (-1, instance.root):
        problems.append(f"solution root {claimed.root + 1} is not the instance root {instance.root + 1}")
    tree = SteinerTree(instance.root, claimed.arcs, claimed.objective)
    report = verify_solution(instance, tree)
    if problems:
        report.violations[:0] = problems
        report.valid = False
    _emit(report.to_json() + "\n", args.out)
    return EXIT_OK if report.valid else EXIT_INVALID


def _bench_one(job) -> list[list[str]]:
    path, variants, params = job
    instance = read_stp(path)
    reduced, _ = eurc_reduce(instance)
    rows = []
    for name in variants:
        t0 = time.perf_counter()
        result = run_pipeline(instance, VARIANTS[name], params)
        elapsed = time.perf_counter() - t0
        r = result.report
        status = r.status if result.check is None or result.check.valid else "invalid"
        rows.append([
            instance.name or Path(path).stem,
            str(instance.node_count),
            str(instance.edge_count),
            str(reduced.node_count),
            str(reduced.edge_count),
            name,
            status,
            format_number(r.lb) if math.isfinite(r.lb) else "",
            format_number(r.ub) if math.isfinite(r.ub) else "",
            f"{elapsed:.3f}",
        ])
    return rows


def bench_rows(paths, variants, params: SolveParams, threads: int = 1) -> list[list[str]]:
    """CSV rows in input order; ``threads > 1`` solves instances in worker processes."""
    jobs = [(str(p), tuple(variants), params) for p in paths]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_bench_one, jobs))
    else:
        chunks = [_bench_one(job) for job in jobs]
    return [row for chunk in chunks for row in chunk]


def cmd_bench(args) -> int:
    if not Path(args.dir).is_dir():
        raise ValueError(f"{args.dir} is not a directory")
    paths = sorted(Path(args.dir).glob("*.stp"))
    variants = [v.strip().lower() for v in args.variants.split(",") if v.strip()]
    unknown = [v for v in variants if v not in SOLVE_VARIANTS]
    if unknown:
        raise ValueError(f"unknown variants {unknown}")
    rows = bench_rows(paths, variants, _params(args), args.threads)
    handle = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(BENCH_HEADER)
        writer.writerows(rows)
    finally:
        if args.out:
            handle.close()
    return EXIT_OK


def cmd_generate(args) -> int:
    path = Path(args.base)
    base: BaseGraph = parse_base_stp(path.read_text(), path.stem)
    params = GeneratorParams(
        base=base,
        revenue_cap=args.revenue_cap,
        budget_divisor=args.budget_divisor,
        hop_limit=args.hop_limit,
        rng_seed=args.seed,
        divisor_in_name=args.divisor_in_name,
    )
    _emit(write_stp(generate_instance(params)), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--time-limit", type=float, default=math.inf, help="seconds (default: none)")
    p.add_argument("--mip-gap", type=float, default=1e-5)
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--branching", choices=["most-fractional", "pseudo-cost-lite"], default="most-fractional")
    p.add_argument("--seed", type=int, default=0, help="tie-break seed for pseudo-cost branching")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stprbh", description="Budget- and hop-constrained Steiner trees with revenues.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an STP instance")
    p.add_argument("path")
    p.add_argument("--variant", choices=SOLVE_VARIANTS, default="pop2")
    _add_solver_flags(p)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--write-solution", metavar="PATH", help="write the tree as OBJ/ARC lines")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("reduce", help="apply EURC and drop nodes beyond the hop limit")
    p.add_argument("path")
    p.add_argument("--out", help="reduced STP file (default: stdout)")
    p.add_argument("--log", help="JSON reduction log")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("export", help="write the model as LP or MPS")
    p.add_argument("path")
    p.add_argument("--format", choices=["lp", "mps"], default="lp")
    p.add_argument("--variant", choices=["basic", *SOLVE_VARIANTS], default="pop2")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("verify", help="check a solution file against an instance")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="solve every *.stp in a directory and print CSV")
    p.add_argument("dir")
    p.add_argument("--variants", default="pop2", help="comma-separated, e.g. pop1,pop1r,pop2,pop2r")
    p.add_argument("--threads", type=int, default=1, help="worker processes (1 = in-process)")
    _add_solver_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="draw revenues, budget and hop limit for a base graph")
    p.add_argument("base", help="STP file with graph and terminals; the first terminal becomes the root")
    p.add_argument("--revenue-cap", type=int, required=True, help="revenues drawn from 1..R")
    p.add_argument("--budget-divisor", type=int, choices=[5, 10], default=10)
    p.add_argument("--hop-limit", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--divisor-in-name", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"stprbh {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

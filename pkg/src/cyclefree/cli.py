"""Command-line front end: solve, audit, generate, experiment.

Exit codes: 0 ok, 2 infeasible (or heuristic stuck), 3 budget exhausted,
4 precondition fault, 5 I/O or format error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from collections import Counter
from pathlib import Path

from cyclefree.core import (
    UNBOUNDED,
    Assignment,
    ReviewInstance,
    SolveParams,
    find_review_cycles,
    is_valid_assignment,
    validate_instance,
)
from cyclefree.errors import (
    FormatError,
    GreedyStuckError,
    ReviewError,
    SwapExhaustedError,
)
from cyclefree.exact import (
    BACKENDS,
    FEASIBLE,
    INFEASIBLE,
    NO_SOLUTION,
    Limits,
    max_weight_assignment,
    max_weight_zcycle_free,
)
from cyclefree.fileformat import (
    dumps,
    instance_to_json,
    load_assignment,
    load_instance,
    save_assignment,
    save_instance,
)
from cyclefree.gadgets import (
    gen_2in4_gadget,
    gen_mis_gadget,
    gen_sat_gadget,
    pad_min_degrees,
    qualifications_to_weights,
)
from cyclefree.heuristics import greedy_dag, greedy_swap
from cyclefree.instances import RandomControls, SampleSpec, gen_random, load_dataset, sample_instance

EXIT_OK, EXIT_INFEASIBLE, EXIT_BUDGET, EXIT_PRECONDITION, EXIT_IO = 0, 2, 3, 4, 5
SOLVER_NAMES = ("flow", "exact-zfree", "greedy-dag", "greedy-swap")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, not "infeasible" (argparse would use 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(f"{self.prog}: {message}", EXIT_IO)


def _parse_params(text: str) -> SolveParams:
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise CliError(f"--params expects c,d[,z], got {text!r}", EXIT_IO)
    try:
        c, d = int(parts[0]), int(parts[1])
        z = 2 if len(parts) == 2 else (UNBOUNDED if parts[2] == UNBOUNDED else int(parts[2]))
        return SolveParams(c, d, z)
    except ValueError as exc:
        raise CliError(f"bad --params {text!r}: {exc}", EXIT_IO) from None


def _parse_z(text: str):
    if text == UNBOUNDED:
        return UNBOUNDED
    try:
        z = int(text)
    except ValueError:
        raise CliError(f"bad z {text!r}", EXIT_IO) from None
    if z < 1:
        raise CliError("z must be at least 1", EXIT_IO)
    return z


def _parse_clauses(text: str) -> list[tuple[int, ...]]:
    """'1,2,-3;-1,2,3' -> [(1, 2, -3), (-1, 2, 3)]"""
    try:
        return [tuple(int(x) for x in cl.split(",")) for cl in text.split(";") if cl.strip()]
    except ValueError:
        raise CliError(f"bad clause list {text!r}", EXIT_IO) from None


def _read_dimacs(path) -> list[tuple[int, ...]]:
    clauses, current = [], []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line[0] in "cp%":
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(tuple(current))
    return clauses


def _unit_weights(instance: ReviewInstance) -> ReviewInstance:
    return ReviewInstance(
        instance.agents,
        instance.papers,
        instance.authorship,
        instance.qualification,
        None,
        instance.self_review_forbidden,
    )


def _emit(text: str, path) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_checked(path) -> ReviewInstance:
    instance = load_instance(path)
    problems = validate_instance(instance)
    if problems:
        raise CliError(f"invalid instance {path}: " + "; ".join(problems[:5]), EXIT_IO)
    return instance


def cmd_solve(args) -> int:
    instance = _load_checked(args.instance)
    params = _parse_params(args.params)
    params = SolveParams(params.c_reviewer, params.d_paper, params.z, weighted=args.weighted)
    if args.weighted and not instance.is_weighted:
        raise CliError("--weighted needs an instance with weights", EXIT_PRECONDITION)
    target = instance if args.weighted else _unit_weights(instance)
    doc = {"solver": args.solver, "params": [params.c_reviewer, params.d_paper, params.z]}
    code = EXIT_OK
    assignment: Assignment | None = None
    if args.solver == "flow":
        assignment, stats = max_weight_assignment(target, params)
        doc.update(stats.to_json(args.timing))
        if assignment is None:
            code = EXIT_INFEASIBLE
    elif args.solver == "exact-zfree":
        limits = Limits(args.budget_nodes, args.budget_seconds)
        assignment, stats = max_weight_zcycle_free(target, params, limits, args.backend)
        doc.update(stats.to_json(args.timing))
        code = {INFEASIBLE: EXIT_INFEASIBLE, NO_SOLUTION: EXIT_BUDGET, FEASIBLE: EXIT_BUDGET}.get(
            stats.status, EXIT_OK
        )
    else:
        counter: Counter = Counter()
        try:
            if args.solver == "greedy-dag":
                assignment = greedy_dag(target, params.d_paper, counter=counter)
            else:
                assignment = greedy_swap(target, params, counter=counter)
            doc["status"] = "ok"
        except SwapExhaustedError as exc:
            doc.update(status="stuck", error=str(exc))
            code = EXIT_INFEASIBLE
        except GreedyStuckError as exc:
            doc.update(status="stuck", error=str(exc))
            code = EXIT_PRECONDITION
        doc["counters"] = dict(sorted(counter.items()))
        if assignment is not None:
            doc["objective"] = sum(target.weight(a, p) for a, p in assignment)
    if assignment is not None:
        doc["n_reviews"] = len(assignment)
        doc["valid"] = bool(is_valid_assignment(instance, assignment, params))
        if args.out:
            save_assignment(assignment, args.out, instance)
    if args.stats:
        _emit(dumps(doc), args.stats)
    else:
        _emit(json.dumps(doc, sort_keys=False) + "\n", None)
    if code != EXIT_OK:
        print(f"solve: {doc.get('status')}: {doc.get('error', 'no assignment within limits')}",
              file=sys.stderr)
    return code


def cmd_audit(args) -> int:
    instance = _load_checked(args.instance)
    assignment = load_assignment(args.assignment)
    z = _parse_z(args.z)
    foreign = [e for e in sorted(assignment) if e not in instance.qualification]
    if foreign:
        raise CliError(f"assignment uses foreign edges, e.g. {foreign[0]}", EXIT_PRECONDITION)
    report = find_review_cycles(instance, assignment, z)
    _emit(json.dumps(report.to_json(), indent=1) + "\n", args.out)
    if args.csv:
        load_a, load_p = Counter(), Counter()
        for a, p in assignment:
            load_a[a] += 1
            load_p[p] += 1
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "id", "reviews", "in_cycle"])
        for a in instance.agents:
            w.writerow(["agent", a, load_a[a], int(a in report.agents_in_cycle)])
        for p in instance.papers:
            w.writerow(["paper", p, load_p[p], int(p in report.papers_in_cycle)])
        Path(args.csv).write_text(buf.getvalue(), encoding="utf-8")
    return EXIT_OK


def cmd_generate(args) -> int:
    kind = args.generator
    if kind == "random":
        controls = RandomControls(
            min_authors=args.min_authors,
            max_authors=args.max_authors,
            max_papers_per_author=args.max_papers_per_author,
            conflicts=args.conflicts,
            min_qualifications_per_agent=args.min_qualifications,
            min_reviewers_per_paper=args.min_reviewers,
            max_weight=args.max_weight,
        )
        instance = gen_random(args.agents, args.papers, controls, args.seed)
    elif kind in ("sat", "2in4"):
        if (args.clauses is None) == (args.dimacs is None):
            raise CliError("give exactly one of --clauses and --dimacs", EXIT_IO)
        try:
            clauses = _parse_clauses(args.clauses) if args.clauses else _read_dimacs(args.dimacs)
        except (OSError, ValueError) as exc:
            raise CliError(f"cannot read formula: {exc}", EXIT_IO) from None
        instance = gen_sat_gadget(clauses) if kind == "sat" else gen_2in4_gadget(clauses)
    elif kind == "mis":
        try:
            doc = json.loads(Path(args.graph).read_text(encoding="utf-8"))
            edges, classes = doc["edges"], doc["classes"]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise CliError(f"cannot read graph: {exc!r}", EXIT_IO) from None
        instance = gen_mis_gadget(edges, classes)
    elif kind == "pad":
        instance = pad_min_degrees(_load_checked(args.instance), args.delta)
    elif kind == "weights":
        instance = qualifications_to_weights(_load_checked(args.instance))
    else:  # sample
        dataset = load_dataset(args.dataset, args.authorship)
        instance = sample_instance(dataset, SampleSpec(args.papers, args.ratio, args.seed))
    if args.out:
        save_instance(instance, args.out)
    else:
        _emit(dumps(instance_to_json(instance)), None)
    return EXIT_OK


def cmd_experiment(args) -> int:
    from cyclefree.experiment import ExperimentSpec, run_experiment

    try:
        doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read spec: {exc}", EXIT_IO) from None
    except ValueError as exc:
        raise CliError(f"spec is not JSON: {exc}", EXIT_IO) from None
    spec = ExperimentSpec.from_json(doc, base_dir=Path(args.spec).parent)
    out = args.out or spec.output
    if out is None:
        raise CliError("no output directory (--out or spec.output)", EXIT_IO)
    rows, summary = run_experiment(spec, out)
    print(f"experiment: {len(rows)} rows written to {out}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cyclefree", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="compute an assignment")
    p.add_argument("--instance", required=True)
    p.add_argument("--params", required=True, help="c,d[,z]; z may be 'unbounded'")
    p.add_argument("--solver", choices=SOLVER_NAMES, default="flow")
    p.add_argument("--weighted", action="store_true", help="maximize weights instead of counts")
    p.add_argument("--budget-nodes", type=int, default=Limits.max_nodes)
    p.add_argument("--budget-seconds", type=float, default=Limits.max_seconds)
    p.add_argument(
        "--backend", choices=BACKENDS, default="bnb",
        help="exact-zfree search: built-in branch and bound or HiGHS (needs scipy)",
    )
    p.add_argument("--out", help="assignment file")
    p.add_argument("--stats", help="stats JSON file (default: stdout)")
    p.add_argument("--timing", action="store_true", help="include wall time in stats")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("audit", help="report review cycles of an assignment")
    p.add_argument("--instance", required=True)
    p.add_argument("--assignment", required=True)
    p.add_argument("--z", default="2")
    p.add_argument("--out", help="report JSON (default: stdout)")
    p.add_argument("--csv", help="per-agent/per-paper exposure CSV")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("generate", help="write an instance file")
    gens = p.add_subparsers(dest="generator", required=True, parser_class=_Parser)
    g = gens.add_parser("random")
    g.add_argument("--agents", type=int, required=True)
    g.add_argument("--papers", type=int, required=True)
    g.add_argument("--min-authors", type=int, default=1)
    g.add_argument("--max-authors", type=int, default=1)
    g.add_argument("--max-papers-per-author", type=int, default=1)
    g.add_argument("--conflicts", type=int, default=0)
    g.add_argument("--min-qualifications", type=int)
    g.add_argument("--min-reviewers", type=int)
    g.add_argument("--max-weight", type=int)
    for name in ("sat", "2in4"):
        g = gens.add_parser(name)
        g.add_argument("--clauses", help="e.g. '1,2,3;-1,-2,-3'")
        g.add_argument("--dimacs", help="DIMACS CNF file")
    g = gens.add_parser("mis")
    g.add_argument("--graph", required=True, help='JSON {"edges": [[u, v]], "classes": [[...]]}')
    g = gens.add_parser("pad")
    g.add_argument("--instance", required=True)
    g.add_argument("--delta", type=int, required=True)
    g = gens.add_parser("weights")
    g.add_argument("--instance", required=True)
    g = gens.add_parser("sample")
    g.add_argument("--dataset", required=True, help="directory or similarity CSV")
    g.add_argument("--authorship", help="authorship CSV when --dataset is a file")
    g.add_argument("--papers", type=int, required=True)
    g.add_argument("--ratio", default="0.5")
    for g in gens.choices.values():
        g.add_argument("--seed", type=int, default=0)
        g.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("experiment", help="run an experiment spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", help="output directory (overrides 'output' in --spec)")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return exc.code
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ReviewError, ValueError) as exc:
        print(f"precondition: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())

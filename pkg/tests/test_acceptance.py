"""Acceptance criteria 1-7.  Each test prints one PASS/FAIL line."""

import contextlib
import json
import os
import random
import subprocess
import sys
from collections import Counter
from pathlib import Path

import pytest

from conftest import tiny_instances
from oracles import (
    bounded_3cnf_classes,
    cnf_satisfiable,
    has_any_cycle,
    multicolored_independent_set,
    two_in_four_satisfiable,
)
from test_gadgets import MIS_CASES, TWO_IN_FOUR
from test_heuristics import _chain, _dag_conforming_instance
from cyclefree import (
    UNBOUNDED,
    RandomControls,
    SolveParams,
    brute_force_oracle,
    check_cor1,
    check_prop3,
    check_thm4,
    find_review_cycles,
    gen_2in4_gadget,
    gen_mis_gadget,
    gen_random,
    gen_sat_gadget,
    greedy_dag,
    greedy_swap,
    is_valid_assignment,
    max_weight_assignment,
    max_weight_zcycle_free,
)
from cyclefree.experiment import ExperimentSpec, monotonicity_violations, ordering_violations, run_experiment


@contextlib.contextmanager
def criterion(capsys, number, title):
    notes = []
    try:
        yield notes
    except BaseException as exc:
        with capsys.disabled():
            print(f"\ncriterion {number} FAIL: {title} ({type(exc).__name__}: {str(exc)[:200]})")
        raise
    with capsys.disabled():
        print(f"\ncriterion {number} PASS: {title}" + (f" ({'; '.join(notes)})" if notes else ""))


def _matches_oracle(instance, c, d, zs=(1, 2, 3)):
    """Flow and every z-cycle-free optimum agree with exhaustive search."""
    params = SolveParams(c, d, 2)
    unconstrained = brute_force_oracle(instance, params, cycle_free=False, max_edges=None)[0]
    if max_weight_assignment(instance, params)[1].objective != unconstrained:
        return False
    for z in zs:
        params = SolveParams(c, d, z)
        if max_weight_zcycle_free(instance, params)[1].objective != brute_force_oracle(
            instance, params, max_edges=None
        )[0]:
            return False
    return True


def test_criterion_1_oracle_equivalence(capsys):
    with criterion(capsys, 1, "flow and z-cycle-free optima equal the brute-force oracle") as notes:
        randoms = [x for seed in range(4) for x in tiny_instances(60, 1000 + seed)]
        assert all(len(inst.qualification) <= 12 for inst, _, _ in randoms)
        bad = [i for i, (inst, c, d) in enumerate(randoms) if not _matches_oracle(inst, c, d)]
        assert bad == [], f"random instances {bad[:5]} disagree"
        gadgets = [(gen_sat_gadget(f), 1, 1) for k in (1, 2, 3) for f in bounded_3cnf_classes(k)]
        gadgets += [(gen_2in4_gadget(f), 2, 2) for f in TWO_IN_FOUR if len(f) <= 2]
        # three-class graphs cost about 20 s per exhaustive solve; they are
        # checked for feasibility under criterion 5
        gadgets += [(gen_mis_gadget(e, cl), 1, 1) for e, cl, _ in MIS_CASES if len(cl) <= 2]
        bad = [i for i, (inst, c, d) in enumerate(gadgets) if not _matches_oracle(inst, c, d)]
        assert bad == [], f"gadgets {bad[:5]} disagree"
        notes.append(f"{len(randoms)} random instances, {len(gadgets)} gadgets, z in 1..3")


def _swap_guarantee_instances(z, count):
    rnd = random.Random(40 + z)
    params = SolveParams(6, 3, z)
    out = []
    while len(out) < count:
        if z == 1:
            n_p = rnd.randint(20, 60)
            n_a = rnd.randint(n_p, n_p + 30)
        else:
            n_p = rnd.randint(40, 110)
            n_a = rnd.randint(max(n_p, 90), 130)
        inst = gen_random(n_a, n_p, RandomControls(1, 1, 1, rnd.randint(0, 4)), rnd.getrandbits(64))
        if check_thm4(inst, params).holds:
            out.append(inst)
    return out


def test_criterion_2_swap_guarantee(capsys):
    with criterion(capsys, 2, "greedy_swap succeeds wherever the agent-count guarantee holds") as notes:
        total = 0
        for z in (1, 2):
            params = SolveParams(6, 3, z)
            for inst in _swap_guarantee_instances(z, 250):
                out = greedy_swap(inst, params)
                assert is_valid_assignment(inst, out, params)
                assert not find_review_cycles(inst, out, z).has_cycle
                total += 1
        notes.append(f"{total} instances, c=6 d=3 z in 1..2, zero faults")


def test_criterion_3_greedy_dag(capsys):
    with criterion(capsys, 3, "greedy_dag is acyclic and d-d-valid; operation count is linear") as notes:
        rnd = random.Random(33)
        for seed in range(200):
            inst, d = _dag_conforming_instance(rnd, 5000 + seed)
            assert check_prop3(inst, d).holds
            out = greedy_dag(inst, d)
            assert is_valid_assignment(inst, out, SolveParams(d, d))
            assert not has_any_cycle(inst, out.reviews)
            assert not find_review_cycles(inst, out, UNBOUNDED).has_cycle
        ratios = []
        for n in (10**3, 10**4, 10**5):
            inst = _chain(n // 11)
            counter = Counter()
            greedy_dag(inst, 2, counter=counter)
            ratios.append(counter["ops"] / (inst.n_agents + inst.n_papers + len(inst.qualification)))
        assert max(ratios) / min(ratios) <= 3
        notes.append("200 instances; ops per input item " + ", ".join(f"{r:.3f}" for r in ratios))


def test_criterion_4_conference_arithmetic(capsys):
    with criterion(capsys, 4, "large-conference agent-count check") as notes:
        verdict = check_cor1(9251, 700, 10, 2)
        assert verdict.holds
        (cond,) = verdict.conditions
        assert (cond.left, cond.right) == (9245, 9150)
        notes.append(f"{cond.left} > {cond.right}")


def test_criterion_5_gadget_fidelity(capsys):
    def feasible(instance, params):
        return brute_force_oracle(instance, params, max_edges=None)[0] is not None

    with criterion(capsys, 5, "gadget feasibility equals the source problem") as notes:
        formulas = [f for k in (1, 2, 3) for f in bounded_3cnf_classes(k)]
        for f in formulas:
            assert feasible(gen_sat_gadget(f), SolveParams(1, 1, 2)) == cnf_satisfiable(f), f
        for f in TWO_IN_FOUR:
            assert feasible(gen_2in4_gadget(f), SolveParams(2, 2, 3)) == two_in_four_satisfiable(f), f
        for edges, classes, _ in MIS_CASES:
            expected = multicolored_independent_set(edges, classes)
            assert feasible(gen_mis_gadget(edges, classes), SolveParams(1, 1, 2)) == expected, classes
        notes.append(
            f"{len(formulas)} 3-CNF classes, {len(TWO_IN_FOUR)} 2-in-4 formulas, {len(MIS_CASES)} graphs"
        )


ICLR = os.environ.get("CYCLEFREE_ICLR_DATA")


def _mean(rows, solver, z=None, col="normalized_weight", n_papers=None):
    vals = [
        float(r[col])
        for r in rows
        if r["solver"] == solver
        and (z is None or r["z"] == z)
        and (n_papers is None or r["n_papers"] == n_papers)
        and r[col] is not None
    ]
    return sum(vals) / len(vals) if vals else None


def test_criterion_6_experiment(capsys, tmp_path):
    if ICLR:
        title = "desk-scale replica on the ICLR 2018 data"
        source = {"kind": "dataset", "path": ICLR, "n_papers": [150, 200, 250], "ratios": [0.5]}
        reps, backend = 10, "auto"
    else:
        title = "ordering and monotonicity invariants on synthetic data (no ICLR data set)"
        source = {"kind": "synthetic", "n_papers": [100, 150], "ratios": [0.5],
                  "n_authors": 2500, "n_dataset_papers": 900}
        reps, backend = 2, "auto"
    with criterion(capsys, 6, title) as notes:
        spec = ExperimentSpec.from_json({
            "source": source,
            "params": {"c": 6, "d": 3},
            "solvers": [{"name": "optimal"}, {"name": "optimal-z-cycle-free", "z": 2}]
            + [{"name": "heuristic-z-cycle-free", "z": z} for z in (2, 3, 4)],
            "repetitions": reps,
            "backend": backend,
            "workers": 4 if ICLR else 1,
        })
        rows, _ = run_experiment(spec, tmp_path / "out")
        assert ordering_violations(rows) == []
        assert monotonicity_violations(rows) == []
        assert all(r["objective"] is not None for r in rows if r["solver"] == "optimal")
        exact = _mean(rows, "optimal-z-cycle-free", 2)
        heuristic = [_mean(rows, "heuristic-z-cycle-free", z) for z in (2, 3, 4)]
        notes.append(f"optimal 2-free {exact:.4f}, heuristic z=2/3/4 "
                     + "/".join("none solved" if h is None else f"{h:.4f}" for h in heuristic))
        if ICLR:
            assert exact >= 0.99 - 0.02
            assert all(h is not None and abs(h - 0.97) <= 0.02 for h in heuristic)
            exposure = [_mean(rows, "optimal", None, f"agents_le{k}", 150) for k in (2, 3, 4)]
            notes.append("exposure " + "/".join(f"{e:.3f}" for e in exposure))
            for got, want in zip(exposure, (0.40, 0.58, 0.76)):
                assert abs(got - want) <= 0.02
        else:
            assert 0 < exact <= 1
            assert all(h is None or 0 < h <= exact for h in heuristic)
            assert None not in heuristic[:2]


def _run_all_commands(workdir: Path, env) -> dict:
    workdir.mkdir()

    def cli(*args):
        subprocess.run([sys.executable, "-m", "cyclefree", *map(str, args)], cwd=workdir, env=env,
                       capture_output=True, check=False)

    (workdir / "graph.json").write_text(json.dumps({"edges": [["u", "v"]], "classes": [["u"], ["v", "w"]]}))
    data = workdir / "data"
    data.mkdir()
    (data / "similarity.csv").write_text(
        "reviewer_id,paper_id,similarity\n"
        + "".join(f"u{i},P{j},0.{(7 * i + 3 * j) % 10}1\n" for i in range(12) for j in range(12))
    )
    (data / "authorship.csv").write_text("paper_id,author_id\n" + "".join(f"P{j},u{j}\n" for j in range(12)))
    cli("generate", "random", "--agents", 40, "--papers", 30, "--conflicts", 3, "--max-weight", 50,
        "--seed", 7, "--out", "random.json")
    cli("generate", "sat", "--clauses", "1,2,3;-1,-2,4", "--out", "sat.json")
    cli("generate", "2in4", "--clauses", "1,-1,2,-2;1,-1,2,-2", "--out", "2in4.json")
    cli("generate", "mis", "--graph", "graph.json", "--out", "mis.json")
    cli("generate", "pad", "--instance", "sat.json", "--delta", 3, "--out", "pad.json")
    cli("generate", "weights", "--instance", "sat.json", "--out", "weights.json")
    cli("generate", "sample", "--dataset", "data", "--papers", 8, "--ratio", "0.5", "--seed", 3,
        "--out", "sample.json")
    for solver, params in (("flow", "4,3"), ("exact-zfree", "4,3,2"), ("greedy-swap", "4,3,2")):
        cli("solve", "--instance", "random.json", "--params", params, "--weighted", "--solver", solver,
            "--out", f"{solver}.json", "--stats", f"{solver}.stats.json")
    cli("solve", "--instance", "sat.json", "--params", "1,1,2", "--solver", "exact-zfree",
        "--out", "sat.assignment.json", "--stats", "sat.stats.json")
    cli("solve", "--instance", "random.json", "--params", "1,1", "--solver", "greedy-dag",
        "--stats", "dag.stats.json")
    cli("audit", "--instance", "random.json", "--assignment", "flow.json", "--z", 4,
        "--out", "audit.json", "--csv", "audit.csv")
    (workdir / "spec.json").write_text(json.dumps({
        "source": {"kind": "synthetic", "n_papers": [12], "ratios": [0.5], "n_authors": 40},
        "params": {"c": 6, "d": 3},
        "solvers": [{"name": "optimal"}, {"name": "optimal-z-cycle-free", "z": 2},
                    {"name": "heuristic-z-cycle-free", "z": 2}],
        "repetitions": 2,
        "output": "experiment",
    }))
    cli("experiment", "--spec", "spec.json")
    return {str(p.relative_to(workdir)): p.read_bytes() for p in sorted(workdir.rglob("*")) if p.is_file()}


def test_criterion_7_determinism(capsys, tmp_path):
    with criterion(capsys, 7, "repeated runs of every command give identical bytes") as notes:
        runs = []
        for i, hash_seed in enumerate(("1", "2")):
            env = dict(os.environ, PYTHONHASHSEED=hash_seed)
            runs.append(_run_all_commands(tmp_path / f"run{i}", env))
        produced = set(runs[0]) - {"graph.json", "spec.json", "data/similarity.csv", "data/authorship.csv"}
        assert len(produced) == 20, sorted(produced)
        assert runs[0] == runs[1]
        notes.append(f"{len(produced)} output files, two processes with different hash seeds")

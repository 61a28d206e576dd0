import csv
import json
import subprocess
import sys

import pytest

from conftest import make_instance
from cyclefree import RandomControls, SolveParams, gen_random, is_valid_assignment
from cyclefree.cli import main
from cyclefree.fileformat import load_assignment, load_instance, save_assignment, save_instance
from cyclefree import Assignment


@pytest.fixture
def mutual_file(tmp_path, mutual_pair):
    path = tmp_path / "mutual.json"
    save_instance(mutual_pair, path)
    return path


@pytest.fixture
def random_file(tmp_path):
    path = tmp_path / "random.json"
    save_instance(gen_random(30, 20, RandomControls(1, 2, 2, 3, max_weight=100), 11), path)
    return path


def _run(*argv):
    return main([str(a) for a in argv])


# solve


def test_flow_solve_writes_valid_assignment(tmp_path, random_file, capsys):
    out = tmp_path / "a.json"
    assert _run("solve", "--instance", random_file, "--params", "3,2", "--weighted", "--out", out) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["status"] == "optimal" and stats["valid"] is True
    inst = load_instance(random_file)
    assert is_valid_assignment(inst, load_assignment(out), SolveParams(3, 2))


def test_heuristic_on_mutual_pair_is_stuck(mutual_file, capsys):
    assert _run("solve", "--instance", mutual_file, "--params", "1,1,2", "--solver", "greedy-swap") == 2
    assert "stuck" in capsys.readouterr().err


def test_exact_on_mutual_pair_is_infeasible(mutual_file):
    assert _run("solve", "--instance", mutual_file, "--params", "1,1,2", "--solver", "exact-zfree") == 2


def test_greedy_dag_precondition_fault(mutual_file):
    assert _run("solve", "--instance", mutual_file, "--params", "1,1", "--solver", "greedy-dag") == 4


def test_weighted_flag_needs_weights(mutual_file):
    assert _run("solve", "--instance", mutual_file, "--params", "1,1", "--weighted") == 4


def test_exact_budget_exhausted(tmp_path):
    path = tmp_path / "big.json"
    save_instance(gen_random(150, 150, RandomControls(1, 2, 2, 5, max_weight=1000), 3), path)
    out = tmp_path / "incumbent.json"
    code = _run(
        "solve", "--instance", path, "--params", "3,3,3", "--weighted",
        "--solver", "exact-zfree", "--budget-seconds", "0.001", "--out", out,
    )
    assert code == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--instance", "missing.json", "--params", "1,1"],
        ["solve", "--params", "1,1"],
        ["bogus"],
    ],
)
def test_io_and_usage_errors(argv):
    assert _run(*argv) == 5


def test_bad_params_is_usage_error(mutual_file):
    assert _run("solve", "--instance", mutual_file, "--params", "1") == 5


def test_stats_file_has_no_wall_time_by_default(tmp_path, mutual_file):
    stats = tmp_path / "s.json"
    _run("solve", "--instance", mutual_file, "--params", "1,1", "--stats", stats)
    assert "wall_time" not in json.loads(stats.read_text())


# audit


def test_audit_empty_assignment(tmp_path, mutual_file, capsys):
    empty = tmp_path / "empty.json"
    save_assignment(Assignment(set()), empty)
    assert _run("audit", "--instance", mutual_file, "--assignment", empty, "--z", "2") == 0
    assert json.loads(capsys.readouterr().out)["cycles"] == []


def test_audit_of_heuristic_output_is_clean(tmp_path, random_file, capsys):
    out = tmp_path / "h.json"
    assert _run("solve", "--instance", random_file, "--params", "3,2,2", "--solver", "greedy-swap", "--out", out) == 0
    capsys.readouterr()
    report_csv = tmp_path / "exposure.csv"
    assert _run("audit", "--instance", random_file, "--assignment", out, "--z", "2", "--csv", report_csv) == 0
    assert json.loads(capsys.readouterr().out)["cycles"] == []
    rows = list(csv.DictReader(report_csv.open()))
    assert list(rows[0]) == ["kind", "id", "reviews", "in_cycle"]
    assert len(rows) == 30 + 20
    assert {r["in_cycle"] for r in rows} == {"0"}
    assert sum(int(r["reviews"]) for r in rows if r["kind"] == "paper") == 40


def test_audit_reports_cycle(tmp_path, mutual_file, capsys):
    both = tmp_path / "both.json"
    save_assignment(Assignment({("a1", "p2"), ("a2", "p1")}), both)
    _run("audit", "--instance", mutual_file, "--assignment", both, "--z", "2", "--csv", tmp_path / "e.csv")
    report = json.loads(capsys.readouterr().out)
    assert len(report["cycles"]) == 1
    assert "1" in (tmp_path / "e.csv").read_text()


def test_audit_rejects_foreign_edges(tmp_path, mutual_file):
    bad = tmp_path / "bad.json"
    save_assignment(Assignment({("a1", "p1")}), bad)
    assert _run("audit", "--instance", mutual_file, "--assignment", bad) == 4


# generate


def _graph(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"edges": [["u", "v"]], "classes": [["u"], ["v", "w"]]}))
    return path


def _dataset(tmp_path):
    root = tmp_path / "data"
    root.mkdir(exist_ok=True)
    (root / "similarity.csv").write_text(
        "reviewer_id,paper_id,similarity\n"
        + "".join(f"u{i},P{j},0.{i}{j}\n" for i in range(4) for j in range(4))
    )
    (root / "authorship.csv").write_text("paper_id,author_id\n" + "".join(f"P{j},u{j}\n" for j in range(4)))
    return root


def _generator_args(tmp_path, mutual_file):
    dimacs = tmp_path / "f.cnf"
    dimacs.write_text("p cnf 3 1\n1 -2 3 0\n")
    return {
        "random": ["--agents", "8", "--papers", "6", "--conflicts", "1", "--max-weight", "9"],
        "sat": ["--clauses", "1,2,3;-1,-2,3"],
        "sat-dimacs": ["--dimacs", dimacs],
        "2in4": ["--clauses", "1,-1,2,-2;1,-1,2,-2"],
        "mis": ["--graph", _graph(tmp_path)],
        "pad": ["--instance", mutual_file, "--delta", "2"],
        "weights": ["--instance", mutual_file],
        "sample": ["--dataset", _dataset(tmp_path), "--papers", "3", "--ratio", "1"],
    }


GENERATORS = ["random", "sat", "sat-dimacs", "2in4", "mis", "pad", "weights", "sample"]


@pytest.mark.parametrize("name", GENERATORS)
def test_each_generator_writes_an_instance(tmp_path, mutual_file, name):
    args = _generator_args(tmp_path, mutual_file)[name]
    out = tmp_path / f"{name}.json"
    assert _run("generate", name.split("-")[0], *args, "--seed", "4", "--out", out) == 0
    assert load_instance(out).n_papers > 0


def test_generator_faults(tmp_path, mutual_file):
    assert _run("generate", "sat", "--clauses", "1,2,3;1,4,5;1,6,7") == 4
    assert _run("generate", "sat") == 5
    assert _run("generate", "sat", "--clauses", "1,x") == 5
    assert _run("generate", "mis", "--graph", tmp_path / "none.json") == 5


# determinism


def test_repeated_commands_give_identical_bytes(tmp_path, mutual_file, random_file):
    def outputs(tag):
        d = tmp_path / tag
        d.mkdir()
        for name in GENERATORS:
            args = _generator_args(tmp_path, mutual_file)[name]
            _run("generate", name.split("-")[0], *args, "--seed", "9", "--out", d / f"{name}.json")
        for solver, params in (("flow", "3,2"), ("exact-zfree", "3,2,2"), ("greedy-swap", "3,2,2")):
            _run("solve", "--instance", random_file, "--params", params, "--weighted", "--solver", solver,
                 "--out", d / f"{solver}.json", "--stats", d / f"{solver}.stats.json")
        _run("audit", "--instance", random_file, "--assignment", d / "flow.json", "--z", "4",
             "--out", d / "audit.json", "--csv", d / "audit.csv")
        return {p.name: p.read_bytes() for p in sorted(d.iterdir())}

    first, second = outputs("one"), outputs("two")
    assert len(first) == len(GENERATORS) + 8
    assert first == second


def test_module_entry_point(tmp_path, mutual_file):
    done = subprocess.run(
        [sys.executable, "-m", "cyclefree", "solve", "--instance", str(mutual_file), "--params", "1,1,2",
         "--solver", "greedy-swap"],
        capture_output=True, text=True,
    )
    assert done.returncode == 2
    assert done.stderr.strip()

"""Batch runner: sample instances, run solvers, record weight and cycle exposure.

A spec is a JSON object::

    {"source": {"kind": "dataset", "path": "data/iclr2018",
                "n_papers": [150, 200], "ratios": [0.5]},
     "params": {"c": 6, "d": 3},
     "solvers": [{"name": "optimal"},
                 {"name": "optimal-z-cycle-free", "z": 2},
                 {"name": "heuristic-z-cycle-free", "z": 2}],
     "repetitions": 10, "seed_base": 0, "output": "results/run1"}

Source kinds: ``dataset`` (CSV export), ``synthetic`` (random similarity
data with ``n_authors`` and ``max_authors``), ``random`` (gen_random with
``controls``) and ``files`` (``paths`` to instance JSON files).  Optional
keys: ``workers``, ``timing``, ``limits`` ({max_nodes, max_seconds}),
``backend``.  Relative paths, ``output`` included, resolve against the
directory holding the spec file.

Outputs ``results.csv`` (one row per instance and solver, cell order) and
``summary.json`` (means per cell).  Wall times are only written when
``timing`` is true, so repeated runs give identical bytes otherwise.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from statistics import fmean

from cyclefree.core import ReviewInstance, SolveParams, cycle_exposure
from cyclefree.errors import DatasetError, FormatError, ReviewError
from cyclefree.exact import BACKENDS, OPTIMAL, Limits, max_weight_assignment, max_weight_zcycle_free
from cyclefree.fileformat import load_instance
from cyclefree.heuristics import greedy_swap
from cyclefree.instances import (
    RandomControls,
    SampleSpec,
    gen_random,
    load_dataset,
    round_half_up,
    sample_instance,
    synthetic_dataset,
)

SOLVERS = ("optimal", "optimal-z-cycle-free", "heuristic-z-cycle-free")
EXPOSURE_LENGTHS = (2, 3, 4)
CSV_HEADER = (
    "instance_id",
    "n_papers",
    "ratio",
    "repetition",
    "seed",
    "solver",
    "z",
    "status",
    "objective",
    "normalized_weight",
    *(f"agents_le{k}" for k in EXPOSURE_LENGTHS),
    *(f"papers_le{k}" for k in EXPOSURE_LENGTHS),
    "wall_time",
    "optimal",
)


@dataclass(frozen=True)
class SolverSpec:
    name: str
    z: int | None = None

    @property
    def label(self) -> str:
        return self.name if self.z is None else f"{self.name}@{self.z}"


@dataclass(frozen=True)
class ExperimentSpec:
    source: dict
    c: int
    d: int
    solvers: tuple[SolverSpec, ...]
    repetitions: int = 1
    seed_base: int = 0
    output: str | None = None
    workers: int = 1
    timing: bool = False
    limits: Limits = Limits()
    backend: str = "bnb"

    @classmethod
    def from_json(cls, doc, base_dir=None) -> "ExperimentSpec":
        if not isinstance(doc, dict):
            raise FormatError("spec: expected a JSON object")
        known = {"source", "params", "solvers", "repetitions", "seed_base", "output",
                 "workers", "timing", "limits", "backend"}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise FormatError(f"spec: unknown fields {unknown}")
        try:
            source = dict(doc["source"])
            params = doc["params"]
            solvers = []
            for s in doc["solvers"]:
                name = s["name"]
                if name not in SOLVERS:
                    raise FormatError(f"spec: unknown solver {name!r}")
                z = s.get("z")
                if name != "optimal" and not isinstance(z, int):
                    raise FormatError(f"spec: solver {name!r} needs an integer z")
                solvers.append(SolverSpec(name, None if name == "optimal" else z))
            limits = Limits(**doc.get("limits", {}))
            spec = cls(
                source=source,
                c=int(params["c"]),
                d=int(params["d"]),
                solvers=tuple(solvers),
                repetitions=int(doc.get("repetitions", 1)),
                seed_base=int(doc.get("seed_base", 0)),
                output=doc.get("output"),
                workers=int(doc.get("workers", 1)),
                timing=bool(doc.get("timing", False)),
                limits=limits,
                backend=str(doc.get("backend", "bnb")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"spec: malformed ({exc!r})") from exc
        if spec.backend not in BACKENDS:
            raise FormatError(f"spec: unknown backend {spec.backend!r}")
        if spec.repetitions < 1:
            raise FormatError("spec: repetitions must be at least 1")
        if not spec.solvers:
            raise FormatError("spec: no solvers")
        kind = source.get("kind")
        if kind not in ("dataset", "synthetic", "random", "files"):
            raise FormatError(f"spec: unknown source kind {kind!r}")
        if base_dir is not None:
            if spec.output is not None and not Path(spec.output).is_absolute():
                spec = replace(spec, output=str(Path(base_dir) / spec.output))
            for key in ("path",):
                if key in source and not Path(source[key]).is_absolute():
                    source[key] = str(Path(base_dir) / source[key])
            if "paths" in source:
                source["paths"] = [
                    p if Path(p).is_absolute() else str(Path(base_dir) / p) for p in source["paths"]
                ]
        return spec


def cell_seed(seed_base: int, n_papers: int, ratio, repetition: int) -> int:
    key = f"{seed_base}:{n_papers}:{Decimal(str(ratio)).normalize()}:{repetition}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


@dataclass(frozen=True)
class Cell:
    instance_id: str
    n_papers: int
    ratio: str
    repetition: int
    seed: int
    source_index: int = 0


def plan_cells(spec: ExperimentSpec) -> list[Cell]:
    src = spec.source
    if src["kind"] == "files":
        return [
            Cell(f"{i}_{Path(p).stem}", 0, "", rep, cell_seed(spec.seed_base, 0, 0, rep), i)
            for i, p in enumerate(src["paths"])
            for rep in range(spec.repetitions)
        ]
    cells = []
    for n in src["n_papers"]:
        for ratio in src["ratios"]:
            r = str(Decimal(str(ratio)).normalize())
            for rep in range(spec.repetitions):
                seed = cell_seed(spec.seed_base, n, ratio, rep)
                cells.append(Cell(f"n{n}_r{r}_{rep}", int(n), r, rep, seed))
    return cells


def _ensure_source(spec: ExperimentSpec):
    src = spec.source
    if src["kind"] == "dataset":
        path = Path(src["path"])
        if not path.exists():
            raise DatasetError(f"dataset not found: {path}")
    if src["kind"] == "files":
        for p in src["paths"]:
            if not Path(p).exists():
                raise DatasetError(f"instance file not found: {p}")


_DATASETS: dict = {}


def _dataset(src: dict):
    key = json.dumps(src, sort_keys=True)
    if key not in _DATASETS:
        if src["kind"] == "dataset":
            _DATASETS[key] = load_dataset(src["path"], src.get("authorship"))
        else:
            _DATASETS[key] = synthetic_dataset(
                int(src.get("n_dataset_papers", max(src["n_papers"]))),
                int(src["n_authors"]),
                int(src.get("dataset_seed", 0)),
                int(src.get("max_authors", 3)),
            )
    return _DATASETS[key]


def build_instance(spec: ExperimentSpec, cell: Cell) -> ReviewInstance:
    src = spec.source
    kind = src["kind"]
    if kind == "files":
        return load_instance(src["paths"][cell.source_index])
    if kind == "random":
        n_agents = round_half_up(Decimal(cell.ratio) * cell.n_papers)
        controls = RandomControls(**src.get("controls", {}))
        return gen_random(n_agents, cell.n_papers, controls, cell.seed)
    return sample_instance(_dataset(src), SampleSpec(cell.n_papers, cell.ratio, cell.seed))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Fraction):
        return f"{float(x):.6f}"
    return str(x)


def _solve(spec: ExperimentSpec, instance: ReviewInstance, solver: SolverSpec):
    """Returns (status, assignment or None, objective or None, wall_time, proven optimal)."""
    t0 = time.perf_counter()
    params = SolveParams(spec.c, spec.d, solver.z if solver.z is not None else 1,
                         weighted=instance.is_weighted)
    if solver.name == "optimal":
        assignment, stats = max_weight_assignment(instance, params)
        return stats.status, assignment, stats.objective, time.perf_counter() - t0, stats.status == OPTIMAL
    if solver.name == "optimal-z-cycle-free":
        assignment, stats = max_weight_zcycle_free(instance, params, spec.limits, spec.backend)
        return stats.status, assignment, stats.objective, time.perf_counter() - t0, stats.status == OPTIMAL
    try:
        assignment = greedy_swap(instance, params)
    except ReviewError as exc:
        return type(exc).__name__, None, None, time.perf_counter() - t0, False
    weight = sum(instance.weight(a, p) for a, p in assignment)
    return "ok", assignment, weight, time.perf_counter() - t0, False


def run_cell(spec: ExperimentSpec, cell: Cell) -> list[dict]:
    instance = build_instance(spec, cell)
    results = {s.label: _solve(spec, instance, s) for s in spec.solvers}
    if "optimal" in results:
        reference = results["optimal"]
    else:
        reference = _solve(spec, instance, SolverSpec("optimal"))
    ref_weight = reference[2] if reference[4] else None
    rows = []
    for solver in spec.solvers:
        status, assignment, objective, wall, proven = results[solver.label]
        row = {
            "instance_id": cell.instance_id,
            "n_papers": cell.n_papers or instance.n_papers,
            "ratio": cell.ratio,
            "repetition": cell.repetition,
            "seed": cell.seed,
            "solver": solver.name,
            "z": "" if solver.z is None else solver.z,
            "status": status,
            "objective": objective,
            "normalized_weight": None,
            "wall_time": round(wall, 6) if spec.timing else None,
            "optimal": int(proven),
        }
        if objective is not None and ref_weight:
            row["normalized_weight"] = Fraction(objective, ref_weight)
        elif objective is not None and ref_weight == 0:
            row["normalized_weight"] = Fraction(1)
        for k in EXPOSURE_LENGTHS:
            if assignment is None:
                row[f"agents_le{k}"] = row[f"papers_le{k}"] = None
                continue
            agents, papers = cycle_exposure(instance, assignment, k)
            row[f"agents_le{k}"] = Fraction(len(agents), max(instance.n_agents, 1))
            row[f"papers_le{k}"] = Fraction(len(papers), max(instance.n_papers, 1))
        rows.append(row)
    return rows


def ordering_violations(rows: list[dict]) -> list[str]:
    """Per instance and z: optimal >= optimal z-cycle-free >= heuristic, when
    the compared solves all finished (exact ones proven optimal)."""
    out = []
    by_instance: dict = {}
    for r in rows:
        by_instance.setdefault(r["instance_id"], []).append(r)
    for iid, group in by_instance.items():
        opt = [r for r in group if r["solver"] == "optimal" and r["optimal"]]
        for r in group:
            if r["solver"] == "optimal" or r["objective"] is None:
                continue
            if opt and r["objective"] > opt[0]["objective"]:
                out.append(f"{iid}: {r['solver']}@{r['z']} beats the optimum")
            if r["solver"] == "heuristic-z-cycle-free":
                exact = [
                    e for e in group
                    if e["solver"] == "optimal-z-cycle-free" and e["z"] == r["z"] and e["optimal"]
                ]
                if exact and r["objective"] > exact[0]["objective"]:
                    out.append(f"{iid}: heuristic@{r['z']} beats the exact z-cycle-free optimum")
    return out


def monotonicity_violations(rows: list[dict]) -> list[str]:
    out = []
    for r in rows:
        for kind in ("agents", "papers"):
            vals = [r[f"{kind}_le{k}"] for k in EXPOSURE_LENGTHS]
            if None in vals:
                continue
            if any(a > b for a, b in zip(vals, vals[1:])):
                out.append(f"{r['instance_id']}/{r['solver']}: {kind} exposure not monotone")
    return out


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([_fmt(r[col]) for col in CSV_HEADER])
    return buf.getvalue()


def summarize(rows: list[dict]) -> dict:
    cells: dict = {}
    for r in rows:
        key = (r["n_papers"], r["ratio"], r["solver"], r["z"])
        cells.setdefault(key, []).append(r)
    out = []
    for (n, ratio, solver, z), group in cells.items():
        entry = {
            "n_papers": n,
            "ratio": ratio,
            "solver": solver,
            "z": z if z != "" else None,
            "runs": len(group),
            "solved": sum(r["objective"] is not None for r in group),
            "statuses": dict(sorted(Counter(r["status"] for r in group).items())),
        }
        for col in ("normalized_weight",) + tuple(
            f"{kind}_le{k}" for kind in ("agents", "papers") for k in EXPOSURE_LENGTHS
        ):
            vals = [float(r[col]) for r in group if r[col] is not None]
            entry[f"mean_{col}"] = round(fmean(vals), 6) if vals else None
        out.append(entry)
    return {"cells": out}


def _run_cell_packed(args):
    return run_cell(*args)


def run_experiment(spec: ExperimentSpec, out_dir=None) -> tuple[list[dict], dict]:
    """Run every cell; write results.csv and summary.json when an output
    directory is given (argument or spec)."""
    _ensure_source(spec)
    cells = plan_cells(spec)
    if spec.source["kind"] in ("dataset", "synthetic"):
        _dataset(spec.source)  # fail on a broken dataset before any solve
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(_run_cell_packed, [(spec, c) for c in cells]))
    else:
        chunks = [run_cell(spec, c) for c in cells]
    rows = [r for chunk in chunks for r in chunk]
    bad = ordering_violations(rows)
    if bad:
        raise AssertionError("weight ordering violated: " + "; ".join(bad))
    summary = summarize(rows)
    summary["rows"] = len(rows)
    out_dir = out_dir or spec.output
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(rows_to_csv(rows), encoding="utf-8")
        (out / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return rows, summary

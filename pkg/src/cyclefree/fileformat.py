"""JSON instance and assignment files.

Instance document::

    {"agents": [...], "papers": [...],
     "authorship": [[paper, agent], ...],
     "qualification": [[agent, paper], ...],
     "weights": [[agent, paper, int], ...],      # optional
     "self_review_forbidden": true}              # optional, default true

Assignment document: a list of ``[agent, paper]`` pairs.  Unknown fields are
rejected.  Writers emit a canonical byte sequence (declared order, fixed key
order) so identical inputs give identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

from cyclefree.core import Assignment, ReviewInstance
from cyclefree.errors import FormatError

INSTANCE_FIELDS = (
    "agents",
    "papers",
    "authorship",
    "qualification",
    "weights",
    "self_review_forbidden",
)


def _pairs(value, name):
    if not isinstance(value, list):
        raise FormatError(f"{name}: expected a list")
    out = []
    for i, item in enumerate(value):
        if (
            not isinstance(item, list)
            or len(item) != 2
            or not all(isinstance(x, str) for x in item)
        ):
            raise FormatError(f"{name}[{i}]: expected a pair of strings")
        out.append((item[0], item[1]))
    return out


def instance_from_json(doc) -> ReviewInstance:
    if not isinstance(doc, dict):
        raise FormatError("instance: expected a JSON object")
    unknown = sorted(set(doc) - set(INSTANCE_FIELDS))
    if unknown:
        raise FormatError(f"instance: unknown fields {unknown}")
    for key in ("agents", "papers", "authorship", "qualification"):
        if key not in doc:
            raise FormatError(f"instance: missing field {key!r}")
    for key in ("agents", "papers"):
        if not isinstance(doc[key], list) or not all(isinstance(x, str) for x in doc[key]):
            raise FormatError(f"{key}: expected a list of strings")
    weights = None
    if doc.get("weights") is not None:
        if not isinstance(doc["weights"], list):
            raise FormatError("weights: expected a list")
        weights = {}
        for i, item in enumerate(doc["weights"]):
            if (
                not isinstance(item, list)
                or len(item) != 3
                or not isinstance(item[0], str)
                or not isinstance(item[1], str)
                or isinstance(item[2], bool)
                or not isinstance(item[2], int)
            ):
                raise FormatError(f"weights[{i}]: expected [agent, paper, integer]")
            if (item[0], item[1]) in weights:
                raise FormatError(f"weights[{i}]: duplicate edge")
            weights[(item[0], item[1])] = item[2]
    flag = doc.get("self_review_forbidden", True)
    if not isinstance(flag, bool):
        raise FormatError("self_review_forbidden: expected a boolean")
    return ReviewInstance(
        agents=doc["agents"],
        papers=doc["papers"],
        authorship=_pairs(doc["authorship"], "authorship"),
        qualification=_pairs(doc["qualification"], "qualification"),
        weights=weights,
        self_review_forbidden=flag,
    )


def instance_to_json(instance: ReviewInstance) -> dict:
    ai, pi = instance.agent_index, instance.paper_index
    quals = sorted(instance.qualification, key=lambda e: (ai[e[0]], pi[e[1]]))
    doc = {
        "agents": list(instance.agents),
        "papers": list(instance.papers),
        "authorship": [
            [p, a] for p, a in sorted(instance.authorship, key=lambda e: (pi[e[0]], ai[e[1]]))
        ],
        "qualification": [[a, p] for a, p in quals],
    }
    if instance.weights is not None:
        doc["weights"] = [[a, p, instance.weights[(a, p)]] for a, p in quals]
    doc["self_review_forbidden"] = instance.self_review_forbidden
    return doc


def dumps(doc) -> str:
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=True) + "\n"


def _read_json(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def load_instance(path) -> ReviewInstance:
    return instance_from_json(_read_json(path))


def save_instance(instance: ReviewInstance, path) -> None:
    Path(path).write_text(dumps(instance_to_json(instance)), encoding="utf-8")


def assignment_from_json(doc) -> Assignment:
    return Assignment(frozenset(_pairs(doc, "assignment")))


def assignment_to_json(assignment: Assignment, instance: ReviewInstance | None = None) -> list:
    return [[a, p] for a, p in assignment.sorted(instance)]


def load_assignment(path) -> Assignment:
    return assignment_from_json(_read_json(path))


def save_assignment(assignment: Assignment, path, instance: ReviewInstance | None = None) -> None:
    Path(path).write_text(dumps(assignment_to_json(assignment, instance)), encoding="utf-8")

"""Structured instances from the hardness reductions.

Each generator maps a formula or graph to a review instance whose
feasibility mirrors the source problem:

* ``gen_sat_gadget``: 3-CNF (each variable at most twice positive and twice
  negative) -> 1-1-valid, z-cycle-free (z >= 2) assignment exists iff the
  formula is satisfiable.
* ``pad_min_degrees``: raises minimum qualification degrees without changing
  feasibility for c = d = 1.
* ``gen_mis_gadget``: multicolored independent set -> every agent may review
  every paper, c = d = 1, z = 2.
* ``gen_2in4_gadget``: two-in-four SAT (each variable exactly twice positive,
  twice negative) -> single-author single-paper instance, c = d = 2, z = 3.

Literals are non-zero integers: ``v`` is variable ``x{v}``, ``-v`` its
negation.  Identifiers are human readable (``a_pos_x3``, ``p_c2_1``).
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

from cyclefree.core import ReviewInstance
from cyclefree.errors import GeneratorError


def _var(lit: int) -> str:
    return f"x{abs(lit)}"


def _occurrences(clauses) -> tuple[Counter, Counter]:
    pos, neg = Counter(), Counter()
    for clause in clauses:
        for lit in clause:
            if lit == 0:
                raise GeneratorError("literal 0 is not allowed")
            (pos if lit > 0 else neg)[abs(lit)] += 1
    return pos, neg


def gen_sat_gadget(cnf: Sequence[Sequence[int]]) -> ReviewInstance:
    clauses = [tuple(c) for c in cnf]
    if any(len(c) != 3 for c in clauses):
        raise GeneratorError("every clause needs exactly three literals")
    pos, neg = _occurrences(clauses)
    bad = sorted(v for v in set(pos) | set(neg) if pos[v] > 2 or neg[v] > 2)
    if bad:
        raise GeneratorError(f"variables occur too often: {['x%d' % v for v in bad]}")
    variables = sorted(set(pos) | set(neg))

    agents: list[str] = []
    papers: list[str] = []
    quals: set[tuple[str, str]] = set()
    authorship: set[tuple[str, str]] = set()

    def lit_agent(lit):
        return f"a_{'pos' if lit > 0 else 'neg'}_{_var(lit)}"

    def lit_paper(lit):
        return f"p_{'pos' if lit > 0 else 'neg'}_{_var(lit)}"

    for v in variables:
        x = f"x{v}"
        a_pos, a_neg, b = f"a_pos_{x}", f"a_neg_{x}", f"b_{x}"
        p_pos, p_neg, q = f"p_pos_{x}", f"p_neg_{x}", f"q_{x}"
        agents += [a_pos, a_neg, b]
        papers += [p_pos, p_neg, q]
        quals |= {(a_pos, p_pos), (b, p_pos), (a_neg, p_neg), (b, p_neg), (a_pos, q), (a_neg, q)}
    for j, clause in enumerate(clauses, start=1):
        cl_agents = [f"a_c{j}_{i}" for i in (1, 2, 3)]
        cl_papers = [f"p_c{j}_{i}" for i in (1, 2, 3)]
        dummy_agents = [f"d_c{j}_{i}" for i in (1, 2)]
        dummy_papers = [f"q_c{j}_{i}" for i in (1, 2)]
        agents += cl_agents + dummy_agents
        papers += cl_papers + dummy_papers
        for a, p in zip(cl_agents, cl_papers):
            quals.add((a, p))
        quals |= {(d, p) for d in dummy_agents for p in cl_papers}
        quals |= {(a, q) for a in cl_agents for q in dummy_papers}
        for a, p, lit in zip(cl_agents, cl_papers, clause):
            authorship.add((lit_paper(lit), a))
            authorship.add((p, lit_agent(lit)))
    return ReviewInstance(agents, papers, authorship, quals, None, True)


def pad_min_degrees(instance: ReviewInstance, delta: int) -> ReviewInstance:
    """Add two authorless paper blocks and two paper-less agent blocks of size delta.

    Block one agents may review block one papers and all original papers;
    original agents may also review block two papers, as may block two agents.
    New edges get weight 0 on weighted instances.
    """
    if delta < 0:
        raise GeneratorError("delta must be non-negative")
    a1 = [f"pad_a1_{i}" for i in range(1, delta + 1)]
    a2 = [f"pad_a2_{i}" for i in range(1, delta + 1)]
    p1 = [f"pad_p1_{i}" for i in range(1, delta + 1)]
    p2 = [f"pad_p2_{i}" for i in range(1, delta + 1)]
    clash = (set(a1) | set(a2)) & set(instance.agents) or (set(p1) | set(p2)) & set(instance.papers)
    if clash:
        raise GeneratorError(f"identifier clash: {sorted(clash)}")
    new = set()
    new |= {(a, p) for a in a1 for p in p1 + list(instance.papers)}
    new |= {(a, p) for a in instance.agents for p in p2}
    new |= {(a, p) for a in a2 for p in p2}
    weights = None
    if instance.weights is not None:
        weights = dict(instance.weights)
        weights.update(dict.fromkeys(new, 0))
    return ReviewInstance(
        list(instance.agents) + a1 + a2,
        list(instance.papers) + p1 + p2,
        instance.authorship,
        instance.qualification | new,
        weights,
        instance.self_review_forbidden,
    )


def gen_mis_gadget(
    edges: Iterable[Sequence[str]], color_classes: Sequence[Sequence[str]]
) -> ReviewInstance:
    """Instance with a 1-1-valid 2-cycle-free assignment iff the colored graph
    has an independent set with one vertex per class.

    Classes are first padded to sizes n, n+1, ..., n+k-1 (n > k) with vertices
    adjacent to every other vertex, which leaves the answer unchanged.
    """
    classes = [list(c) for c in color_classes]
    k = len(classes)
    if k == 0 or any(not c for c in classes):
        raise GeneratorError("need at least one class and no empty class")
    names = [v for c in classes for v in c]
    if len(set(names)) != len(names):
        raise GeneratorError("vertex in several classes")
    adj: dict[str, set[str]] = {v: set() for v in names}
    for e in edges:
        u, v = e
        if u not in adj or v not in adj or u == v:
            raise GeneratorError(f"bad edge {u}-{v}")
        adj[u].add(v)
        adj[v].add(u)
    n = max([k + 1] + [len(c) - i for i, c in enumerate(classes)])
    padded = []
    for i, c in enumerate(classes):
        extra = [f"pad{i + 1}_{j}" for j in range(1, n + i - len(c) + 1)]
        padded.append(c + extra)
        for v in extra:
            adj[v] = set()
    everyone = [v for c in padded for v in c]
    originals = set(names)
    for v in everyone:
        if v not in originals:
            for u in everyone:
                if u != v:
                    adj[v].add(u)
                    adj[u].add(v)
    color = {v: i for i, c in enumerate(padded) for v in c}

    agents, papers = ["a_star"], ["p_star"]
    authorship: set[tuple[str, str]] = set()
    vertex_agent = {v: f"a_v_{v}" for v in everyone}
    for i, c in enumerate(padded, start=1):
        agents += [f"a_star_c{i}"] + [vertex_agent[v] for v in c]
        agents += [f"a_dummy_c{i}_{j}" for j in range(1, n + i - 1)]
        papers += [f"p_star_c{i}"] + [f"p_v_{v}" for v in c]
        papers += [f"p_dummy_c{i}_{j}" for j in range(1, n + i - 1)]
    dummies = {i: [f"a_dummy_c{i}_{j}" for j in range(1, n + i - 1)] for i in range(1, k + 1)}
    members = {i: [vertex_agent[v] for v in padded[i - 1]] + dummies[i] for i in range(1, k + 1)}
    for i in range(1, k + 1):
        authorship |= {("p_star", a) for a in members[i]}
        others = [a for j in range(1, k + 1) if j != i for a in members[j]]
        authorship |= {(f"p_star_c{i}", a) for a in others + ["a_star"]}
        authorship |= {(f"p_dummy_c{i}_{j}", f"a_star_c{i}") for j in range(1, n + i - 1)}
        for v in padded[i - 1]:
            pv = f"p_v_{v}"
            authorship.add((pv, f"a_star_c{i}"))
            authorship |= {(pv, vertex_agent[u]) for u in padded[i - 1] if u != v}
            authorship |= {(pv, vertex_agent[u]) for u in adj[v] if color[u] != i - 1}
    quals = {(a, p) for a in agents for p in papers if (p, a) not in authorship}
    return ReviewInstance(agents, papers, authorship, quals, None, True)


def gen_2in4_gadget(formula: Sequence[Sequence[int]]) -> ReviewInstance:
    clauses = [tuple(c) for c in formula]
    if any(len(c) != 4 or len(set(c)) != 4 for c in clauses):
        raise GeneratorError("every clause needs four different literals")
    pos, neg = _occurrences(clauses)
    variables = sorted(set(pos) | set(neg))
    bad = [v for v in variables if pos[v] != 2 or neg[v] != 2]
    if bad:
        raise GeneratorError(
            f"variables must occur exactly twice positive and twice negative: "
            f"{['x%d' % v for v in bad]}"
        )
    n = len(variables)
    agents: list[str] = []
    for v in variables:
        agents += [f"a_pos_x{v}", f"a_neg_x{v}", f"a1_x{v}", f"a2_x{v}"]
    agents += [f"b_c{j}" for j in range(1, len(clauses) + 1)]
    pairs = set()
    for i, v in enumerate(variables):
        x = f"x{v}"
        nxt = f"x{variables[(i + 1) % n]}"
        for sign in ("pos", "neg"):
            pairs.add((f"a_{sign}_{x}", f"a1_{x}"))
            pairs.add((f"a_{sign}_{x}", f"a2_{x}"))
        pairs.add((f"a1_{x}", f"a2_{x}"))
        pairs.add((f"a2_{x}", f"a1_{nxt}"))
    for j, clause in enumerate(clauses, start=1):
        for lit in clause:
            pairs.add((f"a_{'pos' if lit > 0 else 'neg'}_{_var(lit)}", f"b_c{j}"))
    paper = {a: f"p_{a}" for a in agents}
    quals = set()
    for a, b in pairs:
        quals.add((a, paper[b]))
        quals.add((b, paper[a]))
    authorship = {(paper[a], a) for a in agents}
    return ReviewInstance(agents, [paper[a] for a in agents], authorship, quals, None, True)


def qualifications_to_weights(instance: ReviewInstance) -> ReviewInstance:
    """Qualify everyone for every paper it did not write; original
    qualification edges weigh 1, the added ones 0."""
    if instance.weights is not None:
        raise GeneratorError("instance is already weighted")
    full = {
        (a, p)
        for a in instance.agents
        for p in instance.papers
        if (p, a) not in instance.authorship
    } | instance.qualification
    weights = {e: int(e in instance.qualification) for e in full}
    return ReviewInstance(
        instance.agents,
        instance.papers,
        instance.authorship,
        full,
        weights,
        instance.self_review_forbidden,
    )

"""Reference implementations that share no code with the package.

They are deliberately naive: plain subset enumeration, networkx cycle search
and truth-table brute force.
"""

from __future__ import annotations

import itertools
from collections import Counter

import networkx as nx


def review_graph(instance, reviews) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(("A", a) for a in instance.agents)
    g.add_nodes_from(("P", p) for p in instance.papers)
    g.add_edges_from((("P", p), ("A", a)) for p, a in instance.authorship)
    g.add_edges_from((("A", a), ("P", p)) for a, p in reviews)
    return g


def cycles_up_to(instance, reviews, z) -> set[tuple[tuple, tuple]]:
    """Review cycles of length <= z as (agents, papers), rotated so the
    smallest agent comes first."""
    out = set()
    for cyc in nx.simple_cycles(review_graph(instance, reviews), length_bound=2 * z):
        # rotate so the walk starts at a paper: paper, author, paper, ...
        i = next(k for k, v in enumerate(cyc) if v[0] == "P")
        cyc = cyc[i:] + cyc[:i]
        papers = [v[1] for v in cyc[0::2]]
        agents = [v[1] for v in cyc[1::2]]
        k = agents.index(min(agents))
        out.add((tuple(agents[k:] + agents[:k]), tuple(papers[k:] + papers[:k])))
    return out


def has_any_cycle(instance, reviews) -> bool:
    return not nx.is_directed_acyclic_graph(review_graph(instance, reviews))


def is_cd_valid(instance, reviews, c, d) -> bool:
    load_a = Counter(a for a, _ in reviews)
    load_p = Counter(p for _, p in reviews)
    return all(load_a[a] <= c for a in instance.agents) and all(
        load_p[p] == d for p in instance.papers
    )


def subset_optimum(instance, c, d, z=None):
    """Max weight over all subsets of the qualification edges that are
    c-d-valid (and free of cycles of length <= z when z is given)."""
    edges = sorted(instance.qualification)
    assert len(edges) <= 16, "subset oracle is exponential"
    best = None
    for mask in range(1 << len(edges)):
        chosen = [e for i, e in enumerate(edges) if mask >> i & 1]
        if len(chosen) != d * instance.n_papers or not is_cd_valid(instance, chosen, c, d):
            continue
        if z is not None and cycles_up_to(instance, chosen, z):
            continue
        w = sum(instance.weight(a, p) for a, p in chosen)
        if best is None or w > best:
            best = w
    return best


def cnf_satisfiable(clauses) -> bool:
    variables = sorted({abs(x) for c in clauses for x in c})
    for bits in itertools.product((False, True), repeat=len(variables)):
        val = dict(zip(variables, bits))
        if all(any(val[abs(x)] == (x > 0) for x in c) for c in clauses):
            return True
    return False


def two_in_four_satisfiable(clauses) -> bool:
    variables = sorted({abs(x) for c in clauses for x in c})
    for bits in itertools.product((False, True), repeat=len(variables)):
        val = dict(zip(variables, bits))
        if all(sum(val[abs(x)] == (x > 0) for x in c) == 2 for c in clauses):
            return True
    return False


def multicolored_independent_set(edges, classes) -> bool:
    adjacent = {frozenset(e) for e in edges}
    for pick in itertools.product(*classes):
        if all(frozenset((u, v)) not in adjacent for u, v in itertools.combinations(pick, 2)):
            return True
    return False


def _normalize(clauses):
    # rename variables by first occurrence and flip signs so that each
    # variable first occurs positively
    names, out = {}, []
    for clause in clauses:
        row = []
        for lit in clause:
            v = abs(lit)
            if v not in names:
                names[v] = (len(names) + 1) * (1 if lit > 0 else -1)
            m = names[v]
            row.append(abs(m) if (lit > 0) == (m > 0) else -abs(m))
        out.append(tuple(row))
    return tuple(out)


def _raw_formulas(k):
    def rec(pos, n_vars, cur):
        if pos == 3 * k:
            yield tuple(tuple(cur[i : i + 3]) for i in range(0, 3 * k, 3))
            return
        used = {abs(x) for x in cur[pos - pos % 3 : pos]}
        for v in range(1, n_vars + 2):
            if v in used:
                continue
            for sign in (1,) if v == n_vars + 1 else (1, -1):
                cur.append(sign * v)
                yield from rec(pos + 1, max(n_vars, v), cur)
                cur.pop()

    yield from rec(0, 0, [])


def bounded_3cnf_classes(k):
    """One representative per class of k-clause 3-CNF formulas (three
    distinct variables per clause, every variable at most twice positive and
    twice negative) under renaming, negating variables, and reordering
    clauses or literals.  The SAT gadget is invariant under all four."""
    visited, reps = set(), []
    for f in _raw_formulas(k):
        if f in visited:
            continue
        pos = Counter(x for c in f for x in c if x > 0)
        neg = Counter(-x for c in f for x in c if x < 0)
        if max(pos.values()) > 2 or max(neg.values(), default=0) > 2:
            continue
        images = {
            _normalize(lits)
            for order in itertools.permutations(f)
            for lits in itertools.product(*(itertools.permutations(c) for c in order))
        }
        visited |= images
        reps.append(min(images))
    return reps

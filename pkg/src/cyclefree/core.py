"""Instances, assignments, validity and review-cycle detection.

A review instance is the bipartite digraph of agents and papers: an
authorship edge points from a paper to each of its authors, a qualification
edge from an agent to each paper it may review.  An assignment picks a subset
of the qualification edges.  A review cycle of length k is a closed walk
p_1 -> a_1 -> p_2 -> a_2 -> ... -> a_k -> p_1 that alternates authorship and
assigned reviews, i.e. a directed cycle of length 2k in the review graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple, Union

from cyclefree.errors import ForeignEdgeError, NoWeightsError

UNBOUNDED = "unbounded"

Edge = tuple[str, str]
CycleBound = Union[int, str]


@dataclass(frozen=True, eq=True)
class ReviewInstance:
    agents: tuple[str, ...]
    papers: tuple[str, ...]
    authorship: frozenset[Edge]  # (paper, agent)
    qualification: frozenset[Edge]  # (agent, paper)
    weights: Mapping[Edge, int] | None = None
    self_review_forbidden: bool = True

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "papers", tuple(self.papers))
        object.__setattr__(self, "authorship", frozenset(tuple(e) for e in self.authorship))
        object.__setattr__(
            self, "qualification", frozenset(tuple(e) for e in self.qualification)
        )
        if self.weights is not None:
            object.__setattr__(
                self,
                "weights",
                MappingProxyType({tuple(k): v for k, v in dict(self.weights).items()}),
            )

    __hash__ = None  # type: ignore[assignment]

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def n_papers(self) -> int:
        return len(self.papers)

    @property
    def is_weighted(self) -> bool:
        return self.weights is not None

    def weight(self, agent: str, paper: str) -> int:
        if self.weights is None:
            return 1
        return self.weights[(agent, paper)]

    @cached_property
    def agent_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.agents)}

    @cached_property
    def paper_index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.papers)}

    @cached_property
    def authors_of(self) -> dict[str, tuple[str, ...]]:
        """Paper -> authors, in declared agent order."""
        return self._group(self.authorship, self.papers, self.agent_index)

    @cached_property
    def papers_of(self) -> dict[str, tuple[str, ...]]:
        """Agent -> authored papers, in declared paper order."""
        flipped = ((a, p) for p, a in self.authorship)
        return self._group(flipped, self.agents, self.paper_index)

    @cached_property
    def qualified_for(self) -> dict[str, tuple[str, ...]]:
        """Agent -> papers it may review, in declared paper order."""
        return self._group(self.qualification, self.agents, self.paper_index)

    @cached_property
    def reviewers_of(self) -> dict[str, tuple[str, ...]]:
        """Paper -> agents qualified to review it, in declared agent order."""
        flipped = ((p, a) for a, p in self.qualification)
        return self._group(flipped, self.papers, self.agent_index)

    @staticmethod
    def _group(pairs, keys, order):
        grouped: dict[str, list[str]] = {k: [] for k in keys}
        for k, v in pairs:
            if k in grouped and v in order:
                grouped[k].append(v)
        return {k: tuple(sorted(vs, key=order.__getitem__)) for k, vs in grouped.items()}

    def edge_order(self) -> list[Edge]:
        """Qualification edges in scan order: by paper, then by agent."""
        ai, pi = self.agent_index, self.paper_index
        return sorted(self.qualification, key=lambda e: (pi[e[1]], ai[e[0]]))


@dataclass(frozen=True)
class Assignment:
    reviews: frozenset[Edge] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "reviews", frozenset(tuple(e) for e in self.reviews))

    def __iter__(self) -> Iterator[Edge]:
        return iter(self.reviews)

    def __len__(self) -> int:
        return len(self.reviews)

    def __contains__(self, edge) -> bool:
        return tuple(edge) in self.reviews

    def sorted(self, instance: ReviewInstance | None = None) -> list[Edge]:
        if instance is None:
            return sorted(self.reviews)
        ai, pi = instance.agent_index, instance.paper_index
        return sorted(self.reviews, key=lambda e: (ai[e[0]], pi[e[1]]))


@dataclass(frozen=True)
class SolveParams:
    c_reviewer: int
    d_paper: int
    z: CycleBound = 2
    weighted: bool = False

    def __post_init__(self):
        if self.c_reviewer < 0 or self.d_paper < 0:
            raise ValueError("c_reviewer and d_paper must be non-negative")
        if self.z != UNBOUNDED and (not isinstance(self.z, int) or self.z < 1):
            raise ValueError(f"z must be a positive integer or {UNBOUNDED!r}, got {self.z!r}")


@dataclass(frozen=True)
class DegreeStats:
    """Degree extrema of the review graph.

    Minima over an empty vertex set are None (undefined), never 0, so that
    guarantee checks cannot hold vacuously.
    """

    n_agents: int
    n_papers: int
    max_papers_per_author: int
    min_papers_per_author: int | None
    max_authors_per_paper: int
    min_authors_per_paper: int | None
    max_qualifications_per_agent: int
    min_qualifications_per_agent: int | None
    max_reviewers_per_paper: int
    min_reviewers_per_paper: int | None
    coi: int | None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class ValidityReport(NamedTuple):
    valid: bool
    agent_load: dict[str, int]
    paper_load: dict[str, int]
    overloaded_agents: tuple[str, ...]
    misreviewed_papers: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.valid


class ReviewCycle(NamedTuple):
    """agents[i] authors papers[i] and reviews papers[i + 1] (cyclically)."""

    agents: tuple[str, ...]
    papers: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.agents)

    def review_edges(self) -> list[Edge]:
        k = len(self.agents)
        return [(self.agents[i], self.papers[(i + 1) % k]) for i in range(k)]

    def authorship_edges(self) -> list[Edge]:
        return [(p, a) for a, p in zip(self.agents, self.papers)]


@dataclass(frozen=True)
class CycleReport:
    z: CycleBound
    cycles: tuple[ReviewCycle, ...]
    agents_in_cycle: frozenset[str]
    papers_in_cycle: frozenset[str]
    n_agents: int
    n_papers: int
    has_cycle: bool = field(default=False)

    @property
    def agent_fraction(self) -> Fraction:
        return Fraction(len(self.agents_in_cycle), self.n_agents) if self.n_agents else Fraction(0)

    @property
    def paper_fraction(self) -> Fraction:
        return Fraction(len(self.papers_in_cycle), self.n_papers) if self.n_papers else Fraction(0)

    def to_json(self) -> dict:
        return {
            "z": self.z,
            "has_cycle": self.has_cycle,
            "n_cycles": len(self.cycles),
            "cycles": [{"agents": list(c.agents), "papers": list(c.papers)} for c in self.cycles],
            "agents_in_cycle": sorted(self.agents_in_cycle),
            "papers_in_cycle": sorted(self.papers_in_cycle),
            "agent_fraction": str(self.agent_fraction),
            "paper_fraction": str(self.paper_fraction),
        }


def validate_instance(instance: ReviewInstance) -> list[str]:
    """Return the list of invariant violations; an empty list means valid."""
    problems = []
    agents, papers = set(instance.agents), set(instance.papers)
    if len(agents) != len(instance.agents):
        problems.append("duplicate agent identifier")
    if len(papers) != len(instance.papers):
        problems.append("duplicate paper identifier")
    for p, a in sorted(instance.authorship):
        if p not in papers:
            problems.append(f"authorship edge {p}/{a}: unknown paper {p}")
        if a not in agents:
            problems.append(f"authorship edge {p}/{a}: unknown agent {a}")
    for a, p in sorted(instance.qualification):
        if a not in agents:
            problems.append(f"qualification edge {a}/{p}: unknown agent {a}")
        if p not in papers:
            problems.append(f"qualification edge {a}/{p}: unknown paper {p}")
        if instance.self_review_forbidden and (p, a) in instance.authorship:
            problems.append(f"self-review edge {a}/{p}")
    if instance.weights is not None:
        for e in sorted(instance.qualification - instance.weights.keys()):
            problems.append(f"weight missing for {e[0]}/{e[1]}")
        for e in sorted(instance.weights.keys() - instance.qualification):
            problems.append(f"weight on non-qualification edge {e[0]}/{e[1]}")
        for e, w in sorted(instance.weights.items()):
            if isinstance(w, bool) or not isinstance(w, int):
                problems.append(f"non-integer weight on {e[0]}/{e[1]}")
    return problems


def _extrema(values: list[int]) -> tuple[int, int | None]:
    if not values:
        return 0, None
    return max(values), min(values)


def degree_stats(instance: ReviewInstance) -> DegreeStats:
    papers_per_author = [len(instance.papers_of[a]) for a in instance.agents]
    authors_per_paper = [len(instance.authors_of[p]) for p in instance.papers]
    quals_per_agent = [len(instance.qualified_for[a]) for a in instance.agents]
    reviewers_per_paper = [len(instance.reviewers_of[p]) for p in instance.papers]
    max_ppa, min_ppa = _extrema(papers_per_author)
    max_app, min_app = _extrema(authors_per_paper)
    max_qpa, min_qpa = _extrema(quals_per_agent)
    max_rpp, min_rpp = _extrema(reviewers_per_paper)
    return DegreeStats(
        n_agents=instance.n_agents,
        n_papers=instance.n_papers,
        max_papers_per_author=max_ppa,
        min_papers_per_author=min_ppa,
        max_authors_per_paper=max_app,
        min_authors_per_paper=min_app,
        max_qualifications_per_agent=max_qpa,
        min_qualifications_per_agent=min_qpa,
        max_reviewers_per_paper=max_rpp,
        min_reviewers_per_paper=min_rpp,
        coi=None if min_qpa is None else instance.n_papers - min_qpa,
    )


def is_valid_assignment(
    instance: ReviewInstance, assignment: Assignment | Iterable[Edge], params: SolveParams
) -> ValidityReport:
    """c-d-validity: every agent reviews at most c papers, every paper gets exactly d."""
    reviews = assignment.reviews if isinstance(assignment, Assignment) else set(assignment)
    agent_load = dict.fromkeys(instance.agents, 0)
    paper_load = dict.fromkeys(instance.papers, 0)
    for a, p in reviews:
        if (a, p) not in instance.qualification:
            raise ForeignEdgeError(a, p)
        agent_load[a] += 1
        paper_load[p] += 1
    over = tuple(a for a in instance.agents if agent_load[a] > params.c_reviewer)
    mis = tuple(p for p in instance.papers if paper_load[p] != params.d_paper)
    return ValidityReport(not over and not mis, agent_load, paper_load, over, mis)


def assignment_weight(instance: ReviewInstance, assignment: Assignment | Iterable[Edge]) -> int:
    if instance.weights is None:
        raise NoWeightsError()
    return sum(instance.weights[e] for e in assignment)


def _reviews_by_agent(instance: ReviewInstance, reviews) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {a: [] for a in instance.agents}
    for a, p in reviews:
        out[a].append(p)
    pi = instance.paper_index
    for ps in out.values():
        ps.sort(key=pi.__getitem__)
    return out


def canonical_cycle(agents, papers) -> ReviewCycle:
    """Rotate so that the lexicographically smallest agent comes first."""
    k = len(agents)
    r = min(range(k), key=lambda i: agents[i])
    return ReviewCycle(tuple(agents[r:]) + tuple(agents[:r]), tuple(papers[r:]) + tuple(papers[:r]))


def _enumerate_cycles(instance: ReviewInstance, by_agent, z: int) -> list[ReviewCycle]:
    # Each cycle is found exactly once, from its lexicographically smallest agent.
    authors_of = instance.authors_of
    found = []
    for start in sorted(instance.agents):
        if not instance.papers_of[start]:
            continue
        path_agents = [start]
        path_papers: list[str] = []
        on_path = {start}
        used_papers: set[str] = set()

        def extend(agent):
            for q in by_agent[agent]:
                if q in used_papers:
                    continue
                for b in authors_of[q]:
                    if b == start:
                        found.append(ReviewCycle(tuple(path_agents), (q, *path_papers)))
                    elif b > start and b not in on_path and len(path_agents) < z:
                        path_agents.append(b)
                        path_papers.append(q)
                        on_path.add(b)
                        used_papers.add(q)
                        extend(b)
                        used_papers.discard(q)
                        on_path.discard(b)
                        path_papers.pop()
                        path_agents.pop()

        extend(start)
    found.sort(key=lambda c: (c.length, c.agents, c.papers))
    return found


def _adjacency(instance: ReviewInstance, by_agent):
    # Node ids: agents 0..nA-1, papers nA..nA+nP-1.
    ai, pi = instance.agent_index, instance.paper_index
    na = instance.n_agents
    succ: list[list[int]] = [[] for _ in range(na + instance.n_papers)]
    for a in instance.agents:
        succ[ai[a]] = [na + pi[p] for p in by_agent[a]]
    for p in instance.papers:
        succ[na + pi[p]] = [ai[a] for a in instance.authors_of[p]]
    return succ


def _strong_components(succ: list[list[int]]) -> list[int]:
    """Iterative Tarjan; returns a component id per node."""
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    comp = [-1] * n
    on_stack = [False] * n
    stack: list[int] = []
    counter = 0
    n_comp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            if i < len(succ[v]):
                work[-1] = (v, i + 1)
                w = succ[v][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    low[u] = min(low[u], low[v])
                if low[v] == index[v]:
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        comp[w] = n_comp
                        if w == v:
                            break
                    n_comp += 1
    return comp


def _witness_cycle(instance: ReviewInstance, by_agent) -> ReviewCycle | None:
    """Kahn-style topological test; returns one cycle if the graph is cyclic."""
    succ = _adjacency(instance, by_agent)
    n = len(succ)
    indeg = [0] * n
    pred: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        for w in succ[v]:
            indeg[w] += 1
            pred[w].append(v)
    queue = deque(v for v in range(n) if indeg[v] == 0)
    removed = [False] * n
    while queue:
        v = queue.popleft()
        removed[v] = True
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    left = [v for v in range(n) if not removed[v]]
    if not left:
        return None
    # Every remaining node keeps a remaining predecessor; walk back until a repeat.
    seen: dict[int, int] = {}
    walk = []
    v = left[0]
    while v not in seen:
        seen[v] = len(walk)
        walk.append(v)
        v = next(u for u in pred[v] if not removed[u])
    loop = walk[seen[v]:][::-1]
    na = instance.n_agents
    if loop[0] < na:
        loop = loop[1:] + loop[:1]
    papers = [instance.papers[v - na] for v in loop[0::2]]
    agents = [instance.agents[v] for v in loop[1::2]]
    return canonical_cycle(agents, papers)


def find_review_cycles(
    instance: ReviewInstance, assignment: Assignment | Iterable[Edge], z: CycleBound
) -> CycleReport:
    """Enumerate review cycles of length 1..z, deduplicated up to rotation.

    For z == UNBOUNDED only existence is decided (topological test) and at most
    one witness cycle is reported; exposure then covers every agent and paper
    lying on any cycle (non-trivial strongly connected components).
    """
    by_agent = _reviews_by_agent(instance, assignment)
    if z == UNBOUNDED:
        witness = _witness_cycle(instance, by_agent)
        agents_in: frozenset[str] = frozenset()
        papers_in: frozenset[str] = frozenset()
        if witness is not None:
            succ = _adjacency(instance, by_agent)
            comp = _strong_components(succ)
            size: dict[int, int] = {}
            for c in comp:
                size[c] = size.get(c, 0) + 1
            na = instance.n_agents
            agents_in = frozenset(a for i, a in enumerate(instance.agents) if size[comp[i]] > 1)
            papers_in = frozenset(
                p for i, p in enumerate(instance.papers) if size[comp[na + i]] > 1
            )
        return CycleReport(
            z,
            () if witness is None else (witness,),
            agents_in,
            papers_in,
            instance.n_agents,
            instance.n_papers,
            witness is not None,
        )
    if not isinstance(z, int) or z < 1:
        raise ValueError(f"z must be a positive integer or {UNBOUNDED!r}")
    cycles = _enumerate_cycles(instance, by_agent, z)
    agents_in = frozenset(a for c in cycles for a in c.agents)
    papers_in = frozenset(p for c in cycles for p in c.papers)
    return CycleReport(
        z, tuple(cycles), agents_in, papers_in, instance.n_agents, instance.n_papers, bool(cycles)
    )


def cycle_exposure(
    instance: ReviewInstance, assignment: Assignment | Iterable[Edge], z: int
) -> tuple[frozenset[str], frozenset[str]]:
    """Agents and papers lying on some review cycle of length <= z.

    Uses shortest-return breadth-first search instead of enumeration: the
    shortest closed walk through a vertex is a simple cycle.
    """
    by_agent = _reviews_by_agent(instance, assignment)
    succ = _adjacency(instance, by_agent)
    limit = 2 * z
    na = instance.n_agents
    on_cycle = []
    for v in range(len(succ)):
        dist = {v: 0}
        frontier = [v]
        hit = False
        depth = 0
        while frontier and depth < limit and not hit:
            depth += 1
            nxt = []
            for u in frontier:
                for w in succ[u]:
                    if w == v:
                        hit = True
                        break
                    if w not in dist:
                        dist[w] = depth
                        nxt.append(w)
                if hit:
                    break
            frontier = nxt
        on_cycle.append(hit)
    agents = frozenset(a for i, a in enumerate(instance.agents) if on_cycle[i])
    papers = frozenset(p for i, p in enumerate(instance.papers) if on_cycle[na + i])
    return agents, papers


def is_z_cycle_free(instance: ReviewInstance, assignment, z: CycleBound) -> bool:
    if z == UNBOUNDED:
        return _witness_cycle(instance, _reviews_by_agent(instance, assignment)) is None
    return not find_review_cycles(instance, assignment, z).has_cycle

"""Greedy constructions and the degree conditions under which they succeed.

``greedy_dag`` builds a completely cycle-free assignment along a topological
order of the review graph.  ``greedy_swap`` grows a z-cycle-free assignment
edge by edge and, once no edge can be added, trades one assigned review
(a', p') for the pair (a', p), (a, p').  Both are deterministic: ties go to
the earliest agent/paper in declared order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from cyclefree.core import (
    UNBOUNDED,
    Assignment,
    DegreeStats,
    ReviewInstance,
    SolveParams,
    degree_stats,
)
from cyclefree.errors import GreedyStuckError, NoWeightsError, SwapExhaustedError


def greedy_dag(
    instance: ReviewInstance,
    d_paper: int,
    *,
    debug: bool = False,
    counter: Counter | None = None,
) -> Assignment:
    """d-d-valid, completely cycle-free assignment in linear time.

    Papers are processed in declared order (authored papers first).  An agent
    joins the reviewer pool once all of its own papers have been processed and
    leaves it after d_paper reviews, so every agent only reviews papers that
    come later in the order than its own.
    """
    ai = instance.agent_index
    n_agents = instance.n_agents
    ops = n_agents
    pending = [len(instance.papers_of[a]) for a in instance.agents]
    capacity = [d_paper] * n_agents
    in_pool = [n == 0 for n in pending]
    joined = sum(in_pool)
    authored = [p for p in instance.papers if instance.authors_of[p]]
    authorless = [p for p in instance.papers if not instance.authors_of[p]]
    reviews = []
    for i, paper in enumerate(authored + authorless):
        chosen = []
        for b in instance.reviewers_of[paper]:
            ops += 1
            j = ai[b]
            if in_pool[j]:
                chosen.append(j)
                if len(chosen) == d_paper:
                    break
        if len(chosen) < d_paper:
            raise GreedyStuckError(paper, i, len(chosen))
        for j in chosen:
            reviews.append((instance.agents[j], paper))
            capacity[j] -= 1
            if capacity[j] == 0:
                in_pool[j] = False
        for a in instance.authors_of[paper]:
            ops += 1
            j = ai[a]
            pending[j] -= 1
            if pending[j] == 0:
                in_pool[j] = True
                joined += 1
        if debug:
            free = sum(capacity[j] for j in range(n_agents) if in_pool[j])
            assert free == d_paper * (joined - (i + 1)), "free capacity not conserved"
            assert all(0 <= cap <= d_paper for cap in capacity)
    if counter is not None:
        counter["ops"] += ops
    return Assignment(frozenset(reviews))


class _SwapState:
    """Index-based working state of greedy_swap."""

    def __init__(self, instance: ReviewInstance, params: SolveParams):
        self.instance = instance
        self.c = params.c_reviewer
        self.d = params.d_paper
        self.z = params.z
        ai, pi = instance.agent_index, instance.paper_index
        self.n_agents = instance.n_agents
        self.n_papers = instance.n_papers
        self.authors = [[ai[a] for a in instance.authors_of[p]] for p in instance.papers]
        self.qual = {(ai[a], pi[p]) for a, p in instance.qualification}
        self.qualified = [[ai[a] for a in instance.reviewers_of[p]] for p in instance.papers]
        self.reviews_by: list[set[int]] = [set() for _ in range(self.n_agents)]
        self.reviewers: list[set[int]] = [set() for _ in range(self.n_papers)]

    def load_a(self, a):
        return len(self.reviews_by[a])

    def load_p(self, p):
        return len(self.reviewers[p])

    def add(self, a, p):
        self.reviews_by[a].add(p)
        self.reviewers[p].add(a)

    def remove(self, a, p):
        self.reviews_by[a].discard(p)
        self.reviewers[p].discard(a)

    def reach(self, paper, skip=None, extra=None) -> set[int]:
        """Agents reachable from ``paper`` within z authorship steps.

        Assigning (a, paper) closes a review cycle of length <= z exactly when
        a is in this set.  ``skip`` removes one review edge, ``extra`` adds one.
        """
        seen = set(self.authors[paper])
        frontier = list(seen)
        for _ in range(self.z - 1):
            nxt = []
            for b in frontier:
                papers = self.reviews_by[b]
                if extra is not None and extra[0] == b:
                    papers = papers | {extra[1]}
                for q in papers:
                    if skip is not None and skip == (b, q):
                        continue
                    for w in self.authors[q]:
                        if w not in seen:
                            seen.add(w)
                            nxt.append(w)
            if not nxt:
                break
            frontier = nxt
        return seen

    def find_swap(self, paper):
        """First-fit (p', a', a) in declared order, or None."""
        for q in range(self.n_papers):
            if q == paper:
                continue
            for donor in sorted(self.reviewers[q]):
                if donor in self.reviewers[paper] or (donor, paper) not in self.qual:
                    continue
                if donor in self.reach(paper, skip=(donor, q)):
                    continue
                blocked = None
                for a in self.qualified[q]:
                    if a == donor or self.load_a(a) >= self.c or a in self.reviewers[q]:
                        continue
                    if blocked is None:
                        blocked = self.reach(q, skip=(donor, q), extra=(donor, paper))
                    if a not in blocked:
                        return q, donor, a
        return None


def greedy_swap(
    instance: ReviewInstance, params: SolveParams, *, counter: Counter | None = None
) -> Assignment:
    """c-d-valid z-cycle-free assignment by greedy growth with swap repair.

    Case 1 adds the first eligible edge in scan order: by descending weight in
    weighted mode, then by paper and agent order.  When no edge can be added,
    Case 2 looks, for each under-reviewed paper p in order, for an assigned
    review (a', p') and a free agent a such that replacing it with (a', p) and
    (a, p') stays z-cycle-free.  Raises SwapExhaustedError if none exists.
    """
    if params.z == UNBOUNDED:
        raise ValueError("greedy_swap needs a finite z")
    if params.weighted and not instance.is_weighted:
        raise NoWeightsError()
    st = _SwapState(instance, params)
    ai, pi = instance.agent_index, instance.paper_index
    if params.weighted:
        key = lambda e: (-instance.weight(*e), pi[e[1]], ai[e[0]])  # noqa: E731
    else:
        key = lambda e: (pi[e[1]], ai[e[0]])  # noqa: E731
    order = [(ai[a], pi[p]) for a, p in sorted(instance.qualification, key=key)]
    ALIVE, DEAD, BLOCKED = 0, 1, 2
    state = [ALIVE] * len(order)
    start = 0
    missing = st.n_papers * st.d
    iterations = swaps = 0
    while missing > 0:
        iterations += 1
        reach_cache: dict[int, set[int]] = {}
        chosen = None
        for i in range(start, len(order)):
            if state[i]:
                continue
            a, p = order[i]
            if st.load_a(a) >= st.c or st.load_p(p) >= st.d or p in st.reviews_by[a]:
                state[i] = DEAD
                continue
            blocked = reach_cache.get(p)
            if blocked is None:
                blocked = reach_cache[p] = st.reach(p)
            if a in blocked:
                state[i] = BLOCKED
                continue
            chosen = i
            break
        if chosen is not None:
            a, p = order[chosen]
            st.add(a, p)
            state[chosen] = DEAD
            start = chosen
            missing -= 1
            continue
        start = len(order)
        deficit = [p for p in range(st.n_papers) if st.load_p(p) < st.d]
        for p in deficit:
            found = st.find_swap(p)
            if found is not None:
                break
        else:
            assigned = sum(st.load_p(p) for p in range(st.n_papers))
            raise SwapExhaustedError(instance.papers[deficit[0]], assigned)
        q, donor, a = found
        st.remove(donor, q)
        st.add(donor, p)
        st.add(a, q)
        swaps += 1
        missing -= 1
        for i, s in enumerate(state):
            if s == BLOCKED:
                state[i] = ALIVE
        start = 0
    assert iterations <= st.n_papers * st.d
    if counter is not None:
        counter["iterations"] += iterations
        counter["swaps"] += swaps
    reviews = frozenset(
        (instance.agents[a], instance.papers[p])
        for a in range(st.n_agents)
        for p in st.reviews_by[a]
    )
    return Assignment(reviews)


@dataclass(frozen=True)
class SwapContext:
    """Quantities from the existence argument for a Case-2 swap."""

    stuck_paper: str
    candidate_reviewers: frozenset[str]
    donor_papers: frozenset[str]
    receiver_papers: dict[str, frozenset[str]]

    def feasible_receivers(self) -> list[str]:
        return [a for a, ps in self.receiver_papers.items() if ps & self.donor_papers]


def swap_context(
    instance: ReviewInstance, params: SolveParams, assignment: Assignment, paper: str
) -> SwapContext:
    st = _SwapState(instance, params)
    ai, pi = instance.agent_index, instance.paper_index
    for a, p in assignment:
        st.add(ai[a], pi[p])
    p = pi[paper]
    blocked = st.reach(p)
    cands = [a for a in st.qualified[p] if a not in blocked and a not in st.reviewers[p]]
    donors = {q for a in cands for q in st.reviews_by[a]}
    receivers = {}
    for a in range(st.n_agents):
        if st.load_a(a) >= st.c:
            continue
        ok = set()
        for q in instance.qualified_for[instance.agents[a]]:
            qi = pi[q]
            if qi not in st.reviews_by[a] and a not in st.reach(qi):
                ok.add(q)
        receivers[instance.agents[a]] = frozenset(ok)
    return SwapContext(
        paper,
        frozenset(instance.agents[a] for a in cands),
        frozenset(instance.papers[q] for q in donors),
        receivers,
    )


# Guarantee conditions


@dataclass(frozen=True)
class Condition:
    name: str
    left: Any
    right: Any
    satisfied: bool


@dataclass(frozen=True)
class GuaranteeVerdict:
    holds: bool
    conditions: tuple[Condition, ...]

    def __bool__(self) -> bool:
        return self.holds

    def failed(self) -> list[str]:
        return [c.name for c in self.conditions if not c.satisfied]

    def to_json(self) -> dict:
        def enc(x):
            if isinstance(x, Fraction):
                return str(x) if x.denominator != 1 else x.numerator
            return x

        return {
            "holds": self.holds,
            "conditions": [
                {"name": c.name, "left": enc(c.left), "right": enc(c.right), "satisfied": c.satisfied}
                for c in self.conditions
            ],
        }


_OPS = {
    "<=": lambda x, y: x <= y,
    "<": lambda x, y: x < y,
    ">=": lambda x, y: x >= y,
    ">": lambda x, y: x > y,
    "==": lambda x, y: x == y,
}


def _cond(name: str, left, op: str, right) -> Condition:
    # Undefined extrema (None) never satisfy a condition.
    ok = left is not None and right is not None and _OPS[op](left, right)
    return Condition(name, left, right, bool(ok))


def _verdict(conds) -> GuaranteeVerdict:
    conds = tuple(conds)
    return GuaranteeVerdict(all(c.satisfied for c in conds), conds)


def _minus(x, *ys):
    if x is None or any(y is None for y in ys):
        return None
    return x - sum(ys)


def prop3_conditions(stats: DegreeStats, d_paper: int, c_reviewer: int | None = None) -> GuaranteeVerdict:
    c = d_paper if c_reviewer is None else c_reviewer
    return _verdict(
        [
            _cond("max_papers_per_author <= 1", stats.max_papers_per_author, "<=", 1),
            _cond("min_authors_per_paper == 1", stats.min_authors_per_paper, "==", 1),
            _cond("max_authors_per_paper == 1", stats.max_authors_per_paper, "==", 1),
            _cond("d_paper <= c_reviewer", d_paper, "<=", c),
            _cond(
                "min_reviewers_per_paper >= n_papers + d_paper",
                stats.min_reviewers_per_paper,
                ">=",
                stats.n_papers + d_paper,
            ),
        ]
    )


def check_prop3(instance: ReviewInstance, d_paper: int, c_reviewer: int | None = None) -> GuaranteeVerdict:
    """Conditions under which greedy_dag cannot get stuck."""
    return prop3_conditions(degree_stats(instance), d_paper, c_reviewer)


def prop4_conditions(stats: DegreeStats, params: SolveParams) -> GuaranteeVerdict:
    z = params.z
    bound = None
    if stats.min_qualifications_per_agent is not None and stats.min_reviewers_per_paper is not None:
        bound = stats.min_qualifications_per_agent + stats.min_reviewers_per_paper - 2 * z
    return _verdict(
        [
            _cond("max_papers_per_author <= 1", stats.max_papers_per_author, "<=", 1),
            _cond("min_authors_per_paper == 1", stats.min_authors_per_paper, "==", 1),
            _cond("max_authors_per_paper == 1", stats.max_authors_per_paper, "==", 1),
            _cond("c_reviewer == 1", params.c_reviewer, "==", 1),
            _cond("d_paper == 1", params.d_paper, "==", 1),
            _cond("n_agents >= n_papers", stats.n_agents, ">=", stats.n_papers),
            _cond("min_qualifications_per_agent > z", stats.min_qualifications_per_agent, ">", z),
            _cond("min_reviewers_per_paper > z", stats.min_reviewers_per_paper, ">", z),
            _cond(
                "n_papers <= min_qualifications_per_agent + min_reviewers_per_paper - 2z",
                stats.n_papers,
                "<=",
                bound,
            ),
        ]
    )


def check_prop4(instance: ReviewInstance, params: SolveParams) -> GuaranteeVerdict:
    """Single-author, single-paper, c = d = 1 regime for greedy_swap."""
    if params.z == UNBOUNDED:
        raise ValueError("check_prop4 needs a finite z")
    return prop4_conditions(degree_stats(instance), params)


def thm4_conditions(stats: DegreeStats, params: SolveParams) -> GuaranteeVerdict:
    c, d, z = params.c_reviewer, params.d_paper, params.z
    agent_side = 2 * (stats.max_papers_per_author * d) ** z
    paper_side = 2 * (stats.max_authors_per_paper * c) ** z
    slack_a = _minus(stats.min_qualifications_per_agent, agent_side, c)
    slack_p = _minus(stats.min_reviewers_per_paper, paper_side, d)
    bound = None
    if d > 0 and slack_a is not None and slack_p is not None:
        bound = slack_a + Fraction(c, d) * slack_p
    return _verdict(
        [
            _cond("n_agents * c_reviewer >= n_papers * d_paper", stats.n_agents * c, ">=", stats.n_papers * d),
            _cond(
                "min_qualifications_per_agent > 2(max_papers_per_author * d_paper)^z + c_reviewer",
                stats.min_qualifications_per_agent,
                ">",
                agent_side + c,
            ),
            _cond(
                "min_reviewers_per_paper > 2(max_authors_per_paper * c_reviewer)^z + d_paper",
                stats.min_reviewers_per_paper,
                ">",
                paper_side + d,
            ),
            _cond("n_papers <= agent slack + (c_reviewer / d_paper) * paper slack", stats.n_papers, "<=", bound),
        ]
    )


def check_thm4(instance: ReviewInstance, params: SolveParams) -> GuaranteeVerdict:
    """General degree conditions under which greedy_swap never exhausts its swaps.

    The c/d ratio is evaluated exactly with Fraction.
    """
    if params.z == UNBOUNDED:
        raise ValueError("check_thm4 needs a finite z")
    return thm4_conditions(degree_stats(instance), params)


def check_cor1(n_papers: int, coi: int, max_degree: int, z: int) -> GuaranteeVerdict:
    """Symmetric special case with c = 6, d = 3.

    ``max_degree`` bounds both authors per paper and papers per author, ``coi``
    is the largest number of papers any agent may not review.
    """
    left = n_papers - 6
    right = Fraction(3, 2) * coi + max_degree**z * (6**z * 2 + 3**z)
    return _verdict([_cond("n - 6 >= 1.5 coi + D^z (2 * 6^z + 3^z)", left, ">=", right)])

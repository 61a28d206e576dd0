"""Exact maximum-weight assignments.

The unconstrained problem is a transportation problem; it is solved as a
min-cost flow (successive shortest paths with vertex potentials) on

    source -> agent (cap c) -> paper (cap 1, cost -w) -> sink (cap d)

which is integral, so the optimum is exact in integer arithmetic.  The
z-cycle-free problem adds one constraint per review cycle of length <= z.
Those are generated lazily: the flow relaxation is solved, its cycles are
collected, and the search branches on an edge of the shortest violated cycle
(edge forced out / edge forced in), best-first by relaxation bound.
"""

from __future__ import annotations

import heapq
import time
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from cyclefree.core import (
    UNBOUNDED,
    Assignment,
    Edge,
    ReviewCycle,
    ReviewInstance,
    SolveParams,
    find_review_cycles,
)
from cyclefree.errors import OracleTooLargeError

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
NO_SOLUTION = "no_solution"

INF = float("inf")


@dataclass
class SolveStats:
    status: str
    objective: int | None = None
    nodes: int = 0
    iterations: int = 0
    constraints: int = 0
    wall_time: float = 0.0
    cuts: tuple = field(default=(), repr=False)

    def to_json(self, timing: bool = False) -> dict:
        doc = {
            "status": self.status,
            "objective": self.objective,
            "nodes": self.nodes,
            "iterations": self.iterations,
            "constraints": self.constraints,
        }
        if timing:
            doc["wall_time"] = round(self.wall_time, 6)
        return doc


@dataclass(frozen=True)
class Limits:
    max_nodes: int = 1_000_000
    max_seconds: float = 300.0


@dataclass(frozen=True)
class CycleConstraint:
    """At least one of these review edges must stay unassigned."""

    edges: frozenset[Edge]
    cycle: ReviewCycle

    def violated_by(self, reviews) -> bool:
        return self.edges <= reviews


class FlowNetwork:
    """Residual graph with paired arcs (arc i and i ^ 1 are mutual reverses)."""

    def __init__(self, n_nodes: int):
        self.n = n_nodes
        self.adj: list[list[int]] = [[] for _ in range(n_nodes)]
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cost: list[int] = []
        self.pot: list[float] = [0] * n_nodes

    def add_arc(self, u: int, v: int, cap: int, cost: int) -> int:
        arc = len(self.to)
        self.to += [v, u]
        self.cap += [cap, 0]
        self.cost += [cost, -cost]
        self.adj[u].append(arc)
        self.adj[v].append(arc + 1)
        return arc

    def _initial_potentials(self, source: int) -> list[float]:
        # Arcs only run from lower to higher node ids before any flow is sent,
        # so one pass in id order yields exact shortest distances.
        dist = [INF] * self.n
        dist[source] = 0
        for u in range(self.n):
            if dist[u] == INF:
                continue
            for arc in self.adj[u]:
                if self.cap[arc] > 0:
                    v = self.to[arc]
                    assert v > u, "network must be built in topological id order"
                    if dist[u] + self.cost[arc] < dist[v]:
                        dist[v] = dist[u] + self.cost[arc]
        return dist

    def _augment_admissible(self, source, sink, limit, pot, reach, pointer):
        """One augmenting path over arcs with zero reduced cost, or None.

        ``pointer`` holds per-node arc cursors for the current phase; arcs
        found useless are skipped for the rest of the phase.
        """
        to, cap, cost, adj = self.to, self.cap, self.cost, self.adj
        stack = [source]
        arcs: list[int] = []
        on_path = {source}
        while stack:
            u = stack[-1]
            if u == sink:
                push = limit
                for arc in arcs:
                    push = min(push, cap[arc])
                path_cost = 0
                for arc in arcs:
                    cap[arc] -= push
                    cap[arc ^ 1] += push
                    path_cost += push * cost[arc]
                return push, path_cost
            advanced = False
            edges = adj[u]
            while pointer[u] < len(edges):
                arc = edges[pointer[u]]
                v = to[arc]
                if (
                    cap[arc] > 0
                    and reach[v]
                    and v not in on_path
                    and cost[arc] + pot[u] - pot[v] == 0
                ):
                    stack.append(v)
                    arcs.append(arc)
                    on_path.add(v)
                    advanced = True
                    break
                pointer[u] += 1
            if not advanced:
                # dead end: retreat and skip the arc that led here
                stack.pop()
                on_path.discard(u)
                reach[u] = False
                if arcs:
                    arcs.pop()
                    pointer[stack[-1]] += 1
        return None

    def min_cost_flow(
        self, source: int, sink: int, demand: int, warm: bool = False
    ) -> tuple[int, int, int]:
        """Send up to ``demand`` units at minimum cost.

        With ``warm`` the stored potentials ``self.pot`` are reused; they must
        keep every residual reduced cost non-negative.
        Returns (flow sent, total cost, number of augmentations).
        """
        if warm:
            pot = list(self.pot)
        else:
            pot = [0 if p == INF else p for p in self._initial_potentials(source)]
        to, cap, cost, adj = self.to, self.cap, self.cost, self.adj
        flow = total = rounds = 0
        while flow < demand:
            dist = [INF] * self.n
            dist[source] = 0
            heap = [(0, source)]
            while heap:
                du, u = heapq.heappop(heap)
                if du > dist[u]:
                    continue
                pu = pot[u]
                for arc in adj[u]:
                    if cap[arc] <= 0:
                        continue
                    v = to[arc]
                    nd = du + cost[arc] + pu - pot[v]
                    if nd < dist[v]:
                        dist[v] = nd
                        heapq.heappush(heap, (nd, v))
            if dist[sink] == INF:
                break
            # capping at dist[sink] keeps every residual reduced cost >= 0,
            # also for nodes this pass did not reach
            ds = dist[sink]
            for v in range(self.n):
                pot[v] += dist[v] if dist[v] < ds else ds
            # Send flow along every zero-reduced-cost path before the next
            # Dijkstra pass (primal-dual); all of them are shortest paths.
            reach = [d != INF for d in dist]
            pointer = [0] * self.n
            while flow < demand:
                sent = self._augment_admissible(source, sink, demand - flow, pot, reach, pointer)
                if not sent:
                    break
                push, path_cost = sent
                flow += push
                total += path_cost
                rounds += 1
        self.pot = pot
        return flow, total, rounds


def _flow_relaxation(
    instance: ReviewInstance,
    c: int,
    d: int,
    forced_in: frozenset[Edge] = frozenset(),
    forced_out: frozenset[Edge] = frozenset(),
):
    """Max-weight c-d-valid assignment containing forced_in and avoiding forced_out.

    Returns (reviews, weight, augmentations) or (None, None, augmentations).
    """
    agents, papers = instance.agents, instance.papers
    ai, pi = instance.agent_index, instance.paper_index
    agent_cap = [c] * len(agents)
    paper_need = [d] * len(papers)
    fixed_weight = 0
    for a, p in forced_in:
        agent_cap[ai[a]] -= 1
        paper_need[pi[p]] -= 1
        fixed_weight += instance.weight(a, p)
    if min(agent_cap, default=0) < 0 or min(paper_need, default=0) < 0:
        return None, None, 0
    n_a = len(agents)
    source, sink = 0, n_a + len(papers) + 1
    net = FlowNetwork(sink + 1)
    for i in range(n_a):
        if agent_cap[i]:
            net.add_arc(source, 1 + i, agent_cap[i], 0)
    arcs = []
    for a, p in instance.edge_order():
        if (a, p) in forced_in or (a, p) in forced_out:
            continue
        arcs.append((net.add_arc(1 + ai[a], 1 + n_a + pi[p], 1, -instance.weight(a, p)), (a, p)))
    for j in range(len(papers)):
        if paper_need[j]:
            net.add_arc(1 + n_a + j, sink, paper_need[j], 0)
    demand = sum(paper_need)
    flow, cost, rounds = net.min_cost_flow(source, sink, demand)
    if flow < demand:
        return None, None, rounds
    reviews = set(forced_in)
    reviews.update(e for arc, e in arcs if net.cap[arc] == 0)
    return frozenset(reviews), fixed_weight - cost, rounds


def max_weight_assignment(
    instance: ReviewInstance, params: SolveParams
) -> tuple[Assignment | None, SolveStats]:
    """Maximum-weight c-d-valid assignment (unit weights if unweighted)."""
    t0 = time.perf_counter()
    reviews, weight, rounds = _flow_relaxation(instance, params.c_reviewer, params.d_paper)
    stats = SolveStats(INFEASIBLE if reviews is None else OPTIMAL, weight, 1, rounds)
    stats.wall_time = time.perf_counter() - t0
    return (None if reviews is None else Assignment(reviews)), stats


@dataclass(order=True)
class _Node:
    key: tuple
    forced_in: frozenset = field(compare=False)
    forced_out: frozenset = field(compare=False)
    reviews: frozenset = field(compare=False)
    weight: int = field(compare=False)
    pot: list = field(compare=False, repr=False)


def _node_network(instance, c, d, reviews, forced_in, forced_out, pot):
    """Residual network of a B&B node: ``reviews`` already carry flow,
    forced-in edges cannot be undone, forced-out edges are absent."""
    ai, pi = instance.agent_index, instance.paper_index
    n_a, n_p = instance.n_agents, instance.n_papers
    load_a, load_p = [0] * n_a, [0] * n_p
    for a, p in reviews:
        load_a[ai[a]] += 1
        load_p[pi[p]] += 1
    sink = n_a + n_p + 1
    # sink + 1 and sink + 2 are spare terminals for re-routing freed units
    net = FlowNetwork(sink + 3)
    for i in range(n_a):
        arc = net.add_arc(0, 1 + i, c - load_a[i], 0)
        net.cap[arc ^ 1] = load_a[i]
    arcs = []
    for a, p in instance.edge_order():
        e = (a, p)
        if e in forced_out:
            continue
        arc = net.add_arc(1 + ai[a], 1 + n_a + pi[p], 1, -instance.weight(a, p))
        if e in reviews:
            net.cap[arc] = 0
            net.cap[arc ^ 1] = 0 if e in forced_in else 1
        arcs.append((arc, e))
    for j in range(n_p):
        arc = net.add_arc(1 + n_a + j, sink, d - load_p[j], 0)
        net.cap[arc ^ 1] = load_p[j]
    if pot is not None:
        net.pot = list(pot)
    return net, arcs


BACKENDS = ("auto", "highs", "bnb")


def max_weight_zcycle_free(
    instance: ReviewInstance,
    params: SolveParams,
    limits: Limits | None = None,
    backend: str = "bnb",
) -> tuple[Assignment | None, SolveStats]:
    """Maximum-weight c-d-valid z-cycle-free assignment.

    Cycle constraints are generated lazily in both backends: ``highs`` hands
    the 0/1 program to the HiGHS MILP solver shipped with scipy and re-solves
    after each batch of new constraints; ``bnb`` is the built-in best-first
    branch and bound over flow relaxations (no dependencies, the default).
    ``auto`` picks highs when scipy is importable and bnb otherwise.

    Status is OPTIMAL when the search completed, FEASIBLE when the budget ran
    out with an incumbent, NO_SOLUTION when it ran out without one, and
    INFEASIBLE when the search proved no assignment exists.
    """
    if params.z == UNBOUNDED:
        raise ValueError("max_weight_zcycle_free needs a finite z")
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    limits = limits or Limits()
    if backend == "auto":
        backend = "highs" if _have_scipy() else "bnb"
    if backend == "highs":
        if not _have_scipy():
            raise ValueError("the highs backend needs scipy (install the 'highs' extra)")
        return _zfree_highs(instance, params, limits)
    return _zfree_bnb(instance, params, limits)


def _have_scipy() -> bool:
    try:
        import scipy.optimize  # noqa: F401
    except ImportError:
        return False
    return True


def _zfree_highs(instance: ReviewInstance, params: SolveParams, limits: Limits):
    import numpy as np
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import coo_matrix

    t0 = time.perf_counter()
    c, d, z = params.c_reviewer, params.d_paper, params.z
    edges = instance.edge_order()
    index = {e: i for i, e in enumerate(edges)}
    n_a, n_p, n_e = instance.n_agents, instance.n_papers, len(edges)
    stats = SolveStats(INFEASIBLE)
    if n_e == 0:
        stats.wall_time = time.perf_counter() - t0
        if n_p and d:
            return None, stats
        stats.status, stats.objective = OPTIMAL, 0
        return Assignment(frozenset()), stats
    ai, pi = instance.agent_index, instance.paper_index
    rows = [ai[a] for a, _ in edges] + [n_a + pi[p] for _, p in edges]
    degree = LinearConstraint(
        coo_matrix((np.ones(2 * n_e), (rows, list(range(n_e)) * 2)), shape=(n_a + n_p, n_e)),
        np.r_[np.zeros(n_a), np.full(n_p, d)],
        np.r_[np.full(n_a, c), np.full(n_p, d)],
    )
    cost = -np.array([instance.weight(a, p) for a, p in edges], dtype=float)
    pool: list[CycleConstraint] = []
    pool_keys: set[frozenset] = set()
    while True:
        remaining = limits.max_seconds - (time.perf_counter() - t0)
        budget_nodes = limits.max_nodes - stats.nodes
        if remaining <= 0 or budget_nodes <= 0:
            stats.status = NO_SOLUTION
            break
        constraints = [degree]
        if pool:
            r, col = [], []
            for k, con in enumerate(pool):
                for e in con.edges:
                    r.append(k)
                    col.append(index[e])
            constraints.append(
                LinearConstraint(
                    coo_matrix((np.ones(len(r)), (r, col)), shape=(len(pool), n_e)),
                    -np.inf,
                    np.array([len(con.edges) - 1 for con in pool], dtype=float),
                )
            )
        res = milp(
            cost,
            constraints=constraints,
            integrality=np.ones(n_e),
            bounds=Bounds(0, 1),
            options={"time_limit": remaining, "node_limit": budget_nodes, "mip_rel_gap": 0.0},
        )
        stats.iterations += 1
        stats.nodes += int(getattr(res, "mip_node_count", 0) or 0)
        if res.status == 2:
            stats.status = INFEASIBLE
            break
        if res.x is None:
            stats.status = NO_SOLUTION
            break
        reviews = frozenset(e for e, v in zip(edges, res.x) if v > 0.5)
        fresh = 0
        for cyc in find_review_cycles(instance, reviews, z).cycles:
            key = frozenset(cyc.review_edges())
            if key not in pool_keys:
                pool_keys.add(key)
                pool.append(CycleConstraint(key, cyc))
                fresh += 1
        if fresh:
            if res.status != 0:
                stats.status = NO_SOLUTION
                break
            continue
        stats.status = OPTIMAL if res.status == 0 else FEASIBLE
        stats.objective = sum(instance.weight(a, p) for a, p in reviews)
        break
    stats.constraints = len(pool)
    stats.cuts = tuple(pool)
    stats.wall_time = time.perf_counter() - t0
    if stats.objective is None:
        return None, stats
    return Assignment(reviews), stats


def _zfree_bnb(instance: ReviewInstance, params: SolveParams, limits: Limits):
    t0 = time.perf_counter()
    c, d, z = params.c_reviewer, params.d_paper, params.z
    ai, pi = instance.agent_index, instance.paper_index
    scan = lambda e: (pi[e[1]], ai[e[0]])  # noqa: E731
    pool: list[CycleConstraint] = []
    pool_keys: set[frozenset] = set()
    stats = SolveStats(INFEASIBLE)

    n_a = instance.n_agents

    def decode(net, arcs):
        reviews = frozenset(e for arc, e in arcs if net.cap[arc] == 0)
        return reviews, sum(instance.weight(a, p) for a, p in reviews)

    def relax_root():
        net, arcs = _node_network(instance, c, d, frozenset(), frozenset(), frozenset(), None)
        demand = d * instance.n_papers
        flow, _, rounds = net.min_cost_flow(0, n_a + instance.n_papers + 1, demand)
        net.pot[-2:] = [0, 0]
        stats.iterations += rounds
        if flow < demand:
            return None
        return (*decode(net, arcs), net.pot)

    def relax(node, fin, fout):
        # Warm start: drop the parent's newly forbidden reviews, leaving
        # excess at their agents and deficits at their papers, then send the
        # freed units from a spare source (feeding the agents) to a spare
        # sink (fed by the papers) on the parent's potentials.
        removed = sorted(fout & node.reviews, key=scan)
        if not removed:
            return node.reviews, node.weight, node.pot
        net, arcs = _node_network(instance, c, d, node.reviews, fin, fout, node.pot)
        spare_s, spare_t = net.n - 2, net.n - 1
        excess = Counter(1 + ai[a] for a, _ in removed)
        deficit = Counter(1 + n_a + pi[p] for _, p in removed)
        pot = net.pot
        # arcs spare_s -> agent and paper -> spare_t have cost 0; these
        # choices keep their reduced costs non-negative
        pot[spare_s] = max(pot[v] for v in excess)
        pot[spare_t] = min(pot[v] for v in deficit)
        for v, k in sorted(excess.items()):
            net.add_arc(spare_s, v, k, 0)
        for v, k in sorted(deficit.items()):
            net.add_arc(v, spare_t, k, 0)
        flow, _, rounds = net.min_cost_flow(spare_s, spare_t, len(removed), warm=True)
        stats.iterations += rounds
        if flow < len(removed):
            return None
        return (*decode(net, arcs), net.pot)

    def propagate(fin, fout):
        # A constraint with all but one edge forced in forces the last one out.
        extra = set()
        for con in pool:
            free = con.edges - fin
            if not free:
                return None
            if len(free) == 1:
                extra |= free
        return fout | extra

    seq = 0
    heap: list[_Node] = []
    root = relax_root()
    if root is not None:
        heap.append(_Node((-root[1], seq), frozenset(), frozenset(), *root))
    best: _Node | None = None
    exhausted = False
    while heap:
        if stats.nodes >= limits.max_nodes or time.perf_counter() - t0 > limits.max_seconds:
            exhausted = True
            break
        node = heapq.heappop(heap)
        if best is not None and node.weight <= best.weight:
            heap.clear()
            break
        stats.nodes += 1
        violated = [con for con in pool if con.violated_by(node.reviews)]
        if not violated:
            report = find_review_cycles(instance, node.reviews, z)
            for cyc in report.cycles:
                edges = frozenset(cyc.review_edges())
                if edges not in pool_keys:
                    pool_keys.add(edges)
                    con = CycleConstraint(edges, cyc)
                    pool.append(con)
                    violated.append(con)
        if not violated:
            best = node
            continue
        target = min(violated, key=lambda con: len(con.edges))
        free = sorted(target.edges - node.forced_in, key=scan)
        if not free:
            continue
        edge = free[0]
        for fin, fout in (
            (node.forced_in, node.forced_out | {edge}),
            (node.forced_in | {edge}, node.forced_out),
        ):
            fout = propagate(fin, fout)
            if fout is None or fin & fout:
                continue
            child = relax(node, fin, fout)
            if child is None or (best is not None and child[1] <= best.weight):
                continue
            seq += 1
            heapq.heappush(heap, _Node((-child[1], seq), fin, fout, *child))
    stats.constraints = len(pool)
    stats.cuts = tuple(pool)
    stats.wall_time = time.perf_counter() - t0
    if best is None:
        stats.status = NO_SOLUTION if exhausted else INFEASIBLE
        return None, stats
    stats.status = FEASIBLE if exhausted else OPTIMAL
    stats.objective = best.weight
    return Assignment(best.reviews), stats


def _closes_short_cycle(instance, reviews_by, paper, reviewers, z) -> bool:
    """Agent-level walk test used by the oracle.

    Agent x points to agent y when x reviews a paper authored by y.  Giving
    ``paper`` to reviewer r closes a cycle of length <= z iff some author of
    ``paper`` reaches r in at most z - 1 such steps.
    """
    targets = set(reviewers)
    level = set(instance.authors_of[paper])
    seen = set(level)
    for step in range(z):
        if level & targets:
            return True
        if step == z - 1:
            break
        nxt = set()
        for x in level:
            for q in reviews_by[x]:
                nxt.update(instance.authors_of[q])
        level = nxt - seen
        seen |= level
    return False


def brute_force_oracle(
    instance: ReviewInstance,
    params: SolveParams,
    *,
    cycle_free: bool = True,
    max_edges: int | None = 20,
) -> tuple[int | None, Assignment | None]:
    """Exhaustive maximum over all c-d-valid (z-cycle-free) assignments.

    Every c-d-valid assignment is a choice of one d-subset of qualified
    reviewers per paper; the search picks these one paper at a time, always
    taking next the open paper with the fewest reviewers left under capacity.
    A branch is cut when it is over capacity, already holds a short cycle,
    leaves some paper with fewer than d usable reviewers, or cannot beat the
    best weight found.  Returns (weight, witness) or (None, None) if
    infeasible.  ``max_edges`` caps the instance size (None: no cap).
    """
    if max_edges is not None and len(instance.qualification) > max_edges:
        raise OracleTooLargeError(len(instance.qualification), max_edges)
    c, d = params.c_reviewer, params.d_paper
    z = params.z
    if z == UNBOUNDED:
        z = max(instance.n_agents, 1)
    papers = instance.papers
    options = {p: instance.reviewers_of[p] for p in papers}
    if any(len(revs) < d for revs in options.values()):
        return None, None
    top = {
        p: sum(sorted((instance.weight(a, p) for a in revs), reverse=True)[:d])
        for p, revs in options.items()
    }
    load = dict.fromkeys(instance.agents, 0)
    reviews_by: dict[str, list[str]] = {a: [] for a in instance.agents}
    chosen: list[Edge] = []
    done: set[str] = set()
    best: list = [None, None]

    def search(weight, bound):
        if best[0] is not None and weight + bound <= best[0]:
            return
        if len(done) == len(papers):
            if cycle_free:
                report = find_review_cycles(instance, chosen, params.z)
                assert not report.has_cycle, "walk test and cycle enumeration disagree"
            best[0], best[1] = weight, frozenset(chosen)
            return
        pick, pick_avail = None, None
        for q in papers:
            if q in done:
                continue
            avail = [a for a in options[q] if load[a] < c]
            if len(avail) < d:
                return
            if pick is None or len(avail) < len(pick_avail):
                pick, pick_avail = q, avail
        done.add(pick)
        for group in combinations(pick_avail, d):
            if cycle_free and _closes_short_cycle(instance, reviews_by, pick, group, z):
                continue
            for a in group:
                load[a] += 1
                reviews_by[a].append(pick)
                chosen.append((a, pick))
            search(weight + sum(instance.weight(a, pick) for a in group), bound - top[pick])
            for a in group:
                load[a] -= 1
                reviews_by[a].pop()
                chosen.pop()
        done.discard(pick)

    search(0, sum(top.values()))
    if best[0] is None:
        return None, None
    return best[0], Assignment(best[1])


def solve_weight(instance: ReviewInstance, reviews: Iterable[Edge]) -> int:
    return sum(instance.weight(a, p) for a, p in reviews)

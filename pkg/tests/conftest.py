import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cyclefree import ReviewInstance  # noqa: E402


def make_instance(agents, papers, authorship=(), qualification=(), weights=None, forbid=True):
    return ReviewInstance(list(agents), list(papers), set(authorship), set(qualification), weights, forbid)


@pytest.fixture
def mutual_pair():
    """Two agents, each authoring one paper and qualified only for the other's."""
    return make_instance(
        ["a1", "a2"],
        ["p1", "p2"],
        {("p1", "a1"), ("p2", "a2")},
        {("a1", "p2"), ("a2", "p1")},
    )


def tiny_instances(count, seed, max_edges=12, weighted=True):
    """Random instances with at most ``max_edges`` qualification edges,
    paired with random (c, d)."""
    import random

    rnd = random.Random(seed)
    out = []
    while len(out) < count:
        n_a, n_p = rnd.randint(1, 4), rnd.randint(1, 4)
        agents = [f"a{i}" for i in range(n_a)]
        papers = [f"p{j}" for j in range(n_p)]
        authorship = set()
        for p in papers:
            for a in rnd.sample(agents, rnd.randint(0, min(2, n_a))):
                authorship.add((p, a))
        # a quarter of the instances allow self-review, so z = 1 matters
        forbid = rnd.random() >= 0.25
        free = [(a, p) for a in agents for p in papers if not forbid or (p, a) not in authorship]
        quals = set(rnd.sample(free, min(len(free), rnd.randint(max_edges // 2, max_edges))))
        weights = {e: rnd.randint(0, 9) for e in sorted(quals)} if weighted else None
        c, d = rnd.randint(1, 3), rnd.choice((1, 1, 1, 2))
        out.append((make_instance(agents, papers, authorship, quals, weights, forbid), c, d))
    return out

"""Dataset ingestion, seeded sampling and random instance generation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from pathlib import Path
from typing import Sequence

from cyclefree.core import ReviewInstance, degree_stats
from cyclefree.errors import DatasetError, GeneratorError

MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator (Steele, Lea, Flood 2014).

    Integers in [0, n) are drawn by rejection (reject x >= n * floor(2^64 / n),
    then x mod n); samples use a partial Fisher-Yates shuffle.  Both are simple
    enough to reproduce bit-exactly in any language.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        x = self.state
        x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
        return x ^ (x >> 31)

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        limit = ((1 << 64) // n) * n
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def sample(self, items: Sequence, k: int) -> list:
        pool = list(items)
        if not 0 <= k <= len(pool):
            raise ValueError(f"cannot sample {k} of {len(pool)} items")
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


def round_half_up(x: Decimal) -> int:
    return int(x.quantize(Decimal(1), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class SimilarityDataset:
    papers: tuple[str, ...]
    authors_of: dict[str, tuple[str, ...]]
    reviewers: tuple[str, ...]
    similarity: dict[tuple[str, str], Decimal] = field(repr=False)

    @property
    def n_papers(self) -> int:
        return len(self.papers)

    @property
    def n_authors(self) -> int:
        return len({a for authors in self.authors_of.values() for a in authors})

    def score(self, reviewer: str, paper: str) -> Decimal:
        return self.similarity.get((reviewer, paper), Decimal(0))


def _read_csv(path: Path, header: tuple[str, ...]):
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        first = next(reader, None)
        if first is None:
            raise DatasetError(f"{path.name}: no header")
        if tuple(c.strip() for c in first) != header:
            raise DatasetError(f"{path.name}: expected header {','.join(header)}", 1)
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path.name}: expected {len(header)} columns, got {len(row)}", reader.line_num
                )
            yield reader.line_num, [c.strip() for c in row]


def load_dataset(path, authorship_path=None) -> SimilarityDataset:
    """Read ``similarity.csv`` (reviewer_id,paper_id,similarity) and
    ``authorship.csv`` (paper_id,author_id).

    ``path`` is either the directory holding both files or the similarity
    file itself, in which case ``authorship_path`` must be given.
    """
    path = Path(path)
    if path.is_dir():
        sim_path, auth_path = path / "similarity.csv", path / "authorship.csv"
    else:
        if authorship_path is None:
            raise DatasetError("authorship file not given")
        sim_path, auth_path = path, Path(authorship_path)
    authors: dict[str, list[str]] = {}
    pool: dict[str, None] = {}
    for line, (paper, author) in _read_csv(auth_path, ("paper_id", "author_id")):
        if not paper or not author:
            raise DatasetError(f"{auth_path.name}: empty identifier", line)
        authors.setdefault(paper, [])
        if author in authors[paper]:
            raise DatasetError(f"{auth_path.name}: duplicate authorship {paper}/{author}", line)
        authors[paper].append(author)
        pool.setdefault(author)
    similarity: dict[tuple[str, str], Decimal] = {}
    for line, (reviewer, paper, raw) in _read_csv(
        sim_path, ("reviewer_id", "paper_id", "similarity")
    ):
        if paper not in authors:
            raise DatasetError(f"{sim_path.name}: unknown paper {paper}", line)
        try:
            score = Decimal(raw)
        except InvalidOperation:
            raise DatasetError(f"{sim_path.name}: bad similarity {raw!r}", line) from None
        if not score.is_finite() or not 0 <= score <= 1:
            raise DatasetError(f"{sim_path.name}: score out of range: {raw}", line)
        if (reviewer, paper) in similarity:
            raise DatasetError(f"{sim_path.name}: duplicate row {reviewer}/{paper}", line)
        similarity[(reviewer, paper)] = score
        pool.setdefault(reviewer)
    return SimilarityDataset(
        papers=tuple(authors),
        authors_of={p: tuple(a) for p, a in authors.items()},
        reviewers=tuple(pool),
        similarity=similarity,
    )


@dataclass(frozen=True)
class SampleSpec:
    n_papers: int
    ratio: Decimal | float | str
    seed: int
    weight_scale: int = 1_000_000

    def n_agents(self) -> int:
        return round_half_up(Decimal(str(self.ratio)) * self.n_papers)


def sample_instance(dataset: SimilarityDataset, spec: SampleSpec) -> ReviewInstance:
    """Sample papers, then agents among the authors of those papers.

    Every agent is qualified for every paper it did not write; the weight of
    (agent, paper) is the similarity scaled by ``weight_scale`` and rounded
    half up.
    """
    if spec.n_papers > dataset.n_papers:
        raise GeneratorError(f"asked for {spec.n_papers} papers, dataset has {dataset.n_papers}")
    rng = SplitMix64(spec.seed)
    paper_rank = {p: i for i, p in enumerate(dataset.papers)}
    papers = sorted(rng.sample(dataset.papers, spec.n_papers), key=paper_rank.__getitem__)
    chosen = set(papers)
    written = _papers_by(dataset)
    pool = [a for a in dataset.reviewers if any(p in chosen for p in written.get(a, ()))]
    n_agents = spec.n_agents()
    if n_agents > len(pool):
        raise GeneratorError(f"author pool of {len(pool)} is smaller than {n_agents} agents")
    agent_rank = {a: i for i, a in enumerate(pool)}
    agents = sorted(rng.sample(pool, n_agents), key=agent_rank.__getitem__)
    agent_set = set(agents)
    authorship = {(p, a) for p in papers for a in dataset.authors_of[p] if a in agent_set}
    qualification = {
        (a, p) for a in agents for p in papers if a not in dataset.authors_of[p]
    }
    scale = Decimal(spec.weight_scale)
    weights = {e: round_half_up(dataset.score(*e) * scale) for e in qualification}
    return ReviewInstance(agents, papers, authorship, qualification, weights, True)


def _papers_by(dataset: SimilarityDataset) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for p in dataset.papers:
        for a in dataset.authors_of[p]:
            out.setdefault(a, []).append(p)
    return out


@dataclass(frozen=True)
class RandomControls:
    """Shape of a random instance.

    Each paper gets between ``min_authors`` and ``max_authors`` authors, no
    agent authors more than ``max_papers_per_author`` papers, and each agent is
    barred from ``conflicts`` further papers on top of its own.  The optional
    lower bounds on qualification degrees trigger resampling.
    """

    min_authors: int = 1
    max_authors: int = 1
    max_papers_per_author: int = 1
    conflicts: int = 0
    min_qualifications_per_agent: int | None = None
    min_reviewers_per_paper: int | None = None
    max_weight: int | None = None


def gen_random(
    n_agents: int, n_papers: int, controls: RandomControls, seed: int, attempts: int = 100
) -> ReviewInstance:
    if controls.min_authors > controls.max_authors:
        raise GeneratorError("min_authors > max_authors")
    rng = SplitMix64(seed)
    agents = [f"a{i}" for i in range(n_agents)]
    papers = [f"p{j}" for j in range(n_papers)]
    for _ in range(attempts):
        inst = _random_attempt(rng, agents, papers, controls)
        if inst is not None:
            return inst
    raise GeneratorError(f"degree bounds not met after {attempts} attempts")


def _random_attempt(rng, agents, papers, ctl: RandomControls):
    load = dict.fromkeys(agents, 0)
    authorship = set()
    own: dict[str, set[str]] = {a: set() for a in agents}
    for p in papers:
        k = ctl.min_authors + rng.below(ctl.max_authors - ctl.min_authors + 1)
        free = [a for a in agents if load[a] < ctl.max_papers_per_author]
        if len(free) < k:
            return None
        for a in rng.sample(free, k):
            load[a] += 1
            authorship.add((p, a))
            own[a].add(p)
    qualification = set()
    for a in agents:
        allowed = [p for p in papers if p not in own[a]]
        barred = set(rng.sample(allowed, min(ctl.conflicts, len(allowed))))
        qualification.update((a, p) for p in allowed if p not in barred)
    weights = None
    if ctl.max_weight is not None:
        order = sorted(qualification, key=lambda e: (int(e[0][1:]), int(e[1][1:])))
        weights = {e: 1 + rng.below(ctl.max_weight) for e in order}
    inst = ReviewInstance(agents, papers, authorship, qualification, weights, True)
    stats = degree_stats(inst)
    if ctl.min_qualifications_per_agent is not None and (
        stats.min_qualifications_per_agent is None
        or stats.min_qualifications_per_agent < ctl.min_qualifications_per_agent
    ):
        return None
    if ctl.min_reviewers_per_paper is not None and (
        stats.min_reviewers_per_paper is None
        or stats.min_reviewers_per_paper < ctl.min_reviewers_per_paper
    ):
        return None
    return inst


def synthetic_dataset(
    n_papers: int, n_authors: int, seed: int, max_authors: int = 3, resolution: int = 1000
) -> SimilarityDataset:
    """Stand-in for a real similarity export: random authorship (1 to
    ``max_authors`` authors per paper) and uniform similarity scores on a grid
    of step 1/resolution for every author-paper pair."""
    if n_authors < max_authors:
        raise GeneratorError("fewer authors than max_authors")
    rng = SplitMix64(seed)
    authors = [f"r{i}" for i in range(n_authors)]
    papers = [f"s{j}" for j in range(n_papers)]
    rank = {a: i for i, a in enumerate(authors)}
    authors_of = {}
    for p in papers:
        k = 1 + rng.below(max_authors)
        authors_of[p] = tuple(sorted(rng.sample(authors, k), key=rank.__getitem__))
    similarity = {
        (a, p): Decimal(rng.below(resolution + 1)) / resolution for a in authors for p in papers
    }
    return SimilarityDataset(tuple(papers), authors_of, tuple(authors), similarity)

"""Structural overlap between aligned entity pairs, and reducing it.

The coverage rate of a gold pair ``(e1, e2)`` is the number of neighbours of
``e1`` whose gold counterpart is a neighbour of ``e2``, divided by the smaller
of the two neighbourhood sizes.  :func:`heterogenize` deletes relation triples
until coverage falls under a target, producing low-overlap benchmark variants.
"""

import logging
import random
from dataclasses import dataclass, field

from .errors import UnknownEntityError

logger = logging.getLogger(__name__)

N_BUCKETS = 10


def _as_mapping(links):
    if isinstance(links, dict):
        return links
    if hasattr(links, "pairs"):
        links = links.pairs
    return dict(links)


def neighbor_set(kg, e):
    """Entities sharing a relation triple with ``e`` in either direction, excluding ``e``."""
    if not 0 <= e < len(kg.entities):
        raise UnknownEntityError(f"entity id {e} not in graph")
    return set(kg.adjacency.get(e, ()))


def _shared_and_denominator(n1, n2, links):
    shared = sum(1 for n in n1 if links.get(n) in n2)
    return shared, min(len(n1), len(n2))


def coverage(kg1, kg2, pair, links):
    """Coverage rate of ``pair``; 0.0 when either neighbourhood is empty."""
    links = _as_mapping(links)
    shared, denom = _shared_and_denominator(neighbor_set(kg1, pair[0]), neighbor_set(kg2, pair[1]), links)
    return shared / denom if denom else 0.0


def bucket_of(shared, denom):
    """Decile bucket for ``shared/denom``, computed on integers to avoid rounding drift."""
    if denom == 0:
        return 0
    return min(N_BUCKETS * shared // denom, N_BUCKETS - 1)


@dataclass
class CoverageProfile:
    per_pair: dict = field(default_factory=dict)
    counts: list = field(default_factory=lambda: [0] * N_BUCKETS)
    degenerate: list = field(default_factory=list)

    @property
    def total(self):
        return sum(self.counts)

    @property
    def percentages(self):
        n = self.total
        return [100.0 * c / n if n else 0.0 for c in self.counts]

    def share_at_least(self, lower):
        """Fraction of pairs in buckets whose lower bound is >= ``lower`` (e.g. 0.9)."""
        first = round(lower * N_BUCKETS)
        return sum(self.counts[first:]) / self.total if self.total else 0.0

    def share_below(self, upper):
        last = round(upper * N_BUCKETS)
        return sum(self.counts[:last]) / self.total if self.total else 0.0


def profile(kg1, kg2, links, pairs=None):
    """Coverage of every gold pair (or of ``pairs`` only) with a decile histogram."""
    links = _as_mapping(links)
    prof = CoverageProfile()
    adj1, adj2 = kg1.adjacency, kg2.adjacency
    for e1, e2 in sorted(links.items() if pairs is None else pairs):
        n1, n2 = adj1.get(e1, set()), adj2.get(e2, set())
        shared, denom = _shared_and_denominator(n1, n2, links)
        if denom == 0:
            prof.degenerate.append((e1, e2))
        prof.per_pair[(e1, e2)] = shared / denom if denom else 0.0
        prof.counts[bucket_of(shared, denom)] += 1
    return prof


def write_histogram(prof, path):
    lines = [f"{b / N_BUCKETS:.1f}\t{pct!r}" for b, pct in enumerate(prof.percentages)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class HeterogenizeConfig:
    target_max_coverage: float = 0.5
    min_degree: int = 1
    seed: int = 0
    alternate_sides: bool = True

    def __post_init__(self):
        if not 0.0 <= self.target_max_coverage <= 1.0:
            raise ValueError("target_max_coverage must lie in [0, 1]")
        if self.min_degree < 1:
            raise ValueError("min_degree must be >= 1")


@dataclass
class RemovalLog:
    # (side 1|2, pair, removed triple ids) in removal order
    removed: list = field(default_factory=list)
    # (pair, coverage reached) for pairs left above target
    unreachable: list = field(default_factory=list)

    def write(self, path, kg1, kg2):
        graphs = {1: kg1, 2: kg2}
        lines = []
        for side, (e1, e2), (h, r, t) in self.removed:
            kg = graphs[side]
            lines.append("\t".join((
                "removed", str(side), kg1.entities.surface(e1), kg2.entities.surface(e2),
                kg.entities.surface(h), kg.relations.surface(r), kg.entities.surface(t))))
        for (e1, e2), cov in self.unreachable:
            lines.append("\t".join(("unreachable", kg1.entities.surface(e1), kg2.entities.surface(e2), repr(cov))))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("".join(line + "\n" for line in lines))


class _WorkingGraph:
    """Mutable adjacency view used while deleting triples."""

    def __init__(self, kg):
        self.triples = set(kg.rel_triples)
        self.between = {}
        self.degree = {}
        for trip in kg.rel_triples:
            h, _, t = trip
            self.degree[h] = self.degree.get(h, 0) + 1
            if h != t:
                self.degree[t] = self.degree.get(t, 0) + 1
                self.between.setdefault(frozenset((h, t)), []).append(trip)
        self.adj = {e: set(ns) for e, ns in kg.adjacency.items()}

    def neighbors(self, e):
        return self.adj.get(e, set())

    def can_cut(self, a, b, min_degree):
        k = len(self.between[frozenset((a, b))])
        return self.degree[a] - k >= min_degree and self.degree[b] - k >= min_degree

    def cut(self, a, b, rng):
        """Delete every triple joining ``a`` and ``b``; return them in seeded order."""
        trips = sorted(self.between.pop(frozenset((a, b))))
        rng.shuffle(trips)
        for trip in trips:
            self.triples.discard(trip)
        self.degree[a] -= len(trips)
        self.degree[b] -= len(trips)
        self.adj[a].discard(b)
        self.adj[b].discard(a)
        return trips


def heterogenize(kg1, kg2, links, cfg=HeterogenizeConfig()):
    """Remove relation triples so that gold pairs' coverage drops to ``cfg.target_max_coverage``.

    Pairs are visited in an order shuffled by ``cfg.seed``.  For a pair above
    target, the shared neighbours (neighbours of the source whose gold
    counterpart neighbours the target) are ranked by combined degree,
    highest first, ties by entity id.  The link between the pair member and
    the top removable shared neighbour is cut on one side: alternating sides
    when ``cfg.alternate_sides`` is set, otherwise the side with more relation
    triples, falling back to the other side when the degree floor blocks every
    candidate.  Cutting stops at target or when nothing can be cut without
    pushing an entity below ``cfg.min_degree`` triples.

    Returns ``(new_kg1, new_kg2, RemovalLog)``.  Attribute triples pass through.
    """
    links = _as_mapping(links)
    work = {1: _WorkingGraph(kg1), 2: _WorkingGraph(kg2)}
    rng = random.Random(cfg.seed)
    log = RemovalLog()
    pairs = sorted(links.items())
    rng.shuffle(pairs)

    def current(e1, e2):
        shared = [n for n in work[1].neighbors(e1) if links.get(n) in work[2].neighbors(e2)]
        denom = min(len(work[1].neighbors(e1)), len(work[2].neighbors(e2)))
        return shared, (len(shared) / denom if denom else 0.0)

    for e1, e2 in pairs:
        shared, cov = current(e1, e2)
        prefer = 1
        while cov > cfg.target_max_coverage:
            ranked = sorted(shared, key=lambda n: (-(work[1].degree[n] + work[2].degree[links[n]]), n))
            if cfg.alternate_sides:
                order = (prefer, 3 - prefer)
            else:
                order = (1, 2) if len(work[1].triples) >= len(work[2].triples) else (2, 1)
            chosen = None
            for side in order:
                for n1 in ranked:
                    a, b = (e1, n1) if side == 1 else (e2, links[n1])
                    if work[side].can_cut(a, b, cfg.min_degree):
                        chosen = side, a, b
                        break
                if chosen:
                    break
            if chosen is None:
                log.unreachable.append(((e1, e2), cov))
                break
            side, a, b = chosen
            for trip in work[side].cut(a, b, rng):
                log.removed.append((side, (e1, e2), trip))
            prefer = 3 - side
            shared, cov = current(e1, e2)

    if log.unreachable:
        logger.info("%d pairs could not reach coverage %.3f", len(log.unreachable), cfg.target_max_coverage)
    return kg1.with_rel_triples(work[1].triples), kg2.with_rel_triples(work[2].triples), log

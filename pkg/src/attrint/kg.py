"""Knowledge-graph container and the OpenEA-style tab-separated file formats.

A graph is stored as four interned vocabularies (entities, relations,
attributes, values) plus two frozen triple sets of integer ids.  Files hold
one ``head<TAB>relation<TAB>tail`` triple per line; alignment links hold one
``source<TAB>target`` pair per line.
"""

import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AlignmentError, AttrIntError, ParseError

logger = logging.getLogger(__name__)

TRAIN, VALID, TEST = "train", "valid", "test"
DEFAULT_RATIO = (2, 1, 7)


class Vocab:
    """Bijective mapping between surface strings and dense integer ids."""

    def __init__(self, surfaces=()):
        self._surfaces = []
        self._index = {}
        for s in surfaces:
            self.add(s)

    def add(self, surface):
        idx = self._index.get(surface)
        if idx is None:
            idx = len(self._surfaces)
            self._surfaces.append(surface)
            self._index[surface] = idx
        return idx

    def get(self, surface, default=None):
        return self._index.get(surface, default)

    def __getitem__(self, surface):
        return self._index[surface]

    def surface(self, idx):
        return self._surfaces[idx]

    def __contains__(self, surface):
        return surface in self._index

    def __len__(self):
        return len(self._surfaces)

    def __iter__(self):
        return iter(self._surfaces)


@dataclass(frozen=True, eq=False)
class KnowledgeGraph:
    entities: Vocab
    relations: Vocab
    attributes: Vocab
    values: Vocab
    rel_triples: frozenset
    attr_triples: frozenset
    _adjacency: dict = field(default=None, repr=False, compare=False)

    @classmethod
    def from_surface_triples(cls, rel_triples=(), attr_triples=()):
        entities, relations, attributes, values = Vocab(), Vocab(), Vocab(), Vocab()
        rel = set()
        for h, r, t in rel_triples:
            rel.add((entities.add(h), relations.add(r), entities.add(t)))
        attr = set()
        for e, a, v in attr_triples:
            attr.add((entities.add(e), attributes.add(a), values.add(v)))
        return cls(entities, relations, attributes, values, frozenset(rel), frozenset(attr))

    def with_rel_triples(self, rel_triples):
        """Same vocabularies and attribute triples, different relation triples."""
        return KnowledgeGraph(self.entities, self.relations, self.attributes,
                              self.values, frozenset(rel_triples), self.attr_triples)

    @property
    def adjacency(self):
        """entity id -> set of neighbouring entity ids (both directions, no self)."""
        if self._adjacency is None:
            adj = {}
            for h, _, t in self.rel_triples:
                if h == t:
                    continue
                adj.setdefault(h, set()).add(t)
                adj.setdefault(t, set()).add(h)
            object.__setattr__(self, "_adjacency", adj)
        return self._adjacency

    def entity_id(self, surface):
        return self.entities[surface]

    def surface_rel_triples(self):
        ent, rel = self.entities.surface, self.relations.surface
        return {(ent(h), rel(r), ent(t)) for h, r, t in self.rel_triples}

    def surface_attr_triples(self):
        ent, att, val = self.entities.surface, self.attributes.surface, self.values.surface
        return {(ent(e), att(a), val(v)) for e, a, v in self.attr_triples}

    def stats(self):
        return {
            "entities": len(self.entities),
            "relations": len(self.relations),
            "attributes": len(self.attributes),
            "values": len(self.values),
            "rel_triples": len(self.rel_triples),
            "attr_triples": len(self.attr_triples),
        }


def _read_rows(path, arity):
    path = Path(path)
    rows = []
    with open(path, encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != arity:
                raise ParseError(path, lineno, f"expected {arity} tab-separated fields, got {len(parts)}")
            if not all(parts):
                raise ParseError(path, lineno, "empty field")
            rows.append(tuple(parts))
    if not rows:
        logger.warning("%s is empty", path)
    return rows


def load_kg(rel_path, attr_path):
    """Read relation and attribute triple files into a :class:`KnowledgeGraph`.

    Duplicate lines collapse (set semantics).  Ids are assigned in order of
    first appearance, relation file first.
    """
    return KnowledgeGraph.from_surface_triples(_read_rows(rel_path, 3), _read_rows(attr_path, 3))


def _write_lines(path, lines):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
    except OSError as exc:
        raise AttrIntError(f"cannot write {path}: {exc}") from exc


def write_kg(kg, rel_path, attr_path):
    """Write both triple files, lines sorted so output is byte-stable."""
    _write_lines(rel_path, sorted("\t".join(t) for t in kg.surface_rel_triples()))
    _write_lines(attr_path, sorted("\t".join(t) for t in kg.surface_attr_triples()))


def load_links(path, kg1, kg2, one_to_one=True):
    """Read ``source<TAB>target`` lines as id pairs.

    Sources are always unique.  Targets must be too unless ``one_to_one`` is
    off, as for top-1 predictions where several sources may pick one target.
    """
    pairs = []
    seen_src, seen_tgt = {}, {}
    for lineno, (s, t) in enumerate(_read_rows(path, 2), 1):
        i = kg1.entities.get(s)
        if i is None:
            raise AlignmentError(f"{path}: source entity {s!r} not found in first graph")
        j = kg2.entities.get(t)
        if j is None:
            raise AlignmentError(f"{path}: target entity {t!r} not found in second graph")
        if (i, j) in seen_src.items():
            continue
        if i in seen_src:
            raise AlignmentError(f"{path}: duplicate source {s!r} (pair {lineno})")
        if one_to_one and j in seen_tgt:
            raise AlignmentError(f"{path}: duplicate target {t!r} (pair {lineno})")
        seen_src[i] = j
        seen_tgt[j] = i
        pairs.append((i, j))
    return pairs


def write_links(path, pairs, kg1, kg2):
    _write_lines(path, (f"{kg1.entities.surface(i)}\t{kg2.entities.surface(j)}" for i, j in pairs))


@dataclass(frozen=True)
class AlignmentSet:
    pairs: tuple
    partition: tuple

    def split(self, label):
        return [p for p, lab in zip(self.pairs, self.partition) if lab == label]

    @property
    def train(self):
        return self.split(TRAIN)

    @property
    def valid(self):
        return self.split(VALID)

    @property
    def test(self):
        return self.split(TEST)


def partition_pairs(pairs, ratio=DEFAULT_RATIO, seed=0):
    """Shuffle ``pairs`` with ``seed`` and cut them by ``ratio`` (train, valid, test).

    Train and validation sizes are floored; the test split takes the rest.
    """
    if len(ratio) != 3 or any(int(r) != r or r <= 0 for r in ratio):
        raise ValueError(f"ratio must be three positive integers, got {ratio!r}")
    pairs = list(pairs)
    random.Random(seed).shuffle(pairs)
    n, total = len(pairs), sum(ratio)
    n_train = n * ratio[0] // total
    n_valid = n * ratio[1] // total
    labels = [TRAIN] * n_train + [VALID] * n_valid + [TEST] * (n - n_train - n_valid)
    return AlignmentSet(tuple(pairs), tuple(labels))


def load_alignment(links_path, kg1, kg2, ratio=DEFAULT_RATIO, seed=0):
    return partition_pairs(load_links(links_path, kg1, kg2), ratio, seed)

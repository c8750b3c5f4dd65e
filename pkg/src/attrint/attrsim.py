"""Attribute similarity from value uniqueness.

A value that occurs ``k`` times among a graph's attribute triples has
frequency ``1/k``.  Two entities from different graphs that share a value
``v`` receive evidence ``p_v = fre1(v) * fre2(v)``; a value unique in both
graphs therefore gives evidence 1.  Evidence from the shared values of a pair
is pooled either as a raw sum, a sum clamped at 1, or a noisy-or
``1 - prod(1 - p_v)``.

Occurrences are counted per attribute triple, so an entity carrying the same
value under two attributes counts twice.  Attribute names are ignored.
"""

import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .matrix import SimilarityMatrix

MODES = ("noisy-or", "sum", "clamp")
COMBINERS = ("product", "min")

_WS = re.compile(r"\s+")
_LANG_TAG = re.compile(r'^"(.*)"@[A-Za-z]+(?:-[A-Za-z0-9]+)*$', re.S)


@dataclass(frozen=True)
class NormalizeOptions:
    nfc: bool = True
    lowercase: bool = True
    collapse_whitespace: bool = True
    strip_datatype: bool = False
    strip_language: bool = False


def normalize_value(raw, options=NormalizeOptions()):
    """Canonical comparison form of a literal.

    >>> normalize_value("  New York ")
    'new york'
    >>> normalize_value("1954-07-12^^date", NormalizeOptions(strip_datatype=True))
    '1954-07-12'
    """
    s = raw
    if options.nfc:
        s = unicodedata.normalize("NFC", s)
    s = s.strip()
    if options.strip_datatype and "^^" in s:
        s = s.rsplit("^^", 1)[0].strip()
        if len(s) >= 2 and s[0] == s[-1] == '"':
            s = s[1:-1]
    if options.strip_language:
        m = _LANG_TAG.match(s)
        if m:
            s = m.group(1)
    if options.lowercase:
        s = s.lower()
    if options.collapse_whitespace:
        s = _WS.sub(" ", s).strip()
    return s


@dataclass
class ValueFrequencyIndex:
    counts: dict          # normalized value -> k (number of attribute triples)
    postings: dict        # normalized value -> list of (entity id, attribute id)
    entity_values: dict   # entity id -> set of normalized values

    def frequency(self, value):
        return 1.0 / self.counts[value]

    def is_crucial(self, value):
        return self.counts.get(value) == 1


def build_index(kg, options=NormalizeOptions()):
    counts = defaultdict(int)
    postings = defaultdict(list)
    entity_values = defaultdict(set)
    cache = {}
    for e, a, v in sorted(kg.attr_triples):
        norm = cache.get(v)
        if norm is None:
            norm = cache[v] = normalize_value(kg.values.surface(v), options)
        counts[norm] += 1
        postings[norm].append((e, a))
        entity_values[e].add(norm)
    return ValueFrequencyIndex(dict(counts), dict(postings), dict(entity_values))


def _evidence(f1, f2, combiner):
    if combiner == "product":
        return f1 * f2
    if combiner == "min":
        return min(f1, f2)
    raise ValueError(f"unknown combiner {combiner!r}")


class _Pool:
    """Folds per-value evidence in a fixed order so every code path agrees bit for bit."""

    __slots__ = ("mode", "acc")

    def __init__(self, mode):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        self.mode = mode
        self.acc = 1.0 if mode == "noisy-or" else 0.0

    def add(self, p):
        if self.mode == "noisy-or":
            self.acc *= 1.0 - p
        else:
            self.acc += p

    def result(self):
        if self.mode == "noisy-or":
            return 1.0 - self.acc
        if self.mode == "clamp":
            return min(1.0, self.acc)
        return self.acc


def pair_score(idx1, idx2, e1, e2, mode="noisy-or", combiner="product", min_frequency=0.0):
    """Evidence that ``e1`` (first graph) and ``e2`` (second graph) denote the same entity."""
    shared = idx1.entity_values.get(e1, set()) & idx2.entity_values.get(e2, set())
    pool = _Pool(mode)
    for v in sorted(shared):
        f1, f2 = idx1.frequency(v), idx2.frequency(v)
        if f1 < min_frequency or f2 < min_frequency:
            continue
        pool.add(_evidence(f1, f2, combiner))
    return pool.result()


def build_attr_matrix(kg1, kg2, sources, targets, mode="noisy-or", combiner="product",
                      options=NormalizeOptions(), min_frequency=0.0, indexes=None):
    """Sparse attribute matrix over ``sources`` x ``targets``.

    Candidate pairs come from joining the two inverted indexes on shared
    values; pairs sharing nothing are simply absent.  ``min_frequency`` drops
    values more common than ``1/min_frequency`` on either side (off by default).
    """
    idx1, idx2 = indexes or (build_index(kg1, options), build_index(kg2, options))
    rpos = {int(e): i for i, e in enumerate(sources)}
    cpos = {int(e): j for j, e in enumerate(targets)}
    pools = {}
    for v in sorted(idx1.counts.keys() & idx2.counts.keys()):
        f1, f2 = idx1.frequency(v), idx2.frequency(v)
        if f1 < min_frequency or f2 < min_frequency:
            continue
        p = _evidence(f1, f2, combiner)
        left = sorted({rpos[e] for e, _ in idx1.postings[v] if e in rpos})
        right = sorted({cpos[e] for e, _ in idx2.postings[v] if e in cpos})
        for i in left:
            for j in right:
                pool = pools.get((i, j))
                if pool is None:
                    pool = pools[(i, j)] = _Pool(mode)
                pool.add(p)
    cells = sorted(pools)
    ri = np.fromiter((i for i, _ in cells), dtype=np.int64, count=len(cells))
    ci = np.fromiter((j for _, j in cells), dtype=np.int64, count=len(cells))
    vals = np.fromiter((pools[c].result() for c in cells), dtype=np.float64, count=len(cells))
    data = sp.csr_matrix((vals, (ri, ci)), shape=(len(rpos), len(cpos)))
    return SimilarityMatrix(np.asarray(sources), np.asarray(targets), data, normalized=mode != "sum")

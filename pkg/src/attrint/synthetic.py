"""Synthetic aligned KG pairs with controllable name, attribute and structure overlap."""

import random
from dataclasses import dataclass
from pathlib import Path

from .kg import KnowledgeGraph, write_kg, write_links

_CONSONANTS = "bcdfghklmnprstvz"
_VOWELS = "aeiou"


def _word(rng, syllables):
    return "".join(rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(syllables))


def _name(rng, taken):
    while True:
        name = f"{_word(rng, rng.randint(2, 3))}_{_word(rng, rng.randint(2, 4))}".capitalize()
        if name not in taken:
            taken.add(name)
            return name


@dataclass
class SyntheticBenchmark:
    kg1: KnowledgeGraph
    kg2: KnowledgeGraph
    pairs: list  # (id in kg1, id in kg2)
    unique_pairs: set  # pairs that share a value unique in both graphs

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_kg(self.kg1, out / "rel_triples_1", out / "attr_triples_1")
        write_kg(self.kg2, out / "rel_triples_2", out / "attr_triples_2")
        write_links(out / "ent_links", sorted(self.pairs), self.kg1, self.kg2)


def generate_benchmark(n_pairs=200, unique_share=0.6, name_match_share=0.5, avg_degree=4,
                       structure_noise=0.05, n_categories=8, seed=0):
    """Build two graphs over ``n_pairs`` gold-aligned entities.

    * ``name_match_share`` of pairs carry the same local name on both sides;
      the rest get unrelated names.
    * ``unique_share`` of pairs share an identifier value found nowhere else
      (written with different casing/spacing in the second graph).
    * Every entity also has a category value and most have a year, both
      shared with many other entities.
    * The second graph's relation triples are the image of the first graph's
      under the gold alignment, with ``structure_noise`` of them rewired.
    """
    rng = random.Random(seed)
    taken = set()
    names1 = [_name(rng, taken) for _ in range(n_pairs)]
    names2 = [n if rng.random() < name_match_share else _name(rng, taken) for n in names1]
    iri1 = [f"http://kg1.example.org/resource/{n}" for n in names1]
    iri2 = [f"http://kg2.example.org/entity/{n}" for n in names2]

    relations = [f"rel_{i}" for i in range(6)]
    edges = set()
    n_edges = n_pairs * avg_degree // 2
    while len(edges) < n_edges:
        a, b = rng.randrange(n_pairs), rng.randrange(n_pairs)
        if a != b:
            edges.add((a, rng.randrange(len(relations)), b))
    edges = sorted(edges)
    rel1 = [(iri1[a], "http://kg1.example.org/ontology/" + relations[r], iri1[b]) for a, r, b in edges]
    rel2 = []
    for a, r, b in edges:
        if rng.random() < structure_noise:
            a, b = rng.randrange(n_pairs), rng.randrange(n_pairs)
            if a == b:
                continue
        rel2.append((iri2[a], "http://kg2.example.org/prop/" + relations[r], iri2[b]))

    categories = [f"Category {_word(rng, 2)}" for _ in range(n_categories)]
    attr1, attr2 = [], []
    unique_idx = set(rng.sample(range(n_pairs), round(unique_share * n_pairs)))
    for i in range(n_pairs):
        cat = rng.choice(categories)
        attr1.append((iri1[i], "type", cat))
        attr2.append((iri2[i], "category", cat.upper()))
        if rng.random() < 0.8:
            year = str(rng.randint(1950, 1990))
            attr1.append((iri1[i], "year", year))
            attr2.append((iri2[i], "founded", year if rng.random() < 0.8 else str(rng.randint(1950, 1990))))
        if i in unique_idx:
            code = f"ID-{i:05d}-{_word(rng, 2)}"
            attr1.append((iri1[i], "identifier", code))
            attr2.append((iri2[i], "code", f"  {code.lower()} "))

    kg1 = KnowledgeGraph.from_surface_triples(rel1, attr1)
    kg2 = KnowledgeGraph.from_surface_triples(rel2, attr2)
    pairs = [(kg1.entities[iri1[i]], kg2.entities[iri2[i]]) for i in range(n_pairs)]
    unique_pairs = {pairs[i] for i in unique_idx}
    return SyntheticBenchmark(kg1, kg2, pairs, unique_pairs)

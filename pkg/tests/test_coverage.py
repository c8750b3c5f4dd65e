import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attrint.coverage import (
    CoverageProfile,
    HeterogenizeConfig,
    bucket_of,
    coverage,
    heterogenize,
    neighbor_set,
    profile,
)
from attrint.errors import UnknownEntityError
from attrint.kg import KnowledgeGraph, write_kg
from attrint.synthetic import generate_benchmark


def brute_neighbors(rel_triples, e):
    out = set()
    for h, _, t in rel_triples:
        if h == e and t != e:
            out.add(t)
        if t == e and h != e:
            out.add(h)
    return out


def brute_coverage(rel1, rel2, links, e1, e2):
    n1, n2 = brute_neighbors(rel1, e1), brute_neighbors(rel2, e2)
    shared = len({links[x] for x in n1 if x in links} & n2)
    denom = min(len(n1), len(n2))
    return shared / denom if denom else 0.0


def random_graph_pair(rng, n_max=20):
    n1, n2 = rng.randint(2, n_max), rng.randint(2, n_max)
    rel1 = {(f"a{rng.randrange(n1)}", f"r{rng.randrange(3)}", f"a{rng.randrange(n1)}")
            for _ in range(rng.randint(0, 3 * n1))}
    rel2 = {(f"b{rng.randrange(n2)}", f"r{rng.randrange(3)}", f"b{rng.randrange(n2)}")
            for _ in range(rng.randint(0, 3 * n2))}
    # ensure every entity exists in the vocabularies
    attr1 = [(f"a{i}", "id", str(i)) for i in range(n1)]
    attr2 = [(f"b{i}", "id", str(i)) for i in range(n2)]
    kg1 = KnowledgeGraph.from_surface_triples(rel1, attr1)
    kg2 = KnowledgeGraph.from_surface_triples(rel2, attr2)
    k = rng.randint(1, min(n1, n2))
    links = dict(zip(rng.sample(range(n1), k), rng.sample(range(n2), k)))
    links = {kg1.entities[f"a{i}"]: kg2.entities[f"b{j}"] for i, j in links.items()}
    return kg1, kg2, links


def mirrored(edges, pairs=None):
    """Two copies of one graph over entities named x? / y?, linked by name."""
    kg1 = KnowledgeGraph.from_surface_triples([(f"x{a}", "r", f"x{b}") for a, b in edges])
    kg2 = KnowledgeGraph.from_surface_triples([(f"y{a}", "r", f"y{b}") for a, b in edges])
    names = sorted({n for e in edges for n in e}) if pairs is None else pairs
    links = {kg1.entities[f"x{n}"]: kg2.entities[f"y{n}"] for n in names}
    return kg1, kg2, links


class TestNeighborSet:
    def test_both_directions(self):
        kg = KnowledgeGraph.from_surface_triples([("a", "r", "b"), ("c", "r", "a")])
        assert neighbor_set(kg, kg.entities["a"]) == {kg.entities["b"], kg.entities["c"]}

    def test_isolated_entity(self):
        kg = KnowledgeGraph.from_surface_triples([("a", "r", "b")], [("z", "name", "zed")])
        assert neighbor_set(kg, kg.entities["z"]) == set()

    def test_self_loop_only(self):
        kg = KnowledgeGraph.from_surface_triples([("a", "r", "a")])
        a = kg.entities["a"]
        assert neighbor_set(kg, a) == brute_neighbors(kg.rel_triples, a) == set()

    def test_unknown_entity(self):
        kg = KnowledgeGraph.from_surface_triples([("a", "r", "b")])
        with pytest.raises(UnknownEntityError):
            neighbor_set(kg, 99)


class TestCoverage:
    def test_two_of_three(self):
        # N(e1) = {b, c, q}; N(e2) = {b', c', d', f'}; b~b', c~c', q unlinked
        kg1 = KnowledgeGraph.from_surface_triples([("e", "r", "b"), ("e", "r", "c"), ("q", "r", "e")])
        kg2 = KnowledgeGraph.from_surface_triples(
            [("E", "r", "B"), ("E", "r", "C"), ("E", "r", "D"), ("F", "r", "E")])
        e = kg1.entities
        E = kg2.entities
        links = {e["e"]: E["E"], e["b"]: E["B"], e["c"]: E["C"]}
        assert coverage(kg1, kg2, (e["e"], E["E"]), links) == pytest.approx(2 / 3)

    def test_identical_neighbourhoods(self):
        kg1, kg2, links = mirrored([(0, 1), (0, 2), (0, 3)])
        assert coverage(kg1, kg2, (kg1.entities["x0"], kg2.entities["y0"]), links) == 1.0

    def test_disjoint_neighbourhoods(self):
        kg1, kg2, links = mirrored([(0, 1), (0, 2)])
        kg2b = KnowledgeGraph.from_surface_triples([("y0", "r", "w"), ("y1", "r", "y2")])
        links = {kg1.entities[f"x{i}"]: kg2b.entities[f"y{i}"] for i in range(3)}
        assert coverage(kg1, kg2b, (kg1.entities["x0"], kg2b.entities["y0"]), links) == 0.0

    def test_empty_neighbourhood_is_zero_and_flagged(self):
        kg1 = KnowledgeGraph.from_surface_triples([("a", "r", "b")], [("lonely", "p", "v")])
        kg2 = KnowledgeGraph.from_surface_triples([("A", "r", "B")])
        links = {kg1.entities["lonely"]: kg2.entities["A"]}
        assert coverage(kg1, kg2, (kg1.entities["lonely"], kg2.entities["A"]), links) == 0.0
        assert profile(kg1, kg2, links).degenerate == [(kg1.entities["lonely"], kg2.entities["A"])]

    def test_matches_brute_force_on_random_graphs(self):
        rng = random.Random(11)
        for _ in range(100):
            kg1, kg2, links = random_graph_pair(rng)
            for e1, e2 in links.items():
                assert coverage(kg1, kg2, (e1, e2), links) == brute_coverage(
                    kg1.rel_triples, kg2.rel_triples, links, e1, e2)


def star_pair(shared, size, tag):
    """Centre ``c`` with ``size`` neighbours on both sides, ``shared`` of them linked."""
    rel1 = [(f"c{tag}", "r", f"n{tag}_{i}") for i in range(size)]
    rel2 = [(f"C{tag}", "r", f"N{tag}_{i}") for i in range(size)]
    links = [(f"c{tag}", f"C{tag}")] + [(f"n{tag}_{i}", f"N{tag}_{i}") for i in range(shared)]
    return rel1, rel2, links


class TestProfile:
    def test_histogram_example(self):
        rel1, rel2, link_names, centres = [], [], [], []
        for tag, shared in enumerate((1, 1, 11, 19)):
            r1, r2, ls = star_pair(shared, 20, tag)
            rel1 += r1
            rel2 += r2
            link_names += ls
            centres.append(ls[0])
        kg1 = KnowledgeGraph.from_surface_triples(rel1)
        kg2 = KnowledgeGraph.from_surface_triples(rel2)
        links = {kg1.entities[a]: kg2.entities[b] for a, b in link_names}
        pairs = [(kg1.entities[a], kg2.entities[b]) for a, b in centres]
        prof = profile(kg1, kg2, links, pairs)
        assert sorted(prof.per_pair.values()) == [0.05, 0.05, 0.55, 0.95]
        assert prof.percentages == [50.0, 0, 0, 0, 0, 25.0, 0, 0, 0, 25.0]
        assert prof.total == 4

    def test_empty_links(self):
        kg = KnowledgeGraph.from_surface_triples([("a", "r", "b")])
        prof = profile(kg, kg, {})
        assert prof.counts == [0] * 10
        assert prof.percentages == [0.0] * 10

    @pytest.mark.parametrize("shared,denom,bucket", [
        (0, 5, 0), (1, 10, 1), (3, 10, 3), (7, 10, 7), (9, 10, 9), (10, 10, 9), (2, 3, 6), (0, 0, 0),
    ])
    def test_bucket_edges(self, shared, denom, bucket):
        assert bucket_of(shared, denom) == bucket

    def test_shares(self):
        prof = CoverageProfile(counts=[2, 0, 0, 0, 0, 1, 0, 0, 0, 1])
        assert prof.share_at_least(0.9) == 0.25
        assert prof.share_below(0.1) == 0.5


def toy_six():
    # e-a, e-b, a-b on both sides: every pair has coverage 1
    return mirrored([("e", "a"), ("e", "b"), ("a", "b")])


class TestHeterogenize:
    def test_toy_pair_drops_to_half_or_less(self):
        kg1, kg2, links = toy_six()
        e1, e2 = kg1.entities["xe"], kg2.entities["ye"]
        assert coverage(kg1, kg2, (e1, e2), links) == 1.0
        new1, new2, log = heterogenize(kg1, kg2, links, HeterogenizeConfig(0.4, 1, seed=0))
        assert log.removed
        assert coverage(new1, new2, (e1, e2), links) <= 0.5

    def test_replayed_removals_never_raise_coverage(self):
        kg1, kg2, links = toy_six()
        _, _, log = heterogenize(kg1, kg2, links, HeterogenizeConfig(0.4, 1, seed=0))
        rel = {1: set(kg1.rel_triples), 2: set(kg2.rel_triples)}
        before = {p: brute_coverage(rel[1], rel[2], links, *p) for p in links.items()}
        for side, _, trip in log.removed:
            rel[side].discard(trip)
            now = {p: brute_coverage(rel[1], rel[2], links, *p) for p in links.items()}
            assert all(now[p] <= before[p] for p in links.items())
            before = now

    def test_low_coverage_pair_untouched(self):
        rel1 = [("c", "r", f"n{i}") for i in range(5)]
        rel2 = [("C", "r", f"N{i}") for i in range(5)]
        kg1 = KnowledgeGraph.from_surface_triples(rel1)
        kg2 = KnowledgeGraph.from_surface_triples(rel2)
        pair = (kg1.entities["c"], kg2.entities["C"])
        links = {pair[0]: pair[1], kg1.entities["n0"]: kg2.entities["N0"]}
        assert coverage(kg1, kg2, pair, links) == pytest.approx(0.2)
        new1, new2, log = heterogenize(kg1, kg2, links, HeterogenizeConfig(0.5, 1, seed=1))
        assert not [r for r in log.removed if r[1] == pair]
        assert new1.rel_triples == kg1.rel_triples and new2.rel_triples == kg2.rel_triples

    def test_unreachable_pairs_are_logged(self):
        kg1, kg2, links = mirrored([(0, 1)])
        _, _, log = heterogenize(kg1, kg2, links, HeterogenizeConfig(0.0, 1, seed=0))
        assert {p for p, _ in log.unreachable} == set(links.items())

    @pytest.mark.parametrize("alternate", [True, False])
    def test_shifts_histogram_on_high_coverage_benchmark(self, alternate):
        b = generate_benchmark(200, seed=3)
        before = profile(b.kg1, b.kg2, b.pairs)
        new1, new2, _ = heterogenize(b.kg1, b.kg2, b.pairs, HeterogenizeConfig(0.5, 1, 42, alternate))
        after = profile(new1, new2, b.pairs)
        assert after.share_at_least(0.9) < before.share_at_least(0.9)
        assert after.share_below(0.1) > before.share_below(0.1)

    def test_attribute_triples_pass_through(self):
        b = generate_benchmark(40, seed=5)
        new1, new2, _ = heterogenize(b.kg1, b.kg2, b.pairs)
        assert new1.attr_triples == b.kg1.attr_triples and new2.attr_triples == b.kg2.attr_triples

    def test_deterministic_bytes(self, tmp_path):
        b = generate_benchmark(60, seed=9)
        outs = []
        for run in range(2):
            new1, new2, _ = heterogenize(b.kg1, b.kg2, b.pairs, HeterogenizeConfig(0.3, 1, seed=4))
            write_kg(new1, tmp_path / f"r1_{run}", tmp_path / f"a1_{run}")
            write_kg(new2, tmp_path / f"r2_{run}", tmp_path / f"a2_{run}")
            outs.append([(tmp_path / f"{n}_{run}").read_bytes() for n in ("r1", "a1", "r2", "a2")])
        assert outs[0] == outs[1]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            HeterogenizeConfig(1.5)
        with pytest.raises(ValueError):
            HeterogenizeConfig(0.5, min_degree=0)


def degrees(kg):
    deg = {}
    for h, _, t in kg.rel_triples:
        deg[h] = deg.get(h, 0) + 1
        if h != t:
            deg[t] = deg.get(t, 0) + 1
    return deg


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.0, 1.0), st.integers(1, 3), st.booleans())
def test_monotone_and_degree_floor(seed, target, min_degree, alternate):
    kg1, kg2, links = random_graph_pair(random.Random(seed))
    new1, new2, _ = heterogenize(kg1, kg2, links, HeterogenizeConfig(target, min_degree, seed, alternate))
    assert new1.rel_triples <= kg1.rel_triples and new2.rel_triples <= kg2.rel_triples
    for p in links.items():
        assert coverage(new1, new2, p, links) <= coverage(kg1, kg2, p, links)
    for old, new in ((kg1, new1), (kg2, new2)):
        d_old, d_new = degrees(old), degrees(new)
        for e, d in d_old.items():
            if d >= min_degree:
                assert d_new.get(e, 0) >= min_degree

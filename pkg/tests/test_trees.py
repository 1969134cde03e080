import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from aclab.wild.pairings import double_factorial_odd, enumerate_pairings
from aclab.wild.paths import build_double_tree, path_decompose
from aclab.wild.trees import (
    LEAF,
    canonical_class,
    enumerate_ordered_trees,
    enumerate_trees,
    multiplicity,
    node,
    ordered_tree_count,
    parse_tree,
)

from oracles import lukasiewicz_count


def test_ordered_tree_counts():
    expected = [1, 1, 3, 12, 55]
    for i, e in enumerate(expected):
        assert lukasiewicz_count(i) == e
        assert ordered_tree_count(i) == e
        trees = enumerate_ordered_trees(i)
        assert len(trees) == e
        assert len(set(trees)) == e


def test_leaf_inner_relation_and_class_multiplicities():
    classes = enumerate_trees(4)
    for c in classes:
        assert c.n_leaves == 2 * c.n_inner + 1
    for i in range(5):
        assert sum(c.multiplicity for c in classes if c.n_inner == i) == ordered_tree_count(i)
    one = enumerate_trees(1)
    assert [str(c) for c in one] == ["o", "[o,o,o]"]
    assert [c.multiplicity for c in one] == [1, 1]


def test_known_multiplicities():
    expected = {
        "[o,o,[o,o,o]]": 3,
        "[o,o,[o,o,[o,o,o]]]": 9,
        "[o,[o,o,o],[o,o,o]]": 3,
    }
    for s, m in expected.items():
        assert multiplicity(parse_tree(s)) == m
    # brute force: count ordered trees that canonicalise to the same class
    for i in range(4):
        tally = {}
        for t in enumerate_ordered_trees(i):
            tally[t.canonical()] = tally.get(t.canonical(), 0) + 1
        for rep, n in tally.items():
            assert multiplicity(rep) == n


def test_parse_round_trip_and_errors():
    for t in enumerate_ordered_trees(3):
        assert parse_tree(str(t)) == t
    for bad in ("[o,o]", "x", "[o,o,o", "oo"):
        with pytest.raises((ValueError, IndexError)):
            parse_tree(bad)
    with pytest.raises(ValueError):
        enumerate_trees(7)


def test_pairing_counts():
    assert double_factorial_odd(1) == 1
    assert double_factorial_odd(3) == 15
    assert double_factorial_odd(4) == 105
    for n in range(0, 13, 2):
        ps = list(enumerate_pairings(n))
        assert len(ps) == double_factorial_odd(n // 2)
        assert len({frozenset(p) for p in ps}) == len(ps)
        for p in ps:
            assert sorted(x for pr in p for x in pr) == list(range(n))
    with pytest.raises(ValueError):
        list(enumerate_pairings(5))
    with pytest.raises(ValueError):
        list(enumerate_pairings(14))


def test_pairings_against_permutation_brute_force():
    for n in (2, 4, 6, 8):
        seen = set()
        for perm in itertools.permutations(range(n)):
            seen.add(frozenset(frozenset(perm[k : k + 2]) for k in range(0, n, 2)))
        ours = {frozenset(frozenset(p) for p in pr) for pr in enumerate_pairings(n)}
        assert ours == seen


def test_fifteen_is_six_plus_nine():
    # leaves 0..2 belong to the left copy of [o,o,o], 3..5 to the right copy
    crossing = same_side = 0
    for p in enumerate_pairings(6):
        across = sum((a < 3) != (b < 3) for a, b in p)
        if across == 3:
            crossing += 1
        elif across == 1:
            same_side += 1
        else:
            raise AssertionError(p)
    assert (crossing, same_side) == (6, 9)


def test_smallest_decomposition_is_one_cycle():
    d = path_decompose(LEAF, ((0, 1),))
    assert len(d.paths) == 1
    assert d.paths[0].is_cycle
    assert d.check_invariants() == []


def test_three_leaf_crossing_pairing():
    tree = node(LEAF, LEAF, LEAF)
    d = path_decompose(tree, ((0, 3), (1, 4), (2, 5)))
    assert [p.vertices for p in d.paths] == [[0, 1, 2, 6, 5, 0], [1, 3, 7, 5], [1, 4, 8, 5]]
    assert d.check_invariants() == []


def test_all_fifteen_pairings_of_three_leaf_tree():
    tree = node(LEAF, LEAF, LEAF)
    for p in enumerate_pairings(6):
        d = path_decompose(tree, p)
        assert len(d.paths) == 3
        assert d.check_invariants() == []
        g = d.graph
        inner = [v for v in range(1, g.n_vertices) if v not in g.leaves]
        assert len(inner) == 2
        for v in inner:
            assert sum(v in p_.yellow for p_ in d.paths) == 1
            assert sum((p_.start == v) + (p_.end == v) for p_ in d.paths) == 2


def test_exhaustive_invariants_up_to_five_leaves():
    total = 0
    for i in range(3):  # leaves = 1, 3, 5
        for tree in enumerate_ordered_trees(i):
            n = 2 * tree.n_leaves
            for p in enumerate_pairings(n):
                d = path_decompose(tree, p)
                assert len(d.paths) == tree.n_leaves
                assert d.check_invariants() == [], (str(tree), p)
                total += 1
    # one tree with 1 leaf (1 pairing), one with 3 (15), three with 5 (945 each)
    assert total == 1 + 15 + 3 * 945


@given(st.integers(0, 2), st.data())
def test_decomposition_covers_every_edge_once(i, data):
    trees = enumerate_ordered_trees(i)
    tree = data.draw(st.sampled_from(trees))
    pairs = list(enumerate_pairings(2 * tree.n_leaves))
    p = data.draw(st.sampled_from(pairs))
    d = path_decompose(tree, p)
    g = build_double_tree(tree, p)
    used = [e for path in d.paths for e in path.black]
    assert sorted(used) == sorted(g.black_edges())
    assert sorted(path.green for path in d.paths) == sorted(g.green_edges())


def test_build_double_tree_rejects_bad_pairing():
    with pytest.raises(ValueError):
        build_double_tree(node(LEAF, LEAF, LEAF), ((0, 1), (2, 3)))


def test_canonical_class_is_order_independent():
    a = node(LEAF, node(LEAF, LEAF, LEAF), LEAF)
    b = node(node(LEAF, LEAF, LEAF), LEAF, LEAF)
    assert canonical_class(a) == canonical_class(b)
    assert canonical_class(a).multiplicity == 3

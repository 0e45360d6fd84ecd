import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_set_partitions, bell_triangle, in_class
from symbandit.errors import (
    ArgumentError,
    CoverageError,
    DimensionMismatch,
    NoCoarseningError,
    NotIntervalError,
    OverlapError,
    TooLargeError,
)
from symbandit.partitions import (
    Partition,
    PartitionClass,
    Permutation,
    canonicalize,
    coarsen,
    count_at_most,
    count_partitions,
    enumerate_partitions,
    interval_support_map,
    is_in_class,
    merge_blocks,
    narayana,
    refines,
    sample_stabilizer_permutation,
    stirling2,
    support_to_interval,
    valid_merges,
)

CLASSES = list(PartitionClass)


def rgs_strategy(max_d=9):
    @st.composite
    def build(draw):
        d = draw(st.integers(1, max_d))
        labels = [0]
        for _ in range(d - 1):
            labels.append(draw(st.integers(0, max(labels) + 1)))
        return Partition.from_labels(labels)

    return build()


def test_parse_and_format_round_trip():
    p = Partition.parse("3,1|4|2")
    assert p.blocks == ((1, 3), (2,), (4,))
    assert str(p) == "1,3|2|4"
    assert p.rgs == (0, 1, 0, 2)
    assert p.k == 3 and p.d == 4


def test_canonicalize_errors():
    with pytest.raises(OverlapError):
        canonicalize([[1, 2], [2, 3]], 3)
    with pytest.raises(CoverageError):
        canonicalize([[1], [3]], 3)
    with pytest.raises(CoverageError):
        canonicalize([[1, 4]], 3)


def test_labels_are_read_only():
    p = Partition.parse("1,2|3")
    with pytest.raises(ValueError):
        p.labels[0] = 1


def test_spot_counts():
    assert stirling2(4, 2) == 7
    assert sum(count_partitions(4, k, "nc") for k in range(1, 5)) == 14
    assert narayana(4, 2) == 6
    assert count_partitions(5, 3, "interval") == math.comb(4, 2)


@pytest.mark.parametrize("d", range(1, 8))
def test_enumeration_matches_brute_force_filter(d):
    brute = all_set_partitions(d)
    assert len(brute) == bell_triangle(d)[d]
    for c in CLASSES:
        expected = sorted(Partition.from_labels(_labels(b, d)).rgs for b in brute if in_class(b, c.value))
        got = [p.rgs for p in enumerate_partitions(d, c)]
        assert got == expected, c  # also checks canonical RGS order


def _labels(blocks, d):
    lab = [0] * d
    for j, b in enumerate(blocks):
        for e in b:
            lab[e - 1] = j
    return lab


@pytest.mark.parametrize("d", range(1, 10))
def test_counts_match_closed_forms(d):
    for k in range(1, d + 1):
        assert count_partitions(d, k, "nc") == math.comb(d, k) * math.comb(d, k - 1) // d
        assert count_partitions(d, k, "nn") == count_partitions(d, k, "nc")
        assert count_partitions(d, k, "interval") == math.comb(d - 1, k - 1)
    assert count_at_most(d, d, "all") == bell_triangle(d)[d]


def test_nonnesting_uses_arc_diagram():
    # {1,3,5}|{2,4}: arcs (1,3),(3,5),(2,4) cross but do not nest
    p = Partition.parse("1,3,5|2,4")
    assert is_in_class(p, "nn")
    assert not is_in_class(p, "nc")
    assert not is_in_class(Partition.parse("1,4|2,3"), "nn")


def test_count_out_of_range():
    with pytest.raises(ArgumentError):
        count_partitions(4, 5, "all")


def test_enumeration_cap():
    with pytest.raises(TooLargeError):
        list(enumerate_partitions(30, "all", 2, cap=10**6))


def test_max_blocks_filter():
    ps = list(enumerate_partitions(6, "nc", 2))
    assert len(ps) == 1 + narayana(6, 2)
    assert all(p.k <= 2 for p in ps)


@settings(max_examples=200, deadline=None)
@given(rgs_strategy(), st.sampled_from(CLASSES))
def test_coarsen_matches_brute_force(p, c):
    if not is_in_class(p, c) or p.k == 1:
        return
    expected = set()
    for a, b in combinations(range(p.k), 2):
        q = merge_blocks(p, a, b)
        if is_in_class(q, c):
            expected.add(q)
    if not expected:
        with pytest.raises(NoCoarseningError):
            coarsen(p, c)
        return
    got = coarsen(p, c)
    assert set(got) == expected and len(got) == len(expected)
    for q in got:
        assert q.k == p.k - 1 and refines(p, q)


@settings(max_examples=300, deadline=None)
@given(rgs_strategy(8))
def test_noncrossing_and_interval_always_coarsenable(p):
    for c in (PartitionClass.NONCROSSING, PartitionClass.INTERVAL):
        if is_in_class(p, c) and p.k > 1:
            assert valid_merges(p, c)


def test_nonnesting_can_dead_end():
    p = Partition.parse("1,4|2,5|3,6")
    assert is_in_class(p, "nn")
    assert valid_merges(p, "nn") == []
    with pytest.raises(NoCoarseningError):
        coarsen(p, "nn")


def test_coarsen_examples():
    assert len(coarsen(Partition.parse("1|2|3"), "all")) == 3
    with pytest.raises(NoCoarseningError):
        coarsen(Partition.coarsest(4), "all")
    with pytest.raises(ArgumentError):
        coarsen(Partition.parse("1,3|2,4"), "nc")


@settings(max_examples=200, deadline=None)
@given(rgs_strategy(), rgs_strategy())
def test_refines_brute_force(p, q):
    if p.d != q.d:
        with pytest.raises(DimensionMismatch):
            refines(p, q)
        return
    expected = all(any(set(b) <= set(c) for c in q.blocks) for b in p.blocks)
    assert refines(p, q) == expected


@settings(max_examples=200, deadline=None)
@given(rgs_strategy())
def test_refinement_is_a_partial_order_with_extremes(p):
    assert refines(p, p)
    assert refines(Partition.finest(p.d), p)
    assert refines(p, Partition.coarsest(p.d))


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 12), st.data())
def test_interval_support_bijection(d, data):
    support = data.draw(st.sets(st.integers(1, d - 1)))
    p = support_to_interval(support, d)
    assert is_in_class(p, "interval")
    assert p.k == len(support) + 1
    assert interval_support_map(p) == frozenset(support)


def test_support_map_rejects_non_interval():
    with pytest.raises(NotIntervalError):
        interval_support_map(Partition.parse("1,3|2"))


@settings(max_examples=100, deadline=None)
@given(rgs_strategy(), st.integers(0, 2**32 - 1))
def test_stabilizer_permutation_fixes_blocks(p, seed):
    g = sample_stabilizer_permutation(p, np.random.default_rng(seed))
    assert np.array_equal(g.apply(p.labels), p.labels)
    M = g.matrix()
    x = np.arange(p.d, dtype=float)
    assert np.allclose(M @ x, g.apply(x))


def test_permutation_identity():
    g = Permutation.identity(4)
    x = np.array([3.0, 1.0, 4.0, 1.5])
    assert np.array_equal(g.apply(x), x)
    assert np.array_equal(g.matrix(), np.eye(4))

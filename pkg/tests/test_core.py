from __future__ import annotations

import numpy as np
import pytest

from signquest.core import (
    PartitionNode,
    SignVector,
    as_sign_array,
    expand_node,
    gray_code_at,
    gray_code_table,
    gray_rank,
    hamming_distance,
    hamming_from_dot,
    sign,
)


def test_sign_vector_random_is_valid():
    rng = np.random.default_rng(0)
    sv = SignVector.random(17, rng)
    assert sv.n == 17
    assert set(np.unique(sv.bits)) <= {-1, 1}


def test_sign_vector_constructors():
    assert SignVector.all_plus(4).bits.tolist() == [1, 1, 1, 1]
    assert SignVector.all_minus(3).bits.tolist() == [-1, -1, -1]


def test_sign_vector_flip_range_clamps():
    sv = SignVector(np.array([1, -1, 1], dtype=np.int8))
    sv.flip_range(-5, 99)
    assert sv.bits.tolist() == [-1, 1, -1]
    sv.flip_range(1, 1)
    assert sv.bits.tolist() == [-1, 1, -1]
    sv.flip_range(0, 2)
    assert sv.bits.tolist() == [1, -1, -1]


def test_sign_vector_copy_is_independent():
    sv = SignVector.all_plus(3)
    other = sv.copy()
    other.flip_range(0, 3)
    assert sv.bits.tolist() == [1, 1, 1]
    assert sv != other


def test_as_sign_array_accepts_sign_vector():
    sv = SignVector.all_minus(5)
    out = as_sign_array(sv)
    assert out.dtype == np.int8
    assert out.tolist() == [-1] * 5


def test_as_sign_array_rejects_non_signs():
    with pytest.raises(ValueError):
        as_sign_array([1, 0, -1])
    with pytest.raises(ValueError):
        as_sign_array([1.0, 0.5])


def test_hamming_distance_and_dot_identity():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(1, 40))
        a = sign(rng.choice([-1.0, 1.0], size=n))
        b = sign(rng.choice([-1.0, 1.0], size=n))
        d = hamming_distance(a, b)
        assert d == hamming_from_dot(a, b)
        assert d == int(np.sum(a != b))


def test_sign_maps_zero_to_plus_one():
    assert sign(np.array([0.0, -0.0, 2.0, -3.0])).tolist() == [1, 1, 1, -1]


def test_gray_code_frozen_small_table():
    expected = [[-1, -1], [-1, 1], [1, 1], [1, -1]]
    assert [gray_code_at(2, r).tolist() for r in range(4)] == expected


def test_gray_rank_frozen_example():
    assert gray_rank(np.array([-1, -1, 1, -1], dtype=np.int8)) == 3


def test_gray_round_trip_and_adjacency():
    for n in range(1, 9):
        table = gray_code_table(n)
        assert table.shape == (2 ** n, n)
        for r in range(2 ** n):
            assert np.array_equal(table[r], gray_code_at(n, r).bits)
            assert gray_rank(table[r]) == r
        for r in range(2 ** n - 1):
            assert hamming_distance(table[r], table[r + 1]) == 1


def test_gray_table_rejects_big_n():
    with pytest.raises(ValueError):
        gray_code_table(21)
    with pytest.raises(ValueError):
        gray_code_table(0)


def test_partition_root_and_representative():
    root = PartitionNode.root(5)
    assert (root.lo, root.hi) == (0, 32)
    assert root.size == 32
    assert root.representative_rank == 15
    assert root.expandable


def test_partition_expand_halves():
    root = PartitionNode.root(5)
    left, right = expand_node(root)
    assert (left.lo, left.hi) == (0, 16)
    assert (right.lo, right.hi) == (16, 32)
    assert left.depth == right.depth == 1
    assert (left.index, right.index) == (0, 1)


def test_partition_odd_split_left_larger():
    node = PartitionNode(n=3, depth=0, index=0, lo=0, hi=7)
    left, right = expand_node(node)
    assert left.size == 4
    assert right.size == 3


def test_partition_expand_singleton_fails():
    leaf = PartitionNode(n=3, depth=3, index=0, lo=4, hi=5)
    assert not leaf.expandable
    with pytest.raises(ValueError):
        expand_node(leaf)


def test_partition_tree_covers_all_ranks():
    """Fully expanding the tree tiles [0, 2^n) with disjoint singletons."""
    frontier = [PartitionNode.root(4)]
    leaves = []
    while frontier:
        node = frontier.pop()
        if node.expandable:
            frontier.extend(expand_node(node))
        else:
            leaves.append(node)
    spans = sorted((leaf.lo, leaf.hi) for leaf in leaves)
    assert spans == [(r, r + 1) for r in range(16)]


def test_partition_representative_inside_span():
    rng = np.random.default_rng(2)
    for _ in range(30):
        lo = int(rng.integers(0, 100))
        hi = lo + int(rng.integers(1, 50))
        node = PartitionNode(n=7, depth=0, index=0, lo=lo, hi=hi)
        assert lo <= node.representative_rank < hi

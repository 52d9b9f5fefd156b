import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from granureg import (
    EmptyBatchError,
    Instance,
    build_index,
    covers,
    iterate_nodes,
    validate_tree,
)


def make_instances(feats, targets=None):
    feats = np.atleast_2d(np.asarray(feats, dtype=float))
    if targets is None:
        targets = np.arange(feats.shape[0], dtype=float)
    return [
        Instance(features=feats[i], target=[float(targets[i])], sequence_id=i)
        for i in range(feats.shape[0])
    ]


def leaf_nodes(tree):
    return [n for n in iterate_nodes(tree) if n.is_leaf]


class TestBuildIndex:
    def test_empty_input(self):
        with pytest.raises(EmptyBatchError):
            build_index([])

    def test_single_instance_degenerate_leaf(self):
        inst = Instance([3.0, 4.0], [1.0], 0)
        tree = build_index([inst])
        assert tree.root.is_leaf
        assert tree.root.members == (inst,)
        assert np.array_equal(tree.root.box.min, inst.features)
        assert np.array_equal(tree.root.box.max, inst.features)

    def test_eight_collinear_pairs(self):
        # adjacent pairs along the sorted coordinate, by hand enumeration
        insts = make_instances([[v] for v in [5.0, 1.0, 7.0, 3.0, 2.0, 8.0, 4.0, 6.0]])
        tree = build_index(insts, leaf_capacity=2, max_fanout=8)
        leaves = leaf_nodes(tree)
        assert len(leaves) == 4
        spans = sorted(
            (float(l.box.min[0]), float(l.box.max[0])) for l in leaves
        )
        assert spans == [(1.0, 2.0), (3.0, 4.0), (5.0, 6.0), (7.0, 8.0)]

    def test_leaf_conservation(self, rng):
        insts = make_instances(rng.uniform(0, 1, (137, 3)))
        tree = build_index(insts, leaf_capacity=8, max_fanout=4)
        got = sorted(i.sequence_id for l in leaf_nodes(tree) for i in l.members)
        assert got == list(range(137))
        assert tree.root.count == 137

    def test_determinism(self, rng):
        feats = rng.uniform(0, 1, (64, 2))
        t1 = build_index(make_instances(feats), leaf_capacity=4, max_fanout=4)
        t2 = build_index(make_instances(feats), leaf_capacity=4, max_fanout=4)

        def structure(node):
            if node.is_leaf:
                return ("leaf", tuple(i.sequence_id for i in node.members))
            return ("node", tuple(structure(c) for c in node.children))

        assert structure(t1.root) == structure(t2.root)

    def test_stable_ties_keep_input_order(self):
        insts = make_instances([[1.0], [1.0], [1.0], [1.0]])
        tree = build_index(insts, leaf_capacity=2, max_fanout=8)
        leaves = leaf_nodes(tree)
        assert [tuple(i.sequence_id for i in l.members) for l in leaves] == [
            (0, 1), (2, 3)
        ]


class TestAggregates:
    def test_root_mean_matches_global(self, rng):
        feats = rng.uniform(0, 5, (200, 2))
        targets = rng.normal(0, 3, 200)
        insts = make_instances(feats, targets)
        tree = build_index(insts, leaf_capacity=8, max_fanout=4)
        assert tree.root.mean_target == pytest.approx(targets.mean(), rel=1e-9)

    def test_identical_targets_give_exact_zero_m2(self, rng):
        feats = rng.uniform(0, 5, (100, 2))
        insts = make_instances(feats, np.full(100, 0.7))
        tree = build_index(insts, leaf_capacity=4, max_fanout=4)
        for node in iterate_nodes(tree):
            assert float(node.mean_target[0]) == 0.7
            assert float(node.m2_target[0]) == 0.0

    def test_containment(self, rng):
        insts = make_instances(rng.uniform(-3, 3, (150, 3)))
        tree = build_index(insts, leaf_capacity=8, max_fanout=4)
        for node in iterate_nodes(tree):
            for inst in node.instances():
                assert covers(node.box, inst.features)


class TestIterateNodes:
    def test_single_leaf(self):
        tree = build_index([Instance([0.0], [0.0], 0)])
        assert list(iterate_nodes(tree)) == [tree.root]

    def test_preorder(self, rng):
        insts = make_instances(rng.uniform(0, 1, (40, 2)))
        tree = build_index(insts, leaf_capacity=4, max_fanout=4)
        nodes = list(iterate_nodes(tree))
        assert nodes[0] is tree.root
        assert not tree.root.is_leaf
        assert nodes[1] is tree.root.children[0]
        # each child appears after its parent
        pos = {id(n): i for i, n in enumerate(nodes)}
        for node in nodes:
            if not node.is_leaf:
                for child in node.children:
                    assert pos[id(child)] > pos[id(node)]

    def test_traversal_counts_all_nodes(self, rng):
        insts = make_instances(rng.uniform(0, 1, (100, 2)))
        tree = build_index(insts, leaf_capacity=4, max_fanout=4)

        def count(node):
            return 1 + (0 if node.is_leaf else sum(count(c) for c in node.children))

        assert len(list(iterate_nodes(tree))) == count(tree.root)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_random_builds_validate(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 400))
    d = int(rng.integers(1, 5))
    leaf_capacity = int(rng.integers(2, 20))
    max_fanout = int(rng.integers(4, 12))
    feats = rng.uniform(-10, 10, (n, d))
    targets = rng.normal(0, 2, n)
    insts = make_instances(feats, targets)
    tree = build_index(insts, leaf_capacity=leaf_capacity, max_fanout=max_fanout)
    validate_tree(tree)

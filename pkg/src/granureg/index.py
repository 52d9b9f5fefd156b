"""Bulk-loaded rectangle tree over a batch of instances.

The tree is built once per batch with sort-tile-recursive packing: instances
are sorted along one dimension, sliced into near-equal runs, and the slicing
recurses through the remaining dimensions; upper levels pack node centers the
same way. Every node carries its minimum bounding box plus cached target
aggregates (count, mean, within-node sum of squared deviations), which is
what the granulation step consumes. Trees are immutable once built.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from .core import BoundingBox, Instance
from .exceptions import EmptyBatchError

__all__ = ["IndexNode", "IndexTree", "build_index", "iterate_nodes", "validate_tree"]


@dataclass(frozen=True, eq=False)
class IndexNode:
    """A tree node: bounding box plus cached target aggregates of its subtree."""

    box: BoundingBox
    children: tuple["IndexNode", ...] | None
    members: tuple[Instance, ...] | None
    count: int
    mean_target: np.ndarray
    m2_target: np.ndarray  # per-component sum of squared deviations from the mean

    @property
    def is_leaf(self) -> bool:
        return self.members is not None

    def instances(self) -> Iterator[Instance]:
        """Yield the subtree's instances in leaf storage order."""
        if self.is_leaf:
            yield from self.members
        else:
            for child in self.children:
                yield from child.instances()


@dataclass(frozen=True, eq=False)
class IndexTree:
    root: IndexNode
    leaf_capacity: int
    max_fanout: int
    min_fanout: int


def _even_split(order: np.ndarray, n_groups: int) -> list[np.ndarray]:
    """Split an index array into n_groups contiguous runs of near-equal size."""
    return [np.asarray(chunk) for chunk in np.array_split(order, n_groups)]


def _str_tiles(
    order: np.ndarray, feats: np.ndarray, dim: int, capacity: int
) -> list[np.ndarray]:
    """Recursive sort-tile split of `order` into runs of at most `capacity`."""
    n = order.shape[0]
    if n <= capacity:
        return [order]
    d = feats.shape[1]
    keys = feats[order, dim]
    order = order[np.argsort(keys, kind="stable")]
    n_tiles = math.ceil(n / capacity)
    if dim == d - 1:
        return _even_split(order, n_tiles)
    # the tiny shift keeps integer roots from ceiling up by one ulp
    n_slices = max(1, math.ceil(n_tiles ** (1.0 / (d - dim)) - 1e-12))
    tiles: list[np.ndarray] = []
    for piece in _even_split(order, n_slices):
        tiles.extend(_str_tiles(piece, feats, dim + 1, capacity))
    return tiles


def _target_stats(targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # exactness matters: identical targets must yield m2 == 0 so that the
    # granulation rule sees them as noise-free
    if np.all(targets == targets[0]):
        return targets[0].copy(), np.zeros(targets.shape[1])
    mean = targets.mean(axis=0)
    dev = targets - mean
    return mean, (dev * dev).sum(axis=0)


def _make_leaf(idx: np.ndarray, feats: np.ndarray, targets: np.ndarray,
               instances: Sequence[Instance]) -> IndexNode:
    pts = feats[idx]
    mean, m2 = _target_stats(targets[idx])
    return IndexNode(
        box=BoundingBox.of_points(pts),
        children=None,
        members=tuple(instances[i] for i in idx),
        count=int(idx.shape[0]),
        mean_target=mean,
        m2_target=m2,
    )


def _merge_nodes(children: Sequence[IndexNode]) -> IndexNode:
    count = sum(c.count for c in children)
    means = np.stack([c.mean_target for c in children])
    if np.all(means == means[0]):
        mean = means[0].copy()
        m2 = sum(c.m2_target for c in children)
    else:
        mean = sum(c.count * c.mean_target for c in children) / count
        m2 = sum(
            c.m2_target + c.count * (c.mean_target - mean) ** 2 for c in children
        )
    lo = np.min(np.stack([c.box.min for c in children]), axis=0)
    hi = np.max(np.stack([c.box.max for c in children]), axis=0)
    return IndexNode(
        box=BoundingBox(lo, hi),
        children=tuple(children),
        members=None,
        count=count,
        mean_target=np.asarray(mean, dtype=np.float64),
        m2_target=np.asarray(m2, dtype=np.float64),
    )


def build_index(
    instances: Sequence[Instance],
    leaf_capacity: int = 16,
    max_fanout: int = 8,
    min_fanout: int = 2,
) -> IndexTree:
    """Pack a batch of instances into a rectangle tree.

    Construction is deterministic: sorting is stable, so instances with equal
    coordinates keep their input order. Raises EmptyBatchError on no input.
    """
    instances = list(instances)
    if not instances:
        raise EmptyBatchError("cannot build an index over zero instances")
    if leaf_capacity < 2:
        raise ValueError("leaf_capacity must be >= 2")
    if max_fanout < 2:
        raise ValueError("max_fanout must be >= 2")
    # even-split packing guarantees fanout >= floor(max_fanout / 2)
    min_fanout = max(1, min(min_fanout, max_fanout // 2))

    feats = np.stack([inst.features for inst in instances])
    targets = np.stack([inst.target for inst in instances])
    order = np.arange(len(instances))
    tiles = _str_tiles(order, feats, 0, leaf_capacity)
    nodes: list[IndexNode] = [_make_leaf(t, feats, targets, instances) for t in tiles]

    while len(nodes) > 1:
        centers = np.stack([(n.box.min + n.box.max) * 0.5 for n in nodes])
        node_order = np.arange(len(nodes))
        groups = _str_tiles(node_order, centers, 0, max_fanout)
        nodes = [_merge_nodes([nodes[i] for i in g]) for g in groups]

    return IndexTree(
        root=nodes[0],
        leaf_capacity=leaf_capacity,
        max_fanout=max_fanout,
        min_fanout=min_fanout,
    )


def iterate_nodes(tree: IndexTree) -> Iterator[IndexNode]:
    """Preorder traversal: each node before its children, children in stored order."""
    stack = [tree.root]
    while stack:
        node = stack.pop()
        yield node
        if not node.is_leaf:
            stack.extend(reversed(node.children))


def validate_tree(tree: IndexTree, rel_tol: float = 1e-9) -> None:
    """Raise AssertionError if any structural invariant fails.

    Checks containment, leaf/internal occupancy bounds, cached counts, and
    cached means against directly recomputed values.
    """
    def visit(node: IndexNode, is_root: bool) -> None:
        insts = list(node.instances())
        assert insts, "every node must contain at least one instance"
        feat = np.stack([i.features for i in insts])
        assert np.all(feat >= node.box.min) and np.all(feat <= node.box.max), (
            "node box must contain all descendant features"
        )
        assert node.count == len(insts), "cached count must match subtree size"
        true_mean = np.stack([i.target for i in insts]).mean(axis=0)
        assert np.allclose(node.mean_target, true_mean, rtol=rel_tol, atol=1e-12), (
            "cached mean target must match the subtree mean"
        )
        if node.is_leaf:
            assert 1 <= len(node.members) <= tree.leaf_capacity, "leaf occupancy"
        else:
            if not is_root:
                assert tree.min_fanout <= len(node.children) <= tree.max_fanout, (
                    "internal fanout out of bounds"
                )
            else:
                assert len(node.children) <= tree.max_fanout, "root fanout"
            for child in node.children:
                assert np.all(child.box.min >= node.box.min)
                assert np.all(child.box.max <= node.box.max)
                visit(child, False)

    visit(tree.root, True)

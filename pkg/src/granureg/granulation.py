"""Cutting the index tree into granules, guided by two-sample variance.

The cut is chosen top-down. At each internal node the children are ordered
along the temporal axis and the two-sample (Allan) variance of their mean
targets is compared against the sampling noise expected if the node's data
were locally constant: pooled within-child variance divided by the mean
child size. When the children's means are indistinguishable from that noise
level the node is kept whole as one granule; otherwise the descent recurses.
Leaves and nodes below the minimum size are always accepted.

The acceptance rule is a deliberately simple heuristic; it is isolated
behind GranulationParams so alternatives can be swapped in.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .core import Granule
from .exceptions import InsufficientSamplesError
from .index import IndexNode, IndexTree

__all__ = ["GranulationParams", "allan_variance", "granulate", "granule_from_node"]


@dataclass(frozen=True)
class GranulationParams:
    """Knobs of the aggregation rule.

    avar_ratio_threshold scales the accept bound: larger values aggregate
    more aggressively, smaller values split deeper. min_granule_size stops
    the descent below that many instances.
    """

    avar_ratio_threshold: float = 1.0
    min_granule_size: int = 2

    def __post_init__(self):
        if not self.avar_ratio_threshold > 0:
            raise ValueError("avar_ratio_threshold must be positive")
        if self.min_granule_size < 1:
            raise ValueError("min_granule_size must be >= 1")


def allan_variance(seq: Sequence[float]) -> float:
    """Two-sample variance: half the mean squared difference of consecutive values."""
    values = np.asarray(seq, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("allan_variance expects a 1-d sequence")
    k = values.shape[0]
    if k < 2:
        raise InsufficientSamplesError("allan_variance needs at least 2 samples")
    diffs = np.diff(values)
    return float((diffs * diffs).sum() / (2.0 * (k - 1)))


def granule_from_node(node: IndexNode, next_id: int) -> Granule:
    """Promote a tree node to a granule, reusing its cached box and mean."""
    return Granule(
        box=node.box,
        members=tuple(node.instances()),
        mean_target=node.mean_target.copy(),
        granule_id=next_id,
    )


def _keep_whole(node: IndexNode, params: GranulationParams, temporal_dim: int) -> bool:
    if node.is_leaf or node.count < params.min_granule_size:
        return True
    kids = node.children
    mids = np.asarray(
        [(c.box.min[temporal_dim] + c.box.max[temporal_dim]) * 0.5 for c in kids]
    )
    order = np.argsort(mids, kind="stable")
    means = np.stack([kids[i].mean_target for i in order])
    diffs = np.diff(means, axis=0)
    avar = (diffs * diffs).sum(axis=0) / (2.0 * (len(kids) - 1))
    pooled_within = sum(c.m2_target for c in kids) / node.count
    mean_child_count = node.count / len(kids)
    bound = params.avar_ratio_threshold * pooled_within / mean_child_count
    # all-equal children give avar == bound == 0 and are kept whole;
    # internally pure but mutually different children (bound 0, avar > 0) split
    return bool(np.all(avar <= bound))


def granulate(
    tree: IndexTree, params: GranulationParams, temporal_dim: int = 0
) -> list[Granule]:
    """Select a cut through the tree and return its nodes as granules.

    Every instance of the tree ends up in exactly one returned granule
    (boxes may overlap; memberships never do). Granule ids are assigned in
    preorder, so the result is deterministic for a given tree.
    """
    accepted: list[IndexNode] = []

    def descend(node: IndexNode) -> None:
        if _keep_whole(node, params, temporal_dim):
            accepted.append(node)
        else:
            for child in node.children:
                descend(child)

    descend(tree.root)
    return [granule_from_node(node, i) for i, node in enumerate(accepted)]

"""Recent-granule extraction and the per-batch model update.

A granule is *recent* when at least one of its own members, projected onto
the non-temporal dimensions, has that granule as its newest cover: among all
granules covering the member spatially, the one with the greatest temporal
upper bound (ties to the smaller granule_id). Granules that lose this test
for every member are shadowed by newer data and are dropped together with
their members.

Each observed batch rebuilds the model from scratch: retained instances are
merged with the batch, re-indexed, re-granulated, and re-filtered, so data
kept in one round is re-examined in every later round.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Granule, GranuleSet, Instance, as_query
from .exceptions import ColdStartError, EmptyBatchError, EmptyModelError
from .granulation import GranulationParams, granulate
from .index import build_index

__all__ = [
    "RecentModel",
    "RegressorState",
    "init_state",
    "extract_recent",
    "collect_recent_data",
    "observe_batch",
    "predict_current",
]


def extract_recent(granules: Sequence[Granule], temporal_dim: int) -> list[Granule]:
    """Keep the granules witnessed as newest by at least one of their own members.

    For each member of each granule, the covering granules in the spatial
    projection (temporal dimension ignored) are ranked by descending temporal
    upper bound, ties to the smaller granule_id; the granule survives iff it
    ranks first for one of its own members. Output is ordered by granule_id.
    """
    items = sorted(granules, key=lambda g: g.granule_id)
    if not items:
        raise EmptyModelError("cannot extract recent granules from an empty set")
    d = items[0].box.d
    if not 0 <= temporal_dim < d:
        raise ValueError(f"temporal_dim {temporal_dim} out of range for {d} dimensions")
    spatial = np.asarray([k for k in range(d) if k != temporal_dim], dtype=np.intp)

    mins = np.stack([g.box.min for g in items])[:, spatial]
    maxs = np.stack([g.box.max for g in items])[:, spatial]
    tmax = np.asarray([g.box.max[temporal_dim] for g in items])

    recent: list[Granule] = []
    for gi, g in enumerate(items):
        feats = np.stack([m.features for m in g.members])[:, spatial]
        covered = (
            (mins[None, :, :] <= feats[:, None, :])
            & (feats[:, None, :] <= maxs[None, :, :])
        ).all(axis=2)
        ranked = np.where(covered, tmax[None, :], -np.inf)
        # argmax picks the first maximum, i.e. the smallest granule_id
        winners = np.argmax(ranked, axis=1)
        if np.any(winners == gi):
            recent.append(g)
    return recent


def collect_recent_data(recent: Sequence[Granule]) -> list[Instance]:
    """Union of members across granules, deduplicated and ordered by sequence_id."""
    by_seq: dict[int, Instance] = {}
    for g in recent:
        for inst in g.members:
            by_seq.setdefault(inst.sequence_id, inst)
    return [by_seq[s] for s in sorted(by_seq)]


@dataclass(frozen=True, eq=False)
class RecentModel:
    """The queryable model: recent granules, their instances, and the clock."""

    recent_granules: tuple[Granule, ...]
    recent_data: tuple[Instance, ...]
    temporal_dim: int
    model_clock: float
    granule_set: GranuleSet = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "recent_granules", tuple(self.recent_granules))
        object.__setattr__(self, "recent_data", tuple(self.recent_data))
        object.__setattr__(self, "granule_set", GranuleSet(self.recent_granules))


@dataclass(frozen=True, eq=False)
class RegressorState:
    """Everything the pipeline carries between batches."""

    granulation: GranulationParams = GranulationParams()
    leaf_capacity: int = 16
    max_fanout: int = 8
    temporal_dim: int = 0
    forget: bool = True
    model: RecentModel | None = None
    batch_counter: int = 0


def init_state(
    granulation: GranulationParams | None = None,
    leaf_capacity: int = 16,
    max_fanout: int = 8,
    temporal_dim: int = 0,
    forget: bool = True,
) -> RegressorState:
    """A fresh pipeline state with no observed batches."""
    return RegressorState(
        granulation=granulation or GranulationParams(),
        leaf_capacity=leaf_capacity,
        max_fanout=max_fanout,
        temporal_dim=temporal_dim,
        forget=forget,
    )


def observe_batch(state: RegressorState, batch: Sequence[Instance]) -> RegressorState:
    """Merge a batch with the retained data and rebuild the model.

    Returns a new state; the previous state and its model stay valid, so
    readers holding the old model snapshot are unaffected by the swap.
    With state.forget disabled, the granulation output is kept unfiltered
    and nothing is ever discarded.
    """
    batch = list(batch)
    if not batch:
        raise EmptyBatchError("observe_batch needs a nonempty batch")
    combined: list[Instance] = []
    if state.model is not None:
        combined.extend(state.model.recent_data)
    combined.extend(batch)

    tree = build_index(combined, state.leaf_capacity, state.max_fanout)
    granules = granulate(tree, state.granulation, state.temporal_dim)
    recent = extract_recent(granules, state.temporal_dim) if state.forget else granules
    clock = max(inst.features[state.temporal_dim] for inst in combined)
    model = RecentModel(
        recent_granules=tuple(recent),
        recent_data=tuple(collect_recent_data(recent)),
        temporal_dim=state.temporal_dim,
        model_clock=float(clock),
    )
    return replace(state, model=model, batch_counter=state.batch_counter + 1)


def predict_current(state: RegressorState, q) -> np.ndarray:
    """Answer a point query from the current model; raises before the first batch."""
    if state.model is None:
        raise ColdStartError("no batch observed yet; the model cannot answer queries")
    return state.model.granule_set.predict(as_query(q))

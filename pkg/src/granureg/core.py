"""Granules, bounding boxes, and the granule-set prediction rule.

A granule is an axis-aligned hyper-rectangle in feature space holding the
instances it was built from and the mean of their target vectors. A set of
granules answers a point query by averaging the mean targets of the granules
that cover the query; when nothing covers it, the granule nearest to the
query (squared distance to the closest point of its box) answers alone.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence, Set
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, EmptyModelError

__all__ = [
    "Instance",
    "BoundingBox",
    "Granule",
    "GranuleSet",
    "as_query",
    "covers",
    "mindist_sq",
    "covering_granules",
    "find_closest_granule",
    "predict",
]


def _as_finite_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionMismatchError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


def as_query(features, d_x: int | None = None) -> np.ndarray:
    """Validate a query point: finite 1-d float vector, optionally of length d_x."""
    q = _as_finite_vector(features, "query")
    if d_x is not None and q.shape[0] != d_x:
        raise DimensionMismatchError(f"query has {q.shape[0]} dimensions, expected {d_x}")
    return q


@dataclass(frozen=True, eq=False)
class Instance:
    """One stream record: a feature vector, a target vector, and arrival order."""

    features: np.ndarray
    target: np.ndarray
    sequence_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "features", _as_finite_vector(self.features, "features"))
        object.__setattr__(self, "target", _as_finite_vector(self.target, "target"))
        if self.sequence_id < 0:
            raise ValueError("sequence_id must be nonnegative")

    @property
    def d_x(self) -> int:
        return self.features.shape[0]

    @property
    def d_y(self) -> int:
        return self.target.shape[0]


@dataclass(frozen=True, eq=False)
class BoundingBox:
    """Axis-aligned box; degenerate intervals (min == max) are allowed."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min", _as_finite_vector(self.min, "box min"))
        object.__setattr__(self, "max", _as_finite_vector(self.max, "box max"))
        if self.min.shape != self.max.shape:
            raise DimensionMismatchError("box min and max must have the same length")
        if np.any(self.min > self.max):
            raise ValueError("box min must be <= max in every dimension")

    @property
    def d(self) -> int:
        return self.min.shape[0]

    @staticmethod
    def of_points(points: np.ndarray) -> "BoundingBox":
        pts = np.asarray(points, dtype=np.float64)
        return BoundingBox(pts.min(axis=0), pts.max(axis=0))


@dataclass(frozen=True, eq=False)
class Granule:
    """A box plus the instances inside it and the mean of their targets."""

    box: BoundingBox
    members: tuple[Instance, ...]
    mean_target: np.ndarray
    granule_id: int

    def __post_init__(self):
        if not self.members:
            raise EmptyModelError("a granule must hold at least one instance")
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(
            self, "mean_target", _as_finite_vector(self.mean_target, "mean_target")
        )

    @classmethod
    def from_members(cls, members: Sequence[Instance], granule_id: int) -> "Granule":
        """Build a granule whose box and mean are derived from its members."""
        members = tuple(members)
        if not members:
            raise EmptyModelError("a granule must hold at least one instance")
        feats = np.stack([m.features for m in members])
        targets = np.stack([m.target for m in members])
        return cls(
            box=BoundingBox.of_points(feats),
            members=members,
            mean_target=targets.mean(axis=0),
            granule_id=granule_id,
        )

    @property
    def count(self) -> int:
        return len(self.members)


def _check_box_query(box: BoundingBox, q: np.ndarray) -> None:
    if box.d != q.shape[0]:
        raise DimensionMismatchError(
            f"box has {box.d} dimensions but query has {q.shape[0]}"
        )


def covers(box: BoundingBox, q, ignore_dims: Set[int] = frozenset()) -> bool:
    """True iff q lies inside box on every non-ignored dimension, bounds inclusive."""
    q = as_query(q)
    _check_box_query(box, q)
    for k in range(box.d):
        if k in ignore_dims:
            continue
        if q[k] < box.min[k] or q[k] > box.max[k]:
            return False
    return True


def mindist_sq(box: BoundingBox, q) -> float:
    """Squared distance from q to the closest point of box; 0 when q is inside.

    Coordinates inside the box's interval contribute nothing; outside ones
    contribute the squared gap to the nearer face.
    """
    q = as_query(q)
    _check_box_query(box, q)
    total = 0.0
    for k in range(box.d):
        if q[k] < box.min[k]:
            diff = box.min[k] - q[k]
        elif q[k] > box.max[k]:
            diff = q[k] - box.max[k]
        else:
            continue
        total += diff * diff
    return float(total)


def covering_granules(
    granules: Iterable[Granule], q, ignore_dims: Set[int] = frozenset()
) -> list[Granule]:
    """All granules covering q on the non-ignored dimensions, ordered by granule_id."""
    ordered = sorted(granules, key=lambda g: g.granule_id)
    return [g for g in ordered if covers(g.box, q, ignore_dims)]


def find_closest_granule(granules: Iterable[Granule], q) -> Granule:
    """The granule with minimal mindist_sq to q; ties go to the smaller granule_id."""
    best = None
    best_dist = None
    for g in sorted(granules, key=lambda g: g.granule_id):
        d = mindist_sq(g.box, q)
        if best is None or d < best_dist:
            best, best_dist = g, d
    if best is None:
        raise EmptyModelError("cannot pick the closest granule of an empty set")
    return best


class GranuleSet:
    """An immutable, array-packed granule collection for fast point queries.

    Granules are stored in ascending granule_id order; all tie-breaking rules
    (closest granule, newest cover) resolve to the smallest granule_id.
    """

    def __init__(self, granules: Iterable[Granule]):
        items = sorted(granules, key=lambda g: g.granule_id)
        if not items:
            raise EmptyModelError("a GranuleSet needs at least one granule")
        ids = [g.granule_id for g in items]
        if len(set(ids)) != len(ids):
            raise ValueError("granule_ids must be unique within a GranuleSet")
        self._granules = tuple(items)
        self.ids = np.asarray(ids, dtype=np.int64)
        self.mins = np.stack([g.box.min for g in items])
        self.maxs = np.stack([g.box.max for g in items])
        self.means = np.stack([g.mean_target for g in items])
        self.counts = np.asarray([g.count for g in items], dtype=np.int64)

    def __len__(self) -> int:
        return len(self._granules)

    def __iter__(self) -> Iterator[Granule]:
        return iter(self._granules)

    def __getitem__(self, idx: int) -> Granule:
        return self._granules[idx]

    @property
    def granules(self) -> tuple[Granule, ...]:
        return self._granules

    @property
    def d_x(self) -> int:
        return self.mins.shape[1]

    @property
    def d_y(self) -> int:
        return self.means.shape[1]

    def total_instances(self) -> int:
        return int(self.counts.sum())

    def covering_mask(self, q: np.ndarray, dims: np.ndarray | None = None) -> np.ndarray:
        """Boolean mask of granules covering q, restricted to `dims` if given."""
        if dims is None:
            lo, hi, qq = self.mins, self.maxs, q
        else:
            lo, hi, qq = self.mins[:, dims], self.maxs[:, dims], q[dims]
        return ((lo <= qq) & (qq <= hi)).all(axis=1)

    def mindist_sq_all(self, q: np.ndarray) -> np.ndarray:
        # column-accumulated so the result is bitwise identical to a
        # per-dimension python loop
        below = self.mins - q
        above = q - self.maxs
        contrib = np.where(below > 0.0, below, np.where(above > 0.0, above, 0.0))
        total = contrib[:, 0] * contrib[:, 0]
        for k in range(1, contrib.shape[1]):
            total = total + contrib[:, k] * contrib[:, k]
        return total

    def closest_index(self, q: np.ndarray) -> int:
        # argmin returns the first minimum, i.e. the smallest granule_id
        return int(np.argmin(self.mindist_sq_all(q)))

    def predict(self, q) -> np.ndarray:
        """Mean target over covering granules; nearest granule when none cover.

        The average accumulates granule means in ascending granule_id order,
        which keeps results reproducible bit for bit.
        """
        q = as_query(q, self.d_x)
        mask = self.covering_mask(q)
        idxs = np.nonzero(mask)[0]
        if idxs.size == 0:
            idxs = np.asarray([self.closest_index(q)])
        acc = np.zeros(self.d_y)
        for i in idxs:
            acc = acc + self.means[i]
        return acc / idxs.size


def predict(granules: Iterable[Granule] | GranuleSet, q) -> np.ndarray:
    """Answer a point query from a granule collection.

    Covering granules (all dimensions, bounds inclusive) vote with their mean
    targets; with no cover, the closest granule answers alone.
    """
    gs = granules if isinstance(granules, GranuleSet) else GranuleSet(granules)
    return gs.predict(q)

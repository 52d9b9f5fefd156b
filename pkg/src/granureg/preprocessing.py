"""Stream preprocessing: running statistics, outlier rejection, time consolidation.

Outlier rejection follows the classic three-sigma rule on feature dimensions,
with mean and variance maintained from running sums (one pass, O(1) memory).
Raw records with split calendar fields (year, month, day, ...) are collapsed
into one numeric temporal coordinate before entering the pipeline.
"""

from __future__ import annotations

import datetime as _dt
from collections.abc import Mapping

import numpy as np

from .core import Instance

__all__ = ["RunningStats", "consolidate_temporal", "calendar_seconds", "DEFAULT_EPOCH"]

DEFAULT_EPOCH = _dt.datetime(1970, 1, 1)

_CALENDAR_ROLES = ("year", "month", "day", "hour", "minute", "second")


class RunningStats:
    """Per-dimension running sums over features and targets.

    Mean and variance come from n, sum, and sum of squares. The sum-of-squares
    form can go slightly negative from rounding, so variance is clamped at
    zero. is_outlier always answers False during the warmup window where the
    sigma estimate is still unstable.
    """

    def __init__(self, warmup: int = 30, n_sigma: float = 3.0):
        self.warmup = warmup
        self.n_sigma = n_sigma
        self.n = 0
        self._fsum = None
        self._fsumsq = None
        self._tsum = None
        self._tsumsq = None

    def update(self, inst: Instance) -> "RunningStats":
        """Fold one instance into the sums; rejects non-finite input."""
        if not (np.all(np.isfinite(inst.features)) and np.all(np.isfinite(inst.target))):
            raise ValueError("cannot update running stats with non-finite values")
        if self.n == 0:
            self._fsum = np.zeros(inst.d_x)
            self._fsumsq = np.zeros(inst.d_x)
            self._tsum = np.zeros(inst.d_y)
            self._tsumsq = np.zeros(inst.d_y)
        self.n += 1
        self._fsum += inst.features
        self._fsumsq += inst.features * inst.features
        self._tsum += inst.target
        self._tsumsq += inst.target * inst.target
        return self

    def _mean_var(self, total, total_sq):
        mean = total / self.n
        var = np.maximum(0.0, total_sq / self.n - mean * mean)
        return mean, var

    @property
    def feature_mean(self) -> np.ndarray:
        return self._mean_var(self._fsum, self._fsumsq)[0]

    @property
    def feature_var(self) -> np.ndarray:
        return self._mean_var(self._fsum, self._fsumsq)[1]

    @property
    def target_mean(self) -> np.ndarray:
        return self._mean_var(self._tsum, self._tsumsq)[0]

    @property
    def target_var(self) -> np.ndarray:
        return self._mean_var(self._tsum, self._tsumsq)[1]

    def is_outlier(self, inst: Instance) -> bool:
        """True iff any feature sits strictly beyond n_sigma deviations.

        Only feature dimensions are tested, never targets. With sigma zero in
        a dimension, any value other than the mean itself is an outlier.
        """
        if self.n == 0 or self.n < self.warmup:
            return False
        mean, var = self._mean_var(self._fsum, self._fsumsq)
        return bool(np.any(np.abs(inst.features - mean) > self.n_sigma * np.sqrt(var)))


def _get_number(record: Mapping, key: str) -> float:
    try:
        value = float(record[key])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"field {key!r} is missing or not numeric") from exc
    if not np.isfinite(value):
        raise ValueError(f"field {key!r} is not finite")
    return value


def consolidate_temporal(record: Mapping, schema, sequence_id: int = 0) -> Instance:
    """Build an Instance from a raw record, collapsing time into one coordinate.

    The consolidated coordinate is seconds since the schema's epoch (calendar
    mode) or the scaled numeric time column (numeric mode); it is inserted at
    schema.temporal_dim inside the feature vector. Unparseable fields raise
    ValueError so callers can skip and count the record.
    """
    time_value = schema.time_from(record)
    features = [_get_number(record, col) for col in schema.feature_columns]
    features.insert(schema.temporal_dim, time_value)
    target = [_get_number(record, col) for col in schema.target_columns]
    return Instance(features=features, target=target, sequence_id=sequence_id)


def calendar_seconds(record: Mapping, fields: Mapping[str, str], epoch: _dt.datetime) -> float:
    """Seconds from epoch to the calendar time spelled out by a record's fields.

    `fields` maps roles (year, month, day, hour, minute, second) to column
    names; missing roles default to the epoch's own component.
    """
    parts = {}
    for role in _CALENDAR_ROLES:
        if role in fields:
            raw = _get_number(record, fields[role])
            if raw != int(raw):
                raise ValueError(f"calendar field {fields[role]!r} must be integral")
            parts[role] = int(raw)
        else:
            parts[role] = getattr(epoch, role)
    try:
        moment = _dt.datetime(
            parts["year"], parts["month"], parts["day"],
            parts["hour"], parts["minute"], parts["second"],
        )
    except ValueError as exc:
        raise ValueError(f"invalid calendar time: {exc}") from exc
    return (moment - epoch).total_seconds()

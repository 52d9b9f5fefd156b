"""Synthetic stream generators and CSV ingestion/emission.

Generators are pure functions of (n, seed, parameters): the same call always
yields the same stream, instance by instance, with nondecreasing temporal
coordinates. The CSV path reads arbitrary numeric streams through a
StreamSchema and writes generated streams back out with full float
round-trip fidelity.
"""

from __future__ import annotations

import csv
import datetime as _dt
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Instance
from .exceptions import SchemaError
from .preprocessing import DEFAULT_EPOCH, calendar_seconds, consolidate_temporal

__all__ = [
    "StreamSchema",
    "NoiseProfile",
    "default_noise_profile",
    "constant",
    "default_base_fn",
    "gen_noise_varying",
    "gen_noise_param_varying",
    "gen_road_friction",
    "CsvStreamReader",
    "read_csv_stream",
    "write_csv",
]

# (start_time, sigma) steps; each sigma applies from its start until the next
NoiseProfile = Sequence[tuple[float, float]]


def default_noise_profile() -> tuple[tuple[float, float], ...]:
    return ((0.0, 0.05), (1.0 / 3.0, 0.3), (2.0 / 3.0, 0.1))


def default_base_fn(x: np.ndarray) -> np.ndarray:
    return np.sin(4.0 * np.pi * x)


def constant(value: float) -> Callable[[np.ndarray], np.ndarray]:
    """A vectorized function that maps any input to `value`."""
    return lambda x: np.full(np.shape(x), float(value))


@dataclass(frozen=True)
class StreamSchema:
    """How to map CSV columns onto instances.

    feature_columns lists the non-temporal features in order; the consolidated
    temporal coordinate is inserted at temporal_dim among them. Time comes
    either from one numeric column (scaled) or from calendar fields mapped to
    columns; exactly one of the two modes must be configured.
    """

    feature_columns: tuple[str, ...]
    target_columns: tuple[str, ...]
    time_column: str | None = None
    time_scale: float = 1.0
    calendar_fields: dict[str, str] = field(default_factory=dict)
    epoch: _dt.datetime = DEFAULT_EPOCH
    temporal_dim: int = 0
    delimiter: str = ","
    header: bool = True
    columns: tuple[str, ...] = ()  # file column order, required when header is False

    def __post_init__(self):
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        object.__setattr__(self, "target_columns", tuple(self.target_columns))
        object.__setattr__(self, "columns", tuple(self.columns))
        if not self.target_columns:
            raise SchemaError("at least one target column is required")
        has_numeric = self.time_column is not None
        has_calendar = bool(self.calendar_fields)
        if has_numeric == has_calendar:
            raise SchemaError("configure exactly one of time_column or calendar_fields")
        if not 0 <= self.temporal_dim <= len(self.feature_columns):
            raise SchemaError("temporal_dim must fit inside the feature vector")
        if not self.header and not self.columns:
            raise SchemaError("headerless files need an explicit column order")

    @property
    def d_x(self) -> int:
        return len(self.feature_columns) + 1

    @property
    def d_y(self) -> int:
        return len(self.target_columns)

    def time_from(self, record) -> float:
        if self.time_column is not None:
            value = float(record[self.time_column]) * self.time_scale
            if not np.isfinite(value):
                raise ValueError("time column is not finite")
            return value
        return calendar_seconds(record, self.calendar_fields, self.epoch)

    def output_columns(self) -> list[str]:
        """Header for write_csv: features with the time column in stream order."""
        if self.time_column is None:
            raise SchemaError("writing requires a numeric time column name")
        cols = list(self.feature_columns)
        cols.insert(self.temporal_dim, self.time_column)
        return cols + list(self.target_columns)


def _sigma_at(profile: NoiseProfile, t: np.ndarray) -> np.ndarray:
    steps = list(profile)
    if not steps or steps[0][0] != 0.0:
        raise SchemaError("noise profile must start at time 0")
    starts = [s for s, _ in steps]
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise SchemaError("noise profile start times must strictly increase")
    sigmas = [s for _, s in steps]
    if any(s < 0 for s in sigmas):
        raise SchemaError("noise sigma must be nonnegative")
    idx = np.searchsorted(np.asarray(starts), t, side="right") - 1
    return np.asarray(sigmas)[idx]


def _assemble(t: np.ndarray, spatial: Sequence[np.ndarray], y: np.ndarray) -> list[Instance]:
    feats = np.column_stack([t, *spatial])
    return [
        Instance(features=feats[i], target=np.asarray([y[i]]), sequence_id=i)
        for i in range(feats.shape[0])
    ]


def gen_noise_varying(
    n: int,
    seed: int,
    base_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    noise_profile: NoiseProfile | None = None,
) -> list[Instance]:
    """A stream with a fixed pattern and noise whose level steps over time.

    Features are (t, x) with t = i/n over [0, 1) and x uniform on [0, 1);
    the target is base_fn(x) plus Gaussian noise with the profile's sigma.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    base_fn = base_fn or default_base_fn
    profile = noise_profile if noise_profile is not None else default_noise_profile()
    rng = np.random.default_rng(seed)
    t = np.arange(n) / n
    x = rng.uniform(0.0, 1.0, n)
    eps = rng.standard_normal(n)
    y = base_fn(x) + _sigma_at(profile, t) * eps
    return _assemble(t, [x], y)


def gen_noise_param_varying(
    n: int,
    seed: int,
    fn_schedule: Sequence[tuple[float, Callable[[np.ndarray], np.ndarray]]],
    noise_profile: NoiseProfile | None = None,
) -> list[Instance]:
    """Like gen_noise_varying, but the underlying pattern switches over time.

    fn_schedule lists (start_time, fn) segments with strictly increasing
    starts beginning at 0; the active fn changes at each breakpoint, which is
    what makes the stream drift.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    schedule = list(fn_schedule)
    if not schedule or schedule[0][0] != 0.0:
        raise SchemaError("fn_schedule must start at time 0")
    starts = [s for s, _ in schedule]
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise SchemaError("fn_schedule breakpoints must strictly increase")
    profile = noise_profile if noise_profile is not None else default_noise_profile()
    rng = np.random.default_rng(seed)
    t = np.arange(n) / n
    x = rng.uniform(0.0, 1.0, n)
    eps = rng.standard_normal(n)
    y = np.empty(n)
    seg = np.searchsorted(np.asarray(starts), t, side="right") - 1
    for si, (_, fn) in enumerate(schedule):
        mask = seg == si
        if np.any(mask):
            y[mask] = fn(x[mask])
    y = y + _sigma_at(profile, t) * eps
    return _assemble(t, [x], y)


def gen_road_friction(
    n: int,
    seed: int,
    sigma: float = 0.05,
    drift_rate: float = 0.5,
) -> list[Instance]:
    """Vehicles reporting a noisy surface measurement that decays over time.

    Features are (t, east, north) with positions uniform on the unit square;
    the target is a smooth spatial surface shifted down as time advances.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if sigma < 0:
        raise SchemaError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    t = np.arange(n) / n
    east = rng.uniform(0.0, 1.0, n)
    north = rng.uniform(0.0, 1.0, n)
    eps = rng.standard_normal(n)
    y = (
        0.9
        - drift_rate * t
        + 0.15 * np.sin(2.0 * np.pi * east) * np.cos(2.0 * np.pi * north)
        + sigma * eps
    )
    return _assemble(t, [east, north], y)


class CsvStreamReader:
    """Iterates a CSV file as instances, skipping and counting malformed rows."""

    def __init__(self, path, schema: StreamSchema):
        self.path = Path(path)
        self.schema = schema
        self.rows_skipped = 0
        if not self.path.exists():
            raise FileNotFoundError(self.path)

    def __iter__(self) -> Iterator[Instance]:
        schema = self.schema
        with open(self.path, newline="", encoding="utf-8") as fh:
            if schema.header:
                reader = csv.DictReader(fh, delimiter=schema.delimiter)
                if reader.fieldnames is None:
                    raise SchemaError("input file has no header row")
                missing = set(schema.feature_columns) | set(schema.target_columns)
                if schema.time_column is not None:
                    missing.add(schema.time_column)
                missing |= set(schema.calendar_fields.values())
                missing -= set(reader.fieldnames)
                if missing:
                    raise SchemaError(f"columns absent from header: {sorted(missing)}")
                rows = reader
            else:
                plain = csv.reader(fh, delimiter=schema.delimiter)
                rows = (dict(zip(schema.columns, row)) for row in plain)
            seq = 0
            for row in rows:
                try:
                    inst = consolidate_temporal(row, schema, sequence_id=seq)
                except (ValueError, KeyError):
                    self.rows_skipped += 1
                    continue
                seq += 1
                yield inst


def read_csv_stream(path, schema: StreamSchema) -> CsvStreamReader:
    """Open a CSV stream; iterate the result to get instances in file order."""
    return CsvStreamReader(path, schema)


def write_csv(instances: Sequence[Instance], path, schema: StreamSchema) -> None:
    """Write instances as CSV: one header line, then one row per instance.

    Floats are rendered with repr, which round-trips float64 exactly.
    """
    columns = schema.output_columns()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=schema.delimiter, lineterminator="\n")
        writer.writerow(columns)
        for inst in instances:
            row = [repr(float(v)) for v in inst.features]
            row += [repr(float(v)) for v in inst.target]
            writer.writerow(row)

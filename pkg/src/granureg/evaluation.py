"""Prequential (test-then-train) evaluation of the streaming regressor.

Every instance is first scored against the current model, then routed toward
training: outliers are scored but excluded from batches, and the model is
rebuilt whenever the batch policy closes the buffer. Before the first batch
the harness answers with the running target mean and flags the prediction as
a cold start. Timing covers prediction and training only; checkpoint
bookkeeping is kept out of the measured time.
"""

from __future__ import annotations

import csv
import json
import math
import time
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from .core import Instance
from .exceptions import EmptyBatchError, SchemaError
from .forgetting import RegressorState, observe_batch, predict_current
from .granulation import GranulationParams
from .preprocessing import RunningStats

__all__ = [
    "BatchPolicy",
    "ErrorAccumulator",
    "CheckpointRecord",
    "RunReport",
    "run_prequential",
    "run_prequential_repeated",
    "estimate_model_size",
    "emit_report",
    "REPORT_FIELDS",
    "TIMING_FIELDS",
]


@dataclass(frozen=True)
class BatchPolicy:
    """When to close the buffer into a batch: every N instances or every S time units."""

    mode: str = "count"
    count_threshold: int = 1000
    time_threshold: float | None = None

    def __post_init__(self):
        if self.mode not in ("count", "time"):
            raise SchemaError(f"unknown batch policy mode {self.mode!r}")
        if self.mode == "count" and self.count_threshold < 1:
            raise SchemaError("count_threshold must be >= 1")
        if self.mode == "time" and (
            self.time_threshold is None or self.time_threshold <= 0
        ):
            raise SchemaError("time mode needs a positive time_threshold")


class ErrorAccumulator:
    """Streaming MAE and RMSE over per-component prediction errors."""

    def __init__(self):
        self.n = 0
        self._abs_sum = 0.0
        self._sq_sum = 0.0

    def add(self, y_true: np.ndarray, y_pred: np.ndarray) -> "ErrorAccumulator":
        y_true = np.asarray(y_true, dtype=np.float64)
        y_pred = np.asarray(y_pred, dtype=np.float64)
        if y_true.shape != y_pred.shape:
            raise ValueError("prediction and truth must have the same shape")
        err = y_pred - y_true
        d = err.shape[0]
        self.n += 1
        self._abs_sum += float(np.abs(err).sum()) / d
        self._sq_sum += float((err * err).sum()) / d
        return self

    @property
    def mae(self) -> float:
        return self._abs_sum / self.n if self.n else 0.0

    @property
    def rmse(self) -> float:
        return math.sqrt(self._sq_sum / self.n) if self.n else 0.0


def estimate_model_size(state: RegressorState) -> int:
    """Analytic model footprint in bytes; implementation independent.

    Per granule: two d_x bound vectors, one d_y mean, 16 bytes of id/count.
    Per retained instance: the feature and target vectors plus an 8-byte id.
    An empty (cold) model is 0 bytes.
    """
    if state.model is None or not state.model.recent_granules:
        return 0
    gs = state.model.granule_set
    d_x, d_y = gs.d_x, gs.d_y
    per_granule = 8 * d_x * 2 + 8 * d_y + 16
    per_instance = 8 * (d_x + d_y) + 8
    return per_granule * len(gs) + per_instance * len(state.model.recent_data)


@dataclass(frozen=True)
class CheckpointRecord:
    instances_seen: int
    mae: float
    rmse: float
    cumulative_eval_time_s: float
    cumulative_predict_time_s: float
    cumulative_train_time_s: float
    mean_query_latency: float
    max_query_latency: float
    model_size_bytes: int
    retained_instances: int
    granule_count: int
    outliers_excluded: int
    cold_start_predictions: int


REPORT_FIELDS = tuple(CheckpointRecord.__dataclass_fields__)
TIMING_FIELDS = (
    "cumulative_eval_time_s",
    "cumulative_predict_time_s",
    "cumulative_train_time_s",
    "mean_query_latency",
    "max_query_latency",
)


@dataclass
class RunReport:
    """Per-checkpoint metric trace plus the final pipeline state."""

    records: list[CheckpointRecord] = field(default_factory=list)
    trace: list[tuple[np.ndarray, np.ndarray]] | None = None
    final_state: RegressorState | None = None

    @property
    def final(self) -> CheckpointRecord:
        if not self.records:
            raise ValueError("report holds no checkpoints")
        return self.records[-1]

    @property
    def max_model_size_bytes(self) -> int:
        return max((r.model_size_bytes for r in self.records), default=0)


def run_prequential(
    stream: Iterable[Instance],
    policy: BatchPolicy,
    *,
    granulation: GranulationParams | None = None,
    leaf_capacity: int = 16,
    max_fanout: int = 8,
    temporal_dim: int = 0,
    checkpoint_every: int = 1000,
    ablation_no_forget: bool = False,
    collect_trace: bool = False,
    outlier_sigma: float = 3.0,
    outlier_warmup: int = 30,
) -> RunReport:
    """Drive the test-then-train loop over a stream and collect metrics.

    Every instance is scored exactly once, outliers and cold starts included.
    The leftover buffer at end of stream is trained on so the saved model
    reflects the whole stream.
    """
    if checkpoint_every < 1:
        raise ValueError("checkpoint_every must be >= 1")
    state = RegressorState(
        granulation=granulation or GranulationParams(),
        leaf_capacity=leaf_capacity,
        max_fanout=max_fanout,
        temporal_dim=temporal_dim,
        forget=not ablation_no_forget,
    )
    stats = RunningStats(warmup=outlier_warmup, n_sigma=outlier_sigma)
    errors = ErrorAccumulator()
    report = RunReport(trace=[] if collect_trace else None)

    buffer: list[Instance] = []
    last_flush_time: float | None = None
    predict_time = 0.0
    train_time = 0.0
    max_latency = 0.0
    seen = 0
    outliers = 0
    cold_starts = 0

    def checkpoint() -> None:
        report.records.append(
            CheckpointRecord(
                instances_seen=seen,
                mae=errors.mae,
                rmse=errors.rmse,
                cumulative_eval_time_s=predict_time + train_time,
                cumulative_predict_time_s=predict_time,
                cumulative_train_time_s=train_time,
                mean_query_latency=predict_time / seen if seen else 0.0,
                max_query_latency=max_latency,
                model_size_bytes=estimate_model_size(state),
                retained_instances=(
                    len(state.model.recent_data) if state.model is not None else 0
                ),
                granule_count=(
                    len(state.model.recent_granules) if state.model is not None else 0
                ),
                outliers_excluded=outliers,
                cold_start_predictions=cold_starts,
            )
        )

    for inst in stream:
        if last_flush_time is None:
            last_flush_time = float(inst.features[temporal_dim])

        t0 = time.perf_counter()
        if state.model is None:
            y_pred = stats.target_mean.copy() if stats.n else np.zeros(inst.d_y)
            cold_starts += 1
        else:
            y_pred = predict_current(state, inst.features)
        latency = time.perf_counter() - t0
        predict_time += latency
        if latency > max_latency:
            max_latency = latency
        seen += 1

        errors.add(inst.target, y_pred)
        if report.trace is not None:
            report.trace.append((inst.target.copy(), y_pred.copy()))

        if stats.is_outlier(inst):
            outliers += 1
        else:
            buffer.append(inst)
        stats.update(inst)

        now = float(inst.features[temporal_dim])
        due = (
            len(buffer) >= policy.count_threshold
            if policy.mode == "count"
            else now - last_flush_time >= policy.time_threshold
        )
        if due and buffer:
            t1 = time.perf_counter()
            state = observe_batch(state, buffer)
            train_time += time.perf_counter() - t1
            buffer = []
            last_flush_time = now

        if seen % checkpoint_every == 0:
            checkpoint()

    if seen == 0:
        raise EmptyBatchError("the stream yielded no instances")

    end_flush = False
    if buffer:
        t1 = time.perf_counter()
        state = observe_batch(state, buffer)
        train_time += time.perf_counter() - t1
        end_flush = True

    if not report.records or report.records[-1].instances_seen != seen:
        checkpoint()
    elif end_flush:
        # the aligned final checkpoint predates the end-of-stream flush
        report.records.pop()
        checkpoint()

    report.final_state = state
    return report


def run_prequential_repeated(
    stream_factory, policy: BatchPolicy, repeats: int = 5, **kwargs
) -> tuple[RunReport, float]:
    """Repeat a run and average its total evaluation time over the repeats.

    stream_factory is called once per repeat and must recreate the identical
    stream. Returns the last run's report and the mean evaluation time.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    total = 0.0
    report = None
    for _ in range(repeats):
        report = run_prequential(stream_factory(), policy, **kwargs)
        total += report.final.cumulative_eval_time_s
    return report, total / repeats


def emit_report(report: RunReport, path, format: str = "csv",
                include_timings: bool = True) -> None:
    """Write one record per checkpoint as CSV or JSON lines.

    Timing columns are wall-clock measurements and differ between otherwise
    identical runs; pass include_timings=False for byte-reproducible output.
    """
    if format not in ("csv", "jsonl"):
        raise SchemaError(f"unknown report format {format!r}")
    fields = [
        f for f in REPORT_FIELDS if include_timings or f not in TIMING_FIELDS
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if format == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(fields)
            for rec in report.records:
                writer.writerow(_render(getattr(rec, f)) for f in fields)
        else:
            for rec in report.records:
                json.dump({f: getattr(rec, f) for f in fields}, fh)
                fh.write("\n")


def _render(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)

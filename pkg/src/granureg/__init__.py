"""Granule-based stream regression with iterative forgetting.

Incoming batches are packed into a rectangle tree, cut into granules at the
scale where sibling means stop being distinguishable from noise, and filtered
down to the granules still visible from the newest time; the retained set is
a compact, low-latency regression model that adapts to concept drift by
construction.
"""

from .core import (
    BoundingBox,
    Granule,
    GranuleSet,
    Instance,
    covering_granules,
    covers,
    find_closest_granule,
    mindist_sq,
    predict,
)
from .datasets import (
    CsvStreamReader,
    StreamSchema,
    constant,
    gen_noise_param_varying,
    gen_noise_varying,
    gen_road_friction,
    read_csv_stream,
    write_csv,
)
from .estimator import GranuleStreamRegressor
from .evaluation import (
    BatchPolicy,
    CheckpointRecord,
    ErrorAccumulator,
    RunReport,
    emit_report,
    estimate_model_size,
    run_prequential,
    run_prequential_repeated,
)
from .exceptions import (
    ColdStartError,
    DimensionMismatchError,
    EmptyBatchError,
    EmptyModelError,
    GranuregError,
    InsufficientSamplesError,
    SchemaError,
)
from .forgetting import (
    RecentModel,
    RegressorState,
    collect_recent_data,
    extract_recent,
    init_state,
    observe_batch,
    predict_current,
)
from .granulation import GranulationParams, allan_variance, granulate, granule_from_node
from .index import IndexNode, IndexTree, build_index, iterate_nodes, validate_tree
from .model_io import load_model, save_model
from .preprocessing import RunningStats, calendar_seconds, consolidate_temporal

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "Granule",
    "GranuleSet",
    "Instance",
    "covering_granules",
    "covers",
    "find_closest_granule",
    "mindist_sq",
    "predict",
    "CsvStreamReader",
    "StreamSchema",
    "constant",
    "gen_noise_param_varying",
    "gen_noise_varying",
    "gen_road_friction",
    "read_csv_stream",
    "write_csv",
    "GranuleStreamRegressor",
    "BatchPolicy",
    "CheckpointRecord",
    "ErrorAccumulator",
    "RunReport",
    "emit_report",
    "estimate_model_size",
    "run_prequential",
    "run_prequential_repeated",
    "ColdStartError",
    "DimensionMismatchError",
    "EmptyBatchError",
    "EmptyModelError",
    "GranuregError",
    "InsufficientSamplesError",
    "SchemaError",
    "RecentModel",
    "RegressorState",
    "collect_recent_data",
    "extract_recent",
    "init_state",
    "observe_batch",
    "predict_current",
    "GranulationParams",
    "allan_variance",
    "granulate",
    "granule_from_node",
    "IndexNode",
    "IndexTree",
    "build_index",
    "iterate_nodes",
    "validate_tree",
    "load_model",
    "save_model",
    "RunningStats",
    "calendar_seconds",
    "consolidate_temporal",
]

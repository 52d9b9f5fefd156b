"""Plain-text model serialization for saving, inspection, and offline queries.

The format is line-oriented CSV-adjacent text:

    granureg-model,1
    params,<d_x>,<d_y>,<temporal_dim>,<model_clock>,<leaf_capacity>,
           <max_fanout>,<avar_ratio_threshold>,<min_granule_size>,
           <batch_counter>,<forget>
    granule,<id>,<min...>,<max...>,<mean...>
    instance,<granule_id>,<sequence_id>,<features...>,<targets...>

Floats are written with repr and round-trip exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import BoundingBox, Granule, Instance
from .exceptions import SchemaError
from .forgetting import RecentModel, RegressorState, collect_recent_data
from .granulation import GranulationParams

__all__ = ["save_model", "load_model", "FORMAT_VERSION"]

FORMAT_VERSION = 1


def _fmt(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def save_model(state: RegressorState, path) -> None:
    """Write the current model and its parameters to a text file."""
    if state.model is None:
        raise SchemaError("cannot save a model before the first batch")
    model = state.model
    d_x = model.granule_set.d_x
    d_y = model.granule_set.d_y
    lines = [f"granureg-model,{FORMAT_VERSION}"]
    lines.append(
        "params,{},{},{},{},{},{},{},{},{},{}".format(
            d_x,
            d_y,
            model.temporal_dim,
            repr(float(model.model_clock)),
            state.leaf_capacity,
            state.max_fanout,
            repr(float(state.granulation.avar_ratio_threshold)),
            state.granulation.min_granule_size,
            state.batch_counter,
            int(state.forget),
        )
    )
    for g in model.recent_granules:
        lines.append(
            f"granule,{g.granule_id},{_fmt(g.box.min)},{_fmt(g.box.max)},"
            f"{_fmt(g.mean_target)}"
        )
        for inst in g.members:
            lines.append(
                f"instance,{g.granule_id},{inst.sequence_id},"
                f"{_fmt(inst.features)},{_fmt(inst.target)}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> RegressorState:
    """Rebuild a RegressorState from a file written by save_model."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or not lines[0].startswith("granureg-model,"):
        raise SchemaError("not a granureg model file")
    version = int(lines[0].split(",")[1])
    if version != FORMAT_VERSION:
        raise SchemaError(f"unsupported model format version {version}")
    if len(lines) < 2 or not lines[1].startswith("params,"):
        raise SchemaError("model file is missing its params line")
    p = lines[1].split(",")[1:]
    d_x, d_y, temporal_dim = int(p[0]), int(p[1]), int(p[2])
    model_clock = float(p[3])
    leaf_capacity, max_fanout = int(p[4]), int(p[5])
    avar_threshold, min_granule_size = float(p[6]), int(p[7])
    batch_counter, forget = int(p[8]), bool(int(p[9]))

    boxes: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    members: dict[int, list[Instance]] = {}
    order: list[int] = []
    for ln in lines[2:]:
        kind, _, rest = ln.partition(",")
        vals = rest.split(",")
        if kind == "granule":
            gid = int(vals[0])
            nums = np.asarray([float(v) for v in vals[1:]])
            if nums.shape[0] != 2 * d_x + d_y:
                raise SchemaError(f"granule line for id {gid} has the wrong arity")
            boxes[gid] = (nums[:d_x], nums[d_x : 2 * d_x], nums[2 * d_x :])
            members[gid] = []
            order.append(gid)
        elif kind == "instance":
            gid = int(vals[0])
            if gid not in members:
                raise SchemaError(f"instance references unknown granule {gid}")
            seq = int(vals[1])
            nums = [float(v) for v in vals[2:]]
            if len(nums) != d_x + d_y:
                raise SchemaError("instance line has the wrong arity")
            members[gid].append(
                Instance(features=nums[:d_x], target=nums[d_x:], sequence_id=seq)
            )
        else:
            raise SchemaError(f"unknown record kind {kind!r}")

    granules = []
    for gid in order:
        lo, hi, mean = boxes[gid]
        if not members[gid]:
            raise SchemaError(f"granule {gid} has no instances")
        granules.append(
            Granule(
                box=BoundingBox(lo, hi),
                members=tuple(members[gid]),
                mean_target=mean,
                granule_id=gid,
            )
        )
    model = RecentModel(
        recent_granules=tuple(granules),
        recent_data=tuple(collect_recent_data(granules)),
        temporal_dim=temporal_dim,
        model_clock=model_clock,
    )
    return RegressorState(
        granulation=GranulationParams(
            avar_ratio_threshold=avar_threshold, min_granule_size=min_granule_size
        ),
        leaf_capacity=leaf_capacity,
        max_fanout=max_fanout,
        temporal_dim=temporal_dim,
        forget=forget,
        model=model,
        batch_counter=batch_counter,
    )

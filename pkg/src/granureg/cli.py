"""Command-line front end: generate streams, run evaluations, query saved models.

Subcommands
-----------
generate   write a seeded synthetic stream to CSV
run        prequential evaluation over a CSV or generated stream
query      answer one point query from a model saved with ``run --save-model``

``run`` accepts a flat key=value config file via --config; command-line flags
override file values. Reports are byte-reproducible for a fixed config and
seed; wall-clock timing columns are only written with --include-timings.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .datasets import (
    StreamSchema,
    constant,
    gen_noise_param_varying,
    gen_noise_varying,
    gen_road_friction,
    read_csv_stream,
    write_csv,
)
from .evaluation import BatchPolicy, emit_report, run_prequential
from .exceptions import GranuregError
from .forgetting import predict_current
from .granulation import GranulationParams
from .model_io import load_model, save_model

__all__ = ["main", "entry_point"]

SCENARIOS = ("noise", "drift", "friction")


def _generate_stream(args):
    if args.scenario == "noise":
        return gen_noise_varying(args.n, args.seed)
    if args.scenario == "drift":
        schedule = (
            (0.0, constant(args.mean_before)),
            (args.breakpoint, constant(args.mean_after)),
        )
        profile = ((0.0, args.sigma),)
        return gen_noise_param_varying(args.n, args.seed, schedule, profile)
    if args.scenario == "friction":
        return gen_road_friction(args.n, args.seed, sigma=args.sigma)
    raise GranuregError(f"unknown scenario {args.scenario!r}")


def _scenario_schema(scenario: str) -> StreamSchema:
    if scenario == "friction":
        features = ("east", "north")
    else:
        features = ("x",)
    return StreamSchema(
        feature_columns=features,
        target_columns=("y",),
        time_column="t",
        temporal_dim=0,
    )


def _cmd_generate(args) -> int:
    stream = _generate_stream(args)
    write_csv(stream, args.out, _scenario_schema(args.scenario))
    print(f"wrote {len(stream)} instances to {args.out}")
    return 0


def _parse_config_file(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise GranuregError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip().strip("\"'")
    return values


_CONFIG_KEYS = {
    "input": str,
    "generate": str,
    "n": int,
    "seed": int,
    "sigma": float,
    "breakpoint": float,
    "mean_before": float,
    "mean_after": float,
    "time_col": str,
    "feature_cols": str,
    "target_cols": str,
    "temporal_dim": int,
    "batch_count": int,
    "batch_time": float,
    "leaf_capacity": int,
    "max_fanout": int,
    "avar_threshold": float,
    "min_granule_size": int,
    "checkpoint_every": int,
    "ablation_no_forget": lambda v: v.lower() in ("1", "true", "yes"),
    "include_timings": lambda v: v.lower() in ("1", "true", "yes"),
    "save_model": str,
    "report": str,
    "format": str,
}


def _apply_config(args, argv: list[str]) -> None:
    if not args.config:
        return
    path = Path(args.config)
    if not path.exists():
        raise GranuregError(f"config file not found: {path}")
    file_values = _parse_config_file(path)
    unknown = set(file_values) - set(_CONFIG_KEYS)
    if unknown:
        raise GranuregError(f"unknown config keys: {sorted(unknown)}")
    # flags that were given explicitly win over the file
    explicit = {k for k in _CONFIG_KEYS if f"--{k.replace('_', '-')}" in argv}
    for key, value in file_values.items():
        if key not in explicit:
            setattr(args, key, _CONFIG_KEYS[key](value))


def _run_stream(args):
    if (args.input is None) == (args.generate is None):
        raise GranuregError("exactly one of --input or --generate is required")
    if args.generate is not None:
        if args.generate not in SCENARIOS:
            raise GranuregError(f"unknown scenario {args.generate!r}")
        args.scenario = args.generate
        return _generate_stream(args), None
    path = Path(args.input)
    if not path.exists():
        raise GranuregError(f"input file not found: {path}")
    schema = _input_schema(args, path)
    return read_csv_stream(path, schema), schema


def _input_schema(args, path: Path) -> StreamSchema:
    if args.feature_cols:
        features = tuple(c.strip() for c in args.feature_cols.split(",") if c.strip())
    else:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
        names = [c.strip() for c in header.split(",")]
        targets = {c.strip() for c in args.target_cols.split(",")}
        features = tuple(
            c for c in names if c != args.time_col and c not in targets
        )
    return StreamSchema(
        feature_columns=features,
        target_columns=tuple(c.strip() for c in args.target_cols.split(",")),
        time_column=args.time_col,
        temporal_dim=args.temporal_dim,
    )


def _cmd_run(args, argv: list[str]) -> int:
    _apply_config(args, argv)
    stream, _ = _run_stream(args)
    if args.batch_time is not None:
        policy = BatchPolicy(mode="time", time_threshold=args.batch_time)
    else:
        policy = BatchPolicy(mode="count", count_threshold=args.batch_count)
    params = GranulationParams(
        avar_ratio_threshold=args.avar_threshold,
        min_granule_size=args.min_granule_size,
    )

    report = run_prequential(
        iter(stream),
        policy,
        granulation=params,
        leaf_capacity=args.leaf_capacity,
        max_fanout=args.max_fanout,
        temporal_dim=args.temporal_dim,
        checkpoint_every=args.checkpoint_every,
        ablation_no_forget=args.ablation_no_forget,
    )

    if args.report:
        emit_report(
            report, args.report, format=args.format, include_timings=args.include_timings
        )
    if args.save_model:
        save_model(report.final_state, args.save_model)
    final = report.final
    print(
        "final_mae={} final_rmse={} eval_time_s={:.6f} max_model_size_bytes={}".format(
            final.mae, final.rmse, final.cumulative_eval_time_s,
            report.max_model_size_bytes,
        )
    )
    return 0


def _cmd_query(args) -> int:
    path = Path(args.model)
    if not path.exists():
        raise GranuregError(f"model file not found: {path}")
    state = load_model(path)
    try:
        point = np.asarray([float(v) for v in args.point.split(",")])
    except ValueError as exc:
        raise GranuregError(f"malformed query vector: {exc}") from exc
    predict_current(state, point)  # warm up
    t0 = time.perf_counter()
    prediction = predict_current(state, point)
    latency = time.perf_counter() - t0
    rendered = ",".join(repr(float(v)) for v in prediction)
    print(f"prediction={rendered} latency_s={latency:.9f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="granureg",
        description="Granule-based stream regression with iterative forgetting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic stream to CSV")
    gen.add_argument("--scenario", choices=SCENARIOS, default="noise")
    gen.add_argument("--n", type=int, default=100_000)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--sigma", type=float, default=0.3)
    gen.add_argument("--breakpoint", type=float, default=0.5)
    gen.add_argument("--mean-before", type=float, default=0.0)
    gen.add_argument("--mean-after", type=float, default=10.0)
    gen.add_argument("--out", required=True)

    run = sub.add_parser("run", help="prequential evaluation over a stream")
    run.add_argument("--config", help="flat key=value file; flags override it")
    run.add_argument("--input", help="CSV stream to evaluate")
    run.add_argument("--generate", help=f"generate a stream instead: {SCENARIOS}")
    run.add_argument("--n", type=int, default=100_000)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--sigma", type=float, default=0.3)
    run.add_argument("--breakpoint", type=float, default=0.5)
    run.add_argument("--mean-before", type=float, default=0.0)
    run.add_argument("--mean-after", type=float, default=10.0)
    run.add_argument("--time-col", default="t")
    run.add_argument("--feature-cols", default="",
                     help="comma-separated; default: all non-time non-target columns")
    run.add_argument("--target-cols", default="y")
    run.add_argument("--temporal-dim", type=int, default=0)
    run.add_argument("--batch-count", type=int, default=1000)
    run.add_argument("--batch-time", type=float, default=None)
    run.add_argument("--leaf-capacity", type=int, default=16)
    run.add_argument("--max-fanout", type=int, default=8)
    run.add_argument("--avar-threshold", type=float, default=1.0)
    run.add_argument("--min-granule-size", type=int, default=2)
    run.add_argument("--checkpoint-every", type=int, default=1000)
    run.add_argument("--ablation-no-forget", action="store_true")
    run.add_argument("--save-model", default=None)
    run.add_argument("--report", default=None)
    run.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    run.add_argument("--include-timings", action="store_true",
                     help="add wall-clock columns; breaks byte reproducibility")

    query = sub.add_parser("query", help="query a saved model")
    query.add_argument("--model", required=True)
    query.add_argument("--point", required=True, help="comma-separated feature vector")

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "run":
            return _cmd_run(args, argv)
        if args.command == "query":
            return _cmd_query(args)
        parser.error(f"unknown command {args.command!r}")
    except GranuregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()

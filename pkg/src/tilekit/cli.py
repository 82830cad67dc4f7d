"""Command-line front end: generate benchmark instances, solve matrices,
score predictions, run the full benchmark grid, and render report figures.

Exit codes: 0 success, 1 usage error, 2 data error, 3 generation infeasibility.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import io
from .core import (
    LikelihoodField,
    SolverParams,
    gaussian_likelihood_field,
    labels_from_tiling,
    select_tile_count,
)
from .evaluate import classification_error, hamming, relative_cost
from .icm import icm_restarts, run_icm
from .pca import run_pca_tiles
from .sumprod import run_sum_product, sum_product
from .synth import GenerationError, instance_basename, make_instance

USAGE_ERROR, DATA_ERROR, GENERATION_ERROR = 1, 2, 3

RESULT_COLUMNS = [
    "instance", "size", "tiles", "log_var", "replicate", "seed", "method",
    "t_selected", "hamming", "classification_error", "relative_cost", "error",
]
SUMMARY_COLUMNS = [
    "size", "tiles", "log_var", "method", "n",
    "mean_hamming", "mean_classification_error", "mean_relative_cost",
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, columns, rows, append=False):
    path = Path(path)
    fresh = not (append and path.exists() and path.stat().st_size > 0)
    with open(path, "a" if append else "w", encoding="utf-8", newline="\n") as fh:
        if fresh:
            fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def _solver_params(args) -> SolverParams:
    return SolverParams(
        max_iterations=args.max_iterations,
        restarts=args.restarts,
        rng_seed=args.seed,
    )


def _build_field(matrix, args) -> LikelihoodField:
    return gaussian_likelihood_field(matrix, args.tile_mean, args.bg_mean, args.sigma)


def _solve_one(method, data, field, tiles, max_tiles, params):
    """Run one solver; returns (tiling, warnings)."""
    warnings = []
    if method == "sp":
        if tiles == "auto":
            tiling = select_tile_count(run_sum_product, field, max_tiles, params)
        else:
            run = sum_product(field, int(tiles), params)
            tiling = run.tiling
            if not run.converged:
                warnings.append(f"sum-product did not converge within {params.max_iterations} sweeps")
    elif method == "icm":
        if tiles == "auto":
            tiling = select_tile_count(run_icm, field, max_tiles, params)
        else:
            tiling = run_icm(field, int(tiles), params)
    elif method == "pca":
        if tiles == "auto":
            def pca_solver(f, t, p):
                return run_pca_tiles(data, t, f)
            tiling = select_tile_count(pca_solver, field, max_tiles, params)
        else:
            tiling = run_pca_tiles(data, int(tiles), field)
    else:
        raise ValueError(f"unknown method {method!r}")
    return tiling, warnings


def cmd_generate(args) -> int:
    try:
        instance = make_instance(
            args.size, args.tiles, args.log_var, args.seed,
            area_fraction=args.area_fraction,
            tile_value=args.tile_value, bg_value=args.bg_value,
        )
    except GenerationError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return GENERATION_ERROR
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return USAGE_ERROR
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = instance_basename(args.size, args.tiles, args.log_var, args.seed)
    io.write_matrix_csv(out / f"{stem}.clean.csv", instance.clean)
    io.write_matrix_csv(out / f"{stem}.noisy.csv", instance.noisy)
    io.write_tiling_json(out / f"{stem}.truth.json", instance.tiling)
    print(out / stem)
    return 0


def cmd_solve(args) -> int:
    if args.tiles != "auto":
        try:
            int(args.tiles)
        except ValueError:
            print(f"--tiles must be an integer or 'auto', got {args.tiles!r}", file=sys.stderr)
            return USAGE_ERROR
    try:
        data = io.read_matrix_csv(args.matrix)
    except (OSError, io.DataFormatError) as exc:
        print(f"cannot read {args.matrix}: {exc}", file=sys.stderr)
        return DATA_ERROR
    field = _build_field(data, args)
    params = _solver_params(args)

    trace: list | None = [] if args.trace else None
    if args.trace and args.method == "sp" and args.tiles != "auto":
        run = sum_product(field, int(args.tiles), params)
        tiling, warnings = run.tiling, []
        if not run.converged:
            warnings.append(f"sum-product did not converge within {params.max_iterations} sweeps")
        rows = [
            {"sweep": k + 1, "abs_change": ab, "reference": ref}
            for k, (ab, ref) in enumerate(run.residuals)
        ]
        _write_csv(args.trace, ["sweep", "abs_change", "reference"], rows)
    elif args.trace and args.method == "icm" and args.tiles != "auto":
        from .core import log_joint_score

        results = icm_restarts(field, int(args.tiles), params, trace=trace)
        best = max(results, key=lambda t: log_joint_score(t, field))
        tiling, warnings = best, []
        rows = [{"restart": r, "sweep": s, "joint_score": v} for r, s, v in trace]
        _write_csv(args.trace, ["restart", "sweep", "joint_score"], rows)
    else:
        try:
            tiling, warnings = _solve_one(args.method, data, field, args.tiles, args.max_tiles, params)
        except ValueError as exc:
            print(str(exc), file=sys.stderr)
            return DATA_ERROR

    prefix = Path(args.output) if args.output else Path(args.matrix).with_suffix("")
    extra = {"method": args.method, "tiles_requested": args.tiles}
    if warnings:
        extra["warnings"] = warnings
    io.write_tiling_json(f"{prefix}.tiling.json", tiling, **extra)
    io.write_labels_csv(f"{prefix}.labels.csv", labels_from_tiling(tiling))
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"{prefix}.tiling.json")
    return 0


def cmd_eval(args) -> int:
    try:
        truth = io.read_tiling_json(args.truth)
        pred = io.read_tiling_json(args.pred)
        data = io.read_matrix_csv(args.matrix)
    except (OSError, io.DataFormatError) as exc:
        print(str(exc), file=sys.stderr)
        return DATA_ERROR
    if (truth.n_rows, truth.n_cols) != (pred.n_rows, pred.n_cols) or truth.n_rows != data.shape[0] or truth.n_cols != data.shape[1]:
        print("dimension mismatch between truth, prediction, and matrix", file=sys.stderr)
        return DATA_ERROR
    field = _build_field(data, args)
    t_labels = labels_from_tiling(truth)
    p_labels = labels_from_tiling(pred)
    row = {
        "instance": args.instance,
        "method": args.method,
        "t_selected": pred.tile_count,
        "hamming": hamming(t_labels, p_labels),
        "classification_error": classification_error(t_labels, p_labels),
        "relative_cost": relative_cost(pred, truth, field),
    }
    columns = ["instance", "method", "t_selected", "hamming", "classification_error", "relative_cost"]
    if args.output:
        _write_csv(args.output, columns, [row], append=args.append)
    else:
        print(",".join(columns))
        print(",".join(_fmt(row[c]) for c in columns))
    return 0


@dataclass
class BenchConfig:
    sizes: list[int]
    tile_counts: list[int]
    noise_log_variances: list[float]
    replicates: int
    methods: list[str]
    seed_base: int
    output_dir: str
    sigma: float = 0.5
    area_fraction: float = 0.04
    tile_selection: str = "fixed"  # or "auto"
    max_tiles: int = 10
    restarts: int = 5
    max_iterations: int = 200
    extras: dict = dc_field(default_factory=dict)


def parse_bench_config(path) -> BenchConfig:
    """Flat ``key = value`` text; lists are comma-separated."""
    values: dict[str, str] = {}
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise io.DataFormatError(f"{path}:{ln}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()

    def ints(key):
        return [int(tok) for tok in values[key].split(",") if tok.strip()]

    def floats(key):
        return [float(tok) for tok in values[key].split(",") if tok.strip()]

    try:
        config = BenchConfig(
            sizes=ints("sizes"),
            tile_counts=ints("tile_counts"),
            noise_log_variances=floats("noise_log_variances"),
            replicates=int(values["replicates"]),
            methods=[tok.strip() for tok in values["methods"].split(",") if tok.strip()],
            seed_base=int(values["seed_base"]),
            output_dir=values["output_dir"],
        )
    except KeyError as exc:
        raise io.DataFormatError(f"{path}: missing config key {exc}") from exc
    for key in ("sigma", "area_fraction"):
        if key in values:
            setattr(config, key, float(values[key]))
    for key in ("max_tiles", "restarts", "max_iterations"):
        if key in values:
            setattr(config, key, int(values[key]))
    if "tile_selection" in values:
        config.tile_selection = values["tile_selection"]
    if not config.sizes or not config.tile_counts or not config.noise_log_variances or not config.methods:
        raise io.DataFormatError(f"{path}: all grid lists must be non-empty")
    if config.replicates < 1:
        raise io.DataFormatError(f"{path}: replicates must be >= 1")
    unknown = set(config.methods) - {"sp", "icm", "pca"}
    if unknown:
        raise io.DataFormatError(f"{path}: unknown methods {sorted(unknown)}")
    if config.tile_selection not in ("fixed", "auto"):
        raise io.DataFormatError(f"{path}: tile_selection must be 'fixed' or 'auto'")
    return config


def _bench_instance(config: BenchConfig, index: int, size, tiles, log_var, rep):
    """All rows for one generated instance; exceptions land in the error column."""
    seed = config.seed_base + index
    stem = instance_basename(size, tiles, log_var, seed)
    base = {
        "instance": stem, "size": size, "tiles": tiles, "log_var": log_var,
        "replicate": rep, "seed": seed,
    }
    rows, timings = [], []
    try:
        instance = make_instance(size, tiles, log_var, seed, area_fraction=config.area_fraction)
        field = gaussian_likelihood_field(instance.noisy, 1.0, 0.0, config.sigma)
        truth_labels = labels_from_tiling(instance.tiling)
    except Exception as exc:
        for method in config.methods:
            rows.append({**base, "method": method, "t_selected": "", "hamming": "",
                         "classification_error": "", "relative_cost": "", "error": str(exc)})
        return rows, timings

    params = SolverParams(
        max_iterations=config.max_iterations, restarts=config.restarts, rng_seed=seed
    )
    requested = "auto" if config.tile_selection == "auto" else tiles
    for method in config.methods:
        started = time.perf_counter()
        try:
            tiling, _ = _solve_one(method, instance.noisy, field, requested, config.max_tiles, params)
            elapsed = time.perf_counter() - started
            pred_labels = labels_from_tiling(tiling)
            rows.append({
                **base, "method": method, "t_selected": tiling.tile_count,
                "hamming": hamming(truth_labels, pred_labels),
                "classification_error": classification_error(truth_labels, pred_labels),
                "relative_cost": relative_cost(tiling, instance.tiling, field),
                "error": "",
            })
        except Exception as exc:
            elapsed = time.perf_counter() - started
            rows.append({**base, "method": method, "t_selected": "", "hamming": "",
                         "classification_error": "", "relative_cost": "", "error": str(exc)})
        timings.append({"instance": stem, "method": method, "wall_time": elapsed})
    return rows, timings


def run_bench(config: BenchConfig) -> Path:
    grid = [
        (size, tiles, log_var, rep)
        for size in config.sizes
        for tiles in config.tile_counts
        for log_var in config.noise_log_variances
        for rep in range(config.replicates)
    ]
    workers = max(1, int(os.environ.get("MTA_THREADS", str(os.cpu_count() or 1))))
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    results: list[tuple[int, list, list]] = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_bench_instance, config, idx, *setting)
            for idx, setting in enumerate(grid)
        ]
        for idx, future in enumerate(futures):
            rows, timings = future.result()
            results.append((idx, rows, timings))
    # Rows are gathered and ordered by grid index, so the worker count can
    # never change the output bytes.
    results.sort(key=lambda item: item[0])
    all_rows = [row for _, rows, _ in results for row in rows]
    all_timings = [t for _, _, timings in results for t in timings]

    _write_csv(out_dir / "results.csv", RESULT_COLUMNS, all_rows)
    _write_csv(out_dir / "timings.csv", ["instance", "method", "wall_time"], all_timings)

    groups: dict[tuple, list[dict]] = {}
    for row in all_rows:
        if row["error"]:
            continue
        groups.setdefault((row["size"], row["tiles"], row["log_var"], row["method"]), []).append(row)
    summary = []
    for (size, tiles, log_var, method), rows in sorted(
        groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2], kv[0][3])
    ):
        summary.append({
            "size": size, "tiles": tiles, "log_var": log_var, "method": method,
            "n": len(rows),
            "mean_hamming": float(np.mean([r["hamming"] for r in rows])),
            "mean_classification_error": float(np.mean([r["classification_error"] for r in rows])),
            "mean_relative_cost": float(np.mean([r["relative_cost"] for r in rows])),
        })
    _write_csv(out_dir / "summary.csv", SUMMARY_COLUMNS, summary)
    return out_dir / "summary.csv"


def cmd_bench(args) -> int:
    try:
        config = parse_bench_config(args.config)
    except (OSError, io.DataFormatError) as exc:
        print(str(exc), file=sys.stderr)
        return DATA_ERROR
    summary = run_bench(config)
    print(summary)
    return 0


def cmd_report(args) -> int:
    from . import report

    try:
        rows = report.load_summary(args.summary)
    except (OSError, ValueError, KeyError) as exc:
        print(f"cannot load summary: {exc}", file=sys.stderr)
        return DATA_ERROR
    paths = report.render_figures(rows, args.output_dir)
    for path in paths:
        print(path)
    return 0


def _add_field_flags(parser):
    parser.add_argument("--sigma", type=float, default=0.5,
                        help="likelihood std dev (default 0.5 regardless of true noise)")
    parser.add_argument("--tile-mean", type=float, default=1.0)
    parser.add_argument("--bg-mean", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tilekit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic benchmark instance")
    gen.add_argument("--size", type=int, required=True)
    gen.add_argument("--tiles", type=int, required=True)
    gen.add_argument("--log-var", type=float, required=True, help="log10 of the noise variance")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--area-fraction", type=float, default=0.04)
    gen.add_argument("--tile-value", type=float, default=1.0)
    gen.add_argument("--bg-value", type=float, default=0.0)
    gen.add_argument("--output-dir", default=".")
    gen.set_defaults(func=cmd_generate)

    solve = sub.add_parser("solve", help="decompose a matrix into tiles")
    solve.add_argument("matrix", help="CSV matrix to analyze")
    solve.add_argument("--method", choices=("sp", "icm", "pca"), required=True)
    solve.add_argument("--tiles", default="auto", help="tile budget, or 'auto' for model selection")
    solve.add_argument("--max-tiles", type=int, default=10, help="budget cap when --tiles auto")
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--max-iterations", type=int, default=200)
    solve.add_argument("--restarts", type=int, default=5)
    solve.add_argument("--output", help="output prefix (default: the matrix path stem)")
    solve.add_argument("--trace", help="write a per-sweep diagnostic trace CSV here")
    _add_field_flags(solve)
    solve.set_defaults(func=cmd_solve)

    ev = sub.add_parser("eval", help="score a prediction against ground truth")
    ev.add_argument("--truth", required=True)
    ev.add_argument("--pred", required=True)
    ev.add_argument("--matrix", required=True, help="the noisy matrix the prediction was made from")
    ev.add_argument("--instance", default="")
    ev.add_argument("--method", default="")
    ev.add_argument("--output", help="append/write the CSV row here instead of stdout")
    ev.add_argument("--append", action="store_true", help="append without duplicating the header")
    _add_field_flags(ev)
    ev.set_defaults(func=cmd_eval)

    bench = sub.add_parser("bench", help="run a full benchmark grid from a config file")
    bench.add_argument("config")
    bench.set_defaults(func=cmd_bench)

    rep = sub.add_parser("report", help="render figures from a bench summary CSV")
    rep.add_argument("--summary", required=True)
    rep.add_argument("--output-dir", default="figures")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

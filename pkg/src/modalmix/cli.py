"""Command-line interface.

Verbs: ``gen`` (sample a named scenario), ``fit`` (EM + BIC selection over a
G range), ``cluster`` (label points with a saved model), ``eval`` (adjusted
Rand index of two label files), ``grid`` (density on a regular 2-D grid).

Every command that writes outputs also writes ``<out>.manifest.json``
recording the command, inputs (with content hashes), outputs, configuration,
seed, backend, and wall-clock duration.  Commands are deterministic given
the same inputs and seed, so re-running a manifest's command line reproduces
its outputs byte for byte.

Exit codes: 0 success, 2 parse/argument/file errors, 3 dimension or length
mismatches, 4 degenerate data, 5 output written but some trajectories
unresolved, 1 unexpected failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

import modalmix
from modalmix import _backend, clustering, datagen, em, meanshift
from modalmix.errors import (
    DegenerateData,
    DimensionMismatch,
    InvalidArgument,
    LengthMismatch,
    NotPositiveDefinite,
    UnknownScenario,
    UnresolvedTrajectory,
)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_DIMENSION = 3
EXIT_DEGENERATE = 4
EXIT_UNRESOLVED = 5


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(out: Path, command: str, inputs, outputs, config: dict,
                    seed, started: float) -> None:
    manifest = {
        "command": command,
        "inputs": [{"path": str(p), "sha256": _sha256(Path(p))} for p in inputs],
        "outputs": [str(p) for p in outputs],
        "config": config,
        "seed": seed,
        "backend": _backend.BACKEND,
        "version": modalmix.__version__,
        "duration_seconds": round(time.perf_counter() - started, 6),
    }
    with open(out.parent / (out.name + ".manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _derived(out: Path, suffix: str) -> Path:
    return out.parent / (out.stem + suffix)


def cmd_gen(args) -> int:
    started = time.perf_counter()
    scenario = datagen.scenario_by_name(args.scenario)
    if args.count < 1:
        raise InvalidArgument("-n must be at least 1")
    points, labels = scenario.sample(args.count, np.random.default_rng(args.seed))
    out = Path(args.out)
    labels_path = _derived(out, "_labels.csv")
    datagen.write_points_csv(out, points)
    clustering.write_labels_csv(labels_path, labels)
    _write_manifest(
        out, "gen", [], [out, labels_path],
        {"scenario": args.scenario, "count": args.count}, args.seed, started,
    )
    print(f"wrote {args.count} points to {out} (labels: {labels_path})")
    return EXIT_OK


def cmd_fit(args) -> int:
    started = time.perf_counter()
    if args.gmin < 1 or args.gmax < args.gmin:
        raise InvalidArgument("need 1 <= gmin <= gmax")
    X = datagen.read_points_csv(args.data)
    cfg = em.FitConfig(restarts=args.restarts, rel_tol=args.tol, rng_seed=args.seed)
    selection = em.select_model(X, range(args.gmin, args.gmax + 1), cfg)
    out = Path(args.out)
    selection.best.save_json(out)
    table_path = _derived(out, "_bic.csv")
    with open(table_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["n_components", "bic", "log_likelihood", "converged", "iterations", "error"]
        )
        for row in selection.table:
            writer.writerow([
                row.n_components, repr(row.bic), repr(row.log_likelihood),
                int(row.converged), row.iterations, row.error or "",
            ])
    _write_manifest(
        out, "fit", [args.data], [out, table_path],
        {
            "gmin": args.gmin, "gmax": args.gmax, "restarts": cfg.restarts,
            "rel_tol": cfg.rel_tol, "max_iterations": cfg.max_iterations,
            "covariance_floor": cfg.covariance_floor,
        },
        args.seed, started,
    )
    best = selection.best
    print(
        f"selected G={best.mixture.n_components} "
        f"(bic={best.bic:.3f}, loglik={best.log_likelihood:.3f}) -> {out}"
    )
    return EXIT_OK


def cmd_cluster(args) -> int:
    started = time.perf_counter()
    X = datagen.read_points_csv(args.data)
    fit = em.FitResult.load_json(args.model)
    ms_cfg = meanshift.MeanShiftConfig(step_tol=args.tol)
    mode_set = None
    merge_map = None
    if args.method == "component":
        result = clustering.component_assign(fit, X)
    elif args.method == "merge":
        result, mode_set, merge_map = clustering.merge_components(fit, X, ms_cfg)
    else:
        result, mode_set = clustering.modal_assign(fit, X, ms_cfg)
    out = Path(args.out)
    clustering.write_labels_csv(out, result.labels)
    sidecar_path = _derived(out, "_clusters.json")
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(clustering.sidecar_dict(result, mode_set, merge_map), fh, indent=2)
        fh.write("\n")
    _write_manifest(
        out, "cluster", [args.data, args.model], [out, sidecar_path],
        {
            "method": args.method, "step_tol": ms_cfg.step_tol,
            "max_iterations": ms_cfg.max_iterations,
            "mode_merge_tol": ms_cfg.mode_merge_tol,
        },
        None, started,
    )
    n_flagged = int(np.count_nonzero(result.flagged))
    print(
        f"labeled {result.n_points} points into {result.n_clusters} clusters "
        f"({args.method}) -> {out}"
    )
    if n_flagged:
        print(f"warning: {n_flagged} points flagged from unresolved trajectories",
              file=sys.stderr)
        return EXIT_UNRESOLVED
    return EXIT_OK


def cmd_eval(args) -> int:
    started = time.perf_counter()
    a = clustering.read_labels_csv(args.labels_a)
    b = clustering.read_labels_csv(args.labels_b)
    ari = clustering.adjusted_rand_index(a, b)
    print(f"ari {ari:.6f}")
    if args.out:
        out = Path(args.out)
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "adjusted_rand_index": ari,
                    "n_points": int(a.shape[0]),
                    "n_clusters_a": int(np.unique(a).shape[0]),
                    "n_clusters_b": int(np.unique(b).shape[0]),
                },
                fh, indent=2,
            )
            fh.write("\n")
        _write_manifest(out, "eval", [args.labels_a, args.labels_b], [out], {},
                        None, started)
    return EXIT_OK


def cmd_grid(args) -> int:
    started = time.perf_counter()
    fit = em.FitResult.load_json(args.model)
    mixture = fit.mixture
    if mixture.dimension != 2:
        raise DimensionMismatch(
            f"grid needs a 2-dimensional model, got d={mixture.dimension}"
        )
    if args.res < 1:
        raise InvalidArgument("--res must be at least 1")
    xs = np.linspace(args.xmin, args.xmax, args.res)
    ys = np.linspace(args.ymin, args.ymax, args.res)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    dens = mixture.density(pts)
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "density"])
        for (x, y), f in zip(pts, dens):
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(f))])
    _write_manifest(
        out, "grid", [args.model], [out],
        {"xmin": args.xmin, "xmax": args.xmax, "ymin": args.ymin,
         "ymax": args.ymax, "res": args.res},
        None, started,
    )
    print(f"wrote {pts.shape[0]} density values to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modalmix",
        description="Gaussian mixture fitting with mode-based merging and modal clustering",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("gen", help="sample a named synthetic scenario")
    p.add_argument("scenario", choices=datagen.scenario_names())
    p.add_argument("-n", "--count", type=int, required=True, help="points to draw")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output data CSV path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fit", help="fit mixtures over a G range and keep the best BIC")
    p.add_argument("data", help="input points CSV")
    p.add_argument("--gmin", type=int, default=1)
    p.add_argument("--gmax", type=int, default=10)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-8,
                   help="relative log-likelihood stopping tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output model JSON path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cluster", help="label points with a fitted model")
    p.add_argument("data", help="input points CSV")
    p.add_argument("--model", required=True, help="model JSON from fit")
    p.add_argument("--method", choices=["component", "merge", "modal"],
                   default="merge")
    p.add_argument("--tol", type=float, default=1e-8,
                   help="ascent step tolerance (relative to data scale)")
    p.add_argument("--out", required=True, help="output labels CSV path")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("eval", help="adjusted Rand index of two label files")
    p.add_argument("labels_a")
    p.add_argument("labels_b")
    p.add_argument("--out", help="optional JSON result path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="evaluate model density on a regular grid")
    p.add_argument("--model", required=True, help="model JSON from fit")
    p.add_argument("--xmin", type=float, required=True)
    p.add_argument("--xmax", type=float, required=True)
    p.add_argument("--ymin", type=float, required=True)
    p.add_argument("--ymax", type=float, required=True)
    p.add_argument("--res", type=int, default=100, help="points per axis")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_grid)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InvalidArgument, UnknownScenario) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (json.JSONDecodeError, ValueError) as exc:
        if isinstance(exc, (DimensionMismatch, LengthMismatch)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DIMENSION
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateData, NotPositiveDefinite) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except UnresolvedTrajectory as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNRESOLVED


if __name__ == "__main__":
    sys.exit(main())

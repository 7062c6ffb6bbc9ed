"""Command-line entry point: ``contour-bench <command>``.

Exit codes: 0 success, 1 data errors, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from contour_bench import __version__
from contour_bench.baseline import BaselineConfig, predict_gradient
from contour_bench.dataset import (
    ManifestError,
    build_manifest,
    load_class_table,
    read_manifest,
    render_stats,
    stats,
    validate_manifest,
)
from contour_bench.metrics import evaluate
from contour_bench.raster import RasterError, load_png, save_png

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2
WORKERS_ENV = "CONTOUR_BENCH_WORKERS"


class UsageError(Exception):
    pass


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"{WORKERS_ENV}={env!r} is not an integer")
        if n < 1:
            raise UsageError(f"{WORKERS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


def prediction_name(image_path: str, class_name: str) -> str:
    return f"{Path(image_path).stem}__{class_name}.png"


def format_score(x: float) -> str:
    """Three decimals, leading zero dropped: 0.772 -> '.772'."""
    s = f"{x:.3f}"
    return s[1:] if s.startswith("0") else s


def _odd_int(value: str) -> int:
    n = int(value)
    if n < 1 or n % 2 == 0:
        raise argparse.ArgumentTypeError(f"must be an odd integer >= 1, got {value}")
    return n


def _positive_float(value: str) -> float:
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return x


def _workers_arg(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def cmd_convert(args) -> int:
    for name in ("images", "masks"):
        if not Path(getattr(args, name)).is_dir():
            raise UsageError(f"--{name}: {getattr(args, name)} is not a directory")
    try:
        table = load_class_table(args.classes, args.source)
    except (OSError, ManifestError, json.JSONDecodeError) as exc:
        raise UsageError(f"--classes: {exc}")
    overrides = None
    if args.prompts:
        try:
            overrides = json.loads(Path(args.prompts).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--prompts: {exc}")
    result = build_manifest(
        args.images, args.masks, table, args.out, args.connectivity,
        source_dataset=args.source, split=args.split, ignore_index=args.ignore_index,
        prompt_overrides=overrides, workers=args.workers,
    )
    print(f"records written: {len(result.manifest.records)}")
    print(f"pairs skipped:   {result.skipped}")
    print(f"errors:          {len(result.errors)}")
    for err in result.errors:
        print(f"  error: {err}", file=sys.stderr)
    print(f"manifest: {result.path}")
    return EXIT_DATA if result.errors else EXIT_OK


def cmd_stats(args) -> int:
    try:
        manifest = read_manifest(args.manifest)
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    report = stats(manifest)
    print(render_stats(report))
    if args.json:
        Path(args.json).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        violations = validate_manifest(args.manifest)
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    for v in violations:
        print(v)
    print(f"{len(violations)} violation(s)")
    return EXIT_DATA if violations else EXIT_OK


def cmd_predict_baseline(args) -> int:
    try:
        manifest = read_manifest(args.manifest)
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    cfg = BaselineConfig(args.blur_radius, args.normalize, args.percentile)
    root = Path(args.manifest).parent
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cache: dict[str, object] = {}
    errors = 0
    for rec in manifest.records:
        if rec.image_path not in cache:
            try:
                with Image.open(root / rec.image_path) as img:
                    cache.clear()
                    cache[rec.image_path] = predict_gradient(np.asarray(img), cfg)
            except OSError as exc:
                print(f"error: {rec.image_path}: {exc}", file=sys.stderr)
                errors += 1
                continue
        save_png(cache[rec.image_path], out / prediction_name(rec.image_path, rec.class_name))
    print(f"predictions written to {out}")
    return EXIT_DATA if errors else EXIT_OK


def _report_row(report, k: int) -> str:
    return (f"{'ODS':>6} {'OIS':>6} {f'LineIoU@{k}':>10}\n"
            f"{format_score(report.ods_f):>6} {format_score(report.ois_f):>6} "
            f"{format_score(report.line_iou):>10}")


def load_eval_pairs(manifest_path, predictions_dir):
    """(probability maps, GT contours, missing prediction names) in manifest order."""
    manifest = read_manifest(manifest_path)
    root = Path(manifest_path).parent
    pred_dir = Path(predictions_dir)
    preds, gts, missing = [], [], []
    for rec in manifest.records:
        name = prediction_name(rec.image_path, rec.class_name)
        if not (pred_dir / name).is_file():
            missing.append(name)
            continue
        preds.append(load_png(pred_dir / name, "prob"))
        gts.append(load_png(root / rec.contour_path, "contour"))
    return preds, gts, missing


def cmd_eval(args) -> int:
    try:
        preds, gts, missing = load_eval_pairs(args.manifest, args.predictions)
    except (ManifestError, RasterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if missing:
        for name in missing:
            print(f"missing prediction: {name}", file=sys.stderr)
        return EXIT_DATA
    if not preds:
        print("error: manifest has no records", file=sys.stderr)
        return EXIT_DATA

    modes = {"off": [False], "on": [True], "both": [False, True]}[args.thinning]
    reports = []
    for thinning in modes:
        try:
            report = evaluate(
                preds, gts, d_max=args.d_max, k_thresholds=args.thresholds,
                iou_kernel=args.iou_kernel, iou_kernel_kind=args.iou_kernel_kind,
                thinning=thinning, loose=args.loose, side=args.side, workers=args.workers,
            )
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DATA
        reports.append(report)
        if len(modes) > 1:
            print(f"thinning {'on' if thinning else 'off'}:")
        print(_report_row(report, args.iou_kernel))

    if len(reports) == 1:
        text = reports[0].to_json()
    else:
        text = json.dumps({"reports": [r.to_dict() for r in reports]}, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contour-bench",
        description="Semantic contour dataset construction and ODS/OIS/LineIoU evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_workers(p):
        p.add_argument("--workers", type=_workers_arg, default=None,
                       help=f"worker processes (default: ${WORKERS_ENV} or CPU count)")

    p = sub.add_parser("convert", help="masks -> contour PNGs + triplet manifest")
    p.add_argument("--images", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--classes", required=True, help="JSON list of {index, name}")
    p.add_argument("--out", required=True)
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=4)
    p.add_argument("--source", default="custom", help="source dataset tag")
    p.add_argument("--split", choices=("train", "val", "test"), default="train")
    p.add_argument("--ignore-index", type=int, default=None)
    p.add_argument("--prompts", default=None,
                   help="JSON {image_stem: text | {class_name: text}} prompt overrides")
    add_workers(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("stats", help="dataset composition table")
    p.add_argument("manifest")
    p.add_argument("--json", default=None, help="also write the report as JSON")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("validate", help="check a manifest for violations")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("predict-baseline", help="gradient-magnitude contour predictions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--blur-radius", type=int, default=1)
    p.add_argument("--normalize", choices=("global-max", "percentile"), default="global-max")
    p.add_argument("--percentile", type=float, default=99.0)
    p.set_defaults(func=cmd_predict_baseline)

    p = sub.add_parser("eval", help="score predictions against manifest contours")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--output", default=None, help="report JSON path")
    p.add_argument("--d-max", type=_positive_float, default=0.0075)
    p.add_argument("--side", choices=("max", "min", "diag"), default="max",
                   help="image size S used for the tolerance (default: longer side)")
    p.add_argument("--thresholds", type=int, default=51)
    p.add_argument("--iou-kernel", type=_odd_int, default=3)
    p.add_argument("--iou-kernel-kind", choices=("square", "disk"), default="square")
    p.add_argument("--thinning", choices=("off", "on", "both"), default="off")
    p.add_argument("--loose", action="store_true",
                   help="existence test instead of one-to-one matching (comparison only)")
    add_workers(p)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if hasattr(args, "workers") and args.workers is None:
            args.workers = default_workers()
        if getattr(args, "thresholds", 2) < 2:
            raise UsageError("--thresholds must be >= 2")
        if getattr(args, "blur_radius", 0) < 0:
            raise UsageError("--blur-radius must be >= 0")
        if getattr(args, "normalize", None) == "percentile" and not 50 < args.percentile <= 100:
            raise UsageError("--percentile must lie in (50, 100]")
        return args.func(args)
    except UsageError as exc:
        print(f"contour-bench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

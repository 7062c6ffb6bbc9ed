"""Image-text-contour triplet manifests built from segmentation datasets.

Layout written by :func:`build_manifest`::

    out_dir/manifest.jsonl                       one TripletRecord per line
    out_dir/manifest.meta.json                   class table + build parameters
    out_dir/<source>/<class_name>/<stem>.png     8-bit contour maps

Paths inside records are POSIX paths relative to ``out_dir``.
"""

from __future__ import annotations

import json
import logging
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from PIL import Image

from contour_bench import __version__
from contour_bench.m2c import ClassSpec, mask_to_contour
from contour_bench.raster import RasterError, SegMask, load_png, save_png

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"
META_NAME = "manifest.meta.json"
SPLITS = ("train", "val", "test")
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp")

# plural forms for names where appending "s" reads wrong
PLURAL_OVERRIDES = {
    "grass": "grass",
    "water": "water",
    "agriculture": "agricultural land",
    "vegetation": "vegetation",
    "low vegetation": "low vegetation",
}

PathLike = Union[str, os.PathLike]


class ManifestError(ValueError):
    pass


def prompt_for(class_name: str, overrides: Optional[dict] = PLURAL_OVERRIDES) -> str:
    if not class_name:
        raise ValueError("class name must be non-empty")
    if overrides and class_name in overrides:
        return f"Edge of all {overrides[class_name]}"
    return f"Edge of all {class_name}s"


@dataclass(frozen=True)
class TripletRecord:
    image_path: str
    prompt: str
    class_name: str
    class_index: int
    contour_path: str
    source_dataset: str
    split: str
    prompt_override: bool = False

    def to_json(self) -> str:
        d = asdict(self)
        if not self.prompt_override:
            del d["prompt_override"]
        return json.dumps(d, ensure_ascii=False)


@dataclass
class Manifest:
    records: list[TripletRecord]
    class_table: list[ClassSpec]
    created_with: dict = field(default_factory=dict)


@dataclass
class BuildResult:
    manifest: Manifest
    path: Path
    errors: list[str]
    skipped: int


def load_class_table(path: PathLike, source_dataset: str = "") -> list[ClassSpec]:
    """Read a JSON list of ``{"index": int, "name": str}`` objects."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list) or not raw:
        raise ManifestError(f"{path}: class table must be a non-empty JSON list")
    table = []
    for entry in raw:
        try:
            table.append(ClassSpec(int(entry["index"]), str(entry["name"]),
                                   str(entry.get("source_dataset", source_dataset))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"{path}: bad class entry {entry!r} ({exc})") from exc
    _check_class_table(table)
    return table


def _check_class_table(table: Sequence[ClassSpec]) -> None:
    idx = [c.index for c in table]
    if len(set(idx)) != len(idx):
        raise ManifestError("duplicate class index in class table")
    names = [c.name for c in table]
    if len(set(names)) != len(names):
        raise ManifestError("duplicate class name in class table")


def _safe(name: str) -> str:
    return name.replace("/", "_").replace("\\", "_")


def contour_relpath(source: str, class_name: str, stem: str) -> str:
    return f"{_safe(source)}/{_safe(class_name)}/{stem}.png"


def _rel(path: Path, start: Path) -> str:
    return Path(os.path.relpath(path.resolve(), start.resolve())).as_posix()


def find_images(images_dir: PathLike) -> list[Path]:
    return sorted((p for p in Path(images_dir).iterdir()
                   if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES),
                  key=lambda p: (p.stem, p.name))


def _convert_one(image: Path, mask_path: Path, table: Sequence[ClassSpec], out_dir: Path,
                 source: str, connectivity: int, ignore_index: Optional[int]):
    """Write the contour PNGs for one image; returns (written, skipped) or raises."""
    mask = load_png(mask_path, "mask")
    if ignore_index is not None:
        mask = SegMask(mask.labels, ignore_index=ignore_index)
    with Image.open(image) as img:
        if img.size != (mask.width, mask.height):
            raise RasterError(f"{image.name}: image is {img.size[0]}x{img.size[1]}, "
                              f"mask is {mask.width}x{mask.height}")
    present = set(np.unique(mask.labels).tolist())
    written, skipped = [], 0
    for spec in table:
        if spec.index not in present:
            skipped += 1
            continue
        contour = mask_to_contour(mask, spec.index, connectivity)
        rel = contour_relpath(source, spec.name, image.stem)
        dest = out_dir / rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        save_png(contour, dest)
        written.append((spec, rel))
    return written, skipped


def _convert_job(args):
    try:
        return _convert_one(*args), None
    except (OSError, ValueError) as exc:
        return None, f"{args[0].name}: {exc}"


def _override_for(overrides: Optional[dict], stem: str, class_name: str) -> Optional[str]:
    if not overrides or stem not in overrides:
        return None
    entry = overrides[stem]
    if isinstance(entry, str):
        return entry
    return entry.get(class_name)


def build_manifest(images_dir: PathLike, masks_dir: PathLike, class_table: Sequence[ClassSpec],
                   out_dir: PathLike, connectivity: int = 4, *, source_dataset: str = "custom",
                   split: str = "train", ignore_index: Optional[int] = None,
                   prompt_overrides: Optional[dict] = None, workers: int = 1) -> BuildResult:
    """Convert every (image, class) pair with foreground into a triplet record.

    Per-image failures (missing or unreadable mask, size mismatch) are collected
    in ``errors``; the remaining images are still converted.
    """
    if not class_table:
        raise ValueError("class table must be non-empty")
    if split not in SPLITS:
        raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    table = sorted(class_table, key=lambda c: c.index)
    _check_class_table(table)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    masks = Path(masks_dir)

    errors: list[str] = []
    jobs = []
    for image in find_images(images_dir):
        mask_path = masks / f"{image.stem}.png"
        if not mask_path.is_file():
            errors.append(f"{image.name}: no mask {mask_path.name} in {masks}")
            continue
        jobs.append((image, mask_path, table, out, source_dataset, connectivity, ignore_index))

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_convert_job, jobs))
    else:
        results = [_convert_job(j) for j in jobs]

    records, skipped = [], 0
    for job, (res, err) in zip(jobs, results):
        image = job[0]
        if err is not None:
            errors.append(err)
            continue
        written, n_skip = res
        skipped += n_skip
        for spec, rel in written:
            override = _override_for(prompt_overrides, image.stem, spec.name)
            records.append(TripletRecord(
                image_path=_rel(image, out),
                prompt=override if override is not None else prompt_for(spec.name),
                class_name=spec.name,
                class_index=spec.index,
                contour_path=rel,
                source_dataset=source_dataset,
                split=split,
                prompt_override=override is not None,
            ))

    created_with = {
        "version": __version__,
        "connectivity": connectivity,
        "source_dataset": source_dataset,
        "split": split,
        "ignore_index": ignore_index,
    }
    manifest = Manifest(records, list(table), created_with)
    path = out / MANIFEST_NAME
    write_manifest(manifest, path)
    log.info("wrote %d records to %s (%d pairs skipped, %d errors)",
             len(records), path, skipped, len(errors))
    return BuildResult(manifest, path, errors, skipped)


def write_manifest(manifest: Manifest, path: PathLike) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in manifest.records:
            fh.write(rec.to_json() + "\n")
    meta = {
        "class_table": [asdict(c) for c in manifest.class_table],
        "created_with": manifest.created_with,
    }
    with open(path.with_name(META_NAME), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(meta, indent=2, ensure_ascii=False) + "\n")


_FIELDS = {
    "image_path": str,
    "prompt": str,
    "class_name": str,
    "class_index": int,
    "contour_path": str,
    "source_dataset": str,
    "split": str,
}


def _record_problems(obj) -> list[str]:
    if not isinstance(obj, dict):
        return ["record is not a JSON object"]
    problems = []
    for key, typ in _FIELDS.items():
        if key not in obj:
            problems.append(f"missing field {key!r}")
        elif not isinstance(obj[key], typ) or (typ is int and isinstance(obj[key], bool)):
            problems.append(f"field {key!r} should be {typ.__name__}")
    extra = set(obj) - set(_FIELDS) - {"prompt_override"}
    if extra:
        problems.append(f"unknown fields {sorted(extra)}")
    if "prompt_override" in obj and not isinstance(obj["prompt_override"], bool):
        problems.append("field 'prompt_override' should be bool")
    if isinstance(obj.get("split"), str) and obj["split"] not in SPLITS:
        problems.append(f"split {obj['split']!r} not in {SPLITS}")
    return problems


def read_manifest(path: PathLike) -> Manifest:
    """Load a manifest and its sidecar; raises ManifestError on schema problems."""
    path = Path(path)
    records = []
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"line {n}: invalid JSON ({exc.msg})") from exc
        problems = _record_problems(obj)
        if problems:
            raise ManifestError(f"line {n}: " + "; ".join(problems))
        records.append(TripletRecord(**obj))
    table, created = [], {}
    meta_path = path.with_name(META_NAME)
    if meta_path.is_file():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        table = [ClassSpec(**c) for c in meta.get("class_table", [])]
        created = meta.get("created_with", {})
    return Manifest(records, table, created)


def validate_manifest(path: PathLike) -> list[str]:
    """Return human-readable violations; an empty list means the manifest is valid."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    root = path.parent

    table: dict[int, str] = {}
    meta_path = path.with_name(META_NAME)
    if meta_path.is_file():
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            table = {int(c["index"]): c["name"] for c in meta["class_table"]}
        except (ValueError, KeyError, TypeError) as exc:
            return [f"{meta_path.name}: unreadable class table ({exc})"]

    violations = []
    seen: dict[tuple, int] = {}
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            violations.append(f"line {n}: invalid JSON ({exc.msg})")
            continue
        problems = _record_problems(obj)
        if problems:
            violations.extend(f"line {n}: {p}" for p in problems)
            continue
        key = (obj["image_path"], obj["class_index"])
        if key in seen:
            violations.append(f"line {n}: duplicate of line {seen[key]} for {key}")
        else:
            seen[key] = n
        for field_name in ("image_path", "contour_path"):
            if not (root / obj[field_name]).is_file():
                violations.append(f"line {n}: missing file {obj[field_name]} ({field_name})")
        if not obj.get("prompt_override", False) and obj["class_name"]:
            expected = prompt_for(obj["class_name"])
            if obj["prompt"] != expected:
                violations.append(f"line {n}: prompt {obj['prompt']!r} does not match "
                                  f"template {expected!r}")
        if table:
            if obj["class_index"] not in table:
                violations.append(f"line {n}: class index {obj['class_index']} not in class table")
            elif table[obj["class_index"]] != obj["class_name"]:
                violations.append(f"line {n}: class name {obj['class_name']!r} does not match "
                                  f"class table entry {table[obj['class_index']]!r}")
    return violations


def _shares(counter: Counter, total: int) -> dict:
    return {
        key: {"count": count, "percent": round(100.0 * count / total, 2) if total else 0.0}
        for key, count in sorted(counter.items())
    }


def stats(records: Union[Manifest, Iterable[TripletRecord]]) -> dict:
    """Sample counts and percentages per source dataset and per class."""
    recs = records.records if isinstance(records, Manifest) else list(records)
    total = len(recs)
    return {
        "total": total,
        "by_source": _shares(Counter(r.source_dataset for r in recs), total),
        "by_class": _shares(Counter(r.class_name for r in recs), total),
        "by_split": _shares(Counter(r.split for r in recs), total),
    }


def render_stats(report: dict) -> str:
    lines = [f"total samples: {report['total']}"]
    for title, key in (("source", "by_source"), ("class", "by_class"), ("split", "by_split")):
        rows = report[key]
        if not rows:
            continue
        width = max(len(title), *(len(k) for k in rows))
        lines.append("")
        lines.append(f"{title:<{width}}  {'count':>7}  {'percent':>7}")
        for name, row in rows.items():
            lines.append(f"{name:<{width}}  {row['count']:>7}  {row['percent']:>6.1f}%")
    return "\n".join(lines)

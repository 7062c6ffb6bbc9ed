"""Threshold sweeps, ODS/OIS aggregation and LineIoU."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from contour_bench import __version__
from contour_bench.matching import (
    MatchResult,
    Tolerance,
    candidate_graph,
    max_matching_size,
    tolerance_for,
)
from contour_bench.raster import ContourMap, ProbMap, StructuringElement, dilate


def prf(m: MatchResult) -> tuple[float, float, float]:
    """Precision, recall and F1 of one match result.

    An empty prediction against an empty ground truth scores 1 across the board;
    an empty side otherwise scores 0 for the ratio it is the denominator of.
    """
    if m.n_pred == 0:
        p = 1.0 if m.n_gt == 0 else 0.0
    else:
        p = m.n_matched / m.n_pred
    if m.n_gt == 0:
        r = 1.0 if m.n_pred == 0 else 0.0
    else:
        r = m.gt_hits / m.n_gt
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f


def thin(bits: np.ndarray) -> np.ndarray:
    from skimage.morphology import thin as _thin

    return _thin(bits)


def sweep_thresholds(k: int) -> tuple[float, ...]:
    if k < 2:
        raise ValueError(f"need at least 2 thresholds, got {k}")
    return tuple(i / (k + 1) for i in range(1, k + 1))


# cell columns: n_pred, n_gt, n_matched, n_gt_matched
_NPRED, _NGT, _NMATCH, _NGTHIT = range(4)


@dataclass(frozen=True, eq=False)
class ThresholdSweep:
    thresholds: tuple[float, ...]
    # int64 array, shape (n_images, n_thresholds, 4)
    cells: np.ndarray
    loose: bool = False

    def __post_init__(self):
        t = np.asarray(self.thresholds)
        if len(t) == 0 or np.any(np.diff(t) <= 0):
            raise ValueError("thresholds must be strictly increasing")
        if self.cells.ndim != 3 or self.cells.shape[1:] != (len(t), 4):
            raise ValueError(f"cell array has shape {self.cells.shape}, expected (n, {len(t)}, 4)")

    @property
    def n_images(self) -> int:
        return self.cells.shape[0]

    def result(self, image: int, ti: int) -> MatchResult:
        c = self.cells[image, ti]
        return _cell_result(c, self.loose)

    def per_image(self) -> list[list[MatchResult]]:
        return [[self.result(i, j) for j in range(len(self.thresholds))]
                for i in range(self.n_images)]


def _cell_result(c: np.ndarray, loose: bool) -> MatchResult:
    return MatchResult(int(c[_NPRED]), int(c[_NGT]), int(c[_NMATCH]),
                       int(c[_NGTHIT]) if loose else None)


def _image_cells(prob: np.ndarray, gt: np.ndarray, t_pixels: int,
                 thresholds: Sequence[float], thinning: bool, loose: bool) -> np.ndarray:
    """Match counts for one image at every threshold.

    The candidate graph is built once for the lowest threshold; higher
    thresholds (and thinned maps) only select a subset of its rows, because
    binarization is antitone in t.
    """
    out = np.zeros((len(thresholds), 4), dtype=np.int64)
    gt_pts = np.argwhere(gt)
    pred_pts = np.argwhere(prob > thresholds[0])
    graph = candidate_graph(pred_pts, gt_pts, t_pixels)
    pvals = prob[pred_pts[:, 0], pred_pts[:, 1]] if len(pred_pts) else np.zeros(0)
    out[:, _NGT] = len(gt_pts)
    for j, t in enumerate(thresholds):
        if thinning:
            bits = thin(prob > t)
            rows = bits[pred_pts[:, 0], pred_pts[:, 1]] if len(pred_pts) else np.zeros(0, bool)
        else:
            rows = pvals > t
        sub = graph[np.flatnonzero(rows)]
        out[j, _NPRED] = int(np.count_nonzero(rows))
        if loose:
            out[j, _NMATCH] = int(np.count_nonzero(np.diff(sub.indptr)))
            out[j, _NGTHIT] = len(np.unique(sub.indices))
        else:
            m = max_matching_size(sub)
            out[j, _NMATCH] = m
            out[j, _NGTHIT] = m
    return out


def _image_cells_job(args):
    return _image_cells(*args)


def _as_list(x, n):
    if isinstance(x, Tolerance):
        return [x] * n
    x = list(x)
    if len(x) != n:
        raise ValueError("need one tolerance per image")
    return x


def sweep(preds: Sequence[ProbMap], gts: Sequence[ContourMap],
          tol: Union[Tolerance, Sequence[Tolerance]], k_thresholds: int = 51, *,
          thinning: bool = False, loose: bool = False, workers: int = 1) -> ThresholdSweep:
    """Match every prediction against its GT at ``k_thresholds`` interior thresholds.

    Each cell equals ``match_fast(binarize(pred, t), gt, tol)`` (after optional
    thinning of the binarized map). ``workers > 1`` spreads images across a
    process pool; results are reassembled in input order.
    """
    if len(preds) != len(gts):
        raise ValueError(f"{len(preds)} predictions for {len(gts)} ground truths")
    if not preds:
        raise ValueError("need at least one image")
    for i, (p, g) in enumerate(zip(preds, gts)):
        if p.shape != g.shape:
            raise ValueError(f"image {i}: prediction {p.shape} vs ground truth {g.shape}")
    thresholds = sweep_thresholds(k_thresholds)
    tols = _as_list(tol, len(preds))
    jobs = [(p.probs, g.bits, t.t_pixels, thresholds, thinning, loose)
            for p, g, t in zip(preds, gts, tols)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            cells = list(pool.map(_image_cells_job, jobs))
    else:
        cells = [_image_cells_job(j) for j in jobs]
    return ThresholdSweep(thresholds, np.stack(cells), loose=loose)


def _f_of(counts: np.ndarray, loose: bool) -> float:
    return prf(_cell_result(counts, loose))[2]


def ods(sw: ThresholdSweep) -> tuple[float, float]:
    """Best dataset-wide F at a single threshold; ties go to the lower threshold."""
    totals = sw.cells.sum(axis=0)
    best_f, best_j = -1.0, 0
    for j in range(len(sw.thresholds)):
        f = _f_of(totals[j], sw.loose)
        if f > best_f:
            best_f, best_j = f, j
    return best_f, sw.thresholds[best_j]


def ois_choices(sw: ThresholdSweep) -> list[int]:
    """Per-image index of the F-maximizing threshold (lowest on ties)."""
    chosen = []
    for i in range(sw.n_images):
        best_f, best_j = -1.0, 0
        for j in range(len(sw.thresholds)):
            f = _f_of(sw.cells[i, j], sw.loose)
            if f > best_f:
                best_f, best_j = f, j
        chosen.append(best_j)
    return chosen


def ois(sw: ThresholdSweep) -> float:
    chosen = ois_choices(sw)
    total = sum((sw.cells[i, j] for i, j in enumerate(chosen)), np.zeros(4, dtype=np.int64))
    return _f_of(total, sw.loose)


def line_iou(pred: ContourMap, gt: ContourMap, k: int = 3, kind: str = "square") -> float:
    """IoU of the two maps after dilating both with a k-pixel kernel."""
    if pred.shape != gt.shape:
        raise ValueError(f"prediction {pred.shape} and ground truth {gt.shape} differ in size")
    se = StructuringElement(kind, k)
    a = dilate(pred, se).bits
    b = dilate(gt, se).bits
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(a & b)) / union


@dataclass(frozen=True)
class EvalReport:
    ods_f: float
    ods_threshold: float
    ois_f: float
    line_iou: float
    n_images: int
    tolerance: Tolerance
    per_threshold_prf: list
    params: dict = field(default_factory=dict)
    version: str = __version__

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tolerance"] = asdict(self.tolerance)
        d["per_threshold_prf"] = [
            {"threshold": t, "precision": p, "recall": r, "f": f}
            for t, p, r, f in self.per_threshold_prf
        ]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "EvalReport",
    "type": "object",
    "required": ["ods_f", "ods_threshold", "ois_f", "line_iou", "n_images",
                 "tolerance", "per_threshold_prf", "params", "version"],
    "additionalProperties": False,
    "properties": {
        "ods_f": {"type": "number", "minimum": 0, "maximum": 1},
        "ods_threshold": {"type": "number", "minimum": 0, "maximum": 1},
        "ois_f": {"type": "number", "minimum": 0, "maximum": 1},
        "line_iou": {"type": "number", "minimum": 0, "maximum": 1},
        "n_images": {"type": "integer", "minimum": 1},
        "version": {"type": "string"},
        "tolerance": {
            "type": "object",
            "required": ["d_max", "image_size", "t_pixels"],
            "properties": {
                "d_max": {"type": "number", "exclusiveMinimum": 0},
                "image_size": {"type": "number", "exclusiveMinimum": 0},
                "t_pixels": {"type": "integer", "minimum": 0, "multipleOf": 2},
            },
        },
        "per_threshold_prf": {
            "type": "array",
            "minItems": 2,
            "items": {
                "type": "object",
                "required": ["threshold", "precision", "recall", "f"],
                "properties": {
                    k: {"type": "number", "minimum": 0, "maximum": 1}
                    for k in ("threshold", "precision", "recall", "f")
                },
            },
        },
        "params": {
            "type": "object",
            "required": ["d_max", "thresholds", "iou_kernel", "iou_kernel_kind",
                         "thinning", "matching", "side"],
        },
    },
}


def evaluate(preds: Sequence[ProbMap], gts: Sequence[ContourMap], d_max: float = 0.0075,
             k_thresholds: int = 51, iou_kernel: int = 3, *, iou_kernel_kind: str = "square",
             thinning: bool = False, loose: bool = False, side: str = "max",
             workers: int = 1, extra_params: Optional[dict] = None) -> EvalReport:
    """Full protocol: sweep, ODS, OIS and LineIoU at the ODS threshold.

    All images must share one size, so a single tolerance applies to the suite.
    """
    if not preds:
        raise ValueError("need at least one image")
    shapes = {g.shape for g in gts} | {p.shape for p in preds}
    if len(shapes) != 1:
        raise ValueError(f"all images must share one size, got {sorted(shapes)}")
    h, w = next(iter(shapes))
    tol = tolerance_for(d_max, w, h, side=side)
    sw = sweep(preds, gts, tol, k_thresholds, thinning=thinning, loose=loose, workers=workers)
    ods_f, ods_t = ods(sw)
    ois_f = ois(sw)

    ious = []
    for p, g in zip(preds, gts):
        bits = p.probs > ods_t
        if thinning:
            bits = thin(bits)
        ious.append(line_iou(ContourMap(bits), g, iou_kernel, iou_kernel_kind))
    miou = float(sum(ious) / len(ious))

    totals = sw.cells.sum(axis=0)
    rows = [(t,) + prf(_cell_result(totals[j], loose)) for j, t in enumerate(sw.thresholds)]
    params = {
        "d_max": d_max,
        "thresholds": k_thresholds,
        "iou_kernel": iou_kernel,
        "iou_kernel_kind": iou_kernel_kind,
        "thinning": thinning,
        "matching": "loose" if loose else "exact",
        "side": side,
    }
    if extra_params:
        params.update(extra_params)
    return EvalReport(
        ods_f=ods_f,
        ods_threshold=ods_t,
        ois_f=ois_f,
        line_iou=miou,
        n_images=len(preds),
        tolerance=tol,
        per_threshold_prf=rows,
        params=params,
    )

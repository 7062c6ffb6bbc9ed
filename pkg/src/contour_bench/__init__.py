"""Semantic contour dataset construction and evaluation toolkit."""

__version__ = "0.1.0"

from contour_bench.raster import (
    ContourMap,
    ProbMap,
    SegMask,
    StructuringElement,
    binarize,
    dilate,
    load_png,
    save_png,
)
from contour_bench.m2c import ClassSpec, mask_to_contour, mask_to_contours_all
from contour_bench.matching import (
    MatchResult,
    Tolerance,
    even_ceil,
    match_exact,
    match_fast,
    tolerance_for,
)
from contour_bench.metrics import EvalReport, evaluate, line_iou, ods, ois, prf, sweep

__all__ = [
    "__version__",
    "ClassSpec",
    "ContourMap",
    "EvalReport",
    "MatchResult",
    "ProbMap",
    "SegMask",
    "StructuringElement",
    "Tolerance",
    "binarize",
    "dilate",
    "evaluate",
    "even_ceil",
    "line_iou",
    "load_png",
    "mask_to_contour",
    "mask_to_contours_all",
    "match_exact",
    "match_fast",
    "ods",
    "ois",
    "prf",
    "save_png",
    "sweep",
    "tolerance_for",
]

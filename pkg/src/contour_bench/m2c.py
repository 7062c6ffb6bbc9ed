"""Mask-to-contour conversion.

A class contour is the inner boundary of the class region: pixels of the class
with at least one in-image neighbour that carries a different, labelled class.
This is the pixel set a border follower visits over all outer and hole borders.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from contour_bench.raster import ContourMap, SegMask


class ClassError(ValueError):
    """Raised for class indices a mask does not declare."""


@dataclass(frozen=True)
class ClassSpec:
    index: int
    name: str
    source_dataset: str = ""

    def __post_init__(self):
        if not self.name:
            raise ValueError("class name must be non-empty")
        if not 0 <= self.index <= 255:
            raise ValueError(f"class index {self.index} does not fit in 8 bits")


@dataclass(frozen=True)
class ClassContour:
    contour: ContourMap
    empty: bool


_NEIGHBOURS = {
    4: [(-1, 0), (1, 0), (0, -1), (0, 1)],
    8: [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)],
}


def _check_class(mask: SegMask, cls: int) -> None:
    if mask.ignore_index is not None and cls == mask.ignore_index:
        raise ClassError(f"class {cls} is the ignore index")
    if not 0 <= cls <= 255:
        raise ClassError(f"class {cls} is outside the 8-bit label range")
    if mask.classes is not None and cls not in mask.classes:
        raise ClassError(f"class {cls} is not declared for this mask")


def mask_to_contour(mask: SegMask, cls: int, connectivity: int = 4) -> ContourMap:
    if connectivity not in _NEIGHBOURS:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    _check_class(mask, cls)
    labels = mask.labels
    fg = labels == cls
    other = ~fg
    if mask.ignore_index is not None:
        other &= labels != mask.ignore_index

    h, w = labels.shape
    touches = np.zeros_like(fg)
    for dy, dx in _NEIGHBOURS[connectivity]:
        # touches[y, x] |= other[y + dy, x + dx]; out-of-image neighbours never count
        ys, yd = (slice(dy, h), slice(0, h - dy)) if dy >= 0 else (slice(0, h + dy), slice(-dy, h))
        xs, xd = (slice(dx, w), slice(0, w - dx)) if dx >= 0 else (slice(0, w + dx), slice(-dx, w))
        touches[yd, xd] |= other[ys, xs]
    return ContourMap(fg & touches)


def mask_to_contours_all(mask: SegMask, classes: Iterable[ClassSpec],
                         connectivity: int = 4) -> dict[int, ClassContour]:
    """Contour map per class; ``empty`` flags classes absent from the mask."""
    classes = list(classes)
    if not classes:
        raise ValueError("class list must be non-empty")
    out = {}
    for spec in classes:
        contour = mask_to_contour(mask, spec.index, connectivity)
        present = bool(np.any(mask.labels == spec.index))
        out[spec.index] = ClassContour(contour, empty=not present)
    return out

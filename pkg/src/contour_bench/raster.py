"""Raster value types, PNG I/O and binary morphology.

All rasters wrap a read-only numpy array in row-major (height, width) order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
from PIL import Image

MAX_SIDE = 16384


class RasterError(ValueError):
    """Raised for malformed or out-of-contract raster input."""


class RasterSizeError(RasterError):
    pass


def _frozen(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    if out.ndim != 2:
        raise RasterError(f"expected a 2-D grid, got shape {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SegMask:
    labels: np.ndarray
    ignore_index: Optional[int] = None
    classes: Optional[frozenset] = None

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.size and (labels.min() < 0 or labels.max() > 255):
            raise RasterError("mask labels must fit in 8 bits")
        object.__setattr__(self, "labels", _frozen(labels, np.uint8))
        if self.classes is not None:
            classes = frozenset(int(c) for c in self.classes)
            object.__setattr__(self, "classes", classes)
            allowed = set(classes)
            if self.ignore_index is not None:
                allowed.add(int(self.ignore_index))
            stray = set(np.unique(self.labels).tolist()) - allowed
            if stray:
                raise RasterError(f"undeclared label values {sorted(stray)}")

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def __eq__(self, other):
        if not isinstance(other, SegMask):
            return NotImplemented
        return (
            self.ignore_index == other.ignore_index
            and self.classes == other.classes
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True, eq=False)
class ContourMap:
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.dtype != bool and bits.size and not np.isin(bits, (0, 1)).all():
            raise RasterError("contour bits must be 0 or 1")
        object.__setattr__(self, "bits", _frozen(bits, bool))

    @classmethod
    def empty(cls, height: int, width: int) -> "ContourMap":
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def coords(self) -> np.ndarray:
        """(n, 2) array of (row, col) for every contour pixel, row-major order."""
        return np.argwhere(self.bits)

    def __eq__(self, other):
        if not isinstance(other, ContourMap):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)


@dataclass(frozen=True, eq=False)
class ProbMap:
    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs, np.float64)
        if probs.size and not (np.all(probs >= 0.0) and np.all(probs <= 1.0)):
            raise RasterError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "probs", probs)

    @property
    def height(self) -> int:
        return self.probs.shape[0]

    @property
    def width(self) -> int:
        return self.probs.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape

    def __eq__(self, other):
        if not isinstance(other, ProbMap):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)


@dataclass(frozen=True)
class StructuringElement:
    kind: Literal["square", "disk"] = "square"
    size: int = 3

    def __post_init__(self):
        if self.kind not in ("square", "disk"):
            raise ValueError(f"unknown structuring element kind {self.kind!r}")
        if self.size < 1 or self.size % 2 == 0:
            raise ValueError(f"structuring element size must be odd and >= 1, got {self.size}")

    def offsets(self) -> list[tuple[int, int]]:
        r = self.size // 2
        out = []
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                if self.kind == "disk" and dy * dy + dx * dx > r * r:
                    continue
                out.append((dy, dx))
        return out


Raster = Union[SegMask, ContourMap, ProbMap]


def load_png(path: Union[str, os.PathLike], kind: Literal["mask", "contour", "prob"],
             max_side: int = MAX_SIDE) -> Raster:
    """Load a grayscale PNG as a mask, contour map or probability map.

    Masks and contours must be 8-bit single channel (palette images are read by
    raw index). Probability maps may be 8- or 16-bit and are scaled to [0, 1].
    """
    if kind not in ("mask", "contour", "prob"):
        raise ValueError(f"unknown raster kind {kind!r}")
    try:
        img = Image.open(path)
        if img.format != "PNG":
            raise RasterError(f"{path}: not a PNG file (format {img.format})")
        w, h = img.size
        if w > max_side or h > max_side:
            raise RasterSizeError(f"{path}: {w}x{h} exceeds the {max_side}px side limit")
        mode = img.mode
        arr = np.asarray(img)
    except (OSError, SyntaxError) as exc:
        raise RasterError(f"{path}: malformed PNG ({exc})") from exc

    if kind == "prob":
        if mode == "L":
            return ProbMap(arr.astype(np.float64) / 255.0)
        if mode in ("I;16", "I;16B", "I;16L", "I"):
            return ProbMap(arr.astype(np.float64) / 65535.0)
        raise RasterError(f"{path}: probability map must be 8/16-bit grayscale, got mode {mode}")

    if mode not in ("L", "P") or arr.ndim != 2:
        raise RasterError(f"{path}: expected an 8-bit single-channel PNG, got mode {mode}")
    if kind == "mask":
        return SegMask(arr)
    return ContourMap(arr != 0)


def save_png(raster: Union[ContourMap, ProbMap], path: Union[str, os.PathLike]) -> None:
    """Write a contour map as 8-bit {0,255} or a probability map as 16-bit codes."""
    if isinstance(raster, ContourMap):
        data = np.where(raster.bits, 255, 0).astype(np.uint8)
        Image.fromarray(data, mode="L").save(path, format="PNG")
    elif isinstance(raster, ProbMap):
        codes = np.floor(raster.probs * 65535.0 + 0.5).astype(np.uint16)
        Image.fromarray(codes).save(path, format="PNG")
    else:
        raise TypeError(f"cannot save {type(raster).__name__} as PNG")


def dilate(c: ContourMap, se: StructuringElement = StructuringElement()) -> ContourMap:
    src = c.bits
    h, w = src.shape
    out = np.zeros_like(src)
    for dy, dx in se.offsets():
        if abs(dy) >= h or abs(dx) >= w:
            continue
        # out[y, x] |= src[y + dy, x + dx], clipped at the borders
        ys, yd = (slice(dy, h), slice(0, h - dy)) if dy >= 0 else (slice(0, h + dy), slice(-dy, h))
        xs, xd = (slice(dx, w), slice(0, w - dx)) if dx >= 0 else (slice(0, w + dx), slice(-dx, w))
        out[yd, xd] |= src[ys, xs]
    return ContourMap(out)


def binarize(p: ProbMap, t: float) -> ContourMap:
    return ContourMap(p.probs > t)

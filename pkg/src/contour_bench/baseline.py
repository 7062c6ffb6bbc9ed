"""Training-free gradient-magnitude contour predictor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from contour_bench.raster import ProbMap


@dataclass(frozen=True)
class BaselineConfig:
    blur_radius: int = 1
    # "global-max" or "percentile"
    normalize: str = "global-max"
    percentile: float = 99.0

    def __post_init__(self):
        if self.blur_radius < 0:
            raise ValueError("blur_radius must be >= 0")
        if self.normalize not in ("global-max", "percentile"):
            raise ValueError(f"unknown normalization {self.normalize!r}")
        if self.normalize == "percentile" and not 50 < self.percentile <= 100:
            raise ValueError("percentile must lie in (50, 100]")


def to_gray(image: np.ndarray) -> np.ndarray:
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 3:
        if img.shape[2] == 1:
            img = img[..., 0]
        else:
            # ITU-R 601 luma, alpha dropped
            img = img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114
    if img.ndim != 2:
        raise ValueError(f"expected a grayscale or RGB image, got shape {np.shape(image)}")
    return img


def box_blur(img: np.ndarray, radius: int) -> np.ndarray:
    """Separable box mean with edge replication.

    Summed as explicit shifts so every pixel sees the same operation order,
    which keeps the result exactly translation-equivariant.
    """
    n = 2 * radius + 1
    h, w = img.shape
    padded = np.pad(img, radius, mode="edge")
    rows = sum(padded[:, i:i + w] for i in range(n)) / n
    return sum(rows[i:i + h, :] for i in range(n)) / n


def gradient_magnitude(image: np.ndarray, blur_radius: int = 0) -> np.ndarray:
    """Central-difference gradient magnitude after an optional box blur."""
    img = to_gray(image)
    if img.size == 0:
        raise ValueError("image is empty")
    if blur_radius > 0:
        img = box_blur(img, blur_radius)
    padded = np.pad(img, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    return np.hypot(gx, gy)


def predict_gradient(image: np.ndarray, cfg: BaselineConfig = BaselineConfig()) -> ProbMap:
    mag = gradient_magnitude(image, cfg.blur_radius)

    if cfg.normalize == "global-max":
        scale = mag.max()
    else:
        scale = np.percentile(mag, cfg.percentile)
    if scale <= 0:
        return ProbMap(np.zeros_like(mag))
    return ProbMap(np.clip(mag / scale, 0.0, 1.0))

"""Deterministic synthetic tile sets (geometric shapes) for tests and demos."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, ImageDraw

from contour_bench.m2c import ClassSpec

DEFAULT_CLASSES = (
    ClassSpec(1, "building", "synthetic"),
    ClassSpec(2, "road", "synthetic"),
    ClassSpec(3, "water", "synthetic"),
)

# grey level per class index; 0 is background
_TONES = {0: 96, 1: 208, 2: 160, 3: 40, 4: 128, 5: 232, 6: 16}


def synthetic_tile(rng: np.random.Generator, size: int = 256,
                   n_classes: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """One (image, mask) pair. Class 1 rectangles, 2 thick lines, 3 ellipses,
    further classes as triangles; background is class 0."""
    mask = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(mask)
    s = size

    def rint(lo, hi):
        return int(rng.integers(int(lo), int(hi)))

    if n_classes >= 3:
        for _ in range(rint(1, 3)):
            cx, cy = rint(0.2 * s, 0.8 * s), rint(0.2 * s, 0.8 * s)
            rx, ry = rint(0.06 * s, 0.2 * s), rint(0.06 * s, 0.2 * s)
            draw.ellipse([cx - rx, cy - ry, cx + rx, cy + ry], fill=3)
    for c in range(4, n_classes + 1):
        x, y = rint(0.1 * s, 0.7 * s), rint(0.1 * s, 0.7 * s)
        d = rint(0.08 * s, 0.2 * s)
        draw.polygon([(x, y), (x + d, y), (x, y + d)], fill=c)
    if n_classes >= 2:
        for _ in range(rint(1, 3)):
            width = max(2, rint(0.015 * s, 0.04 * s))
            if rng.random() < 0.5:
                y = rint(0.1 * s, 0.9 * s)
                pts = [(0, y), (s - 1, y + rint(-0.2 * s, 0.2 * s))]
            else:
                x = rint(0.1 * s, 0.9 * s)
                pts = [(x, 0), (x + rint(-0.2 * s, 0.2 * s), s - 1)]
            draw.line(pts, fill=2, width=width)
    for _ in range(rint(2, 6)):
        x, y = rint(0.05 * s, 0.85 * s), rint(0.05 * s, 0.85 * s)
        w, h = rint(0.04 * s, 0.12 * s), rint(0.04 * s, 0.12 * s)
        draw.rectangle([x, y, x + w, y + h], fill=1)

    labels = np.asarray(mask, dtype=np.uint8)
    image = np.vectorize(_TONES.get, otypes=[np.float64])(labels)
    # gentle illumination ramp so the image is not piecewise constant
    ramp = np.linspace(0.0, 6.0, s)[None, :] + np.linspace(0.0, 4.0, s)[:, None]
    image = np.clip(np.rint(image + ramp), 0, 255).astype(np.uint8)
    return image, labels


def write_fixture(root: Union[str, Path], n_images: int = 10, size: int = 256,
                  classes=DEFAULT_CLASSES, seed: int = 0) -> dict[str, Path]:
    """Write ``images/``, ``masks/`` and ``classes.json`` under ``root``."""
    root = Path(root)
    images, masks = root / "images", root / "masks"
    images.mkdir(parents=True, exist_ok=True)
    masks.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for i in range(n_images):
        img, lab = synthetic_tile(rng, size, len(classes))
        Image.fromarray(img, mode="L").save(images / f"tile_{i:03d}.png")
        Image.fromarray(lab, mode="L").save(masks / f"tile_{i:03d}.png")
    table = root / "classes.json"
    table.write_text(json.dumps([{"index": c.index, "name": c.name} for c in classes], indent=2) + "\n")
    return {"images": images, "masks": masks, "classes": table}

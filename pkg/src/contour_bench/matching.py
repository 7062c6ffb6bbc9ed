"""One-to-one matching of predicted and ground-truth contour pixels within a
pixel tolerance.

Two routes compute the same cardinality:

* :func:`match_exact` builds the full pairwise distance graph and runs a plain
  augmenting-path (Kuhn) search. Quadratic, meant for small rasters and tests.
* :func:`match_fast` builds candidate lists from a uniform grid bucket index and
  hands the sparse graph to scipy's Hopcroft-Karp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from contour_bench.raster import ContourMap


class ToleranceError(ValueError):
    pass


class ShapeMismatchError(ValueError):
    pass


def even_ceil(x: float) -> int:
    """Smallest even integer >= x."""
    if not x > 0:
        raise ToleranceError(f"even_ceil needs a positive input, got {x}")
    e = math.ceil(x)
    return e if e % 2 == 0 else e + 1


@dataclass(frozen=True)
class Tolerance:
    d_max: float
    image_size: int
    t_pixels: int

    def __post_init__(self):
        if not self.d_max > 0:
            raise ToleranceError("d_max must be positive")
        if self.t_pixels % 2 or self.t_pixels < 0:
            raise ToleranceError(f"t_pixels must be a non-negative even integer, got {self.t_pixels}")


def tolerance_for(d_max: float, width: int, height: int,
                  side: Literal["max", "min", "diag"] = "max") -> Tolerance:
    """Pixel tolerance T = even_ceil(S * d_max).

    ``side`` picks the image size S; ``max`` (the default) uses the longer side.
    """
    if width <= 0 or height <= 0:
        raise ToleranceError(f"zero-sized image {width}x{height}")
    if not d_max > 0:
        raise ToleranceError("d_max must be positive")
    if side == "max":
        s = max(width, height)
    elif side == "min":
        s = min(width, height)
    elif side == "diag":
        s = math.hypot(width, height)
    else:
        raise ValueError(f"unknown side rule {side!r}")
    return Tolerance(d_max=d_max, image_size=s, t_pixels=even_ceil(s * d_max))


@dataclass(frozen=True)
class MatchResult:
    n_pred: int
    n_gt: int
    n_matched: int
    # Only the loose (existence) mode sets this; there the number of covered
    # GT pixels differs from the number of covered predicted pixels.
    n_gt_matched: Optional[int] = field(default=None, compare=True)

    def __post_init__(self):
        if min(self.n_pred, self.n_gt, self.n_matched) < 0:
            raise ValueError("counts must be non-negative")
        if self.n_matched > self.n_pred or self.gt_hits > self.n_gt:
            raise ValueError("matched count exceeds pixel count")

    @property
    def gt_hits(self) -> int:
        return self.n_matched if self.n_gt_matched is None else self.n_gt_matched

    def __add__(self, other: "MatchResult") -> "MatchResult":
        gt = None
        if self.n_gt_matched is not None or other.n_gt_matched is not None:
            gt = self.gt_hits + other.gt_hits
        return MatchResult(self.n_pred + other.n_pred, self.n_gt + other.n_gt,
                           self.n_matched + other.n_matched, gt)


def _check_shapes(pred: ContourMap, gt: ContourMap) -> None:
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"prediction {pred.shape} and ground truth {gt.shape} differ in size")


class GridIndex:
    """Uniform grid bucket index over integer pixel coordinates.

    Points are sorted by cell key so each bucket is a contiguous slice; a
    radius query with radius <= cell size only has to visit the 3x3 block of
    cells around the query cell.
    """

    def __init__(self, points: np.ndarray, cell: int):
        if cell < 1:
            raise ValueError("cell size must be >= 1")
        self.cell = int(cell)
        pts = np.asarray(points, dtype=np.int64).reshape(-1, 2)
        cells = pts // self.cell
        self.ncols = int(cells[:, 1].max()) + 3 if len(pts) else 1
        keys = self._key(cells[:, 0], cells[:, 1])
        order = np.argsort(keys, kind="stable")
        self.points = pts[order]
        self.order = order
        self.keys = keys[order]

    def _key(self, cy: np.ndarray, cx: np.ndarray) -> np.ndarray:
        return cy * self.ncols + cx

    def query_pairs(self, queries: np.ndarray, radius: float,
                    chunk: int = 1 << 16) -> tuple[np.ndarray, np.ndarray]:
        """All (query index, point index) pairs at Euclidean distance <= radius.

        Point indices refer to the order of ``points`` as passed to the
        constructor. Pairs come out sorted by query index, then point index.
        """
        if radius > self.cell:
            raise ValueError("radius must not exceed the cell size")
        q = np.asarray(queries, dtype=np.int64).reshape(-1, 2)
        if len(q) == 0 or len(self.points) == 0:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        r2 = radius * radius
        qi_parts, pi_parts = [], []
        for lo in range(0, len(q), chunk):
            qq = q[lo:lo + chunk]
            qc = qq // self.cell
            for oy in (-1, 0, 1):
                for ox in (-1, 0, 1):
                    cy = qc[:, 0] + oy
                    cx = qc[:, 1] + ox
                    valid = (cy >= 0) & (cx >= 0) & (cx < self.ncols)
                    key = np.where(valid, self._key(cy, cx), -1)
                    start = np.searchsorted(self.keys, key, side="left")
                    stop = np.searchsorted(self.keys, key, side="right")
                    counts = np.where(valid, stop - start, 0)
                    total = int(counts.sum())
                    if total == 0:
                        continue
                    qi = np.repeat(np.arange(len(qq)), counts)
                    offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
                    pi = np.repeat(start, counts) + offs
                    d = self.points[pi] - qq[qi]
                    keep = (d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]) <= r2
                    qi_parts.append(qi[keep] + lo)
                    pi_parts.append(self.order[pi[keep]])
        if not qi_parts:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        qi = np.concatenate(qi_parts)
        pi = np.concatenate(pi_parts)
        order = np.lexsort((pi, qi))
        return qi[order], pi[order]


def candidate_graph(pred_pts: np.ndarray, gt_pts: np.ndarray, t_pixels: int) -> csr_matrix:
    """Sparse pred x gt adjacency of pairs within ``t_pixels``."""
    n_p, n_g = len(pred_pts), len(gt_pts)
    if n_p == 0 or n_g == 0 or t_pixels == 0:
        if n_p and n_g:
            # T = 0 only links coincident pixels
            index = GridIndex(gt_pts, 1)
            qi, pi = index.query_pairs(pred_pts, 0)
        else:
            qi = pi = np.zeros(0, dtype=np.int64)
    else:
        index = GridIndex(gt_pts, t_pixels)
        qi, pi = index.query_pairs(pred_pts, t_pixels)
    data = np.ones(len(qi), dtype=np.int8)
    return csr_matrix((data, (qi, pi)), shape=(n_p, n_g))


def max_matching_size(graph: csr_matrix) -> int:
    if graph.nnz == 0:
        return 0
    # drop isolated rows/columns so the matcher only sees the connected part
    rows = np.flatnonzero(np.diff(graph.indptr))
    sub = graph[rows]
    cols = np.unique(sub.indices)
    if len(cols) < graph.shape[1]:
        sub = sub[:, cols]
    match = maximum_bipartite_matching(sub.tocsr(), perm_type="column")
    return int(np.count_nonzero(match >= 0))


def match_fast(pred: ContourMap, gt: ContourMap, tol: Tolerance) -> MatchResult:
    _check_shapes(pred, gt)
    pred_pts, gt_pts = pred.coords(), gt.coords()
    graph = candidate_graph(pred_pts, gt_pts, tol.t_pixels)
    return MatchResult(len(pred_pts), len(gt_pts), max_matching_size(graph))


def _kuhn(adj: list[list[int]], n_right: int) -> int:
    match_left = [-1] * len(adj)
    match_right = [-1] * n_right
    size = 0
    for root in range(len(adj)):
        if not adj[root]:
            continue
        seen = [False] * n_right
        parent: dict[int, int] = {}
        # iterative DFS over alternating paths: stack of (left vertex, next edge index)
        stack = [(root, 0)]
        found = -1
        while stack and found < 0:
            u, i = stack.pop()
            if i >= len(adj[u]):
                continue
            stack.append((u, i + 1))
            v = adj[u][i]
            if seen[v]:
                continue
            seen[v] = True
            parent[v] = u
            if match_right[v] < 0:
                found = v
            else:
                stack.append((match_right[v], 0))
        if found < 0:
            continue
        v = found
        while True:
            u = parent[v]
            prev = match_left[u]
            match_left[u] = v
            match_right[v] = u
            if u == root:
                break
            v = prev
        size += 1
    return size


def match_exact(pred: ContourMap, gt: ContourMap, tol: Tolerance) -> MatchResult:
    """Maximum matching over the complete distance graph (slow reference)."""
    _check_shapes(pred, gt)
    pred_pts, gt_pts = pred.coords(), gt.coords()
    t2 = tol.t_pixels * tol.t_pixels
    adj = []
    for p in pred_pts:
        d = gt_pts - p
        adj.append(np.flatnonzero((d * d).sum(axis=1) <= t2).tolist())
    return MatchResult(len(pred_pts), len(gt_pts), _kuhn(adj, len(gt_pts)))


def match_loose(pred: ContourMap, gt: ContourMap, tol: Tolerance) -> MatchResult:
    """Existence test instead of one-to-one matching.

    A predicted pixel counts if any GT pixel lies within T and vice versa, so
    the precision and recall hit counts differ. For comparison only.
    """
    _check_shapes(pred, gt)
    pred_pts, gt_pts = pred.coords(), gt.coords()
    graph = candidate_graph(pred_pts, gt_pts, tol.t_pixels)
    pred_hit = int(np.count_nonzero(np.diff(graph.indptr)))
    gt_hit = len(np.unique(graph.indices))
    return MatchResult(len(pred_pts), len(gt_pts), pred_hit, gt_hit)

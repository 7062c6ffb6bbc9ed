"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports the code paths it checks beyond the raster containers.
"""

from __future__ import annotations

import numpy as np

N4 = [(-1, 0), (1, 0), (0, -1), (0, 1)]
N8 = N4 + [(-1, -1), (-1, 1), (1, -1), (1, 1)]


def dilate_naive(bits: np.ndarray, size: int, kind: str = "square") -> np.ndarray:
    h, w = bits.shape
    r = size // 2
    out = np.zeros_like(bits, dtype=bool)
    for y in range(h):
        for x in range(w):
            hit = False
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    if kind == "disk" and dy * dy + dx * dx > r * r:
                        continue
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w and bits[yy, xx]:
                        hit = True
            out[y, x] = hit
    return out


def contour_naive(labels: np.ndarray, cls: int, connectivity: int = 4,
                  ignore=None) -> np.ndarray:
    h, w = labels.shape
    nbrs = N4 if connectivity == 4 else N8
    out = np.zeros((h, w), dtype=bool)
    for y in range(h):
        for x in range(w):
            if labels[y, x] != cls:
                continue
            for dy, dx in nbrs:
                yy, xx = y + dy, x + dx
                if not (0 <= yy < h and 0 <= xx < w):
                    continue
                v = labels[yy, xx]
                if v != cls and (ignore is None or v != ignore):
                    out[y, x] = True
                    break
    return out


def _adjacency(pred_pts, gt_pts, t):
    return [[j for j, g in enumerate(gt_pts)
             if (p[0] - g[0]) ** 2 + (p[1] - g[1]) ** 2 <= t * t]
            for p in pred_pts]


def matching_by_assignment(pred_pts, gt_pts, t) -> int:
    """Largest one-to-one assignment, by enumerating every assignment."""
    adj = _adjacency(pred_pts, gt_pts, t)
    best = 0

    def rec(i, used, size):
        nonlocal best
        if i == len(adj):
            best = max(best, size)
            return
        rec(i + 1, used, size)
        for j in adj[i]:
            if not used & (1 << j):
                rec(i + 1, used | (1 << j), size + 1)

    rec(0, 0, 0)
    return best


_POP8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.uint32)
    return (_POP8[a & 0xFF] + _POP8[(a >> 8) & 0xFF]
            + _POP8[(a >> 16) & 0xFF] + _POP8[(a >> 24) & 0xFF])


def matching_by_deficiency(pred_pts, gt_pts, t) -> int:
    """Maximum matching size via the deficiency form of Hall's theorem,
    enumerating every subset S of predicted pixels:

        nu = |P| - max_S (|S| - |N(S)|)
    """
    n = len(pred_pts)
    if n == 0 or len(gt_pts) == 0:
        return 0
    assert n <= 22 and len(gt_pts) <= 32
    adj = _adjacency(pred_pts, gt_pts, t)
    nb = [sum(1 << j for j in row) for row in adj]
    neigh = np.zeros(1 << n, dtype=np.uint32)
    for i in range(n):
        lo = 1 << i
        neigh[lo:2 * lo] = neigh[:lo] | np.uint32(nb[i])
    sizes = _popcount(np.arange(1 << n, dtype=np.uint32))
    deficiency = int((sizes - _popcount(neigh)).max())
    return n - deficiency


def f_of(n_pred, n_gt, n_match):
    if n_pred == 0:
        p = 1.0 if n_gt == 0 else 0.0
    else:
        p = n_match / n_pred
    if n_gt == 0:
        r = 1.0 if n_pred == 0 else 0.0
    else:
        r = n_match / n_gt
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def cell_counts(prob, gt_bits, t_pixels, threshold):
    pred = np.argwhere(prob > threshold).tolist()
    gt = np.argwhere(gt_bits).tolist()
    return len(pred), len(gt), matching_by_kuhn_simple(pred, gt, t_pixels)


def matching_by_kuhn_simple(pred_pts, gt_pts, t) -> int:
    """Textbook recursive augmenting paths; fine for a few hundred pixels."""
    adj = _adjacency(pred_pts, gt_pts, t)
    owner = [-1] * len(gt_pts)

    def try_augment(u, seen):
        for v in adj[u]:
            if v in seen:
                continue
            seen.add(v)
            if owner[v] < 0 or try_augment(owner[v], seen):
                owner[v] = u
                return True
        return False

    return sum(try_augment(u, set()) for u in range(len(adj)))


def ods_ois_from_rasters(probs, gts, t_pixels, thresholds):
    """ODS F, ODS threshold, OIS F and per-image F table, from raw rasters."""
    table = [[cell_counts(p, g, t_pixels, t) for t in thresholds] for p, g in zip(probs, gts)]
    best_f, best_j = -1.0, 0
    for j in range(len(thresholds)):
        sums = [sum(row[j][k] for row in table) for k in range(3)]
        f = f_of(*sums)
        if f > best_f:
            best_f, best_j = f, j
    chosen = []
    for row in table:
        fs = [f_of(*c) for c in row]
        chosen.append(fs.index(max(fs)))
    sums = [sum(table[i][j][k] for i, j in enumerate(chosen)) for k in range(3)]
    per_image_f = [[f_of(*c) for c in row] for row in table]
    return best_f, thresholds[best_j], f_of(*sums), per_image_f


def own_class_contour_naive(labels: np.ndarray, connectivity: int = 4, ignore=None) -> np.ndarray:
    """Per pixel: does any in-image neighbour carry another, labelled class?

    The contour of class c is this map restricted to ``labels == c``.
    """
    h, w = labels.shape
    nbrs = N4 if connectivity == 4 else N8
    out = np.zeros((h, w), dtype=bool)
    lab = labels.tolist()
    for y in range(h):
        row = lab[y]
        for x in range(w):
            c = row[x]
            if c == ignore:
                continue
            for dy, dx in nbrs:
                yy, xx = y + dy, x + dx
                if 0 <= yy < h and 0 <= xx < w:
                    v = lab[yy][xx]
                    if v != c and v != ignore:
                        out[y, x] = True
                        break
    return out

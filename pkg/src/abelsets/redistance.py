"""Signed distance to the piecewise-linear zero set of a sampled field."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


def _edge_crossings(phi: np.ndarray, pos: np.ndarray):
    """Sub-cell crossing points on horizontal and vertical grid edges (NaN if none)."""
    h = np.full(phi.shape[:1] + (phi.shape[1] - 1,), np.nan)
    v = np.full((phi.shape[0] - 1,) + phi.shape[1:], np.nan)
    a, b = phi[:, :-1], phi[:, 1:]
    m = pos[:, :-1] != pos[:, 1:]
    h[m] = a[m] / (a[m] - b[m])
    a, b = phi[:-1, :], phi[1:, :]
    m = pos[:-1, :] != pos[1:, :]
    v[m] = a[m] / (a[m] - b[m])
    return h, v


def zero_set_segments(phi: np.ndarray) -> np.ndarray:
    """Marching-squares segments of ``{phi = 0}`` in (row, col) index units.

    Returns an array of shape (n, 2, 2) plus, per segment, its cell. Saddle cells
    are split by the sign of the cell-average value.
    """
    pos = phi > 0
    h, v = _edge_crossings(phi, pos)
    H, W = phi.shape
    ii, jj = np.mgrid[0 : H - 1, 0 : W - 1]
    # crossing points per cell edge, as (row, col)
    top = np.stack([ii + 0.0, jj + h[:-1, :]], -1)
    bot = np.stack([ii + 1.0, jj + h[1:, :]], -1)
    lef = np.stack([ii + v[:, :-1], jj + 0.0], -1)
    rig = np.stack([ii + v[:, 1:], jj + 1.0], -1)
    has = np.stack([~np.isnan(h[:-1, :]), ~np.isnan(h[1:, :]),
                    ~np.isnan(v[:, :-1]), ~np.isnan(v[:, 1:])], -1)
    pts = np.stack([top, bot, lef, rig], -2)  # (H-1, W-1, 4, 2)
    count = has.sum(-1)

    segs, cells = [], []
    two = count == 2
    if two.any():
        p = pts[two]
        k = has[two]
        order = np.argsort(~k, axis=1, kind="stable")[:, :2]
        sel = np.take_along_axis(p, order[:, :, None], axis=1)
        segs.append(sel)
        cells.append(np.stack([ii[two], jj[two]], -1))
    four = count == 4
    if four.any():
        p = pts[four]
        c = 0.25 * (phi[:-1, :-1] + phi[:-1, 1:] + phi[1:, :-1] + phi[1:, 1:])[four]
        joined = (c > 0) == pos[:-1, :-1][four]  # top-left joined to bottom-right
        # edge order: top 0, bottom 1, left 2, right 3
        pa = np.where(joined[:, None], np.array([0, 3]), np.array([0, 2]))
        pb = np.where(joined[:, None], np.array([2, 1]), np.array([3, 1]))
        s1 = np.take_along_axis(p, pa[:, :, None], axis=1)
        s2 = np.take_along_axis(p, pb[:, :, None], axis=1)
        segs += [s1, s2]
        cc = np.stack([ii[four], jj[four]], -1)
        cells += [cc, cc]
    if not segs:
        return np.zeros((0, 2, 2)), np.zeros((0, 2), dtype=int)
    return np.concatenate(segs), np.concatenate(cells)


def _point_segment(p, a, b):
    ab = b - a
    den = np.sum(ab * ab, -1)
    t = np.where(den > 0, np.sum((p - a) * ab, -1) / np.where(den > 0, den, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    q = a + t[..., None] * ab
    return np.sqrt(np.sum((p - q) ** 2, -1)), q


def signed_distance(phi: np.ndarray, spacing: float = 1.0):
    """Signed distance (positive where ``phi > 0``) to the interpolated zero set.

    Corners of interface cells get the exact distance to the nearby segments.
    Every other node takes its exact Euclidean distance to a dense sample of the
    interface (closest points of the band nodes and all segment end points),
    found with a k-d tree. Returns ``(distance, found)``; ``found`` is
    False when the field has no zero crossing, in which case ``phi`` is returned.
    """
    phi = np.asarray(phi, dtype=np.float64)
    segs, cells = zero_set_segments(phi)
    if len(segs) == 0:
        return phi.copy(), False
    H, W = phi.shape

    # candidates: 4x4 node block around each segment's cell
    off = np.arange(-1, 3)
    di, dj = np.meshgrid(off, off, indexing="ij")
    ni = cells[:, 0, None] + di.ravel()[None, :]
    nj = cells[:, 1, None] + dj.ravel()[None, :]
    ok = (ni >= 0) & (ni < H) & (nj >= 0) & (nj < W)
    seg_idx = np.broadcast_to(np.arange(len(segs))[:, None], ni.shape)[ok]
    ni, nj = ni[ok], nj[ok]
    p = np.stack([ni, nj], -1).astype(np.float64)
    d, q = _point_segment(p, segs[seg_idx, 0], segs[seg_idx, 1])

    flat = ni * W + nj
    order = np.lexsort((d, flat))
    flat, d, q = flat[order], d[order], q[order]
    first = np.ones(len(flat), dtype=bool)
    first[1:] = flat[1:] != flat[:-1]
    flat, d, q = flat[first], d[first], q[first]

    # only corners of interface cells are guaranteed to see their nearest segment
    corner = np.zeros((H, W), dtype=bool)
    for a in (0, 1):
        for b in (0, 1):
            corner[cells[:, 0] + a, cells[:, 1] + b] = True
    keep = corner.ravel()[flat]
    flat, d, q = flat[keep], d[keep], q[keep]
    band = np.zeros(H * W, dtype=bool)
    band[flat] = True
    feat = np.zeros((H * W, 2))
    feat[flat] = q
    dist = np.zeros(H * W)
    dist[flat] = d
    band = band.reshape(H, W)

    if not band.all():
        # nearest interface sample for everything off the band; samples are the
        # band's closest points plus the segment end points
        pts = np.concatenate([q, segs.reshape(-1, 2)])
        gi, gj = np.nonzero(~band)
        far, _ = cKDTree(pts).query(np.stack([gi, gj], -1).astype(np.float64))
        dist[gi * W + gj] = far

    dist = dist.reshape(H, W) * spacing
    return np.where(phi > 0, dist, -dist), True

"""Incremental Bowyer-Watson Delaunay triangulation.

Only the maximum edge length is consumed downstream (the lower bound on the
compact-support radius), so exact predicates are unnecessary: cocircular
ties flip diagonals of equal length and cannot change the maximum edge by
more than floating-point noise.
"""

import numpy as np

from .errors import DegenerateInputError


def _circumcircle(pts, ia, ib, ic):
    """Circumcenter and squared radius of triangle (ia, ib, ic)."""
    ax, ay = pts[ia]
    bx, by = pts[ib]
    cx, cy = pts[ic]
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        return None
    a2 = ax * ax + ay * ay
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    r2 = (ax - ux) ** 2 + (ay - uy) ** 2
    return ux, uy, r2


def _is_collinear(pts):
    p0 = pts[0]
    v = pts - p0
    cross = np.abs(v[:, None, 0] * v[None, :, 1] - v[:, None, 1] * v[None, :, 0])
    scale = max(np.abs(v).max(), 1.0)
    return cross.max() <= 1e-12 * scale * scale


def delaunay_triangles(points):
    """Triangulate a 2D point set; returns index triples into `points`.

    Raises DegenerateInputError for fewer than 3 points or a collinear set.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DegenerateInputError(f"expected an (N, 2) point array, got {pts.shape}")
    n = len(pts)
    if n < 3:
        raise DegenerateInputError(f"need at least 3 points, got {n}")
    if _is_collinear(pts):
        raise DegenerateInputError("points are collinear")

    # Work on a centered, scaled copy for numerical robustness.
    center = pts.mean(axis=0)
    scale = np.abs(pts - center).max()
    work = (pts - center) / scale

    big = 64.0
    work = np.vstack(
        [work, [[-big, -big], [big, -big], [0.0, 3.0 * big]]]
    )
    s0, s1, s2 = n, n + 1, n + 2

    # Each triangle: (i, j, k, ux, uy, r2) with a cached circumcircle.
    tris = []
    cc = _circumcircle(work, s0, s1, s2)
    tris.append((s0, s1, s2, cc))

    for ip in range(n):
        px, py = work[ip]
        bad = []
        keep = []
        for tri in tris:
            ux, uy, r2 = tri[3]
            if (px - ux) ** 2 + (py - uy) ** 2 < r2:
                bad.append(tri)
            else:
                keep.append(tri)
        # Boundary of the cavity: edges not shared by two bad triangles.
        edge_count = {}
        for i, j, k, _ in bad:
            for e in ((i, j), (j, k), (k, i)):
                key = (min(e), max(e))
                edge_count[key] = edge_count.get(key, 0) + 1
        tris = keep
        for (i, j), cnt in edge_count.items():
            if cnt != 1:
                continue
            cc = _circumcircle(work, i, j, ip)
            if cc is None:
                continue
            tris.append((i, j, ip, cc))

    out = [
        (i, j, k)
        for i, j, k, _ in tris
        if i < n and j < n and k < n
    ]
    if not out:
        raise DegenerateInputError("triangulation produced no triangles")
    return out


def delaunay_max_edge(points):
    """Maximum edge length over all Delaunay triangles of the point set."""
    pts = np.asarray(points, dtype=float)
    tris = delaunay_triangles(pts)
    best = 0.0
    for i, j, k in tris:
        for a, b in ((i, j), (j, k), (k, i)):
            d = float(np.hypot(*(pts[a] - pts[b])))
            if d > best:
                best = d
    return best

"""Planar primitives for piece boundaries: winding tests, polyline
resampling, and inverse-image tracking of curves under the map."""

from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import GeometryError

__all__ = [
    "winding_number",
    "point_in_polygon",
    "distance_to_polyline",
    "polyline_length",
    "resample_polyline",
    "hausdorff_distance",
    "polygon_area",
    "pullback_polyline",
]


def winding_number(polygon: np.ndarray, z: complex) -> int:
    """Winding number of a closed polygon around z.

    The polygon is an array of complex vertices; the closing edge from the
    last vertex back to the first is implied.
    """
    pts = np.asarray(polygon, dtype=complex)
    if len(pts) < 3:
        raise GeometryError("polygon needs at least 3 vertices")
    a = pts - z
    b = np.roll(pts, -1) - z
    # sum of signed crossings of the positive real axis
    total = 0
    ya, yb = a.imag, b.imag
    for i in range(len(pts)):
        y0, y1 = ya[i], yb[i]
        if y0 * y1 < 0:
            # edge crosses the horizontal line through z; check which side
            x_cross = a[i].real + y0 / (y0 - y1) * (b[i].real - a[i].real)
            if x_cross > 0:
                total += 1 if y1 > y0 else -1
        elif y0 == 0 and a[i].real > 0:
            # vertex exactly on the ray: count half a crossing on each side
            if y1 > 0:
                total += 0.5
            elif y1 < 0:
                total -= 0.5
        elif y1 == 0 and b[i].real > 0:
            if y0 < 0:
                total += 0.5
            elif y0 > 0:
                total -= 0.5
    return int(round(total))


def point_in_polygon(polygon: np.ndarray, z: complex) -> bool:
    return winding_number(polygon, z) != 0


def _segment_distances(pts: np.ndarray, z: complex) -> np.ndarray:
    a = pts[:-1]
    b = pts[1:]
    ab = b - a
    az = z - a
    denom = np.abs(ab) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.clip((az.real * ab.real + az.imag * ab.imag) / denom, 0.0, 1.0)
    s = np.where(denom == 0, 0.0, s)
    return np.abs(z - (a + s * ab))


def distance_to_polyline(pts: np.ndarray, z: complex) -> float:
    """Euclidean distance from z to an open polyline."""
    pts = np.asarray(pts, dtype=complex)
    if len(pts) == 0:
        raise GeometryError("empty polyline")
    if len(pts) == 1:
        return abs(z - pts[0])
    return float(np.min(_segment_distances(pts, z)))


def polyline_length(pts: np.ndarray) -> float:
    pts = np.asarray(pts, dtype=complex)
    if len(pts) < 2:
        return 0.0
    return float(np.sum(np.abs(np.diff(pts))))


def resample_polyline(pts: np.ndarray, spacing: float) -> np.ndarray:
    """Resample at (approximately) uniform arc length, keeping endpoints.

    Output spacing never exceeds `spacing`; vertices are interpolated on the
    original segments so the shape is unchanged up to the sampling density.
    """
    pts = np.asarray(pts, dtype=complex)
    if spacing <= 0:
        raise GeometryError("spacing must be positive")
    if len(pts) < 2:
        return pts.copy()
    seg = np.abs(np.diff(pts))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total == 0:
        return pts[:1].copy()
    n = max(1, int(math.ceil(total / spacing)))
    targets = np.linspace(0.0, total, n + 1)
    out = np.interp(targets, cum, pts.real) + 1j * np.interp(targets, cum, pts.imag)
    return out


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point sets (vertices only;
    resample first when segment geometry matters)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if len(a) == 0 or len(b) == 0:
        raise GeometryError("empty point set")
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def polygon_area(pts: np.ndarray) -> float:
    """Signed area (positive for counterclockwise vertex order)."""
    pts = np.asarray(pts, dtype=complex)
    if len(pts) < 3:
        return 0.0
    x, y = pts.real, pts.imag
    return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _nearest_root(fmap, w: complex, near: complex) -> complex:
    """The d-th root of (w - c) closest to `near`."""
    d = fmap.degree
    base = w - fmap.c
    if base == 0:
        return 0j
    r = abs(base) ** (1.0 / d)
    phi = cmath.phase(base) / d
    best, best_dist = None, math.inf
    for k in range(d):
        cand = cmath.rect(r, phi + 2 * math.pi * k / d)
        dist = abs(cand - near)
        if dist < best_dist:
            best, best_dist = cand, dist
    return best


def pullback_polyline(
    fmap,
    pts: np.ndarray,
    seed: complex,
    max_subdivide: int = 24,
) -> np.ndarray:
    """Track one branch of f^{-1} along a polyline.

    `seed` selects the branch: the first output vertex is the preimage of
    pts[0] closest to it. Subsequent vertices follow by continuity; segments
    whose preimages jump too far are subdivided in the image plane so the
    branch cannot be dropped near a critical value.
    """
    pts = np.asarray(pts, dtype=complex)
    if len(pts) == 0:
        raise GeometryError("empty polyline")
    z = _nearest_root(fmap, pts[0], seed)
    out = [z]
    for w_prev, w_next in zip(pts[:-1], pts[1:]):
        stack = [(w_prev, w_next, 0)]
        while stack:
            wa, wb, depth = stack.pop()
            cand = _nearest_root(fmap, wb, z)
            # continuity heuristic: accept when the step downstairs is small
            # against the separation of the d roots at this point
            sep = abs(cand) * (2 * math.sin(math.pi / fmap.degree)) if cand != 0 else 0.0
            if abs(cand - z) <= max(0.45 * sep, 1e-13) or depth >= max_subdivide:
                if depth >= max_subdivide and sep > 0 and abs(cand - z) > 0.45 * sep:
                    raise GeometryError(
                        "branch tracking lost near a critical value; "
                        "refine the input polyline"
                    )
                z = cand
                out.append(z)
            else:
                mid = 0.5 * (wa + wb)
                stack.append((mid, wb, depth + 1))
                stack.append((wa, mid, depth + 1))
    return np.array(out, dtype=complex)

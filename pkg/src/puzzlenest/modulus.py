"""Conformal modulus of a doubly connected region by a grid solver.

The region is mapped by w = log(z - z_c), z_c an interior point of the
inner curve, onto a band of the theta-periodic cylinder; the Dirichlet
energy is conformally invariant, so the modulus can be computed there,
where inner and outer scales are comparable no matter how fat the
annulus is. The potential u (0 on the inner boundary, 1 on the outer)
minimizes the edge-weighted Dirichlet sum over cylinder grid nodes
between the curves. Grid edges cut by a boundary curve carry the exact
crossing offset, so the boundary enters at sub-cell accuracy and the
weighted form stays symmetric positive definite. The modulus is 1 over
the Dirichlet energy; for the round annulus r < |z| < R this
normalization gives log(R/r)/(2 pi). Each solve runs on a ladder of
dyadic grids and the energies are Richardson-extrapolated; the spread
of the extrapolation is the declared error.

The linear systems go through a deterministic sparse direct
factorization, so identical inputs give identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from matplotlib.path import Path as MplPath
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve
from scipy.spatial import cKDTree

from .errors import ModulusError, PreconditionError
from .geometry import (distance_to_polyline, polygon_area,
                       resample_polyline, winding_number)

DEFAULT_GRID = 512
DEFAULT_REFINEMENTS = 3
THIN_GAP_CELLS = 4.0
TWO_PI = 2.0 * math.pi
# golden-ratio grid stagger, as cell fractions
PHI_RHO = 0.6180339887498949
PHI_THETA = 0.3819660112501051


def _as_closed_xy(poly: np.ndarray) -> np.ndarray:
    """Complex polyline to a closed (n, 2) float array."""
    pts = np.asarray(poly, dtype=complex)
    if len(pts) >= 2 and abs(pts[0] - pts[-1]) < 1e-14:
        pts = pts[:-1]
    if len(pts) < 3:
        raise PreconditionError("boundary needs at least three vertices")
    xy = np.column_stack([pts.real, pts.imag])
    return np.vstack([xy, xy[:1]])


@dataclass(frozen=True)
class AnnulusRegion:
    """Region between two disjoint closed curves, inner strictly inside
    outer. Curves are complex polylines; closing vertices optional."""

    outer: np.ndarray
    inner: np.ndarray

    def __post_init__(self):
        ox = _as_closed_xy(self.outer)
        ix = _as_closed_xy(self.inner)
        if abs(polygon_area(np.asarray(self.outer, dtype=complex))) <= 0 or \
                abs(polygon_area(np.asarray(self.inner, dtype=complex))) <= 0:
            raise PreconditionError("boundary curve has zero area")
        opath = MplPath(ox, closed=False)
        ipath = MplPath(ix, closed=False)
        if not opath.contains_points(ix[:-1]).all():
            raise PreconditionError("inner curve is not inside the outer")
        if ipath.contains_points(ox[:-1]).any():
            raise PreconditionError("outer curve dips into the inner")

    def center(self) -> complex:
        """Area centroid of the inner curve, the log-map base point."""
        pts = np.asarray(self.inner, dtype=complex)
        if abs(pts[0] - pts[-1]) > 1e-14:
            pts = np.append(pts, pts[0])
        a, b = pts[:-1], pts[1:]
        cross = a.real * b.imag - b.real * a.imag
        area = cross.sum() / 2.0
        cent = ((a + b) * cross).sum() / (6.0 * area)
        return complex(cent)

    def translated(self, by: complex) -> "AnnulusRegion":
        return AnnulusRegion(np.asarray(self.outer, dtype=complex) + by,
                             np.asarray(self.inner, dtype=complex) + by)

    def scaled(self, factor: float) -> "AnnulusRegion":
        return AnnulusRegion(np.asarray(self.outer, dtype=complex) * factor,
                             np.asarray(self.inner, dtype=complex) * factor)

    def to_json(self) -> dict:
        o = np.asarray(self.outer, dtype=complex)
        i = np.asarray(self.inner, dtype=complex)
        return {"outer": np.column_stack([o.real, o.imag]).tolist(),
                "inner": np.column_stack([i.real, i.imag]).tolist()}


@dataclass(frozen=True)
class ModulusEstimate:
    value: float
    error: float
    grid: int

    def __post_init__(self):
        if self.value < 0 or self.error < 0:
            raise PreconditionError("modulus and error must be nonnegative")

    def agrees_with(self, other: "ModulusEstimate") -> bool:
        return abs(self.value - other.value) <= self.error + other.error

    def to_json(self) -> dict:
        return {"value": self.value, "error": self.error, "grid": self.grid}


@dataclass(frozen=True)
class LawConstants:
    """User-supplied stand-ins for the absolute constants in the moduli
    laws. The tool evaluates conclusions at these values and reports
    implied constants; it never certifies them."""

    C: float = 1.0
    eta: float = 0.25
    delta: float = 1.0
    delta0: float = 1.0
    eps: float = 0.0

    def __post_init__(self):
        if min(self.C, self.eta, self.delta, self.delta0) <= 0 or \
                self.eps < 0:
            raise PreconditionError("law constants must be positive")


# --------------------------------------------------------- log transform


def _to_cylinder(poly: np.ndarray, z_c: complex, spacing: float) -> np.ndarray:
    """Closed curve as (theta, rho) vertices, theta unwrapped so the
    last vertex sits at theta[0] + 2 pi.

    The curve is resampled in the z plane at `spacing` first; choosing
    spacing below half the distance to z_c keeps every angular step well
    under pi, so the unwrap is unambiguous."""
    pts = np.asarray(poly, dtype=complex)
    if abs(pts[0] - pts[-1]) > 1e-14:
        pts = np.append(pts, pts[0])
    pts = resample_polyline(pts, spacing) - z_c
    r = np.abs(pts)
    if r.min() <= 0:
        raise ModulusError("degenerate annulus: curve passes through "
                           "the log base point")
    theta = np.unwrap(np.angle(pts))
    if round((theta[-1] - theta[0]) / TWO_PI) != 1:
        raise ModulusError("log transform lost the curve; it does not "
                           "wind once around the base point at this "
                           "resolution")
    return np.column_stack([theta, np.log(r)])


def _check_winding(region: AnnulusRegion, z_c: complex) -> None:
    for name, poly in (("inner", region.inner), ("outer", region.outer)):
        w = winding_number(np.asarray(poly, dtype=complex), z_c)
        if w != 1:
            raise PreconditionError(
                f"{name} curve winds {w} times around the log base "
                "point; need exactly one")


# ------------------------------------------------------------------ solver


def _seam_split(curve: np.ndarray) -> np.ndarray:
    """Segments of a cylinder curve as rows (t0, r0, t1, r1) with both
    thetas shifted into one period-window per segment (t0 in [0, 2 pi),
    t1 = t0 + the true angular step, possibly past the seam)."""
    t0 = np.mod(curve[:-1, 0], TWO_PI)
    dt = curve[1:, 0] - curve[:-1, 0]
    return np.column_stack([t0, curve[:-1, 1], t0 + dt, curve[1:, 1]])


def _column_crossings(segs: np.ndarray, n_theta: int, h: float):
    """Rho coordinates where the curve crosses each grid column line
    theta = i h, i = 0..n_theta-1. Half-open test keeps the crossing
    parity consistent when a vertex lands on a line."""
    out = [[] for _ in range(n_theta)]
    t0, r0, t1, r1 = segs.T
    k_lo = np.floor(np.minimum(t0, t1) / h).astype(int)
    k_hi = np.ceil(np.maximum(t0, t1) / h).astype(int)
    for s in range(len(segs)):
        if t1[s] == t0[s]:
            continue
        for k in range(k_lo[s], k_hi[s] + 1):
            v = k * h
            if (t0[s] <= v) != (t1[s] <= v):
                t = (v - t0[s]) / (t1[s] - t0[s])
                out[k % n_theta].append(r0[s] + t * (r1[s] - r0[s]))
    return [np.sort(np.array(c)) for c in out]


def _row_crossings(segs: np.ndarray, rho0: float, h: float, n_rho: int):
    """Theta coordinates (wrapped) where the curve crosses each grid row
    line rho = rho0 + j h. Half-open, as above."""
    out = [[] for _ in range(n_rho)]
    t0, r0, t1, r1 = segs.T
    for s in range(len(segs)):
        ra, rb = r0[s], r1[s]
        if ra == rb:
            continue
        j_lo = int(np.floor((min(ra, rb) - rho0) / h))
        j_hi = int(np.ceil((max(ra, rb) - rho0) / h))
        for j in range(max(j_lo, 0), min(j_hi, n_rho - 1) + 1):
            v = rho0 + j * h
            if (ra <= v) != (rb <= v):
                t = (v - ra) / (rb - ra)
                out[j].append(np.mod(t0[s] + t * (t1[s] - t0[s]), TWO_PI))
    return [np.sort(np.array(c)) for c in out]


def _solve_energy(region: AnnulusRegion, grid: int, z_c: complex) -> float:
    """Dirichlet energy of the discrete potential on one cylinder grid."""
    h = TWO_PI / grid

    def cyl(poly):
        pts = np.asarray(poly, dtype=complex)
        if abs(pts[0] - pts[-1]) > 1e-14:
            pts = np.append(pts, pts[0])
        dist = distance_to_polyline(pts, z_c)
        if dist <= 0:
            raise ModulusError("degenerate annulus: curve passes "
                               "through the log base point")
        # spacing dist*h/2 bounds each step by h/2 cylinder units
        return _to_cylinder(pts, z_c, dist * h / 2)

    inner = cyl(region.inner)
    outer = cyl(region.outer)

    # stagger the grid by irrational cell fractions so curve segments
    # that run exactly along a coordinate line (round arcs, ray pieces)
    # never coincide with a grid line
    inner[:, 0] -= PHI_THETA * h
    outer[:, 0] -= PHI_THETA * h
    rho_min = min(inner[:, 1].min(), outer[:, 1].min())
    rho_max = max(inner[:, 1].max(), outer[:, 1].max())
    rho0 = rho_min - (3 + PHI_RHO) * h
    n_rho = int(math.ceil((rho_max + 3 * h - rho0) / h)) + 1
    n_theta = grid

    segs_i = _seam_split(inner)
    segs_o = _seam_split(outer)
    col_i = _column_crossings(segs_i, n_theta, h)
    col_o = _column_crossings(segs_o, n_theta, h)
    row_i = _row_crossings(segs_i, rho0, h, n_rho)
    row_o = _row_crossings(segs_o, rho0, h, n_rho)

    rhos = rho0 + h * np.arange(n_rho)
    below_i = np.empty((n_theta, n_rho), dtype=bool)
    below_o = np.empty((n_theta, n_rho), dtype=bool)
    for i in range(n_theta):
        below_i[i] = np.searchsorted(col_i[i], rhos) % 2 == 0
        below_o[i] = np.searchsorted(col_o[i], rhos) % 2 == 0
    unknown = below_o & ~below_i
    value = np.where(below_i, 0.0, 1.0)   # 1 above the outer curve

    if not unknown.any():
        raise ModulusError("degenerate annulus: no interior nodes at "
                           f"grid {grid}")

    big = np.inf
    # vertical edges: (i, j) -- (i, j+1), cut offsets from the column pass
    fv_min = np.full((n_theta, n_rho - 1), big)
    fv_max = np.full((n_theta, n_rho - 1), -big)
    vv_min = np.zeros((n_theta, n_rho - 1))
    vv_max = np.zeros((n_theta, n_rho - 1))
    for i in range(n_theta):
        for xs, val in ((col_i[i], 0.0), (col_o[i], 1.0)):
            if not len(xs):
                continue
            rel = (xs - rho0) / h
            jj = np.floor(rel).astype(int)
            fr = rel - jj
            ok = (jj >= 0) & (jj < n_rho - 1)
            for j, f in zip(jj[ok], fr[ok]):
                if f < fv_min[i, j]:
                    fv_min[i, j] = f
                    vv_min[i, j] = val
                if f > fv_max[i, j]:
                    fv_max[i, j] = f
                    vv_max[i, j] = val
    # horizontal edges: (i, j) -- (i+1 mod n, j), cut offsets per row
    fh_min = np.full((n_theta, n_rho), big)
    fh_max = np.full((n_theta, n_rho), -big)
    vh_min = np.zeros((n_theta, n_rho))
    vh_max = np.zeros((n_theta, n_rho))
    for j in range(n_rho):
        for xs, val in ((row_i[j], 0.0), (row_o[j], 1.0)):
            if not len(xs):
                continue
            rel = xs / h
            ii = np.floor(rel).astype(int) % n_theta
            fr = rel - np.floor(rel)
            for i, f in zip(ii, fr):
                if f < fh_min[i, j]:
                    fh_min[i, j] = f
                    vh_min[i, j] = val
                if f > fh_max[i, j]:
                    fh_max[i, j] = f
                    vh_max[i, j] = val

    idx = np.full((n_theta, n_rho), -1, dtype=int)
    flat = np.flatnonzero(unknown.ravel())
    idx.ravel()[flat] = np.arange(len(flat))
    n = len(flat)
    rows, cols, data = [], [], []
    diag = np.zeros(n)
    rhs = np.zeros(n)
    theta_floor = 1e-3
    degenerate = 0

    def add_family(pu, qu, pidx, qidx, pval, qval, fmin, fmax, vmin, vmax):
        nonlocal degenerate
        cut = np.isfinite(fmin)
        both = pu & qu
        ip, iq = pidx[both], qidx[both]
        ones = np.ones(len(ip))
        rows.extend([ip, iq])
        cols.extend([iq, ip])
        data.extend([-ones, -ones])
        np.add.at(diag, ip, 1.0)
        np.add.at(diag, iq, 1.0)
        pm = pu & ~qu
        th = np.where(cut, np.maximum(fmin, theta_floor), 1.0)
        gv = np.where(cut, vmin, qval)
        w = 1.0 / th[pm]
        np.add.at(diag, pidx[pm], w)
        np.add.at(rhs, pidx[pm], w * gv[pm])
        qm = qu & ~pu
        th = np.where(cut, np.maximum(1.0 - fmax, theta_floor), 1.0)
        gv = np.where(cut, vmax, pval)
        w = 1.0 / th[qm]
        np.add.at(diag, qidx[qm], w)
        np.add.at(rhs, qidx[qm], w * gv[qm])
        pinch = ~pu & ~qu & cut & (pval != qval)
        degenerate += int(pinch.sum())

    # vertical family
    add_family(unknown[:, :-1], unknown[:, 1:], idx[:, :-1], idx[:, 1:],
               value[:, :-1], value[:, 1:], fv_min, fv_max, vv_min, vv_max)
    # horizontal family with periodic wrap
    un_r = np.roll(unknown, -1, axis=0)
    idx_r = np.roll(idx, -1, axis=0)
    val_r = np.roll(value, -1, axis=0)
    add_family(unknown, un_r, idx, idx_r, value, val_r,
               fh_min, fh_max, vh_min, vh_max)

    if degenerate:
        raise ModulusError(
            "degenerate annulus: curves touch at grid scale "
            f"({degenerate} pinched cells at grid {grid})")

    rows.append(np.arange(n))
    cols.append(np.arange(n))
    data.append(diag)
    A = coo_matrix((np.concatenate(data),
                    (np.concatenate(rows), np.concatenate(cols))),
                   shape=(n, n)).tocsc()
    u = spsolve(A, rhs)

    uu = np.where(unknown, 0.0, value)
    uu[unknown] = u

    def fam_energy(pu, qu, pv, qv, fmin, fmax, vmin, vmax):
        cut = np.isfinite(fmin)
        e = np.zeros(pu.shape)
        both = pu & qu
        e[both] = (qv[both] - pv[both]) ** 2
        pm = pu & ~qu
        th = np.where(cut, np.maximum(fmin, theta_floor), 1.0)
        gv = np.where(cut, vmin, qv)
        e[pm] = (gv[pm] - pv[pm]) ** 2 / th[pm]
        qm = qu & ~pu
        th = np.where(cut, np.maximum(1.0 - fmax, theta_floor), 1.0)
        gv = np.where(cut, vmax, pv)
        e[qm] = (qv[qm] - gv[qm]) ** 2 / th[qm]
        return float(e.sum())

    uu_r = np.roll(uu, -1, axis=0)
    energy = fam_energy(unknown[:, :-1], unknown[:, 1:],
                        uu[:, :-1], uu[:, 1:],
                        fv_min, fv_max, vv_min, vv_max)
    energy += fam_energy(unknown, un_r, uu, uu_r,
                         fh_min, fh_max, vh_min, vh_max)
    if energy <= 0:
        raise ModulusError("degenerate annulus: zero Dirichlet energy")
    return energy


def _cylinder_gap(region: AnnulusRegion, z_c: complex) -> float:
    """Minimal cylinder distance between the transformed curves."""

    def fine(poly):
        pts = np.asarray(poly, dtype=complex)
        if abs(pts[0] - pts[-1]) > 1e-14:
            pts = np.append(pts, pts[0])
        dist = distance_to_polyline(pts, z_c)
        if dist <= 0:
            raise ModulusError("degenerate annulus: curve passes "
                               "through the log base point")
        return _to_cylinder(pts, z_c, dist / 512)

    a = fine(region.outer)
    b = fine(region.inner)
    aw = np.mod(a[:, 0], TWO_PI)
    tiled = np.vstack([np.column_stack([aw + k, a[:, 1]])
                       for k in (-TWO_PI, 0.0, TWO_PI)])
    tree = cKDTree(tiled)
    d, _ = tree.query(np.column_stack([np.mod(b[:, 0], TWO_PI), b[:, 1]]))
    return float(d.min())


def modulus(region: AnnulusRegion, base_grid: int = DEFAULT_GRID,
            refinements: int = DEFAULT_REFINEMENTS) -> ModulusEstimate:
    """Conformal modulus with a declared error bar.

    Solves on `refinements` dyadic grid levels ending at base_grid and
    Richardson-extrapolates. Raises "grids disagree" when the ladder
    does not behave like a convergent refinement and "degenerate
    annulus" when the region pinches below the finest cells. Regions
    thinner than four cells, and ladders that fail to contract on the
    first try, escalate base_grid once before giving up.
    """
    if refinements < 2:
        raise PreconditionError("need at least two grid levels")
    z_c = region.center()
    _check_winding(region, z_c)
    gap = _cylinder_gap(region, z_c)
    if gap <= 0:
        raise ModulusError("degenerate annulus: curves touch")
    if gap < THIN_GAP_CELLS * TWO_PI / base_grid:
        base_grid *= 2
        if gap < THIN_GAP_CELLS * TWO_PI / base_grid:
            raise ModulusError(
                "degenerate annulus: gap stays below "
                f"{THIN_GAP_CELLS:g} cells even at grid {base_grid}")
    try:
        return _ladder(region, z_c, base_grid, refinements)
    except ModulusError as exc:
        if "grids disagree" not in str(exc):
            raise
    return _ladder(region, z_c, base_grid * 2, refinements)


def _ladder(region: AnnulusRegion, z_c: complex, base_grid: int,
            refinements: int) -> ModulusEstimate:
    grids = [base_grid >> (refinements - 1 - k) for k in range(refinements)]
    if grids[0] < 16:
        raise PreconditionError("base grid too small for the ladder")
    energies = [_solve_energy(region, g, z_c) for g in grids]
    mods = [1.0 / e for e in energies]
    d_last = mods[-1] - mods[-2]
    if refinements == 2:
        err = abs(d_last) if d_last else max(1e-9 * mods[-1], 1e-12)
        return ModulusEstimate(mods[-1], err, grids[-1])
    d_prev = mods[-2] - mods[-3]
    noise = max(1e-8 * mods[-1], 1e-10)
    if abs(d_last) <= noise and abs(d_prev) <= 4 * noise:
        # converged to solver noise; the ladder has nothing left to say
        err = 2 * max(abs(d_last), abs(d_prev)) + 1e-11 * mods[-1]
        return ModulusEstimate(mods[-1], err, grids[-1])
    ratio = d_prev / d_last
    if ratio <= 1.0:
        raise ModulusError(
            "grids disagree: refinement differences not contracting "
            f"({d_prev:.3e} then {d_last:.3e}); region too thin for "
            f"grid {grids[-1]}")
    p = min(max(math.log2(ratio), 0.5), 3.0)
    correction = d_last / (2 ** p - 1)
    value = mods[-1] + correction
    # declared error covers the extrapolation step and the raw spread
    # of the last refinement, so successive grids agree within it
    error = abs(correction) + abs(d_last)
    if value <= 0:
        raise ModulusError("grids disagree: extrapolation left the "
                           "feasible range")
    return ModulusEstimate(value, error, grids[-1])


# ------------------------------------------------------ canned geometries


def circle(radius: float, center: complex = 0j, n: int = 720) -> np.ndarray:
    th = np.linspace(0.0, TWO_PI, n, endpoint=False)
    return center + radius * np.exp(1j * th)


def square(side: float, center: complex = 0j, n_per_side: int = 180) -> np.ndarray:
    s = side / 2.0
    corners = [center + complex(-s, -s), center + complex(s, -s),
               center + complex(s, s), center + complex(-s, s)]
    pts = []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        pts.append(np.linspace(a, b, n_per_side, endpoint=False))
    return np.concatenate(pts)


def round_annulus(r: float, R: float, center: complex = 0j) -> AnnulusRegion:
    if not 0 < r < R:
        raise PreconditionError("need 0 < r < R")
    return AnnulusRegion(circle(R, center), circle(r, center))


def round_modulus(r: float, R: float) -> float:
    """Analytic value for the round annulus."""
    return math.log(R / r) / (2 * math.pi)

"""Depth-n puzzle pieces cut by landing rays and equipotentials.

The depth-0 partition is the q sectors cut at the dividing fixed point; the
depth-1 partition refines it by the full preimage of the ray skeleton. Both
are assembled combinatorially: the equipotential arcs between circularly
consecutive skeleton angles form a permutation (after the arc ending at
angle phi, descend phi's ray, climb back up along the cyclic predecessor of
phi inside its landing cluster, keeping the face on the left) whose cycles
are exactly the pieces.

Pieces are identified by symbolic addresses (itineraries of depth-1 sector
labels) plus a witness point. Itineraries cannot distinguish the d
components of a preimage through the critical sector (the deck rotation
z -> e^{2pi i/d} z preserves every label), so distinct components may share
one address; the registry keeps them apart by witness, deciding sameness by
witness proximity or a winding test on the realized boundary. Critical
pieces are deck-invariant, hence unique per address: membership and
containment tests against them are exact on addresses alone.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from matplotlib.path import Path as MplPath

from .angles import ExternalAngle
from .dynamics import (
    FixedPointData,
    RayPolyline,
    StepControl,
    UnicriticalMap,
    green_potential,
    ray_point,
    trace_ray,
)
from .errors import (
    BoundaryProximityError,
    CombinatoricsError,
    GeometryError,
    PreconditionError,
    RayTraceError,
)
from .geometry import distance_to_polyline, pullback_polyline, resample_polyline

EPS_GEO = 1e-6


@dataclass(frozen=True)
class PuzzleAddress:
    """Symbolic position at a given depth.

    itinerary[k] is the depth-1 sector label of f^k(z) for k < depth, and
    the depth-0 sector label of f^depth(z) at the end; length = depth + 1.
    """

    depth: int
    itinerary: tuple[str, ...]

    def __post_init__(self):
        if self.depth < 0:
            raise PreconditionError("depth must be nonnegative")
        if len(self.itinerary) != self.depth + 1:
            raise PreconditionError("itinerary length must equal depth + 1")

    def shifted(self) -> "PuzzleAddress":
        """Address of f(z) at depth - 1."""
        if self.depth == 0:
            raise PreconditionError("cannot shift a depth-0 address")
        return PuzzleAddress(self.depth - 1, self.itinerary[1:])

    def __str__(self) -> str:
        return "/".join(self.itinerary)


@dataclass(eq=False)
class PuzzlePiece:
    """One puzzle piece: symbolic address, a witness interior point, and
    geometry realized on demand."""

    address: PuzzleAddress
    witness: complex
    level: float                     # equipotential level bounding the piece
    is_critical: bool
    boundary_angles: tuple[Fraction, ...] = ()
    corner_clusters: tuple[frozenset, ...] = ()
    _boundary: np.ndarray | None = field(default=None, repr=False)
    _path: MplPath | None = field(default=None, repr=False)
    parent: "PuzzlePiece | None" = field(default=None, repr=False)

    @property
    def depth(self) -> int:
        return self.address.depth

    def boundary(self) -> np.ndarray:
        if self._boundary is None:
            raise GeometryError("piece boundary not realized")
        return self._boundary

    def path(self) -> MplPath:
        if self._path is None:
            b = self.boundary()
            self._path = MplPath(np.column_stack([b.real, b.imag]), closed=False)
        return self._path

    def contains(self, z: complex) -> bool:
        return bool(self.path().contains_point((z.real, z.imag)))

    def contains_many(self, zs: np.ndarray) -> np.ndarray:
        pts = np.column_stack([np.real(zs), np.imag(zs)])
        return self.path().contains_points(pts)

    def to_json(self) -> dict:
        b = self._boundary
        return {
            "address": list(self.address.itinerary),
            "depth": self.depth,
            "is_critical": self.is_critical,
            "witness": [self.witness.real, self.witness.imag],
            "boundary": None if b is None else [[z.real, z.imag] for z in b],
        }


def _face_cycles(angles: list[Fraction], clusters: list[frozenset]) -> list[list[int]]:
    """Cycles of the arc permutation.

    angles: all skeleton angles, sorted. Arc i runs counterclockwise from
    angles[i] to angles[i+1 mod n].
    """
    n = len(angles)
    index_of = {a: i for i, a in enumerate(angles)}
    pred = {}
    for cl in clusters:
        members = sorted(cl)
        for i, a in enumerate(members):
            pred[a] = members[(i - 1) % len(members)]

    def next_arc(i: int) -> int:
        return index_of[pred[angles[(i + 1) % n]]]

    seen = [False] * n
    faces = []
    for start in range(n):
        if seen[start]:
            continue
        cyc = []
        i = start
        while not seen[i]:
            seen[i] = True
            cyc.append(i)
            i = next_arc(i)
        faces.append(cyc)
    return faces


class PuzzleComplex:
    """The two base partitions plus lazily realized deeper pieces.

    Population happens once behind a lock; reads of populated data are safe
    from any thread.
    """

    def __init__(
        self,
        fmap: UnicriticalMap,
        fixed: FixedPointData,
        level: float = 1.0,
        control: StepControl | None = None,
        eps_geo: float = EPS_GEO,
    ):
        if level <= 0:
            raise PreconditionError("equipotential level must be positive")
        self.fmap = fmap
        self.fixed = fixed
        self.level = float(level)
        self.control = control or StepControl()
        self.eps_geo = eps_geo
        self._lock = threading.RLock()
        self._rays: dict[Fraction, RayPolyline] = {}
        self.depth0: list[PuzzlePiece] = []
        self.depth1: list[PuzzlePiece] = []
        self.pieces: dict[tuple[int, tuple[str, ...]], list[PuzzlePiece]] = {}
        self._skeleton0: list[np.ndarray] = []
        self._skeleton1: list[np.ndarray] = []
        self._build_base()

    # ------------------------------------------------------------------ rays

    def _ray(self, angle: Fraction) -> RayPolyline:
        with self._lock:
            cached = self._rays.get(angle)
        if cached is not None:
            return cached
        ray = trace_ray(
            self.fmap,
            ExternalAngle(angle),
            from_potential=self.level,
            control=self.control,
        )
        if ray.landing_point is None:
            raise RayTraceError(
                f"ray {ExternalAngle(angle)} failed to land ({ray.status})"
            )
        with self._lock:
            self._rays[angle] = ray
        return ray

    def _ray_segment(self, angle: Fraction, level: float) -> np.ndarray:
        """Ray points at potentials <= level, landing point included."""
        ray = self._ray(angle)
        pts = [z for (t, z) in ray.samples if t <= level * (1 + 1e-9)]
        pts.append(ray.landing_point)
        return np.array(pts, dtype=complex)

    def _descend(self, angle: Fraction, t_from: float, t_to: float, seed: complex) -> complex:
        """Point at potential t_to on the ray, stepped down from a seed at t_from."""
        z, t = seed, t_from
        while t > t_to * (1 + 1e-12):
            t = max(t / 2, t_to)
            z, _ = ray_point(self.fmap, t, angle, seed=z)
        return z

    def _arc(self, level: float, a: Fraction, b: Fraction, samples_per_turn: int = 720) -> np.ndarray:
        """Equipotential arc from angle a counterclockwise to angle b."""
        span = (b - a) % 1
        if span == 0:
            span = Fraction(1)
        n = max(8, int(samples_per_turn * float(span)))
        seed = None
        out = []
        for k in range(n + 1):
            theta = (Fraction(a) + Fraction(k, n) * span) % 1
            if seed is None:
                z = self._descend(theta, max(self.level, 2.5), level,
                                  ray_point(self.fmap, max(level, 2.5), theta)[0])
            else:
                z, _ = ray_point(self.fmap, level, theta, seed=seed)
            seed = z
            out.append(z)
        return np.array(out, dtype=complex)

    # ------------------------------------------------------------ base build

    def _build_base(self) -> None:
        q = self.fixed.q
        d = self.fmap.degree
        cycle = sorted(a.value for a in self.fixed.cycle)
        alpha_cluster = frozenset(cycle)

        faces0 = _face_cycles(cycle, [alpha_cluster])
        if len(faces0) != q:
            raise CombinatoricsError(
                f"depth-0 face walk produced {len(faces0)} sectors, expected {q}"
            )
        # the ray of angle theta + j/d lands at omega^j alpha, so the depth-1
        # landing clusters are the cycle translated by j/d
        angles1 = sorted((th + Fraction(j, d)) % 1 for th in cycle for j in range(d))
        clusters1 = [
            frozenset((th + Fraction(j, d)) % 1 for th in cycle) for j in range(d)
        ]
        faces1 = _face_cycles(angles1, clusters1)
        if len(faces1) != (q - 1) * d + 1:
            raise CombinatoricsError(
                f"depth-1 face walk produced {len(faces1)} pieces, "
                f"expected {(q - 1) * d + 1}"
            )

        pieces0 = self._realize_faces(cycle, [alpha_cluster], faces0, self.level)
        level1 = self.level / d
        pieces1 = self._realize_faces(angles1, clusters1, faces1, level1)

        # depth-0 labels S0..S{q-1}, ordered by smallest boundary angle
        pieces0.sort(key=lambda rec: min(rec["angles"]))
        self.depth0 = [
            self._finish_piece(PuzzleAddress(0, (f"S{i}",)), rec, self.level)
            for i, rec in enumerate(pieces0)
        ]
        self._skeleton0 = [self._ray_segment(a, self.level) for a in cycle] + [
            self._arc(self.level, Fraction(0), Fraction(0))
        ]

        # depth-1 labels: Y1 critical, Y1_i touching alpha, Z1_j elsewhere
        crit = [rec for rec in pieces1 if rec["critical"]]
        if len(crit) != 1:
            raise CombinatoricsError(
                f"{len(crit)} depth-1 pieces claim the critical point"
            )
        touches_alpha = lambda rec: any(a in alpha_cluster for a in rec["angles"])  # noqa: E731
        alpha_touch = sorted(
            (rec for rec in pieces1 if not rec["critical"] and touches_alpha(rec)),
            key=lambda rec: min(rec["angles"]),
        )
        rest = sorted(
            (rec for rec in pieces1 if not rec["critical"] and not touches_alpha(rec)),
            key=lambda rec: min(rec["angles"]),
        )
        self._skeleton1 = [self._ray_segment(a, level1) for a in angles1] + [
            self._arc(level1, Fraction(0), Fraction(0))
        ]

        labeled = [("Y1", crit[0])]
        labeled += [(f"Y1_{i + 1}", rec) for i, rec in enumerate(alpha_touch)]
        labeled += [(f"Z1_{j + 1}", rec) for j, rec in enumerate(rest)]
        self.depth1 = []
        for label, rec in labeled:
            # second symbol: depth-0 sector of the image of the piece
            addr = PuzzleAddress(
                1, (label, self._depth0_label(self.fmap(rec["witness"])))
            )
            self.depth1.append(self._finish_piece(addr, rec, level1))

        for p in self.depth0 + self.depth1:
            self.pieces[(p.depth, p.address.itinerary)] = [p]

    def _realize_faces(self, angles, clusters, faces, level) -> list[dict]:
        """Geometric boundaries and witnesses for the faces of one depth."""
        n = len(angles)
        cluster_of = {}
        for cl in clusters:
            for a in cl:
                cluster_of[a] = cl
        recs = []
        for face in faces:
            boundary_parts = []
            face_angles = []
            corners = []
            for idx in face:
                a, b = angles[idx], angles[(idx + 1) % n]
                boundary_parts.append(self._arc(level, a, b))
                boundary_parts.append(self._ray_segment(b, level))
                face_angles.append(b)
                corners.append(cluster_of[b])
                up_angle = self._cluster_predecessor(cluster_of[b], b)
                boundary_parts.append(self._ray_segment(up_angle, level)[::-1])
                face_angles.append(up_angle)
            boundary = np.concatenate(boundary_parts)
            witness = self._face_witness(angles, face, level)
            recs.append(
                {
                    "boundary": boundary,
                    "witness": witness,
                    "angles": tuple(sorted(set(face_angles))),
                    "corners": tuple(dict.fromkeys(map(frozenset, corners))),
                    "critical": self._poly_contains(boundary, 0j),
                }
            )
        return recs

    @staticmethod
    def _cluster_predecessor(cluster: frozenset, a: Fraction) -> Fraction:
        members = sorted(cluster)
        return members[(members.index(a) - 1) % len(members)]

    def _face_witness(self, angles, face, level) -> complex:
        """A point inside the face: half level on the ray through the
        midpoint of its first arc (that ray is interior to the face)."""
        n = len(angles)
        idx = face[0]
        a, b = angles[idx], angles[(idx + 1) % n]
        span = (b - a) % 1
        if span == 0:
            span = Fraction(1)
        mid = (a + span / 2) % 1
        top, _ = ray_point(self.fmap, max(level, 2.5), mid)
        return self._descend(mid, max(level, 2.5), level / 2, top)

    @staticmethod
    def _poly_contains(boundary: np.ndarray, z: complex) -> bool:
        path = MplPath(np.column_stack([boundary.real, boundary.imag]), closed=False)
        return bool(path.contains_point((z.real, z.imag)))

    def _finish_piece(self, addr: PuzzleAddress, rec: dict, level: float) -> PuzzlePiece:
        return PuzzlePiece(
            address=addr,
            witness=rec["witness"],
            level=level,
            is_critical=rec["critical"],
            boundary_angles=rec["angles"],
            corner_clusters=rec["corners"],
            _boundary=rec["boundary"],
        )

    # ---------------------------------------------------------------- locate

    def _guard(self, z: complex, skeleton: list[np.ndarray]) -> None:
        for poly in skeleton:
            if distance_to_polyline(poly, z) < self.eps_geo:
                raise BoundaryProximityError(
                    f"point {z} is within {self.eps_geo} of the puzzle skeleton"
                )

    def _depth0_label(self, z: complex) -> str:
        self._guard(z, self._skeleton0)
        hits = [p for p in self.depth0 if p.contains(z)]
        if len(hits) != 1:
            raise GeometryError(
                f"point {z} lies in {len(hits)} depth-0 sectors; geometry inconsistent"
            )
        return hits[0].address.itinerary[0]

    def _depth1_label(self, z: complex) -> str:
        self._guard(z, self._skeleton1)
        hits = [p for p in self.depth1 if p.contains(z)]
        if len(hits) != 1:
            raise GeometryError(
                f"point {z} lies in {len(hits)} depth-1 pieces; geometry inconsistent"
            )
        return hits[0].address.itinerary[0]

    def locate(self, z: complex, depth: int) -> PuzzleAddress:
        """Itinerary of z, f(z), ..., f^depth(z) against the base partitions."""
        if depth < 0:
            raise PreconditionError("depth must be nonnegative")
        g = green_potential(self.fmap, z)
        if g is not None and g > self.level / self.fmap.degree**depth:
            raise PreconditionError(
                f"point escapes the depth-{depth} equipotential region"
            )
        labels = []
        w = z
        for _ in range(depth):
            labels.append(self._depth1_label(w))
            w = self.fmap(w)
        labels.append(self._depth0_label(w))
        return PuzzleAddress(depth, tuple(labels))

    # -------------------------------------------------------------- pullback

    def piece_at(self, address: PuzzleAddress) -> PuzzlePiece:
        group = self.pieces.get((address.depth, address.itinerary), [])
        if not group:
            raise PreconditionError(f"piece {address} not populated")
        if len(group) > 1:
            raise CombinatoricsError(
                f"address {address} names {len(group)} components; "
                "resolve through a witness"
            )
        return group[0]

    def piece_containing(self, z: complex, depth: int) -> PuzzlePiece:
        """The depth-`depth` piece around z, created by pullback along the
        orbit of z where it does not exist yet."""
        if depth <= 1:
            return self.piece_at(self.locate(z, depth))
        parent = self.piece_containing(self.fmap(z), depth - 1)
        return self.pullback_piece(parent, z)

    def pullback_piece(self, piece: PuzzlePiece, witness: complex) -> PuzzlePiece:
        """The component of f^{-1}(piece) containing `witness`.

        When the critical value lies in `piece`, the preimage is a single
        component containing 0 (so the result is critical regardless of the
        witness); otherwise the d components are disjoint, none contains 0,
        and the witness selects one. Distinct components may share one
        itinerary (deck rotation inside the critical sector); the registry
        then holds several pieces under that address.
        """
        fw = self.fmap(witness)
        img_addr = self.locate(fw, piece.depth)
        if img_addr != piece.address:
            raise PreconditionError(
                f"witness outside preimage: f(witness) has address {img_addr}, "
                f"piece is {piece.address}"
            )
        sector = self._depth1_label(witness)
        new_addr = PuzzleAddress(piece.depth + 1, (sector,) + piece.address.itinerary)
        is_crit = self._point_has_address(self.fmap.c, piece.address)
        new_piece = PuzzlePiece(
            address=new_addr,
            witness=0j if is_crit else witness,
            level=piece.level / self.fmap.degree,
            is_critical=is_crit,
            parent=piece,
        )
        key = (new_piece.depth, new_addr.itinerary)
        with self._lock:
            group = list(self.pieces.get(key, []))
        for existing in group:
            if self._same_component(existing, new_piece):
                return existing
        with self._lock:
            self.pieces.setdefault(key, []).append(new_piece)
        return new_piece

    def components_at(self, address: PuzzleAddress) -> list[PuzzlePiece]:
        """All populated components sharing this address."""
        return list(self.pieces.get((address.depth, address.itinerary), []))

    def _point_has_address(self, z: complex, address: PuzzleAddress) -> bool:
        try:
            return self.locate(z, address.depth) == address
        except (BoundaryProximityError, PreconditionError):
            return False

    def _same_component(self, a: PuzzlePiece, b: PuzzlePiece) -> bool:
        if abs(a.witness - b.witness) < 1e-12:
            return True
        boundary = self.realize_boundary(a)
        return self._poly_contains(boundary, b.witness)

    # ------------------------------------------------------------- geometry

    def realize_boundary(self, piece: PuzzlePiece, max_points: int = 4000) -> np.ndarray:
        """Boundary polyline, pulling the parent's boundary back on demand.

        A critical pullback covers the parent boundary d times; the branch
        continuation closes up after d sweeps. Off-critical components close
        after one sweep.
        """
        if piece._boundary is not None:
            return piece._boundary
        if piece.parent is None:
            raise GeometryError("piece has neither boundary nor parent")
        target = self.realize_boundary(piece.parent)
        closed = np.append(target, target[0])
        d = self.fmap.degree
        sweeps = d if piece.is_critical else 1
        start = self._boundary_seed(piece, closed)
        pulled = []
        z = start
        for _ in range(sweeps):
            seg = pullback_polyline(self.fmap, closed, seed=z)
            pulled.append(seg[:-1])
            z = seg[-1]
            if abs(z - start) < 1e-9:
                break
        boundary = np.concatenate(pulled)
        scale = max(1.0, float(np.max(np.abs(boundary))))
        if abs(z - start) > 1e-6 * scale:
            raise GeometryError(
                f"pullback boundary of {piece.address} failed to close"
            )
        if len(boundary) > max_points:
            spacing = float(np.sum(np.abs(np.diff(boundary)))) / max_points
            boundary = resample_polyline(np.append(boundary, boundary[0]), spacing)[:-1]
        piece._boundary = boundary
        return boundary

    def _boundary_seed(self, piece: PuzzlePiece, closed: np.ndarray) -> complex:
        """Preimage of the parent-boundary start vertex on this component.

        Critical pullbacks have a single component whose boundary carries
        every preimage of the parent boundary, so any root works. Otherwise
        the connecting path runs from f(witness) to the nearest boundary
        vertex and then along the boundary itself, staying in the closure of
        the parent, so it cannot wind around the critical value (which is
        outside the parent); the pullback starts at the witness, an exact
        preimage of the path's start.
        """
        if piece.is_critical:
            return complex((closed[0] - self.fmap.c) ** (1.0 / self.fmap.degree))
        w = piece.witness
        fw = self.fmap(w)
        k = int(np.argmin(np.abs(closed - fw)))
        approach = np.linspace(fw, closed[k], 40)
        path = np.concatenate([approach, closed[k + 1 :]])
        lifted = pullback_polyline(self.fmap, path, seed=w)
        return complex(lifted[-1])

    def local_degree_on_piece(self, piece: PuzzlePiece) -> int:
        return self.fmap.degree if piece.is_critical else 1

    def count_preimages_inside(self, piece: PuzzlePiece, w: complex) -> int:
        """Number of f-preimages of w inside the piece (degree cross-check)."""
        d, c = self.fmap.degree, self.fmap.c
        roots = np.roots([1] + [0] * (d - 1) + [c - w])
        boundary = self.realize_boundary(piece)
        return int(sum(self._poly_contains(boundary, complex(r)) for r in roots))

    # ----------------------------------------------------------- diagnostics

    def partition_check(self, depth: int, n_samples: int, rng: np.random.Generator) -> dict:
        """Monte Carlo partition audit at depth 0 or 1: samples inside the
        equipotential region and off the skeleton must lie in exactly one
        piece."""
        if depth not in (0, 1):
            raise PreconditionError("partition check supports depths 0 and 1")
        pieces = self.depth0 if depth == 0 else self.depth1
        skeleton = self._skeleton0 if depth == 0 else self._skeleton1
        lvl = self.level / self.fmap.degree**depth
        box = max(float(np.max(np.abs(p.boundary()))) for p in pieces) * 1.1
        checked = violations = 0
        while checked < n_samples:
            z = complex(rng.uniform(-box, box), rng.uniform(-box, box))
            g = green_potential(self.fmap, z)
            if g is not None and g >= lvl:
                continue
            if any(distance_to_polyline(poly, z) < self.eps_geo for poly in skeleton):
                continue
            hits = int(sum(1 for p in pieces if p.contains(z)))
            if hits != 1:
                violations += 1
            checked += 1
        return {"checked": checked, "violations": violations}

    def markov_check(self, resolution: float = 0.05) -> dict:
        """Sampled boundary images of each depth-1 piece must lie within
        `resolution` of the boundary of the shifted-address depth-0 piece."""
        worst = 0.0
        for p in self.depth1:
            target = self.piece_at(p.address.shifted())
            tb = target.boundary()
            step = max(1, len(p.boundary()) // 200)
            for z in p.boundary()[::step]:
                worst = max(worst, distance_to_polyline(tb, self.fmap(z)))
        return {"worst_distance": worst, "ok": worst <= resolution}


def build_depth01(
    fmap: UnicriticalMap,
    fixed: FixedPointData,
    level: float = 1.0,
    control: StepControl | None = None,
) -> PuzzleComplex:
    """Build the depth-0 and depth-1 partitions."""
    return PuzzleComplex(fmap, fixed, level=level, control=control)


def critical_nest(pc: PuzzleComplex, depth: int) -> list[PuzzlePiece]:
    """Pieces around the critical point at depths 1..depth. Every entry is a
    pullback of the piece one level up around the critical value, so the
    list is strictly nested."""
    return [pc.piece_containing(0j, n) for n in range(1, depth + 1)]

"""Puzzle partitions: face walk, piece labels, locate, pullbacks, audits."""

from fractions import Fraction

import numpy as np
import pytest

from puzzlenest.dynamics import UnicriticalMap, find_alpha_cycle, green_potential
from puzzlenest.errors import (
    BoundaryProximityError,
    CombinatoricsError,
    PreconditionError,
)
from puzzlenest.geometry import distance_to_polyline
from puzzlenest.puzzle import (
    PuzzleAddress,
    _face_cycles,
    build_depth01,
    critical_nest,
)

F = Fraction


@pytest.fixture(scope="module")
def cheb():
    fmap = UnicriticalMap(2, -2.0 + 0j)
    return fmap, build_depth01(fmap, find_alpha_cycle(fmap))


@pytest.fixture(scope="module")
def dendrite():
    fmap = UnicriticalMap(2, 1j)
    return fmap, build_depth01(fmap, find_alpha_cycle(fmap))


@pytest.fixture(scope="module")
def cubic():
    fmap = UnicriticalMap(3, 1j)
    return fmap, build_depth01(fmap, find_alpha_cycle(fmap))


ALL = ["cheb", "dendrite", "cubic"]


class TestAddress:
    def test_length_enforced(self):
        with pytest.raises(PreconditionError):
            PuzzleAddress(2, ("Y1", "S0"))

    def test_negative_depth(self):
        with pytest.raises(PreconditionError):
            PuzzleAddress(-1, ())

    def test_shift(self):
        a = PuzzleAddress(2, ("Y1", "Z1_1", "S0"))
        assert a.shifted() == PuzzleAddress(1, ("Z1_1", "S0"))
        assert str(a) == "Y1/Z1_1/S0"

    def test_shift_depth0_rejected(self):
        with pytest.raises(PreconditionError):
            PuzzleAddress(0, ("S0",)).shifted()


class TestFaceWalk:
    def test_three_sectors_at_fixed_point(self):
        cycle = [F(1, 7), F(2, 7), F(4, 7)]
        faces = _face_cycles(cycle, [frozenset(cycle)])
        assert sorted(map(sorted, faces)) == [[0], [1], [2]]

    def test_chebyshev_depth1_critical_face(self):
        # angles 1/6, 1/3, 2/3, 5/6; clusters at the fixed point and its
        # other preimage; the critical face takes the two outer arcs
        angles = [F(1, 6), F(1, 3), F(2, 3), F(5, 6)]
        clusters = [frozenset({F(1, 3), F(2, 3)}), frozenset({F(1, 6), F(5, 6)})]
        faces = _face_cycles(angles, clusters)
        assert sorted(map(sorted, faces)) == [[0, 2], [1], [3]]

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    @pytest.mark.parametrize("q", [2, 3, 4, 5])
    def test_count_formula(self, d, q):
        # canonical rotation-number-1/q cycle: orbit of 1/(d^q - 1) is in
        # increasing circular order, so its rays can co-land
        theta = F(1, d**q - 1)
        cycle = sorted((theta * d**k) % 1 for k in range(q))
        assert len(_face_cycles(cycle, [frozenset(cycle)])) == q
        angles = sorted((a + F(j, d)) % 1 for a in cycle for j in range(d))
        clusters = [frozenset((a + F(j, d)) % 1 for a in cycle) for j in range(d)]
        assert len(_face_cycles(angles, clusters)) == (q - 1) * d + 1


class TestBaseBuild:
    @pytest.mark.parametrize("name", ALL)
    def test_counts(self, name, request):
        fmap, pc = request.getfixturevalue(name)
        q, d = pc.fixed.q, fmap.degree
        assert len(pc.depth0) == q
        assert len(pc.depth1) == (q - 1) * d + 1
        assert sum(p.is_critical for p in pc.depth1) == 1
        assert sum(p.is_critical for p in pc.depth0) == 1

    @pytest.mark.parametrize("name", ALL)
    def test_registry_and_levels(self, name, request):
        fmap, pc = request.getfixturevalue(name)
        for p in pc.depth0:
            assert p.level == pc.level
            assert pc.piece_at(p.address) is p
        for p in pc.depth1:
            assert p.level == pc.level / fmap.degree
            assert pc.piece_at(p.address) is p

    def test_chebyshev_labels(self, cheb):
        fmap, pc = cheb
        by_label = {p.address.itinerary[0]: p for p in pc.depth1}
        assert set(by_label) == {"Y1", "Y1_1", "Z1_1"}
        assert by_label["Y1"].is_critical
        assert by_label["Y1"].boundary_angles == (F(1, 6), F(1, 3), F(2, 3), F(5, 6))
        assert by_label["Y1_1"].boundary_angles == (F(1, 3), F(2, 3))
        assert by_label["Z1_1"].boundary_angles == (F(1, 6), F(5, 6))
        assert by_label["Y1_1"].witness == pytest.approx(-2.0628261997591464, abs=1e-9)
        assert by_label["Z1_1"].witness == pytest.approx(2.0628261997591464, abs=1e-9)
        assert str(by_label["Y1"].address) == "Y1/S0"
        s = {str(p.address) for p in pc.depth1}
        assert s == {"Y1/S0", "Y1_1/S1", "Z1_1/S1"}

    def test_dendrite_labels(self, dendrite):
        fmap, pc = dendrite
        s = {str(p.address) for p in pc.depth1}
        assert s == {"Y1/S0", "Y1_1/S2", "Y1_2/S1", "Z1_1/S1", "Z1_2/S2"}
        y1 = next(p for p in pc.depth1 if p.is_critical)
        assert y1.boundary_angles == (F(1, 14), F(1, 7), F(4, 7), F(9, 14))
        assert y1.witness == pytest.approx(
            0.5975387428575782 + 0.5002102764313231j, abs=1e-9
        )

    def test_cubic_labels(self, cubic):
        fmap, pc = cubic
        s = {str(p.address) for p in pc.depth1}
        assert s == {"Y1/S0", "Y1_1/S1", "Z1_1/S1", "Z1_2/S1"}
        y1 = next(p for p in pc.depth1 if p.is_critical)
        assert y1.boundary_angles == (
            F(1, 24), F(1, 8), F(3, 8), F(11, 24), F(17, 24), F(19, 24),
        )
        z = {p.address.itinerary[0]: p.witness for p in pc.depth1}
        assert z["Z1_1"] == pytest.approx(1.178197315774364 - 0.6802325374208236j, abs=1e-9)
        assert z["Z1_2"] == pytest.approx(-1.178197315774364 - 0.6802325374208236j, abs=1e-9)

    @pytest.mark.parametrize("name", ALL)
    def test_boundary_potentials(self, name, request):
        fmap, pc = request.getfixturevalue(name)
        for p in pc.depth0 + pc.depth1:
            b = p.boundary()
            pots = [green_potential(fmap, complex(z)) for z in b[:: len(b) // 40]]
            pots = [g for g in pots if g is not None]
            assert max(pots) <= p.level * (1 + 1e-6)

    @pytest.mark.parametrize("name", ALL)
    def test_witness_inside_own_piece_only(self, name, request):
        fmap, pc = request.getfixturevalue(name)
        for group in (pc.depth0, pc.depth1):
            for p in group:
                hits = [o.address for o in group if o.contains(p.witness)]
                assert hits == [p.address]


class TestLocate:
    def test_chebyshev_goldens(self, cheb):
        fmap, pc = cheb
        assert str(pc.locate(-1.9 + 0j, 0)) == "S0"
        assert str(pc.locate(-1.9 + 0j, 1)) == "Y1_1/S1"
        assert str(pc.locate(0.3 + 0.2j, 1)) == "Y1/S0"
        assert str(pc.locate(0j, 1)) == "Y1/S0"
        # the repelling fixed point on the positive axis sits in S1
        assert str(pc.locate(2.0 + 0j, 0)) == "S1"

    @pytest.mark.parametrize(
        "name,where",
        [("cheb", "Y1_1/S1"), ("dendrite", "Y1_1/S2"), ("cubic", "Y1_1/S1")],
    )
    def test_critical_value_location(self, name, where, request):
        fmap, pc = request.getfixturevalue(name)
        assert str(pc.locate(fmap.c, 1)) == where

    @pytest.mark.parametrize("name", ALL)
    def test_shift_property(self, name, request):
        fmap, pc = request.getfixturevalue(name)
        rng = np.random.default_rng(11)
        box = 1.8
        done = 0
        while done < 40:
            z = complex(rng.uniform(-box, box), rng.uniform(-box, box))
            try:
                a2 = pc.locate(z, 2)
                a1 = pc.locate(fmap(z), 1)
            except (PreconditionError, BoundaryProximityError):
                continue
            assert a2.shifted() == a1
            done += 1

    def test_escaping_point_rejected(self, cheb):
        fmap, pc = cheb
        with pytest.raises(PreconditionError):
            pc.locate(4.0 + 0j, 0)
        # inside level 1 but outside level 1/2: fine at depth 0, not depth 1
        z = 2.4 + 0j
        g = green_potential(fmap, z)
        assert g is not None and 0.5 < g < 1.0
        pc.locate(z, 0)
        with pytest.raises(PreconditionError):
            pc.locate(z, 1)

    def test_boundary_guard(self, cheb):
        fmap, pc = cheb
        # the ray pair bounding the sectors lands at -1
        with pytest.raises(BoundaryProximityError):
            pc.locate(-1 + 1e-8j, 0)
        # a point sitting on the equipotential skeleton
        z = complex(pc._skeleton0[-1][17])
        with pytest.raises(BoundaryProximityError):
            pc.locate(z, 0)

    def test_negative_depth_rejected(self, cheb):
        _, pc = cheb
        with pytest.raises(PreconditionError):
            pc.locate(0j, -1)


class TestPullback:
    def test_chebyshev_nest_addresses(self, cheb):
        fmap, pc = cheb
        nest = critical_nest(pc, 6)
        assert [str(p.address) for p in nest] == [
            "Y1/S0",
            "Y1/Y1_1/S1",
            "Y1/Y1_1/Z1_1/S1",
            "Y1/Y1_1/Z1_1/Z1_1/S1",
            "Y1/Y1_1/Z1_1/Z1_1/Z1_1/S1",
            "Y1/Y1_1/Z1_1/Z1_1/Z1_1/Z1_1/S1",
        ]
        assert all(p.is_critical for p in nest)

    def test_dendrite_nest_addresses(self, dendrite):
        fmap, pc = dendrite
        nest = critical_nest(pc, 6)
        assert str(nest[-1].address) == "Y1/Y1_1/Y1_2/Z1_2/Y1_2/Z1_2/S2"

    def test_cubic_nest_addresses(self, cubic):
        # critical orbit has period two, so the itinerary alternates
        fmap, pc = cubic
        nest = critical_nest(pc, 5)
        assert str(nest[-1].address) == "Y1/Y1_1/Y1/Y1_1/Y1/S0"

    @pytest.mark.parametrize("name", ALL)
    def test_nest_geometry(self, name, request):
        fmap, pc = request.getfixturevalue(name)
        nest = critical_nest(pc, 4)
        prev = None
        for n, p in enumerate(nest, start=1):
            b = pc.realize_boundary(p)
            assert pc._poly_contains(b, 0j)
            assert p.level == pytest.approx(pc.level / fmap.degree**n)
            # resampled parent vertices sit a hair off the exact level line
            pots = [green_potential(fmap, complex(z)) for z in b[:: len(b) // 30]]
            pots = [g for g in pots if g is not None]
            assert max(pots) <= p.level * (1 + 1e-3)
            if prev is not None:
                # nesting: every sampled vertex inside the parent or on its
                # boundary (nest levels share ray segments)
                pb = prev.boundary()
                for z in b[:: len(b) // 80]:
                    z = complex(z)
                    assert prev.contains(z) or distance_to_polyline(pb, z) < 1e-3
            prev = p

    def test_chebyshev_nest_diameters_halve(self, cheb):
        fmap, pc = cheb
        nest = critical_nest(pc, 6)
        diams = []
        for p in nest[2:]:
            b = pc.realize_boundary(p)
            diams.append(float(np.max(np.abs(b - np.mean(b)))))
        for a, b_ in zip(diams, diams[1:]):
            assert b_ < 0.7 * a

    @pytest.mark.parametrize("name", ALL)
    def test_degree_cross_check(self, name, request):
        fmap, pc = request.getfixturevalue(name)
        y2 = pc.piece_containing(0j, 2)
        assert y2.is_critical
        assert pc.local_degree_on_piece(y2) == fmap.degree
        assert pc.count_preimages_inside(y2, fmap(1e-3)) == fmap.degree
        off = next(
            p for p in pc.depth1
            if not p.is_critical and not pc._point_has_address(fmap.c, p.address)
        )
        root = complex((off.witness - fmap.c) ** (1.0 / fmap.degree))
        sub = pc.pullback_piece(off, root)
        assert not sub.is_critical
        assert pc.local_degree_on_piece(sub) == 1
        assert pc.count_preimages_inside(sub, off.witness) == 1

    def test_wrong_witness_rejected(self, cheb):
        fmap, pc = cheb
        y1 = next(p for p in pc.depth1 if p.is_critical)
        # 1.9 maps to 1.61, inside Z1_1, not Y1
        with pytest.raises(PreconditionError):
            pc.pullback_piece(y1, 1.9 + 0j)

    def test_same_component_is_cached(self, cheb):
        fmap, pc = cheb
        P = pc.piece_containing(-1.5 + 0j, 2)
        r = complex(np.sqrt(0.5))
        a = pc.pullback_piece(P, r)
        assert pc.pullback_piece(P, r + 1e-3) is a

    def test_deck_rotation_siblings_coexist(self, cheb):
        # both preimages of a piece inside the invariant sector share the
        # itinerary; they must be kept as distinct disjoint components
        fmap, pc = cheb
        P = pc.piece_containing(-1.5 + 0j, 2)
        assert str(P.address) == "Y1_1/Y1/S0"
        r = complex(np.sqrt(0.5))
        a = pc.pullback_piece(P, r)
        b = pc.pullback_piece(P, -r)
        assert a is not b
        assert a.address == b.address
        assert set(pc.components_at(a.address)) == {a, b}
        # resolving the shared address through piece_at must refuse
        with pytest.raises(CombinatoricsError):
            pc.piece_at(a.address)
        ba, bb = pc.realize_boundary(a), pc.realize_boundary(b)
        assert not pc._poly_contains(ba, b.witness)
        assert not pc._poly_contains(bb, a.witness)
        assert min(distance_to_polyline(ba, complex(z)) for z in bb[::40]) > 0.01

    def test_boundary_closure(self, dendrite):
        fmap, pc = dendrite
        p = pc.piece_containing(0j, 5)
        b = pc.realize_boundary(p)
        gaps = np.abs(np.diff(np.append(b, b[0])))
        assert np.max(gaps) < 0.1


class TestAudits:
    @pytest.mark.parametrize("name", ALL)
    @pytest.mark.parametrize("depth", [0, 1])
    def test_partition(self, name, depth, request):
        fmap, pc = request.getfixturevalue(name)
        out = pc.partition_check(depth, 1200, np.random.default_rng(5))
        assert out == {"checked": 1200, "violations": 0}

    @pytest.mark.parametrize("name", ALL)
    def test_markov(self, name, request):
        fmap, pc = request.getfixturevalue(name)
        out = pc.markov_check(resolution=1e-3)
        assert out["ok"], out

    @pytest.mark.parametrize("name", ALL)
    def test_skeleton_images_respect_depth(self, name, request):
        # depth-1 ray skeleton maps into the depth-0 skeleton
        fmap, pc = request.getfixturevalue(name)
        rays0 = pc._skeleton0[:-1]
        for poly in pc._skeleton1[:-1]:
            for z in poly[:: max(1, len(poly) // 25)]:
                w = fmap(complex(z))
                assert min(distance_to_polyline(r, w) for r in rays0) < 1e-3


class TestSerialization:
    def test_to_json_roundtrippable(self, cheb):
        import json

        fmap, pc = cheb
        p = pc.depth1[0]
        blob = json.dumps(p.to_json(), sort_keys=True)
        back = json.loads(blob)
        assert back["address"] == list(p.address.itinerary)
        assert back["is_critical"] == p.is_critical
        assert len(back["boundary"]) == len(p.boundary())

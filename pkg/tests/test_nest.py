"""Dynasty construction: first kingdom, cascades, court, bookkeeping."""

import cmath

import pytest

from puzzlenest.dynamics import UnicriticalMap, find_alpha_cycle
from puzzlenest.errors import PreconditionError
from puzzlenest.nest import (
    Termination,
    build_dynasty,
    first_kingdom,
    synthetic_dynasty,
)
from puzzlenest.orbit import CriticalOrbit
from puzzlenest.puzzle import build_depth01

# real parameter whose return times grow like consecutive Fibonacci
# numbers; the deepest geometric fixture we have
FIB_C = -1.8705286321646448

# degree-3 parameter with c^2 = e^{2 pi i/3} - 1: the critical orbit is
# 0 -> c -> wc with wc fixed of multiplier 3*sqrt(3)
D3_C = complex(0.3406250193166067, 1.271229878418706)


def _complex(d, c):
    fmap = UnicriticalMap(d, complex(c))
    return build_depth01(fmap, find_alpha_cycle(fmap))


@pytest.fixture(scope="module")
def cheb():
    return _complex(2, -2)


@pytest.fixture(scope="module")
def eye():
    return _complex(2, 1j)


@pytest.fixture(scope="module")
def d3mis():
    return _complex(3, D3_C)


@pytest.fixture(scope="module")
def real18():
    return _complex(2, -1.8)


@pytest.fixture(scope="module")
def fib():
    return _complex(2, FIB_C)


@pytest.fixture(scope="module")
def fib_dynasty(fib):
    orb = CriticalOrbit(fib, budget=5000)
    return build_dynasty(fib, orb, max_levels=5)


@pytest.fixture(scope="module")
def real18_dynasty(real18):
    orb = CriticalOrbit(real18, budget=5000)
    return build_dynasty(real18, orb, max_levels=8)


class TestFirstKingdom:
    def test_cheb_lands_at_l1(self, cheb):
        # f(0) = -2 = -beta, f^2(0) = 2 = beta sits in a detached piece
        audits = []
        res = first_kingdom(cheb, CriticalOrbit(cheb, budget=2000),
                            audits=audits)
        assert isinstance(res, Termination)
        assert res.kind == "non_recurrent"
        landing = [a for a in audits
                   if a["name"] == "first landing in detached piece"]
        assert landing and landing[0]["witness"] == {"l": 1, "q": 2}

    def test_eye_concrete_level(self, eye):
        audits = []
        res = first_kingdom(eye, CriticalOrbit(eye, budget=2000),
                            audits=audits)
        assert isinstance(res, Termination)
        landing = [a for a in audits
                   if a["name"] == "first landing in detached piece"]
        assert landing[0]["witness"] == {"l": 1, "q": 3}
        assert "depth(V^0) = 4" in landing[0]["detail"]

    def test_d3_misiurewicz(self, d3mis):
        audits = []
        res = first_kingdom(d3mis, CriticalOrbit(d3mis, budget=2000),
                            audits=audits)
        assert isinstance(res, Termination)
        assert res.kind == "non_recurrent"
        assert "exact" in res.note

    def test_superattracting_refused(self):
        # d=3, c=i: 0 -> i -> 0 is a superattracting 2-cycle
        pc = _complex(3, 1j)
        with pytest.raises(PreconditionError, match="repelling"):
            first_kingdom(pc, CriticalOrbit(pc, budget=2000))

    def test_attracting_refused(self):
        pc = _complex(2, -1)
        with pytest.raises(PreconditionError, match="repelling"):
            first_kingdom(pc, CriticalOrbit(pc, budget=2000))


class TestNonRecurrentDynasties:
    @pytest.mark.parametrize("d,c", [(2, -2), (2, 1j), (3, D3_C)])
    def test_terminates_with_no_levels(self, d, c):
        pc = _complex(d, c)
        dyn = build_dynasty(pc, CriticalOrbit(pc, budget=2000))
        assert dyn.termination.kind == "non_recurrent"
        assert "exact" in dyn.termination.note
        assert dyn.n_levels == 0
        assert dyn.base is None
        assert dyn.times.t == [] and dyn.times.T == []
        assert dyn.falsifiers() == []


class TestRecurrentDynasty:
    def test_real18_times(self, real18_dynasty):
        dyn = real18_dynasty
        assert dyn.times.t == [3, 111]
        assert dyn.times.T == [12]
        assert dyn.times.s == [3, 123]
        assert dyn.e_depths == [3, 6, 18, 129]
        assert dyn.falsifiers() == []

    def test_real18_kingdom(self, real18_dynasty):
        kd = real18_dynasty.kingdom(0)
        assert kd.N == 1
        assert kd.r_s == 12
        assert kd.T == 12
        assert kd.u_depth == 6 and kd.a_depth == 18
        assert kd.delta_depth == 15
        assert len(kd.men) <= 2
        assert kd.subjects

    def test_real18_termination_is_budget(self, real18_dynasty):
        assert real18_dynasty.termination.kind == "non_recurrent"
        assert real18_dynasty.termination.note.startswith("budget")

    def test_fib_times(self, fib_dynasty):
        dyn = fib_dynasty
        assert dyn.times.t == [5, 13, 34, 89]
        assert dyn.times.T == [8, 21, 55, 144]
        assert dyn.times.s == [5, 21, 55, 144]
        assert dyn.falsifiers() == []

    def test_fib_depths(self, fib_dynasty):
        assert fib_dynasty.e_depths == [3, 8, 16, 29, 50, 84, 139, 228]

    def test_fib_time_identities(self, fib_dynasty):
        t, T, s = (fib_dynasty.times.t, fib_dynasty.times.T,
                   fib_dynasty.times.s)
        assert s[0] == t[0]
        for n in range(1, len(t)):
            assert s[n] == t[n] + T[n - 1]

    def test_fib_depth_identities(self, fib_dynasty):
        dyn = fib_dynasty
        for n in range(dyn.n_levels):
            assert dyn.w_depth(n) == dyn.v_depth(n) + dyn.times.t[n]
        for n in range(dyn.n_kingdoms):
            kd = dyn.kingdom(n)
            assert kd.a_depth == dyn.w_depth(n) + kd.T
            if n + 1 < dyn.n_levels:
                assert dyn.v_depth(n + 1) == kd.a_depth

    def test_fib_extensions(self, fib_dynasty):
        dyn = fib_dynasty
        assert dyn.enlargement_depths == {
            1: 3, 2: 11, 3: 16, 4: 37, 5: 50, 6: 105, 7: 139}
        assert dyn.buffer_depths == {
            2: 11, 3: 24, 4: 37, 5: 71, 6: 105, 7: 194}
        # hat(W^n) = V^n, so odd-index enlargements repeat the V depths
        for n in range(dyn.n_levels):
            if 2 * n + 1 in dyn.enlargement_depths:
                assert dyn.enlargement_depths[2 * n + 1] == dyn.v_depth(n)

    def test_fib_kingdom_invariants(self, fib_dynasty):
        for n in range(fib_dynasty.n_kingdoms):
            kd = fib_dynasty.kingdom(n)
            lv = fib_dynasty.gpl(n)
            assert len(kd.men) <= fib_dynasty.degree
            assert len(kd.cascade) == kd.N + 1
            assert kd.T == (kd.N - 1) * lv.t + kd.r_s
            # the castle coincides with the kingdom domain iff N == 1
            assert kd.u_depth == lv.v_depth + kd.N * lv.t
            assert (kd.u_depth > lv.w_depth) == (kd.N >= 2)
            assert kd.a_depth > kd.u_depth

    def test_fib_audit_coverage(self, fib_dynasty):
        names = {a["name"] for a in fib_dynasty.audits}
        for expected in ("first landing in detached piece",
                         "central return degree",
                         "off-central degrees",
                         "king degree",
                         "court disjointness",
                         "return-time cross-check",
                         "buffer nesting",
                         "extension degree"):
            assert expected in names, expected


class TestSynthetic:
    def test_powers_of_two(self):
        spec = {"levels": [
            {"t": 2 ** n, "T": 2 ** (n + 1)} for n in range(6)]}
        dyn = synthetic_dynasty(spec)
        assert dyn.synthetic
        assert dyn.times.t == [2 ** n for n in range(6)]
        assert dyn.times.s[0] == 1
        for n in range(1, 6):
            assert dyn.times.s[n] == 2 ** n + 2 ** n

    def test_depth_arithmetic(self):
        dyn = synthetic_dynasty({"levels": [{"t": 1, "T": 2}, {"t": 2}]})
        # v0=1, w0=2, u0=2 (N=1), a0=4, v1=4, w1=6
        assert dyn.e_depths == [1, 2, 4, 6]
        kd = dyn.kingdom(0)
        assert kd.u_depth == 2 and kd.a_depth == 4 and kd.r_s == 2

    def test_cascade_depths(self):
        dyn = synthetic_dynasty({"levels": [{"t": 3, "T": 7, "N": 2}]})
        kd = dyn.kingdom(0)
        # r_s = T - (N-1) t = 4; castle sits N*t below V
        assert kd.r_s == 4
        assert kd.u_depth == 1 + 2 * 3
        assert kd.a_depth == kd.u_depth + 4

    def test_inconsistent_s_rejected(self):
        with pytest.raises(PreconditionError, match="inconsistent spec"):
            synthetic_dynasty({"levels": [{"t": 2, "T": 3},
                                          {"t": 4, "s": 5}]})

    def test_impossible_cascade_rejected(self):
        # T = 3 cannot host a length-3 cascade of t = 2
        with pytest.raises(PreconditionError, match="inconsistent spec"):
            synthetic_dynasty({"levels": [{"t": 2, "T": 3, "N": 3}]})

    def test_empty_spec(self):
        dyn = synthetic_dynasty({})
        assert dyn.n_levels == 0
        assert dyn.falsifiers() == []

    def test_forced_passthrough(self):
        dyn = synthetic_dynasty({"levels": [{"t": 1}],
                                 "forced": {"l_moments": [4, 5]}})
        assert dyn.forced == {"l_moments": [4, 5]}


class TestReportShape:
    def test_per_level_keys(self, fib_dynasty):
        rec = fib_dynasty.to_json()["levels"][0]
        for key in ("n", "N_cascade", "t", "T", "s", "V", "W", "A", "U",
                    "Delta", "subject_count", "men_count"):
            assert key in rec, key

    def test_rebuild_is_identical(self, fib):
        a = build_dynasty(fib, CriticalOrbit(fib, budget=3000), max_levels=3)
        b = build_dynasty(fib, CriticalOrbit(fib, budget=3000), max_levels=3)
        assert a.to_json() == b.to_json()

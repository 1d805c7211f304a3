"""Exact combinatorial verifiers over a finished dynasty.

Everything here is measured in raw iterations of the base map f. For
nested critical pieces the travel time is the depth difference, a
return moment of the orbit of a critical piece to a critical target is
a label-window comparison on the critical orbit, and the degree of a
pullback chain is d to the number of its critical passages. Verifiers
emit report entries; a "fail" entry is a falsifier of the
implementation or of the data it was fed, never of the statements
being checked.

Synthetic dynasties carry no geometry. Verifiers that only need the
time and depth arrays run unchanged on them; verifiers that need
return moments read them from dynasty.forced ("h_moments",
"g1_moments", "moment_horizon"); passage-count audits are skipped with
an info entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import CombinatoricsError, PreconditionError
from .nest import (Dynasty, _entry, _pairwise_disjoint_audit,
                   critical_address, passages)
from .puzzle import PuzzleAddress


def falsifiers(entries: list[dict]) -> list[dict]:
    return [e for e in entries if e["status"] == "fail"]


# ------------------------------------------------------------- time arrays


def verify_time_inequalities(dyn: Dynasty,
                             m_values: tuple[int, ...] = (1, 2, 4)
                             ) -> list[dict]:
    """Exact integer checks of every travel-time statement that depends
    on the arrays t, T, s alone. Runs on geometric and synthetic
    dynasties alike; an empty dynasty passes vacuously."""
    t, T, s = dyn.times.t, dyn.times.T, dyn.times.s
    out: list[dict] = []

    bad = [n for n in range(len(s))
           if s[n] != t[n] + (T[n - 1] if n else 0)]
    out.append(_entry(
        "s bookkeeping", "fail" if bad else "pass",
        f"s recomputed from s_n = t_n + T_(n-1) at indices {bad}" if bad
        else f"s_n = t_n + T_(n-1) for all {len(s)} levels (s_0 = t_0)"))

    bad = [n for n in range(1, len(t)) if t[n] < T[n - 1]]
    out.append(_entry(
        "travel times: t vs T", "fail" if bad else "pass",
        f"t_n < T_(n-1) at indices {bad}" if bad else
        f"t_n >= T_(n-1) for n in 1..{len(t) - 1}",
        witness_t=list(t), witness_T=list(T)))

    bad = [n for n in range(len(T)) if T[n] < s[n]]
    out.append(_entry(
        "travel times: T vs s", "fail" if bad else "pass",
        f"T_n < s_n at indices {bad}" if bad else
        f"T_n >= s_n for n in 0..{len(T) - 1}"))

    bad = [n for n in range(1, len(s)) if s[n] < 2 * s[n - 1]]
    out.append(_entry(
        "travel times: s doubling", "fail" if bad else "pass",
        f"s_n < 2 s_(n-1) at indices {bad}" if bad else
        f"s_n >= 2 s_(n-1) for n in 1..{len(s) - 1}"))

    # 2 t_n >= 2^n avoids the n = 0 fraction
    bad = [n for n in range(len(t)) if 2 * t[n] < 2 ** n]
    out.append(_entry(
        "return time growth", "fail" if bad else "pass",
        f"t_n < 2^(n-1) at indices {bad}" if bad else
        f"t_n >= 2^(n-1) for n in 0..{len(t) - 1}; chain t_n >= T_(n-1) "
        ">= s_(n-1) >= 2 s_(n-2) doubles the bound each level"))

    bad = []
    wit = {}
    for n in range(2, len(s)):
        lhs = s[n] + s[n - 1]
        rhs = (T[n - 1] if n - 1 < len(T) else None)
        if rhs is None:
            continue
        rhs += sum(s[:n])
        wit[n] = (lhs, rhs)
        if lhs < rhs:
            bad.append(n)
    out.append(_entry(
        "nest travel time comparison", "fail" if bad else "pass",
        (f"time(W^n to W^(n-2)) < time(V^n to V^0) at indices {bad}" if bad
         else "s_n + s_(n-1) >= T_(n-1) + s_(n-1) + ... + s_0, reduction "
              "t_n >= s_(n-2) + ... + s_0"),
        witness={str(k): v for k, v in wit.items()}))

    # depth cross-checks when the nest was actually built
    if dyn.e_depths:
        bad = []
        for n in range(2, dyn.n_levels):
            if dyn.w_depth(n) - dyn.w_depth(n - 2) != s[n] + s[n - 1]:
                bad.append(("W", n))
            if n - 1 < len(T) and \
                    dyn.v_depth(n) - dyn.v_depth(0) != T[n - 1] + sum(s[:n]):
                bad.append(("V", n))
        out.append(_entry(
            "depth decomposition", "fail" if bad else "pass",
            f"depth differences disagree with time sums at {bad}" if bad
            else "depth(W^n) - depth(W^(n-2)) = s_n + s_(n-1) and "
                 "depth(V^n) - depth(V^0) = T_(n-1) + sum s_k"))

    out.extend(_moment_arithmetic(dyn, m_values))
    return out


def _moment_arithmetic(dyn: Dynasty, m_values) -> list[dict]:
    """The return-moment lemmas reduced to the time arrays: first-moment
    bound, absolute-window bound, last-moment bound. Each is checked for
    every level n and every m in m_values admissible under n > log2(m)+5;
    shallow dynasties pass vacuously."""
    t, s = dyn.times.t, dyn.times.s
    checked = 0
    bad_first, bad_abs, bad_last = [], [], []
    for n in range(3, len(t)):
        admissible = [m for m in m_values if 2 ** max(n - 5, 0) > m]
        if not admissible or n >= len(s):
            continue
        checked += 1
        # first moment: the W^(n-2) entry is a return moment past
        # time(V^n to V^0), so the comparison below is the whole content
        lhs = s[n] + s[n - 1]
        rhs = (dyn.times.T[n - 1] + sum(s[:n])) if n - 1 < len(dyn.times.T) \
            else None
        if rhs is not None and lhs < rhs:
            bad_first.append(n)
        for m in admissible:
            # absolute window: m moments fit in a t_(n-3) window because
            # t_(n-3) >= 2^(n-4) > 2m
            if not (t[n - 3] >= 2 ** (n - 4) and 2 ** (n - 5) > m):
                bad_abs.append((n, m))
        # last moment: first-moment bound plus window, needs t growth
        if t[n - 2] <= t[n - 3]:
            bad_last.append(n)
    suffix = (f" over {checked} admissible levels, m in {list(m_values)}"
              if checked else "; vacuous, no admissible (n, m)")
    out = [
        _entry("first return moment bound", "fail" if bad_first else "pass",
               (f"W^(n-2)-entry moment precedes time(V^n to V^0) at "
                f"{bad_first}" if bad_first else
                "l_0 <= s_n + s_(n-1) via the nest travel time "
                "comparison" + suffix)),
        _entry("return window bound", "fail" if bad_abs else "pass",
               (f"t_(n-3) cannot host m+1 moments at {bad_abs}" if bad_abs
                else "l_m - l_0 < t_(n-3): t_(n-3) >= 2^(n-4) > 2m"
                     + suffix)),
        _entry("last moment bound", "fail" if bad_last else "pass",
               (f"t_(n-2) <= t_(n-3) at levels {bad_last}" if bad_last else
                "l_m < s_n + s_(n-1) + t_(n-2) by the two bounds above"
                + suffix)),
    ]
    return out


# ---------------------------------------------------------- return moments


def _nest_address(dyn: Dynasty, depth: int) -> PuzzleAddress:
    return critical_address(dyn.orbit, depth)


def return_moments(dyn: Dynasty, target: str, lo: int, hi: int) -> list[int]:
    """Raw moments l in [lo, hi] at which the critical orbit sits inside
    the target nest domain: 'W0' (top central domain) or 'V1'."""
    if hi < lo:
        return []
    if dyn.synthetic:
        key = {"W0": "h_moments", "V1": "g1_moments"}[target]
        forced = dyn.forced.get(key)
        if forced is None:
            raise PreconditionError(
                f"synthetic dynasty carries no forced {key}")
        horizon = dyn.forced.get("moment_horizon", max(forced, default=0))
        if hi > horizon:
            raise PreconditionError(
                f"forced {key} only cover raw times up to {horizon}, "
                f"need {hi}")
        return [l for l in forced if lo <= l <= hi]
    if dyn.orbit is None:
        raise PreconditionError("geometric dynasty lost its orbit")
    depth = dyn.w_depth(0) if target == "W0" else dyn.v_depth(1)
    addr = _nest_address(dyn, depth)
    return [l for l in range(lo, hi + 1)
            if dyn.orbit.matches_address(l, addr)]


def time_h(dyn: Dynasty, raw_len: int) -> int:
    """Number of top-domain returns within the first raw_len steps."""
    return len(return_moments(dyn, "W0", 1, raw_len))


def time_g1(dyn: Dynasty, raw_len: int) -> int:
    return len(return_moments(dyn, "V1", 1, raw_len))


# -------------------------------------------------------- orbit selection


@dataclass
class OrbitSelection:
    """The audited return orbit of W^n to the top of the nest: the m+1
    consecutive return moments past time(V^n to V^0), the five-way split
    of the stretch down to V^(n-2), and the buffers and outer domains of
    the chosen window. Filled progressively by return_orbit_to_top,
    select_orbit_piece, buffers_and_degrees, and outer_domain."""

    n: int
    m: int
    moments: list[int]
    p: int                       # time(V^n to V^0)
    window_bounds: list[int]     # six raw times, ascending from 0
    window_counts: list[int]     # returns per window
    audits: list[dict] = field(default_factory=list)
    chosen: Optional[int] = None         # window index, 0 (deepest) .. 4
    chosen_domain: Optional[int] = None  # nest index of its right domain
    O: Optional[list[int]] = None        # k with l_k in the chosen window
    raw_s: Optional[int] = None          # raw time at the right boundary
    F_depth: Optional[int] = None
    lam_pairs: list[dict] = field(default_factory=list)
    upsilon_depths: dict[int, int] = field(default_factory=dict)

    def falsifiers(self) -> list[dict]:
        return falsifiers(self.audits)


def return_orbit_to_top(dyn: Dynasty, n: int, m: int) -> OrbitSelection:
    """Collect the m+1 consecutive return moments of orb(W^n) to the top
    central domain starting at the first moment past time(V^n to V^0),
    and verify the first/absolute/last moment bounds and the relative
    count chain on them exactly."""
    if m < 1:
        raise PreconditionError("m must be >= 1")
    if not 2 ** max(n - 5, 0) > m:
        raise PreconditionError(
            f"hypothesis violated: need n > log2(m) + 5, got n = {n}, "
            f"m = {m}")
    if n < 3 or n >= dyn.n_levels:
        raise PreconditionError(
            f"selection at level {n} needs a dynasty with levels "
            f"0..{n} complete and n >= 3; have {dyn.n_levels}")
    t, s = dyn.times.t, dyn.times.s
    w_n = dyn.w_depth(n)
    p = dyn.v_depth(n) - dyn.v_depth(0)
    all_moments = return_moments(dyn, "W0", 1, w_n - dyn.w_depth(0))
    sel_moments = [l for l in all_moments if l >= p]
    if len(sel_moments) < m + 1:
        raise CombinatoricsError(
            f"only {len(sel_moments)} return moments past {p} before the "
            "orbit piece leaves the top domain; cannot select m+1 = "
            f"{m + 1}")
    lmom = sel_moments[:m + 1]

    bounds = [w_n - dyn.e_depths[j] for j in range(2 * n + 1, 2 * n - 5, -1)]
    counts = [len([l for l in all_moments if bounds[i] <= l < bounds[i + 1]])
              for i in range(5)]
    sel = OrbitSelection(n=n, m=m, moments=lmom, p=p,
                         window_bounds=bounds, window_counts=counts)
    audits = sel.audits

    missing = [b for b in bounds[1:] if b not in set(all_moments)]
    audits.append(_entry(
        "nest entries are return moments", "fail" if missing else "pass",
        (f"expected returns at raw times {missing}" if missing else
         "every deeper nest domain entry shows up as a top-domain return"),
        n))

    bound_l = w_n - dyn.w_depth(n - 2)
    audits.append(_entry(
        "first return moment bound", "pass" if lmom[0] <= bound_l else "fail",
        f"l_0 = {lmom[0]} vs s_n + s_(n-1) = {bound_l}, lower cutoff "
        f"p = {p}", n, l_0=lmom[0], bound=bound_l, p=p))

    audits.append(_entry(
        "return window bound",
        "pass" if lmom[m] - lmom[0] < t[n - 3] else "fail",
        f"l_m - l_0 = {lmom[m] - lmom[0]} vs t_(n-3) = {t[n - 3]}", n))
    audits.append(_entry(
        "window comparison",
        "pass" if t[n - 3] < t[n - 2] else "fail",
        f"t_(n-3) = {t[n - 3]} < t_(n-2) = {t[n - 2]}", n))

    last_bound = w_n - dyn.v_depth(n - 2)
    audits.append(_entry(
        "last moment bound", "pass" if lmom[m] < last_bound else "fail",
        f"l_m = {lmom[m]} vs s_n + s_(n-1) + t_(n-2) = {last_bound}", n))

    A = time_h(dyn, t[n - 2])
    B = time_h(dyn, t[n - 3])
    C = time_g1(dyn, t[n - 3])
    chain_ok = A > B >= C > 2 ** (n - 5) > m
    audits.append(_entry(
        "relative count chain", "pass" if chain_ok else "fail",
        f"{A} > {B} >= {C} > 2^(n-5) = {2 ** (n - 5)} > m = {m}", n,
        A=A, B=B, C=C))

    g1m = set(return_moments(dyn, "V1", 1, t[n - 2]))
    hm = set(return_moments(dyn, "W0", 1, t[n - 2]))
    stray = sorted(g1m - hm)
    audits.append(_entry(
        "deep returns are top returns", "fail" if stray else "pass",
        (f"V^1 returns missing from the top-domain returns: {stray}"
         if stray else "V^1 return moments form a subset of the "
         "top-domain return moments"), n))
    return sel


def select_orbit_piece(dyn: Dynasty, sel: OrbitSelection) -> tuple[int, list[int]]:
    """Split the selected moments across the five windows, check that at
    most two windows are populated and each window is longer than m in
    return counts, and pick the fullest window."""
    b = sel.window_bounds
    groups: list[list[int]] = [[] for _ in range(5)]
    overflow = []
    for k, l in enumerate(sel.moments):
        for i in range(5):
            if b[i] <= l < b[i + 1]:
                groups[i].append(k)
                break
        else:
            overflow.append(k)
    audits = sel.audits
    audits.append(_entry(
        "moments inside the stretch", "fail" if overflow else "pass",
        (f"moments past V^(n-2): indices {overflow}" if overflow else
         "all m+1 moments fall before the V^(n-2) entry"), sel.n))

    short = [i for i in range(5) if sel.window_counts[i] <= sel.m]
    audits.append(_entry(
        "window lengths", "fail" if short else "pass",
        (f"window(s) {short} hold <= m returns: counts "
         f"{sel.window_counts}" if short else
         f"every window holds more than m = {sel.m} returns: counts "
         f"{sel.window_counts}"), sel.n))

    nonempty = [i for i in range(5) if groups[i]]
    audits.append(_entry(
        "at most two windows populated",
        "fail" if len(nonempty) > 2 else "pass",
        f"populated windows: {nonempty}", sel.n))

    chosen = max(range(5), key=lambda i: (len(groups[i]), -i))
    O = groups[chosen]
    need = -(-sel.m // 2)  # ceil
    audits.append(_entry(
        "chosen window occupancy", "pass" if len(O) >= need else "fail",
        f"|O| = {len(O)} vs ceil(m/2) = {need} in window {chosen}", sel.n))
    total = sum(len(g) for g in groups) + len(overflow)
    audits.append(_entry(
        "moment count conservation", "pass" if total == sel.m + 1 else "fail",
        f"sum of window occupancies = {total}, want m+1 = {sel.m + 1}",
        sel.n))

    sel.chosen = chosen
    # windows are listed outermost first: window i sits between nest
    # domains 2n+1-i and 2n-i
    sel.chosen_domain = 2 * sel.n - chosen
    sel.O = O
    return chosen, O


def buffers_and_degrees(dyn: Dynasty, sel: OrbitSelection) -> list[dict]:
    """Build the buffer F around W^n (the pullback of the enlargement of
    the chosen window's right domain), push it along the selected
    moments, and audit the degree ceiling, the univalent pushforwards,
    and pairwise disjointness of the buffers."""
    if sel.O is None:
        raise PreconditionError("select_orbit_piece has not run")
    audits = sel.audits
    n = sel.n
    j = sel.chosen_domain            # right domain nest index
    span = 2 * n + 1 - j             # nest steps from W^n down to it
    hat = dyn.enlargement_depths.get(j)
    if hat is None:
        audits.append(_entry(
            "buffer construction", "info",
            f"no enlargement depth recorded for nest domain {j} "
            "(apartment missing); buffer audits skipped", n))
        return audits
    raw_s = dyn.w_depth(n) - dyn.e_depths[j]
    sel.raw_s = raw_s
    sel.F_depth = hat + raw_s

    audits.append(_entry(
        "buffer contains the central piece",
        "pass" if sel.F_depth <= dyn.w_depth(n) else "fail",
        f"depth(F) = {sel.F_depth} vs depth(W^n) = {dyn.w_depth(n)}", n))

    geom = dyn.orbit is not None and not dyn.synthetic
    if geom:
        cnt = passages(dyn.orbit, 0, raw_s, hat)
        status = "pass" if cnt == span and cnt <= 5 else "fail"
        audits.append(_entry(
            "buffer degree", status,
            f"pullback chain of the enlargement passes the critical point "
            f"{cnt} times over {raw_s} steps; nest span {span}, ceiling 5",
            n, passages=cnt, span=span))
    else:
        audits.append(_entry(
            "buffer degree", "pass" if span <= 5 else "fail",
            f"nest span {span} <= 5; passage count needs geometry", n))

    items = []
    bad_univalent = []
    for k in sel.O:
        l_k = sel.moments[k]
        lam_depth = dyn.w_depth(n) - l_k
        lamp_depth = sel.F_depth - l_k
        rec = {"k": k, "l": l_k, "lam_depth": lam_depth,
               "lamp_depth": lamp_depth, "univalent": None}
        if geom:
            cnt = passages(dyn.orbit, l_k, raw_s - l_k, hat)
            rec["univalent"] = cnt == 0
            if cnt:
                bad_univalent.append((k, cnt))
            items.append((f"buffer at moment {l_k}", l_k, lamp_depth,
                          dyn.orbit.address_at(l_k, lamp_depth)))
        sel.lam_pairs.append(rec)

    if geom:
        audits.append(_entry(
            "buffer pushforward univalent",
            "fail" if bad_univalent else "pass",
            (f"critical passages after moments {bad_univalent}"
             if bad_univalent else
             "each buffer pushes forward to the enlargement with no "
             "critical passage"), n))
        if len(items) >= 2:
            _pairwise_disjoint_audit(dyn.orbit, items,
                                     "buffer disjointness", n, audits)
        else:
            audits.append(_entry(
                "buffer disjointness", "pass",
                "single selected moment; vacuous", n))
    else:
        audits.append(_entry(
            "buffer pushforward univalent", "info",
            "needs geometry; recorded for the modulus table instead", n))
        audits.append(_entry(
            "buffer disjointness", "info",
            "needs geometry; depth records kept in lam_pairs", n))

    B = time_h(dyn, dyn.times.t[n - 3])
    audits.append(_entry(
        "disjointness count argument", "pass" if sel.m < B else "fail",
        f"nested buffers would force a repeat within {sel.m} returns, but "
        f"the W^(n-3) stretch already holds {B} returns", n, m=sel.m, B=B))
    return audits


def outer_domain(dyn: Dynasty, sel: OrbitSelection, k: int) -> list[dict]:
    """Audit the outer domain at the k-th selected moment: containments
    between W^n and V^n and the degree ceiling d^(2n+m) with the exact
    d^(2n) base factor."""
    if k not in (sel.O or []):
        raise PreconditionError(f"moment index {k} is not in the chosen "
                                "window")
    audits = sel.audits
    n = sel.n
    l_k = sel.moments[k]
    ups = dyn.v_depth(0) + l_k
    sel.upsilon_depths[k] = ups
    ok_in = ups <= dyn.w_depth(n)
    ok_out = ups >= dyn.v_depth(n)
    audits.append(_entry(
        "outer domain containments",
        "pass" if ok_in and ok_out else "fail",
        f"depth(V^n) = {dyn.v_depth(n)} <= depth at moment {l_k} = {ups} "
        f"<= depth(W^n) = {dyn.w_depth(n)}: critical pieces are totally "
        "ordered by depth", n))
    if dyn.orbit is None or dyn.synthetic:
        audits.append(_entry(
            "outer degree", "info",
            f"ceiling d^(2n+m) = d^{2 * n + sel.m}; passage count needs "
            "geometry", n))
        return audits
    cnt = passages(dyn.orbit, 0, l_k, dyn.v_depth(0))
    base = passages(dyn.orbit, 0, sel.p, dyn.v_depth(0))
    audits.append(_entry(
        "outer degree", "pass" if cnt <= 2 * n + sel.m else "fail",
        f"{cnt} critical passages over {l_k} steps vs ceiling "
        f"2n + m = {2 * n + sel.m}", n, passages=cnt))
    audits.append(_entry(
        "outer degree base factor", "pass" if base == 2 * n else "fail",
        f"{base} critical passages over the V^n-to-V^0 stretch, want "
        f"exactly 2n = {2 * n}", n))
    audits.append(_entry(
        "outer degree window factor",
        "pass" if cnt - base <= k else "fail",
        f"{cnt - base} passages past the base stretch over k = {k} "
        "returns, one landing per return", n))
    return audits


def summary_check(dyn: Dynasty, sel: OrbitSelection) -> list[dict]:
    """Bundle the audited properties of the selection into one block:
    degree ceilings, containment, buffer behavior, occupancy."""
    audits = sel.audits
    n, m = sel.n, sel.m
    if not sel.O:
        audits.append(_entry(
            "selection summary", "pass",
            "no selected moments; vacuous", n))
        return audits
    for k in sel.O:
        if k not in sel.upsilon_depths:
            outer_domain(dyn, sel, k)
    seen = {e["name"]: e["status"] for e in sel.audits}
    names = ["outer degree", "chosen window occupancy"]
    if seen.get("buffer construction") != "info":
        names += ["buffer degree", "buffer pushforward univalent",
                  "buffer disjointness"]
    missing = [nm for nm in names
               if nm not in seen or seen[nm] not in ("pass", "info")]
    audits.append(_entry(
        "selection summary", "fail" if missing else "pass",
        (f"unsatisfied or missing properties: {missing}" if missing else
         f"degree ceilings d^(2n+m) = d^{2 * n + m} and d^5, containment, "
         f"buffer equality hooks, and occupancy >= ceil(m/2) all hold"),
        n))
    return audits


def run_selection(dyn: Dynasty, n: int, m: int) -> OrbitSelection:
    """return_orbit_to_top through summary_check in one call."""
    sel = return_orbit_to_top(dyn, n, m)
    select_orbit_piece(dyn, sel)
    buffers_and_degrees(dyn, sel)
    summary_check(dyn, sel)
    return sel


# ------------------------------------------------------- degree crosscheck


def _telescopes(dyn: Dynasty) -> list[tuple[str, int, int]]:
    """(label, steps, source depth) for every composed return map the
    dynasty records. All sources are critical pieces, so the chain piece
    after j steps is the piece of depth source-j around orbit point j."""
    out = []
    for n in range(dyn.n_levels):
        out.append((f"central return at level {n}", dyn.times.t[n],
                    dyn.w_depth(n)))
        if n < dyn.n_kingdoms:
            kd = dyn.kingdom(n)
            out.append((f"kingdom walk at level {n}", kd.T, kd.a_depth))
    for i, tdep in sorted(dyn.buffer_depths.items()):
        steps = dyn.e_depths[i] - dyn.e_depths[i - 1]
        out.append((f"nest connecting map {i}", steps, tdep))
    return out


def degree_crosscheck(dyn: Dynasty, max_depth: int = 40,
                      max_steps: int = 64) -> list[dict]:
    """Sample-count the degree of every recorded composed return map and
    compare with d to the critical passage count.

    The passage count reads symbolic addresses; the sample count pulls
    actual polynomial roots and tests them against realized piece
    boundaries, step by step, so the two sides are independent. Maps
    whose source is deeper than max_depth are skipped (realizing those
    boundaries is out of desk range) with an info entry.
    """
    if dyn.synthetic or dyn.orbit is None or dyn.pc is None:
        return [_entry("telescope degree crosscheck", "info",
                       "needs geometry; nothing to sample", None)]
    orbit, pc, d = dyn.orbit, dyn.pc, dyn.degree
    out = []
    checked = 0
    for label, steps, src in _telescopes(dyn):
        if src > max_depth or steps > max_steps:
            out.append(_entry(
                "telescope degree crosscheck", "info",
                f"{label}: source depth {src} past the sampling ceiling "
                f"{max_depth}", None))
            continue
        cnt = passages(orbit, 0, steps, src - steps)
        sampled = 1
        for j in range(steps):
            piece = pc.piece_containing(orbit.point(j), src - j)
            sampled *= pc.count_preimages_inside(piece, orbit.point(j + 1))
        ok = sampled == d ** cnt
        checked += 1
        out.append(_entry(
            "telescope degree crosscheck", "pass" if ok else "fail",
            f"{label}: {steps} steps, sampled preimage product {sampled} "
            f"vs d^passages = {d}^{cnt}", None,
            sampled=sampled, passages=cnt))
    if not checked:
        out.append(_entry("telescope degree crosscheck", "pass",
                          "no composed return maps within range; vacuous",
                          None))
    return out

"""Nested return structure of the critical orbit.

Levels come in pairs. A generalized-return level (GplLevel) is the first
return map to a critical piece V, restricted to the return domains that
meet the critical orbit: the central domain W around 0 plus finitely many
off-central domains. A kingdom level (KingdomLevel) refines it: the
central cascade V = Omega_0 > W = Omega_1 > ... > Omega_N ends at the
castle U = Omega_N, the king A is the critical piece cut out by the first
return of g^{N-1}(0) to W, and the level's return map G sends the king
d-to-1 onto W while every subject and man domain maps with degree one.
Renormalizing a kingdom (first return to A on postcritical components)
produces the next GplLevel with V' = A, and the alternation is a dynasty.

Everything here is symbolic. A domain is a puzzle piece around a known
orbit point, so it is identified by (orbit index, depth) and compared by
address; containment and disjointness are depth arithmetic plus label
comparison, never floating geometry. All times are absolute iterations
of the base map f. Structural claims (degrees, nesting, disjointness,
time composition) are not assumed: each is re-checked and recorded as an
audit entry, and a failed entry is a falsifier, not an exception.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import (
    BudgetExceededError,
    CombinatoricsError,
    PreconditionError,
)
from .orbit import CriticalOrbit
from .puzzle import PuzzleAddress, PuzzleComplex

TERMINATION_KINDS = (
    "depth_limit",
    "non_recurrent",
    "dh_renormalizable",
    "primitively_renormalizable",
    "satellite_renormalizable_at_start",
)

MULTIPLIER_TOL = 1e-9


@dataclass
class Termination:
    """Why a dynasty stopped. `note` distinguishes a proven stop (closed
    orbit arithmetic) from an exhausted budget."""

    kind: str
    note: str = ""
    level: int = 0

    def __post_init__(self) -> None:
        if self.kind not in TERMINATION_KINDS:
            raise PreconditionError(f"unknown termination kind {self.kind!r}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "note": self.note, "level": self.level}


@dataclass
class GplLevel:
    """First-return level: g = f^t maps W onto V with degree d; each
    off-central domain maps onto V with degree one."""

    n: int
    V: Optional[PuzzleAddress]
    W: Optional[PuzzleAddress]
    offcentral_domains: list[PuzzleAddress]
    return_time_per_domain: dict[str, int]
    t: int
    v_depth: int
    w_depth: int
    # orbit index witnessing each off-central domain (geometric mode)
    domain_witness: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "V": None if self.V is None else str(self.V),
            "W": None if self.W is None else str(self.W),
            "t": self.t,
            "v_depth": self.v_depth,
            "w_depth": self.w_depth,
            "offcentral_domains": [str(a) for a in self.offcentral_domains],
            "return_time_per_domain": dict(self.return_time_per_domain),
        }


@dataclass
class KingdomLevel:
    """Kingdom refinement of a GplLevel.

    cascade holds Omega_0 .. Omega_N (N+1 addresses). T is the absolute
    time of G on the king: T = (N-1) t + r_s where r_s is the first
    return time of g^{N-1}(0) to W. Delta is the king's apartment,
    the critical pullback of the return domain around g^N(0).
    """

    n: int
    W: Optional[PuzzleAddress]
    U: Optional[PuzzleAddress]
    A: Optional[PuzzleAddress]
    Delta: Optional[PuzzleAddress]
    subjects: list[PuzzleAddress]
    men: list[PuzzleAddress]
    cascade: list[Optional[PuzzleAddress]]
    T: int
    N: int
    r_s: int
    r_j: Optional[int]
    u_depth: int
    a_depth: int
    delta_depth: Optional[int]
    subject_time: dict[str, int] = field(default_factory=dict)
    subject_witness: dict[str, int] = field(default_factory=dict)
    man_witness: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "N_cascade": self.N,
            "T": self.T,
            "r_s": self.r_s,
            "r_j": self.r_j,
            "U": None if self.U is None else str(self.U),
            "A": None if self.A is None else str(self.A),
            "Delta": None if self.Delta is None else str(self.Delta),
            "u_depth": self.u_depth,
            "a_depth": self.a_depth,
            "delta_depth": self.delta_depth,
            "subject_count": len(self.subjects),
            "men_count": len(self.men),
        }


@dataclass
class Dynasty:
    """A finished (possibly empty) alternation of levels plus bookkeeping.

    levels is flat: [gpl_0, kingdom_0, gpl_1, kingdom_1, ...]. times
    holds the arrays t_n, T_n and s_n = t_n + T_{n-1} (s_0 = t_0).
    e_depths/e_addresses give the relabeled nest E^0 > E^1 > ... with
    E^{2n} = V^n and E^{2n+1} = W^n; enlargements map i >= 1 to
    hat(E^i) (hat(W^n) = V^n, hat(V^n) = Delta^{n-1}) and buffers map
    i >= 2 to tilde(E^i), the critical pullback of hat(E^{i-1}).
    """

    degree: int
    c: Optional[complex]
    base: Optional[GplLevel]
    levels: list
    times: "TravelTimes"
    termination: Termination
    e_addresses: list[Optional[PuzzleAddress]]
    e_depths: list[int]
    enlargement_depths: dict[int, int]
    enlargement_addresses: dict[int, Optional[PuzzleAddress]]
    buffer_depths: dict[int, int]
    buffer_addresses: dict[int, Optional[PuzzleAddress]]
    audits: list[dict]
    synthetic: bool
    notes: list[str]
    forced: dict = field(default_factory=dict)
    pc: Optional[PuzzleComplex] = field(default=None, repr=False)
    orbit: Optional[CriticalOrbit] = field(default=None, repr=False)

    @property
    def n_levels(self) -> int:
        """Number of completed GplLevels."""
        return (len(self.levels) + 1) // 2

    @property
    def n_kingdoms(self) -> int:
        return len(self.levels) // 2

    def gpl(self, n: int) -> GplLevel:
        return self.levels[2 * n]

    def kingdom(self, n: int) -> KingdomLevel:
        return self.levels[2 * n + 1]

    def falsifiers(self) -> list[dict]:
        return [a for a in self.audits if a["status"] == "fail"]

    def v_depth(self, n: int) -> int:
        return self.e_depths[2 * n]

    def w_depth(self, n: int) -> int:
        return self.e_depths[2 * n + 1]

    def to_json(self) -> dict:
        per_level = []
        for n in range(self.n_levels):
            lv = self.gpl(n)
            rec = lv.to_json()
            rec["s"] = self.times.s[n]
            if n < self.n_kingdoms:
                rec.update(self.kingdom(n).to_json())
            per_level.append(rec)
        return {
            "degree": self.degree,
            "c": None if self.c is None else [self.c.real, self.c.imag],
            "synthetic": self.synthetic,
            "levels": per_level,
            "times": self.times.to_json(),
            "termination": self.termination.to_json(),
            "e_depths": list(self.e_depths),
            "enlargement_depths": {str(k): v for k, v in sorted(self.enlargement_depths.items())},
            "buffer_depths": {str(k): v for k, v in sorted(self.buffer_depths.items())},
            "notes": list(self.notes),
            "falsifier_count": len(self.falsifiers()),
        }


@dataclass
class TravelTimes:
    t: list[int]
    T: list[int]
    s: list[int]

    def to_json(self) -> dict:
        return {"t": list(self.t), "T": list(self.T), "s": list(self.s)}


# ------------------------------------------------------------------ helpers


def _entry(name: str, status: str, detail: str = "", level: int | None = None,
           **witness) -> dict:
    e = {"name": name, "status": status, "detail": detail, "level": level}
    if witness:
        e["witness"] = witness
    return e


def critical_address(orbit: CriticalOrbit, depth: int) -> PuzzleAddress:
    return orbit.address_at(0, depth)


def passages(orbit: CriticalOrbit, start: int, steps: int, target_depth: int) -> int:
    """Number of critical pieces in the pullback chain of length `steps`
    from the piece around orbit index `start` (depth target_depth+steps)
    down to depth target_depth. The composed map f^steps restricted to
    that piece has degree d**passages.
    """
    count = 0
    for j in range(steps):
        dep = target_depth + steps - j
        if orbit.matches_address(start + j, critical_address(orbit, dep)):
            count += 1
    return count


def pieces_disjoint(orbit: CriticalOrbit,
                    a: tuple[int, int, PuzzleAddress],
                    b: tuple[int, int, PuzzleAddress]) -> bool:
    """Interior-disjointness of two pieces given as (witness orbit index,
    depth, address). Pieces of equal depth are disjoint iff addresses
    differ; otherwise the deeper piece is inside the shallower one iff
    its ancestor at the shallower depth has the shallower piece's
    address."""
    (ka, da, addr_a), (kb, db, addr_b) = a, b
    if da == db:
        return addr_a != addr_b
    if da < db:
        return orbit.address_at(kb, da) != addr_a
    return orbit.address_at(ka, db) != addr_b


def _pairwise_disjoint_audit(orbit, items, name, level, audits) -> None:
    """items: list of (label, witness index, depth, address)."""
    bad = []
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            la, ka, da, aa = items[i]
            lb, kb, db, ab = items[j]
            if not pieces_disjoint(orbit, (ka, da, aa), (kb, db, ab)):
                bad.append(f"{la} and {lb}")
    if bad:
        audits.append(_entry(name, "fail",
                             "address logic shows overlap: " + "; ".join(bad),
                             level))
    else:
        audits.append(_entry(name, "pass",
                             f"{len(items)} domains pairwise disjoint", level))


def _effective_horizon(orbit: CriticalOrbit, horizon: int) -> tuple[int, bool]:
    """(index bound for postcritical enumeration, whether it is complete)."""
    cyc = orbit.cycle()
    if cyc is not None:
        pre, per = cyc
        return pre + per, True
    return horizon, False


# ------------------------------------------------------------- construction


def _repelling_screen(orbit: CriticalOrbit) -> None:
    lam = orbit.multiplier()
    if lam is None:
        return
    if abs(lam) <= 1 + MULTIPLIER_TOL:
        pre, per = orbit.cycle()
        raise PreconditionError(
            f"critical orbit lands on a period-{per} cycle with multiplier "
            f"|lambda| = {abs(lam):.6g}; every periodic point must be repelling"
        )


def first_kingdom(pc: PuzzleComplex, orbit: CriticalOrbit | None = None,
                  depth_budget: int = 512, horizon: int = 1024,
                  audits: list[dict] | None = None):
    """Locate the first level: the least l >= 1 with f^{lq}(0) inside a
    depth-1 piece detached from the alpha cycle, V^0 the critical piece
    at depth lq+1, and the completed return level on V^0.

    Returns a GplLevel, or a Termination when the orbit stays in the
    critical depth-0 sector along all checked multiples of q (satellite
    case) or never returns to V^0 (non-recurrent case).
    """
    if orbit is None:
        orbit = CriticalOrbit(pc)
    audits = audits if audits is not None else []
    _repelling_screen(orbit)
    q = pc.fixed.q
    cyc = orbit.cycle()
    if cyc is not None:
        pre, per = cyc
        # enough multiples to see every label the closed orbit can take
        l_max = (pre + per + q - 1) // q + per
        exact = True
    else:
        l_max = max(depth_budget // q, 1)
        exact = False
    central_label = orbit.label0(0)
    found = None
    stayed_central = True
    for l in range(1, l_max + 1):
        idx = l * q
        if orbit.label1(idx).startswith("Z"):
            found = l
            break
        if orbit.label0(idx) != central_label:
            stayed_central = False
    if found is None:
        if stayed_central:
            note = ("f^(lq)(0) stays in the critical depth-0 sector for every "
                    "l; exact, the orbit is closed" if exact else
                    f"f^(lq)(0) stays in the critical depth-0 sector for all "
                    f"lq <= {l_max * q}; undecided beyond the depth budget")
            return Termination("satellite_renormalizable_at_start", note, 0)
        if exact:
            raise CombinatoricsError(
                "closed critical orbit leaves the depth-0 sector at a multiple "
                "of q yet never meets a detached depth-1 piece; this "
                "contradicts the first-level dichotomy")
        raise BudgetExceededError(
            f"no multiple of q up to {l_max * q} lands in a detached depth-1 "
            "piece although the orbit leaves the critical sector")
    v_depth = found * q + 1
    if v_depth > depth_budget:
        raise BudgetExceededError(
            f"first detached landing needs depth {v_depth} > depth budget "
            f"{depth_budget}")
    audits.append(_entry("first landing in detached piece", "pass",
                         f"l = {found}, depth(V^0) = {v_depth}", 0,
                         l=found, q=q))
    return _complete_gpl_level(pc, orbit, 0, v_depth, horizon, audits)


def _complete_gpl_level(pc, orbit, n, v_depth, horizon, audits):
    V_addr = orbit.address_at(0, v_depth)
    try:
        t = orbit.first_return(0, V_addr)
    except BudgetExceededError as e:
        return Termination("non_recurrent", f"budget: {e}", n)
    if t is None:
        return Termination(
            "non_recurrent",
            f"critical orbit never re-enters its level-{n} central piece; "
            "exact, the orbit is closed", n)
    w_depth = v_depth + t
    W_addr = orbit.address_at(0, w_depth)
    lv = GplLevel(n=n, V=V_addr, W=W_addr, offcentral_domains=[],
                  return_time_per_domain={}, t=t,
                  v_depth=v_depth, w_depth=w_depth)
    _enumerate_offcentral(orbit, lv, horizon, audits)
    audits.append(_entry("central return degree", _deg_status(
        passages(orbit, 0, t, v_depth), 1),
        f"g: W -> V passes the critical point once over {t} steps", n))
    return lv


def _deg_status(count: int, expected: int) -> str:
    return "pass" if count == expected else "fail"


def _enumerate_offcentral(orbit, lv, horizon, audits):
    H, complete = _effective_horizon(orbit, horizon)
    seen: dict[str, tuple] = {}
    order: list[str] = []
    skipped = 0
    for a in range(1, H + 1):
        if not orbit.matches_address(a, lv.V):
            continue
        if orbit.matches_address(a, lv.W):
            continue
        try:
            r = orbit.first_return(a, lv.V)
        except BudgetExceededError:
            skipped += 1
            continue
        if r is None:
            skipped += 1
            continue
        addr = orbit.address_at(a, lv.v_depth + r)
        key = str(addr)
        if key not in seen:
            seen[key] = (addr, r, a)
            order.append(key)
    lv.offcentral_domains = [seen[k][0] for k in order]
    lv.return_time_per_domain = {k: seen[k][1] for k in order}
    lv.domain_witness = {k: seen[k][2] for k in order}
    detail = (f"{len(order)} off-central domains along the "
              f"{'closed' if complete else f'first {H} points of the'} "
              "critical orbit")
    if skipped:
        detail += f"; {skipped} orbit points in V never return (no domain)"
    audits.append(_entry("off-central enumeration", "info", detail, lv.n))
    # degree one on every off-central domain
    bad = [k for k in order
           if passages(orbit, seen[k][2], seen[k][1], lv.v_depth) != 0]
    audits.append(_entry(
        "off-central degrees", "fail" if bad else "pass",
        ("critical passage inside off-central domain(s): " + ", ".join(bad))
        if bad else "every off-central domain maps with degree one", lv.n))
    items = [("W", 0, lv.w_depth, lv.W)] + [
        (k, seen[k][2], lv.v_depth + seen[k][1], seen[k][0]) for k in order]
    _pairwise_disjoint_audit(orbit, items, "return domain disjointness",
                             lv.n, audits)


def central_cascade(pc, orbit, level: GplLevel, bound: int = 64,
                    audits: list[dict] | None = None):
    """The nest Omega_0 = V > Omega_1 = W > ... > Omega_N, where N is the
    least k >= 1 with g^k(0) outside Omega_k. Returns the list of N+1
    addresses, or a Termination when N would exceed `bound` (the
    renormalizable-case proxy; the true condition is not finitely
    decidable)."""
    audits = audits if audits is not None else []
    t, v = level.t, level.v_depth
    omegas = [level.V]
    k = 1
    while True:
        om_k = orbit.address_at(0, v + k * t)
        omegas.append(om_k)
        if not orbit.matches_address(k * t, om_k):
            N = k
            break
        if k >= bound:
            return Termination(
                "dh_renormalizable",
                f"central cascade exceeds the bound {bound}; reported as "
                "DH/primitive renormalizable rather than proven so",
                level.n)
        k += 1
    for j in range(N):
        cnt = passages(orbit, 0, t, v + j * t)
        if cnt != 1:
            audits.append(_entry("cascade step degree", "fail",
                                 f"g: Omega_{j+1} -> Omega_{j} has passage "
                                 f"count {cnt}, want 1", level.n))
            break
    else:
        audits.append(_entry("cascade step degree", "pass",
                             f"all {N} cascade steps unicritical", level.n))
    audits.append(_entry("cascade length", "info", f"N = {N}", level.n, N=N))
    return omegas


def kingdom_renormalization(pc, orbit, level: GplLevel, omegas: list,
                            horizon: int = 1024,
                            audits: list[dict] | None = None):
    """Build the kingdom on top of a finished cascade: the king A (the
    critical piece carved by the first return of g^{N-1}(0) to W), the
    apartment Delta, and the subject/man domains around the critical
    orbit. May return a Termination if the defining return never
    happens."""
    audits = audits if audits is not None else []
    N = len(omegas) - 1
    t, v, w = level.t, level.v_depth, level.w_depth
    n = level.n
    U_addr = omegas[N]
    u_depth = v + N * t

    b0 = (N - 1) * t
    try:
        r_s = orbit.first_return(b0, level.W)
    except BudgetExceededError as e:
        return Termination("non_recurrent", f"budget: {e}", n)
    if r_s is None:
        return Termination(
            "non_recurrent",
            f"g^{N-1}(0) never re-enters the level-{n} central domain; "
            "exact, the orbit is closed", n)
    Xs_addr = orbit.address_at(b0, w + r_s)
    if N >= 2:
        crit = critical_address(orbit, w + r_s)
        audits.append(_entry(
            "king return domain off-central", "pass" if Xs_addr != crit else "fail",
            f"X_s around g^{N-1}(0) at depth {w + r_s}", n))
    a_depth = w + (N - 1) * t + r_s
    A_addr = orbit.address_at(0, a_depth)
    T = (N - 1) * t + r_s

    # the apartment: critical pullback of the return domain around g^N(0)
    y = N * t
    r_j = None
    Delta_addr = None
    delta_depth = None
    try:
        r_j = orbit.first_return(y, level.V)
    except BudgetExceededError:
        audits.append(_entry("apartment", "info",
                             f"g^{N}(0) return to V undecided within budget; "
                             "apartment omitted", n))
    if r_j is not None:
        Wj_addr = orbit.address_at(y, v + r_j)
        crit = critical_address(orbit, v + r_j)
        audits.append(_entry(
            "apartment domain off-central",
            "pass" if Wj_addr != crit else "fail",
            f"W_j around g^{N}(0) at depth {v + r_j}", n))
        delta_depth = v + N * t + r_j
        Delta_addr = orbit.address_at(0, delta_depth)
        cnt = passages(orbit, 0, N * t + r_j, v)
        audits.append(_entry(
            "apartment degree", _deg_status(cnt, 1),
            f"g^{N+1}: Delta -> V passage count {cnt}, want 1", n))
        audits.append(_entry(
            "king inside apartment", "pass" if r_s > r_j else "fail",
            f"r_s = {r_s} vs r_j = {r_j}; A strictly inside Delta needs "
            "r_s > r_j", n))
        audits.append(_entry(
            "apartment inside castle", "pass" if delta_depth > u_depth else "fail",
            f"depth(Delta) = {delta_depth} vs depth(U) = {u_depth}", n))
    elif r_j is None and orbit.cycle() is not None:
        audits.append(_entry("apartment", "info",
                             f"g^{N}(0) never returns to V; apartment omitted",
                             n))

    kd = KingdomLevel(
        n=n, W=level.W, U=U_addr, A=A_addr, Delta=Delta_addr,
        subjects=[], men=[], cascade=omegas, T=T, N=N, r_s=r_s, r_j=r_j,
        u_depth=u_depth, a_depth=a_depth, delta_depth=delta_depth)

    cnt = passages(orbit, 0, T, w)
    audits.append(_entry("king degree", _deg_status(cnt, 1),
                         f"G: A -> W passage count {cnt}, want 1 "
                         f"(degree {pc.fmap.degree})", n))
    audits.append(_entry(
        "castle strictly inside kingdom domain",
        "pass" if (N >= 2) == (u_depth > w) else "fail",
        f"N = {N}: U {'=' if N == 1 else 'strictly inside'} W "
        "(the two coincide exactly when the cascade has length one)", n))

    _enumerate_court(pc, orbit, level, kd, horizon, audits)
    return kd


def _classify_court(orbit, level: GplLevel, kd: KingdomLevel, a: int):
    """G-domain around postcritical orbit point a in W minus A.

    Returns ("man", address, time) or ("subject", address, time, X_addr).
    Raises BudgetExceededError if a needed return scan is undecided.
    """
    t = level.t
    k = 1
    while k < kd.N and orbit.matches_address(a, kd.cascade[k + 1]):
        k += 1
    if k == kd.N and orbit.matches_address(a + t, kd.U):
        addr = orbit.address_at(a, kd.u_depth + t)
        return ("man", addr, t)
    b = a + (k - 1) * t
    r_b = orbit.first_return(b, level.W)
    if r_b is None:
        return None
    addr = orbit.address_at(a, level.w_depth + (k - 1) * t + r_b)
    X_addr = orbit.address_at(b, level.w_depth + r_b)
    return ("subject", addr, (k - 1) * t + r_b, X_addr)


def _enumerate_court(pc, orbit, level, kd, horizon, audits):
    H, complete = _effective_horizon(orbit, horizon)
    n = level.n
    d = pc.fmap.degree
    skipped = 0
    for a in range(1, H + 1):
        if not orbit.matches_address(a, level.W):
            continue
        if orbit.matches_address(a, kd.A):
            continue
        try:
            cls = _classify_court(orbit, level, kd, a)
        except BudgetExceededError:
            skipped += 1
            continue
        if cls is None:
            skipped += 1
            continue
        kind, addr, time = cls[0], cls[1], cls[2]
        key = str(addr)
        if kind == "man":
            if key not in kd.man_witness:
                kd.men.append(addr)
                kd.man_witness[key] = a
        else:
            X_addr = cls[3]
            if key not in kd.subject_witness:
                kd.subjects.append(addr)
                kd.subject_witness[key] = a
                kd.subject_time[key] = time
                crit = critical_address(orbit, X_addr.depth)
                if X_addr == crit:
                    audits.append(_entry(
                        "subject classification", "fail",
                        f"postcritical point {a} pulls back through the "
                        f"critical return domain at depth {X_addr.depth}; "
                        "unclassified postcritical domain", n))
    detail = (f"{len(kd.subjects)} subjects, {len(kd.men)} men along the "
              f"{'closed' if complete else f'first {H} points of the'} orbit")
    if skipped:
        detail += f"; {skipped} points with undecided returns"
    audits.append(_entry("court enumeration", "info", detail, n))
    audits.append(_entry(
        "men count", "pass" if len(kd.men) <= d else "fail",
        f"{len(kd.men)} men, at most {d} allowed", n))
    bad = []
    for key, a in kd.man_witness.items():
        if passages(orbit, a, level.t, kd.u_depth) != 0:
            bad.append(key)
    for key, a in kd.subject_witness.items():
        if passages(orbit, a, kd.subject_time[key], level.w_depth) != 0:
            bad.append(key)
    audits.append(_entry(
        "court degrees", "fail" if bad else "pass",
        ("critical passage inside domain(s): " + ", ".join(bad)) if bad
        else "every subject and man maps with degree one", n))
    items = [("A", 0, kd.a_depth, kd.A)]
    for addr in kd.subjects:
        key = str(addr)
        items.append((f"subject {key}", kd.subject_witness[key],
                      addr.depth, addr))
    for addr in kd.men:
        key = str(addr)
        items.append((f"man {key}", kd.man_witness[key], addr.depth, addr))
    _pairwise_disjoint_audit(orbit, items, "court disjointness", n, audits)


def renormalize_kingdom(pc, orbit, kd: KingdomLevel, level: GplLevel,
                        horizon: int = 1024,
                        audits: list[dict] | None = None):
    """First return to the king on postcritical components: the next
    GplLevel with V' = A. Cross-checks the raw first-return time against
    a walk that composes the kingdom's own domain times."""
    audits = audits if audits is not None else []
    nxt = _complete_gpl_level(pc, orbit, kd.n + 1, kd.a_depth, horizon, audits)
    if isinstance(nxt, Termination):
        return nxt
    _g_walk_crosscheck(orbit, level, kd, nxt.t, audits)
    return nxt


def _g_walk_crosscheck(orbit, level, kd, t_next, audits):
    """Walk the critical orbit through G-domains until it re-enters A;
    the accumulated domain times must reproduce the raw first-return
    time. Any point the walk cannot classify is a falsifier."""
    idx = kd.T
    steps = 0
    while not orbit.matches_address(idx, kd.A):
        if idx > t_next:
            audits.append(_entry(
                "return-time cross-check", "fail",
                f"G-walk passed the raw return time {t_next} without "
                f"re-entering the king (reached {idx})", kd.n))
            return
        if not orbit.matches_address(idx, level.W):
            audits.append(_entry(
                "return-time cross-check", "fail",
                f"G-orbit point at raw time {idx} left the kingdom domain",
                kd.n))
            return
        try:
            cls = _classify_court(orbit, level, kd, idx)
        except BudgetExceededError:
            cls = None
        if cls is None:
            audits.append(_entry(
                "return-time cross-check", "fail",
                f"G-orbit point at raw time {idx} has no G-domain", kd.n))
            return
        idx += cls[2]
        steps += 1
    status = "pass" if idx == t_next else "fail"
    audits.append(_entry(
        "return-time cross-check", status,
        f"G-walk re-enters the king after {steps + 1} G-steps at raw time "
        f"{idx}; raw scan gives {t_next}", kd.n))


def build_dynasty(pc: PuzzleComplex, orbit: CriticalOrbit | None = None,
                  max_levels: int = 8, depth_budget: int = 512,
                  cascade_bound: int = 64, horizon: int = 1024) -> Dynasty:
    """Alternate the two renormalizations until a termination condition
    or max_levels completed level pairs."""
    if orbit is None:
        orbit = CriticalOrbit(pc)
    audits: list[dict] = []
    notes: list[str] = []
    cyc = orbit.cycle()
    if cyc is None:
        notes.append(f"no closed orbit within the screening horizon; "
                     f"postcritical enumeration capped at index {horizon}")
    else:
        notes.append(f"critical orbit closes up: preperiod {cyc[0]}, "
                     f"period {cyc[1]}; all scans exact")
    res = first_kingdom(pc, orbit, depth_budget, horizon, audits)
    if isinstance(res, Termination):
        return _finish_dynasty(pc, orbit, [], res, audits, notes)
    levels: list = [res]
    termination = None
    while termination is None:
        lv = levels[-1]
        cas = central_cascade(pc, orbit, lv, cascade_bound, audits)
        if isinstance(cas, Termination):
            termination = cas
            break
        kd = kingdom_renormalization(pc, orbit, lv, cas, horizon, audits)
        if isinstance(kd, Termination):
            termination = kd
            break
        levels.append(kd)
        if lv.n + 1 >= max_levels:
            termination = Termination(
                "depth_limit", f"built {max_levels} levels", lv.n + 1)
            break
        nxt = renormalize_kingdom(pc, orbit, kd, lv, horizon, audits)
        if isinstance(nxt, Termination):
            termination = nxt
            break
        levels.append(nxt)
    return _finish_dynasty(pc, orbit, levels, termination, audits, notes)


def _finish_dynasty(pc, orbit, levels, termination, audits, notes) -> Dynasty:
    t_arr, T_arr, s_arr = [], [], []
    e_addresses, e_depths = [], []
    n_g = (len(levels) + 1) // 2
    for n in range(n_g):
        lv = levels[2 * n]
        t_arr.append(lv.t)
        s_arr.append(lv.t + (T_arr[n - 1] if n else 0))
        e_addresses.extend([lv.V, lv.W])
        e_depths.extend([lv.v_depth, lv.w_depth])
        if 2 * n + 1 < len(levels):
            T_arr.append(levels[2 * n + 1].T)
    times = TravelTimes(t_arr, T_arr, s_arr)
    dyn = Dynasty(
        degree=pc.fmap.degree, c=pc.fmap.c,
        base=levels[0] if levels else None,
        levels=levels, times=times, termination=termination,
        e_addresses=e_addresses, e_depths=e_depths,
        enlargement_depths={}, enlargement_addresses={},
        buffer_depths={}, buffer_addresses={},
        audits=audits, synthetic=False, notes=notes,
        pc=pc, orbit=orbit)
    _fill_extensions(dyn)
    _bookkeeping_audits(dyn)
    return dyn


def _fill_extensions(dyn: Dynasty) -> None:
    """Enlargements hat(E^i) for i >= 1 and buffers tilde(E^i) for i >= 2.

    hat(E^{2n+1}) = V^n (around W^n) and hat(E^{2n}) = Delta^{n-1}
    (around V^n); tilde(E^i) is the critical pullback of hat(E^{i-1})
    under the connecting map psi_i.
    """
    orbit = dyn.orbit

    def addr(depth):
        return None if orbit is None else orbit.address_at(0, depth)

    for n in range(dyn.n_levels):
        i = 2 * n + 1  # W^n slot
        dyn.enlargement_depths[i] = dyn.v_depth(n)
        dyn.enlargement_addresses[i] = dyn.e_addresses[2 * n] if dyn.e_addresses else None
        if n >= 1:
            i = 2 * n  # V^n slot
            kd_prev = dyn.levels[2 * (n - 1) + 1]
            if kd_prev.delta_depth is not None:
                dyn.enlargement_depths[i] = kd_prev.delta_depth
                dyn.enlargement_addresses[i] = kd_prev.Delta
    for i in sorted(dyn.enlargement_depths):
        j = i + 1  # buffer slot fed by enlargement i = j - 1
        if j > len(dyn.e_depths) - 1:
            continue
        step = dyn.e_depths[j] - dyn.e_depths[j - 1]  # time of psi_j
        dyn.buffer_depths[j] = dyn.enlargement_depths[i] + step
        dyn.buffer_addresses[j] = addr(dyn.buffer_depths[j])


def _bookkeeping_audits(dyn: Dynasty) -> None:
    audits = dyn.audits
    orbit = dyn.orbit
    for n in range(dyn.n_levels):
        lv = dyn.gpl(n)
        if lv.w_depth != lv.v_depth + lv.t:
            audits.append(_entry("depth bookkeeping", "fail",
                                 f"depth(W^{n}) != depth(V^{n}) + t_{n}", n))
        if n < dyn.n_kingdoms:
            kd = dyn.kingdom(n)
            if kd.a_depth != lv.w_depth + kd.T:
                audits.append(_entry("depth bookkeeping", "fail",
                                     f"depth(A^{n}) != depth(W^{n}) + T_{n}", n))
            if 2 * (n + 1) < len(dyn.levels) and dyn.gpl(n + 1).v_depth != kd.a_depth:
                audits.append(_entry("depth bookkeeping", "fail",
                                     f"depth(V^{n+1}) != depth(A^{n})", n))
    # psi_i unicritical and the nest E^i c tilde(E^i) c hat(E^i)
    for i, tdep in sorted(dyn.buffer_depths.items()):
        hat = dyn.enlargement_depths.get(i)
        edep = dyn.e_depths[i]
        ok_inner = tdep <= edep
        ok_outer = hat is None or tdep >= hat
        audits.append(_entry(
            "buffer nesting", "pass" if ok_inner and ok_outer else "fail",
            f"depth(hat E^{i}) = {hat}, depth(tilde E^{i}) = {tdep}, "
            f"depth(E^{i}) = {edep}", i // 2))
        if orbit is not None:
            step = dyn.e_depths[i] - dyn.e_depths[i - 1]
            cnt = passages(orbit, 0, step, dyn.enlargement_depths[i - 1]) \
                if (i - 1) in dyn.enlargement_depths else None
            if cnt is not None:
                audits.append(_entry(
                    "extension degree", _deg_status(cnt, 1),
                    f"psi_{i}: tilde E^{i} -> hat E^{i-1} passage count "
                    f"{cnt}, want 1", i // 2))


# ---------------------------------------------------------------- synthetic


def synthetic_dynasty(spec: dict) -> Dynasty:
    """Dynasty from abstract return data: no geometry, but the same time
    and depth bookkeeping, so every verifier that consumes times runs
    unchanged. spec format: {"levels": [{"t": int, "T": int, "N": int,
    "r_j": int, ...}, ...], "degree": int, "termination": kind}.
    A level without "T" is a bare GplLevel (the dynasty's last).
    """
    levels_spec = spec.get("levels", [])
    degree = int(spec.get("degree", 2))
    v_depth = int(spec.get("v0_depth", 1))
    levels: list = []
    t_arr, T_arr, s_arr = [], [], []
    e_addresses: list = []
    e_depths: list[int] = []
    for i, entry in enumerate(levels_spec):
        t = entry.get("t")
        if not isinstance(t, int) or t < 1:
            raise PreconditionError(
                f"inconsistent spec: level {i} needs an integer t >= 1")
        s = t + (T_arr[i - 1] if i else 0)
        if "s" in entry and entry["s"] != s:
            raise PreconditionError(
                f"inconsistent spec: s[{i}] = {entry['s']} but "
                f"t_{i} + T_{i-1} = {s}")
        lv = GplLevel(n=i, V=None, W=None, offcentral_domains=[],
                      return_time_per_domain={}, t=t,
                      v_depth=v_depth, w_depth=v_depth + t)
        levels.append(lv)
        t_arr.append(t)
        s_arr.append(s)
        e_addresses.extend([None, None])
        e_depths.extend([v_depth, v_depth + t])
        if "T" not in entry:
            break
        T = entry["T"]
        if not isinstance(T, int) or T < 1:
            raise PreconditionError(
                f"inconsistent spec: level {i} needs an integer T >= 1")
        N = int(entry.get("N", 1))
        if N < 1:
            raise PreconditionError(
                f"inconsistent spec: level {i} cascade length must be >= 1")
        r_s = T - (N - 1) * t
        if r_s < 1:
            raise PreconditionError(
                f"inconsistent spec: level {i} has T = {T} < (N-1) t + 1 "
                f"= {(N - 1) * t + 1}")
        r_j = entry.get("r_j")
        u_depth = v_depth + N * t
        a_depth = u_depth + r_s
        delta_depth = None if r_j is None else u_depth + int(r_j)
        kd = KingdomLevel(
            n=i, W=None, U=None, A=None, Delta=None, subjects=[], men=[],
            cascade=[None] * (N + 1), T=T, N=N, r_s=r_s, r_j=r_j,
            u_depth=u_depth, a_depth=a_depth, delta_depth=delta_depth)
        levels.append(kd)
        T_arr.append(T)
        v_depth = a_depth
    kind = spec.get("termination", "depth_limit")
    dyn = Dynasty(
        degree=degree, c=None, base=levels[0] if levels else None,
        levels=levels, times=TravelTimes(t_arr, T_arr, s_arr),
        termination=Termination(kind, "synthetic spec",
                                (len(levels) + 1) // 2),
        e_addresses=e_addresses, e_depths=e_depths,
        enlargement_depths={}, enlargement_addresses={},
        buffer_depths={}, buffer_addresses={},
        audits=[], synthetic=True, notes=["synthetic dynasty"],
        forced=dict(spec.get("forced", {})))
    _fill_extensions(dyn)
    return dyn

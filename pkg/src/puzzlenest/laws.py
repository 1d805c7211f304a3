"""Moduli laws on nested annuli and the nest moduli audit.

Four checks run on top of the modulus solver: superadditivity of the
modulus over disjoint essential sub-annuli, the quasi-additivity bound
for many disjoint buffers inside a thin annulus, the covering bound for
moduli transported through a branched covering, and the level-to-level
decrease audit over a dynasty's nest annuli. The absolute constants in
the laws are user inputs; every conclusion involving them is evaluated
at the supplied value and reported together with the implied constant,
never asserted as verified.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audit import falsifiers
from .errors import ModulusError, PreconditionError
from .geometry import winding_number
from .modulus import (DEFAULT_GRID, DEFAULT_REFINEMENTS, AnnulusRegion,
                      LawConstants, ModulusEstimate, modulus)
from .nest import Dynasty, _entry


def _centroid(poly: np.ndarray) -> complex:
    pts = np.asarray(poly, dtype=complex)
    if abs(pts[0] - pts[-1]) > 1e-14:
        pts = np.append(pts, pts[0])
    a, b = pts[:-1], pts[1:]
    cross = a.real * b.imag - b.real * a.imag
    area = cross.sum() / 2.0
    if area == 0:
        raise PreconditionError("disk boundary has zero area")
    return complex(((a + b) * cross).sum() / (6.0 * area))


# ------------------------------------------------------------- series law


@dataclass
class SeriesReport:
    total: ModulusEstimate
    parts: list[ModulusEstimate]
    margin: float
    combined_error: float
    audits: list[dict] = field(default_factory=list)

    def falsifiers(self) -> list[dict]:
        return falsifiers(self.audits)

    def to_json(self) -> dict:
        return {"total": self.total.to_json(),
                "parts": [p.to_json() for p in self.parts],
                "margin": self.margin,
                "combined_error": self.combined_error,
                "audits": self.audits}


def series_law_check(region: AnnulusRegion,
                     parts: list[AnnulusRegion],
                     base_grid: int = DEFAULT_GRID,
                     refinements: int = DEFAULT_REFINEMENTS) -> SeriesReport:
    """Superadditivity of the modulus over essential sub-annuli.

    Each part must separate the two boundary curves of the region;
    the parts are assumed pairwise disjoint (caller's geometry). The
    modulus of the region is at least the sum of the part moduli, with
    equality for a split along a core curve of the region.
    """
    if not parts:
        raise PreconditionError("no sub-annuli supplied")
    core = _centroid(region.inner)
    for k, part in enumerate(parts):
        for which, poly in (("inner", part.inner), ("outer", part.outer)):
            if winding_number(np.asarray(poly, dtype=complex), core) != 1:
                raise PreconditionError(
                    f"sub-annulus {k} is not essential: its {which} "
                    "curve does not wind once around the core")
    total = modulus(region, base_grid, refinements)
    mods = [modulus(p, base_grid, refinements) for p in parts]
    sum_parts = sum(m.value for m in mods)
    combined = total.error + sum(m.error for m in mods)
    margin = total.value - sum_parts
    audits = [_entry("series law moduli", "info",
                     f"whole {total.value:.6g} +- {total.error:.2g}; parts "
                     + ", ".join(f"{m.value:.6g}" for m in mods))]
    audits.append(_entry(
        "series law superadditivity",
        "pass" if margin >= -combined else "fail",
        f"margin {margin:.3e} with combined error {combined:.2e}"))
    return SeriesReport(total, mods, margin, combined, audits)


# -------------------------------------------------------- quasi-additivity


@dataclass
class QuasiAdditivityReport:
    mod_vw: ModulusEstimate
    mod_v_lam: list[ModulusEstimate]
    mod_buf: list[ModulusEstimate]
    hypothesis_met: bool
    implied_C: float
    audits: list[dict] = field(default_factory=list)

    def falsifiers(self) -> list[dict]:
        return falsifiers(self.audits)

    def to_json(self) -> dict:
        return {"mod_vw": self.mod_vw.to_json(),
                "mod_v_lam": [m.to_json() for m in self.mod_v_lam],
                "mod_buf": [m.to_json() for m in self.mod_buf],
                "hypothesis_met": self.hypothesis_met,
                "implied_C": self.implied_C,
                "audits": self.audits}


def quasi_additivity_check(V: np.ndarray, W: np.ndarray,
                           pairs: list[tuple[np.ndarray, np.ndarray]],
                           constants: LawConstants = LawConstants(),
                           base_grid: int = DEFAULT_GRID,
                           refinements: int = DEFAULT_REFINEMENTS,
                           ) -> QuasiAdditivityReport:
    """Bound on mod(V minus W) from m disjoint buffered disks inside W.

    pairs lists (core, buffer) disk boundaries with core inside buffer
    inside W; buffer closures pairwise disjoint. Hypotheses checked
    numerically: mod(V minus core_i) < delta and mod(buffer_i minus
    core_i) > eta delta for every i, with delta inside (0, delta_0).
    When met, the bound mod(V minus W) < C delta / (eta m) is evaluated
    at the user constant; the implied constant mod(V minus W) m eta /
    delta is always reported.
    """
    m = len(pairs)
    if m == 0:
        raise PreconditionError("no pairs")
    cents = [_centroid(buf) for _, buf in pairs]
    from matplotlib.path import Path as MplPath
    for a in range(m):
        pa = np.asarray(pairs[a][1], dtype=complex)
        path = MplPath(np.column_stack([pa.real, pa.imag]))
        for b in range(m):
            if a != b and path.contains_point((cents[b].real,
                                               cents[b].imag)):
                raise PreconditionError(
                    f"buffer disks {a} and {b} overlap")
    mod_vw = modulus(AnnulusRegion(V, W), base_grid, refinements)
    mod_v_lam, mod_buf = [], []
    audits = []
    cst = constants
    met = True
    why = []
    if not 0 < cst.delta < cst.delta0:
        met = False
        why.append(f"delta {cst.delta:g} outside (0, delta_0 "
                   f"{cst.delta0:g})")
    for k, (lam, buf) in enumerate(pairs):
        mv = modulus(AnnulusRegion(V, lam), base_grid, refinements)
        mb = modulus(AnnulusRegion(buf, lam), base_grid, refinements)
        mod_v_lam.append(mv)
        mod_buf.append(mb)
        if not mv.value < cst.delta:
            met = False
            why.append(f"mod(V\\core_{k}) = {mv.value:.4g} >= delta")
        if not mb.value > cst.eta * cst.delta:
            met = False
            why.append(f"mod(buffer_{k}\\core_{k}) = {mb.value:.4g} "
                       "<= eta delta")
    implied = mod_vw.value * m * cst.eta / cst.delta
    if not met:
        audits.append(_entry("quasi-additivity hypothesis", "info",
                             "hypothesis not met: " + "; ".join(why)))
    else:
        audits.append(_entry("quasi-additivity hypothesis", "pass",
                             f"all {m} pairs within delta/eta bounds"))
        bound = cst.C * cst.delta / (cst.eta * m)
        audits.append(_entry(
            "quasi-additivity bound",
            "pass" if mod_vw.value < bound else "info",
            f"mod(V\\W) = {mod_vw.value:.4g} vs C delta/(eta m) = "
            f"{bound:.4g}, evaluated at user C = {cst.C:g}"
            + ("" if mod_vw.value < bound else
               "; exceeded, which calibrates C rather than refuting")))
    audits.append(_entry("implied constant", "info",
                         f"mod(V\\W) m eta / delta = {implied:.4g}"))
    return QuasiAdditivityReport(mod_vw, mod_v_lam, mod_buf, met,
                                 implied, audits)


# ---------------------------------------------------------- covering bound


@dataclass
class CoveringReport:
    mod_ua: ModulusEstimate
    mod_bpb: ModulusEstimate
    mod_vb: ModulusEstimate
    hypothesis_met: bool
    implied_C: float
    audits: list[dict] = field(default_factory=list)

    def falsifiers(self) -> list[dict]:
        return falsifiers(self.audits)

    def to_json(self) -> dict:
        return {"mod_ua": self.mod_ua.to_json(),
                "mod_bpb": self.mod_bpb.to_json(),
                "mod_vb": self.mod_vb.to_json(),
                "hypothesis_met": self.hypothesis_met,
                "implied_C": self.implied_C,
                "audits": self.audits}


def covering_lemma_check(up: tuple[np.ndarray, np.ndarray, np.ndarray],
                         down: tuple[np.ndarray, np.ndarray, np.ndarray],
                         d: int, D: int,
                         constants: LawConstants = LawConstants(),
                         base_grid: int = DEFAULT_GRID,
                         refinements: int = DEFAULT_REFINEMENTS,
                         ) -> CoveringReport:
    """Moduli transport bound through a degree-(d, D) branched covering.

    up = (U, A', A) and down = (V, B', B) are nests of disk boundaries;
    the covering itself is the caller's data (an actual map iterate or a
    synthetic model), only its degrees enter. Hypothesis: mod(B' minus
    B) > eta mod(U minus A), and mod(U minus A) < eps when a positive
    eps is supplied. Conclusion evaluated at user C:
    mod(V minus B) < C eta^-1 d^2 mod(U minus A).
    """
    if d < 1 or D < d:
        raise PreconditionError("degrees need 1 <= d <= D")
    U, Ap, A = up
    V, Bp, B = down
    mod_ua = modulus(AnnulusRegion(U, A), base_grid, refinements)
    mod_bpb = modulus(AnnulusRegion(Bp, B), base_grid, refinements)
    mod_vb = modulus(AnnulusRegion(V, B), base_grid, refinements)
    cst = constants
    audits = [_entry("covering data", "info",
                     f"deg(A'->B') = {d}, deg(U->V) = {D}; mod(U\\A) = "
                     f"{mod_ua.value:.4g}, mod(B'\\B) = "
                     f"{mod_bpb.value:.4g}, mod(V\\B) = "
                     f"{mod_vb.value:.4g}")]
    met = True
    why = []
    if not mod_bpb.value > cst.eta * mod_ua.value:
        met = False
        why.append(f"mod(B'\\B) = {mod_bpb.value:.4g} <= eta mod(U\\A) "
                   f"= {cst.eta * mod_ua.value:.4g}")
    if cst.eps > 0 and not mod_ua.value < cst.eps:
        met = False
        why.append(f"mod(U\\A) = {mod_ua.value:.4g} >= eps = "
                   f"{cst.eps:g}")
    implied = mod_vb.value * cst.eta / (d * d * mod_ua.value)
    if not met:
        audits.append(_entry("covering hypothesis", "info",
                             "hypothesis not met: " + "; ".join(why)))
    else:
        audits.append(_entry("covering hypothesis", "pass",
                             "moduli within the eta/eps window"))
        bound = cst.C * d * d * mod_ua.value / cst.eta
        audits.append(_entry(
            "covering bound",
            "pass" if mod_vb.value < bound else "info",
            f"mod(V\\B) = {mod_vb.value:.4g} vs C eta^-1 d^2 mod(U\\A) "
            f"= {bound:.4g}, evaluated at user C = {cst.C:g}"
            + ("" if mod_vb.value < bound else
               "; exceeded, which calibrates C rather than refuting")))
    audits.append(_entry("implied constant", "info",
                         f"mod(V\\B) eta / (d^2 mod(U\\A)) = "
                         f"{implied:.4g}"))
    return CoveringReport(mod_ua, mod_bpb, mod_vb, met, implied, audits)


# -------------------------------------------------------- nest moduli table


@dataclass
class NestTable:
    """Moduli of the annuli between consecutive nest pieces.

    rows[k] describes the annulus between nest pieces k and k+1 (table
    index i = k+1); mu is the smallest computed modulus."""

    rows: list[dict]
    mu: float | None
    audits: list[dict] = field(default_factory=list)

    def falsifiers(self) -> list[dict]:
        return falsifiers(self.audits)

    def estimate(self, i: int) -> ModulusEstimate | None:
        for row in self.rows:
            if row["i"] == i:
                return row["estimate"]
        return None

    def to_json(self) -> dict:
        rows = []
        for row in self.rows:
            out = dict(row)
            if out["estimate"] is not None:
                out["estimate"] = out["estimate"].to_json()
            rows.append(out)
        return {"rows": rows, "mu": self.mu, "audits": self.audits}


def _realized_critical_piece(dyn: Dynasty, depth: int,
                             cache: dict) -> np.ndarray:
    if depth not in cache:
        piece = dyn.pc.piece_containing(0j, depth)
        cache[depth] = dyn.pc.realize_boundary(piece)
    return cache[depth]


def nest_moduli_table(dyn: Dynasty,
                      base_grid: int = DEFAULT_GRID,
                      refinements: int = DEFAULT_REFINEMENTS,
                      cache: dict | None = None) -> NestTable:
    """Moduli of all annuli between consecutive nest pieces.

    Needs a geometric dynasty. One row per consecutive pair in the
    relabeled nest; degenerate annuli are recorded as rows with an
    error string instead of an estimate.
    """
    if dyn.synthetic or dyn.pc is None:
        raise PreconditionError("nest moduli need a geometric dynasty")
    if len(dyn.e_depths) < 2:
        raise PreconditionError("need at least two nest pieces")
    cache = {} if cache is None else cache
    rows = []
    values = []
    audits = []
    for i in range(1, len(dyn.e_depths)):
        outer_d, inner_d = dyn.e_depths[i - 1], dyn.e_depths[i]
        row = {"i": i, "outer_depth": outer_d, "inner_depth": inner_d,
               "estimate": None, "error": None}
        try:
            region = AnnulusRegion(
                _realized_critical_piece(dyn, outer_d, cache),
                _realized_critical_piece(dyn, inner_d, cache))
            est = modulus(region, base_grid, refinements)
            row["estimate"] = est
            values.append(est.value)
        except (ModulusError, PreconditionError) as exc:
            row["error"] = str(exc)
            audits.append(_entry("nest annulus", "info",
                                 f"i = {i}: {exc}", (i - 1) // 2))
        rows.append(row)
    mu = min(values) if values else None
    expected = 2 * dyn.n_levels - 1
    audits.append(_entry(
        "table length", "pass" if len(rows) >= expected else "fail",
        f"{len(rows)} annuli over {len(dyn.e_depths)} nest pieces; "
        f"complete-level count predicts {expected}"))
    audits.append(_entry(
        "moduli positive",
        "pass" if values and all(v > 0 for v in values) else
        ("fail" if values else "info"),
        f"mu = {mu}" if values else "no annulus was computable"))
    return NestTable(rows, mu, audits)


def buffer_moduli_table(dyn: Dynasty,
                        base_grid: int = DEFAULT_GRID,
                        refinements: int = DEFAULT_REFINEMENTS,
                        cache: dict | None = None) -> dict[int, dict]:
    """Moduli of the enlargement collars around nest pieces.

    For each connecting-map index i whose source piece carries an
    enlargement, computes the modulus between the enlargement of piece
    i-1 and piece i-1 itself. These collars transport biholomorphically
    onto the buffers around orbit pieces, so their moduli stand in for
    the buffer moduli.
    """
    if dyn.synthetic or dyn.pc is None:
        raise PreconditionError("buffer moduli need a geometric dynasty")
    cache = {} if cache is None else cache
    out = {}
    for i in sorted(dyn.enlargement_depths):
        j = i + 1
        if j > len(dyn.e_depths) - 1:
            continue
        hat_d = dyn.enlargement_depths[i]
        e_d = dyn.e_depths[i]
        row = {"i": j, "hat_depth": hat_d, "piece_depth": e_d,
               "estimate": None, "error": None}
        if hat_d >= e_d:
            row["error"] = "enlargement does not strictly contain the piece"
        else:
            try:
                region = AnnulusRegion(
                    _realized_critical_piece(dyn, hat_d, cache),
                    _realized_critical_piece(dyn, e_d, cache))
                row["estimate"] = modulus(region, base_grid, refinements)
            except (ModulusError, PreconditionError) as exc:
                row["error"] = str(exc)
        out[j] = row
    return out


# ---------------------------------------------------------- growth audit


@dataclass
class GrowthReport:
    qualifying: list[int]
    audits: list[dict] = field(default_factory=list)

    def falsifiers(self) -> list[dict]:
        return falsifiers(self.audits)

    def to_json(self) -> dict:
        return {"qualifying": self.qualifying, "audits": self.audits}


def growth_lemma_audit(dyn: Dynasty, table: NestTable, eps: float,
                       n: int, constants: LawConstants = LawConstants(),
                       m: int = 1,
                       buffer_table: dict[int, dict] | None = None,
                       ) -> GrowthReport:
    """Empirical audit of the level-to-level modulus decrease.

    For every level q >= n whose central annulus modulus falls below
    eps, searches earlier levels for one with at most half that modulus
    and classifies the configuration by comparing the collar moduli
    against the 1/(2d) threshold: a collar below it pins the earlier
    level directly through the parity arithmetic (case 1); all collars
    clearing it route through the quasi-additivity bookkeeping, which is
    evaluated at the user constant (case 2). Absence of a witness at
    desk scale is reported as such, never as a refutation.
    """
    if eps < 0:
        raise PreconditionError("eps must be nonnegative")
    if n < 0:
        raise PreconditionError("n must be nonnegative")
    d = dyn.degree
    cst = constants

    def central(q):
        return table.estimate(2 * q + 1)

    audits = []
    qualifying = []
    for q in range(n, dyn.n_levels):
        est = central(q)
        if est is not None and est.value < eps:
            qualifying.append(q)
    if not qualifying:
        audits.append(_entry(
            "growth audit", "pass",
            f"vacuous: no level q >= {n} has central modulus below "
            f"{eps:g}"))
        return GrowthReport(qualifying, audits)

    for q in qualifying:
        mod_q = central(q).value
        best_p, best_v = None, None
        for p in range(q):
            ep = central(p)
            if ep is not None and (best_v is None or ep.value < best_v):
                best_p, best_v = p, ep.value
        if best_v is not None and best_v < 0.5 * mod_q:
            audits.append(_entry(
                "modulus decrease witness", "pass",
                f"q = {q}: level p = {best_p} has modulus {best_v:.4g} "
                f"< half of {mod_q:.4g}", q))
        else:
            audits.append(_entry(
                "modulus decrease witness", "info",
                f"q = {q}: no earlier level below half of {mod_q:.4g} "
                "at desk scale; not a refutation", q))

        buffers = buffer_table if buffer_table is not None else {}
        threshold = mod_q / (2 * d)
        case1 = []
        cleared = []
        for i, row in sorted(buffers.items()):
            if i - 1 >= 2 * q + 1 or row["estimate"] is None:
                continue
            bval = row["estimate"].value
            berr = row["estimate"].error
            if bval < threshold:
                case1.append(i)
                p = (i - 2) // 2 if i % 2 == 0 else (i - 3) // 2
                ep = central(p) if p >= 0 else None
                if ep is None:
                    audits.append(_entry(
                        "case 1 decrease", "info",
                        f"q = {q}, collar i = {i}: predicted level "
                        f"p = {p} has no computed modulus", q))
                    continue
                if i % 2 == 0:
                    ok = abs(bval - ep.value) <= berr + ep.error
                    rel = "equals"
                else:
                    ok = bval >= ep.value / d - (berr + ep.error)
                    rel = f"is at least 1/{d} of"
                audits.append(_entry(
                    "case 1 parity arithmetic",
                    "pass" if ok else "fail",
                    f"collar i = {i} modulus {bval:.4g} {rel} central "
                    f"modulus {ep.value:.4g} at level {p}", q))
                audits.append(_entry(
                    "case 1 decrease",
                    "pass" if ep.value < 0.5 * mod_q + ep.error else "fail",
                    f"q = {q}: level {p} modulus {ep.value:.4g} vs half "
                    f"of {mod_q:.4g}", q))
            else:
                cleared.append(i)
        if buffers and not case1 and cleared:
            pq = q - n
            bound = 8 * cst.C ** 3 * d ** 23 * mod_q / m
            ep = central(pq) if pq >= 0 else None
            got = f"mod at level {pq} = {ep.value:.4g}" if ep else \
                f"level {pq} not computed"
            audits.append(_entry(
                "case 2 evaluated chain",
                "pass" if ep is not None and ep.value <= bound else "info",
                f"q = {q}: all collars clear {threshold:.4g}; bound "
                f"8C^3 d^23 / m = {bound:.4g} evaluated at user C = "
                f"{cst.C:g}, m = {m}; {got}", q))
        elif not buffers:
            audits.append(_entry(
                "case classification", "info",
                f"q = {q}: no collar moduli supplied; cases not "
                "classified", q))
    return GrowthReport(qualifying, audits)


# -------------------------------------------- biholomorphic transport check


def pushforward_check(region: AnnulusRegion, shift: complex = 2.0 + 1.0j,
                      factor: float = 3.0,
                      base_grid: int = DEFAULT_GRID,
                      refinements: int = DEFAULT_REFINEMENTS) -> list[dict]:
    """Moduli agree across a biholomorphic (affine) transport.

    Stand-in for the buffer push-forward identity: the solver must
    report the same modulus for a region and its affine image within
    the declared errors.
    """
    a = modulus(region, base_grid, refinements)
    b = modulus(region.translated(shift).scaled(factor), base_grid,
                refinements)
    ok = a.agrees_with(b)
    return [_entry("buffer pushforward moduli",
                   "pass" if ok else "fail",
                   f"{a.value:.6g} +- {a.error:.2g} vs transported "
                   f"{b.value:.6g} +- {b.error:.2g}")]

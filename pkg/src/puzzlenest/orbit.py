"""Critical orbit bookkeeping over a puzzle complex.

The orbit of 0 is iterated once and annotated lazily with its depth-0 and
depth-1 sector labels. The symbolic address of f^k(0) at any depth is a
window over those label streams, so membership of orbit points in critical
puzzle pieces (the only membership the nest construction needs) reduces to
exact tuple comparison.

Eventually periodic critical orbits need care: the landed cycle is
repelling, so the floating-point orbit drifts off it after enough
iterations and the label stream beyond that point is noise. The orbit is
therefore screened for a numerical cycle first, and once one is confirmed
every return question is answered from the reliable prefix (preperiod plus
one full period) instead of the raw tail.
"""

from __future__ import annotations

from .errors import BoundaryProximityError, BudgetExceededError, PreconditionError
from .puzzle import PuzzleAddress, PuzzleComplex, PuzzlePiece

CYCLE_TOL = 1e-9
CYCLE_SHADOW_TOL = 1e-6
CYCLE_CONFIRM_PERIODS = 6
CYCLE_HORIZON = 512


class CriticalOrbit:
    """Lazy critical orbit with per-point sector labels."""

    def __init__(self, pc: PuzzleComplex, budget: int = 10**6):
        self.pc = pc
        self.fmap = pc.fmap
        self.budget = int(budget)
        self._pts: list[complex] = [0j]
        self._lab0: list[str | None] = [None]
        self._lab1: list[str | None] = [None]
        self._escape = 2.0 + abs(self.fmap.c)
        self._cycle: tuple[int, int] | None = None
        self._cycle_checked = False

    def point(self, k: int) -> complex:
        if k < 0:
            raise PreconditionError("orbit index must be nonnegative")
        if k > self.budget:
            raise BudgetExceededError(
                f"orbit index {k} exceeds the iteration budget {self.budget}"
            )
        while len(self._pts) <= k:
            z = self.fmap(self._pts[-1])
            if abs(z) > self._escape:
                raise PreconditionError(
                    f"critical orbit escapes at step {len(self._pts)}; "
                    "the filled Julia set is not connected"
                )
            self._pts.append(z)
            self._lab0.append(None)
            self._lab1.append(None)
        return self._pts[k]

    def canonical_index(self, k: int) -> int:
        """Index with the same label as k, folded into the reliable prefix.

        Only active once a cycle has been confirmed (see `cycle`); before
        that the raw index is returned unchanged. Callers that iterate far
        should screen the orbit with `cycle()` first.
        """
        if not self._cycle_checked or self._cycle is None:
            return k
        pre, per = self._cycle
        if k < pre + per:
            return k
        return pre + (k - pre) % per

    def label0(self, k: int) -> str:
        k = self.canonical_index(k)
        self.point(k)
        if self._lab0[k] is None:
            try:
                self._lab0[k] = self.pc._depth0_label(self._pts[k])
            except BoundaryProximityError as e:
                raise BoundaryProximityError(
                    f"critical orbit point {k} sits on the puzzle skeleton: {e}"
                ) from e
        return self._lab0[k]

    def label1(self, k: int) -> str:
        k = self.canonical_index(k)
        self.point(k)
        if self._lab1[k] is None:
            try:
                self._lab1[k] = self.pc._depth1_label(self._pts[k])
            except BoundaryProximityError as e:
                raise BoundaryProximityError(
                    f"critical orbit point {k} sits on the puzzle skeleton: {e}"
                ) from e
        return self._lab1[k]

    def address_at(self, k: int, depth: int) -> PuzzleAddress:
        """Symbolic address of f^k(0) at the given depth."""
        labels = tuple(self.label1(k + j) for j in range(depth))
        return PuzzleAddress(depth, labels + (self.label0(k + depth),))

    def matches_address(self, k: int, address: PuzzleAddress) -> bool:
        """address_at(k, address.depth) == address, with early exit."""
        itin = address.itinerary
        for j in range(address.depth):
            if self.label1(k + j) != itin[j]:
                return False
        return self.label0(k + address.depth) == itin[address.depth]

    def in_critical_piece(self, k: int, piece: PuzzlePiece) -> bool:
        """Exact membership of f^k(0) in a critical piece.

        Critical pieces are deck-rotation invariant, so each is the unique
        component with its address and address comparison is sound. For
        non-critical pieces it is not; refuse those.
        """
        if not piece.is_critical:
            raise PreconditionError(
                "address membership is only exact for critical pieces"
            )
        return self.matches_address(k, piece.address)

    # ----------------------------------------------------------------- cycle

    def cycle(self) -> tuple[int, int] | None:
        """(preperiod, period) of the numerically detected orbit cycle, or
        None if the orbit does not close up within the screening horizon.

        A candidate pair |f^j(0) - f^i(0)| < CYCLE_TOL is only accepted if
        the tail keeps shadowing the loop at every phase of the period and
        for several further periods (CYCLE_SHADOW_TOL). A genuinely landed
        cycle stays near the float noise floor throughout; a deeply
        recurrent orbit can re-approach its own past closely enough to pass
        any single-point test, but its phase drift blows up well inside one
        extra period.
        """
        if self._cycle_checked:
            return self._cycle
        horizon = min(self.budget, CYCLE_HORIZON)
        # A float orbit shadowing a repelling cycle eventually drifts off
        # and may even escape; the landed cycle is still visible in the
        # prefix, so scan whatever is computable and only re-raise the
        # escape if no cycle explains it.
        pts = []
        escape: PreconditionError | None = None
        try:
            for i in range(horizon):
                pts.append(self.point(i))
        except PreconditionError as e:
            escape = e
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if abs(pts[j] - pts[i]) >= CYCLE_TOL:
                    continue
                if self._confirm_cycle(i, j - i):
                    self._cycle = (i, j - i)
                    self._cycle_checked = True
                    return self._cycle
        if escape is not None:
            raise escape
        self._cycle_checked = True
        return None

    def _confirm_cycle(self, i: int, per: int) -> bool:
        try:
            for x in range(i, i + per):
                if abs(self.point(x + per) - self.point(x)) > CYCLE_SHADOW_TOL:
                    return False
            base = self.point(i)
            for k in range(2, CYCLE_CONFIRM_PERIODS + 1):
                if abs(self.point(i + k * per) - base) > CYCLE_SHADOW_TOL:
                    return False
        except (BudgetExceededError, PreconditionError):
            return False
        return True

    def multiplier(self) -> complex | None:
        """Derivative of f^period along the detected cycle, or None."""
        cyc = self.cycle()
        if cyc is None:
            return None
        pre, per = cyc
        lam = 1.0 + 0j
        for j in range(per):
            lam *= self.fmap.derivative(self.point(pre + j))
        return lam

    # --------------------------------------------------------------- returns

    def reliable_horizon(self, k: int) -> int | None:
        """Largest r such that scanning indices k+1 .. k+r answers every
        return question from step k, or None when no cycle is known (scan
        to budget instead)."""
        cyc = self.cycle()
        if cyc is None:
            return None
        pre, per = cyc
        return max(pre + per - k, per)

    def first_return(
        self,
        k: int,
        target: PuzzlePiece | PuzzleAddress,
        budget: int | None = None,
    ) -> int | None:
        """Least r >= 1 with f^{k+r}(0) in the critical piece (given as a
        piece or directly as its address).

        Returns None when the orbit provably (up to the cycle tolerances)
        never enters the piece after step k. Raises BudgetExceededError
        when no cycle is known and the scan budget runs out undecided.
        """
        if isinstance(target, PuzzlePiece):
            if not target.is_critical:
                raise PreconditionError(
                    "address membership is only exact for critical pieces"
                )
            address = target.address
        else:
            address = target
            if not self.matches_address(0, address):
                raise PreconditionError(
                    "address membership is only exact for critical pieces"
                )
        budget = self.budget if budget is None else budget
        horizon = self.reliable_horizon(k)
        if horizon is not None:
            for r in range(1, horizon + 1):
                if self.matches_address(k + r, address):
                    return r
            return None
        for r in range(1, budget + 1):
            if self.matches_address(k + r, address):
                return r
        raise BudgetExceededError(
            f"no return to {address} within {budget} iterations of step {k}"
        )

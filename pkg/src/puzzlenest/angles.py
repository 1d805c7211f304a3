"""Exact arithmetic of external angles under angle d-tupling.

Angles live on the circle R/Z and are represented by exact rationals, so
periodicity and cycle detection never depend on floating point.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True, order=True)
class ExternalAngle:
    """An external angle theta in [0, 1), exact."""

    value: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", Fraction(self.value) % 1)

    @classmethod
    def from_string(cls, text: str) -> "ExternalAngle":
        return cls(Fraction(text))

    def times_d(self, d: int) -> "ExternalAngle":
        """Image under theta -> d*theta mod 1."""
        return ExternalAngle(self.value * d)

    def preimages(self, d: int) -> list["ExternalAngle"]:
        """The d preimages (theta + k) / d, k = 0..d-1, sorted."""
        return sorted(ExternalAngle((self.value + k) / d) for k in range(d))

    def orbit(self, d: int, length: int) -> list["ExternalAngle"]:
        out = [self]
        for _ in range(length):
            out.append(out[-1].times_d(d))
        return out

    def period_under(self, d: int, bound: int = 64) -> int | None:
        """Exact period under d-tupling, or None if theta is not periodic
        within the bound (strictly preperiodic angles return None)."""
        cur = self.times_d(d)
        for k in range(1, bound + 1):
            if cur == self:
                return k
            cur = cur.times_d(d)
        return None

    def preperiod_and_period(self, d: int, bound: int = 256) -> tuple[int, int] | None:
        """(preperiod, period) of the d-tupling orbit, exact, or None if the
        orbit does not close within the bound (irrational denominators)."""
        seen: dict[ExternalAngle, int] = {}
        cur = self
        for i in range(bound + 1):
            if cur in seen:
                return seen[cur], i - seen[cur]
            seen[cur] = i
            cur = cur.times_d(d)
        return None

    def digits(self, d: int, length: int) -> list[int]:
        """First `length` base-d digits of theta (the d-tupling itinerary
        with respect to the partition [k/d, (k+1)/d))."""
        out = []
        cur = self.value
        for _ in range(length):
            out.append(int(cur * d))
            cur = (cur * d) % 1
        return out

    def float(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        return f"{self.value.numerator}/{self.value.denominator}"


def angle_cycles_of_period(d: int, q: int) -> list[tuple[ExternalAngle, ...]]:
    """All cycles of exact period q of the d-tupling map.

    Angles of period dividing q are exactly k / (d^q - 1); cycles are returned
    sorted by their smallest element, each cycle listed starting from its
    smallest angle.
    """
    den = d**q - 1
    seen: set[Fraction] = set()
    cycles: list[tuple[ExternalAngle, ...]] = []
    for k in range(den):
        theta = ExternalAngle(Fraction(k, den))
        if theta.value in seen:
            continue
        orbit = []
        cur = theta
        while cur.value not in seen:
            seen.add(cur.value)
            orbit.append(cur)
            cur = cur.times_d(d)
        if len(orbit) == q and cur == theta:
            cycles.append(tuple(orbit))
    return cycles


def fixed_angles(d: int) -> list[ExternalAngle]:
    """Angles fixed by d-tupling: k / (d - 1). These are the rays landing at
    the non-dividing fixed points."""
    return [ExternalAngle(Fraction(k, d - 1)) for k in range(d - 1)]

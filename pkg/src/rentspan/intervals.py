"""Closed rational intervals, the universal value representation.

Endpoints are exact ``fractions.Fraction`` values; no floats ever enter an
interval, so every computed bound is reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

Rational = Fraction
RationalLike = Union[Fraction, int, str]


def rat(value: RationalLike) -> Fraction:
    """Coerce an exact value to a Fraction.

    Accepts ints, Fractions and decimal strings ("-3.5").  Floats are
    rejected: they would smuggle binary rounding into the store.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational value")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational literal: {value!r}") from exc
    if isinstance(value, float):
        raise TypeError(f"float {value!r} is not exact; pass a decimal string")
    raise TypeError(f"cannot interpret {type(value).__name__} as a rational")


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with lo <= hi."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        lo = rat(self.lo)
        hi = rat(self.hi)
        if lo > hi:
            raise ValueError(f"interval bounds out of order: lo={lo} > hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def of(cls, lo: RationalLike, hi: RationalLike) -> "Interval":
        return cls(rat(lo), rat(hi))

    @classmethod
    def point(cls, value: RationalLike) -> "Interval":
        v = rat(value)
        return cls(v, v)

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi

    def contains(self, value: RationalLike) -> bool:
        v = rat(value)
        return self.lo <= v <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        """Intersection, or None when the intervals are disjoint."""
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi)

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def scaled(self, factor: RationalLike) -> "Interval":
        """c * [a, b] as [min(ca, cb), max(ca, cb)]."""
        c = rat(factor)
        p, q = c * self.lo, c * self.hi
        return Interval(min(p, q), max(p, q))

    def __mul__(self, other: "Interval") -> "Interval":
        products = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Interval(min(products), max(products))

    def shifted(self, offset: RationalLike) -> "Interval":
        c = rat(offset)
        return Interval(self.lo + c, self.hi + c)

    def __repr__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


def intersect(a: Interval, b: Interval) -> Optional[Interval]:
    """Module-level alias for Interval.intersect."""
    return a.intersect(b)


def hull_of_values(values) -> Interval:
    """Smallest interval containing all given rationals (values nonempty)."""
    vals = [rat(v) for v in values]
    if not vals:
        raise ValueError("hull of empty value set")
    return Interval(min(vals), max(vals))

"""Interval-keyed fact tables with hull-lookup semantics.

A fact matches a query when every one of its key intervals overlaps the
corresponding query interval; the lookup answer is the smallest interval
containing the values of all matching facts.  Tables are immutable after
construction and scanned linearly: they hold at most a few hundred facts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .intervals import Interval, rat


class TableError(Exception):
    """Structural table defect (arity mismatch, conflicting duplicates)."""


class NoMatchingFact(LookupError):
    """No table entry covers the query box."""

    def __init__(self, table: str, query: Sequence[Interval]):
        super().__init__(
            f"no entry of table {table!r} covers query "
            + " x ".join(str(q) for q in query)
        )
        self.table = table
        self.query = tuple(query)


@dataclass(frozen=True)
class KeyColumn:
    name: str
    unit: str
    integral: bool = True  # questionnaire numerics are whole numbers


@dataclass(frozen=True)
class TableFact:
    keys: Tuple[Interval, ...]
    value: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "keys", tuple(self.keys))
        object.__setattr__(self, "value", rat(self.value))


@dataclass(frozen=True)
class Table:
    name: str
    key_columns: Tuple[KeyColumn, ...]
    value_unit: str
    facts: Tuple[TableFact, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "key_columns", tuple(self.key_columns))
        object.__setattr__(self, "facts", tuple(self.facts))
        if not self.facts:
            raise TableError(f"table {self.name!r} has no facts")
        arity = len(self.key_columns)
        for fact in self.facts:
            if len(fact.keys) != arity:
                raise TableError(
                    f"table {self.name!r}: fact arity {len(fact.keys)} != {arity}"
                )

    @property
    def arity(self) -> int:
        return len(self.key_columns)

    def value_hull(self) -> Interval:
        values = [f.value for f in self.facts]
        return Interval(min(values), max(values))


def lookup_hull(table: Table, query: Sequence[Interval]) -> Interval:
    """Hull over the values of all facts consistent with the query box."""
    if len(query) != table.arity:
        raise TableError(
            f"table {table.name!r}: query arity {len(query)} != {table.arity}"
        )
    lo: Optional[Fraction] = None
    hi: Optional[Fraction] = None
    for fact in table.facts:
        if all(k.overlaps(q) for k, q in zip(fact.keys, query)):
            if lo is None or fact.value < lo:
                lo = fact.value
            if hi is None or fact.value > hi:
                hi = fact.value
    if lo is None or hi is None:
        raise NoMatchingFact(table.name, query)
    return Interval(lo, hi)


def validate_table(table: Table, coverage: Optional[Sequence[Interval]] = None) -> List[str]:
    """Check a table; returns human-readable warnings.

    Structural defects (two facts with identical keys but different values)
    raise TableError.  Overlapping facts with differing values are legal,
    hull semantics absorbs them, but they are worth a warning.  When
    ``coverage`` is given, uncovered regions of that box are reported too.
    """
    warnings: List[str] = []
    for i, a in enumerate(table.facts):
        for b in table.facts[i + 1:]:
            if a.keys == b.keys:
                if a.value != b.value:
                    raise TableError(
                        f"table {table.name!r}: identical keys "
                        f"{a.keys} with different values {a.value} / {b.value}"
                    )
                warnings.append(
                    f"table {table.name!r}: duplicate fact at {a.keys}"
                )
            elif a.value != b.value and all(
                ka.overlaps(kb) for ka, kb in zip(a.keys, b.keys)
            ):
                warnings.append(
                    f"table {table.name!r}: facts {a.keys} and {b.keys} overlap "
                    f"with different values ({a.value} vs {b.value}); "
                    "lookups across the overlap widen to their hull"
                )
    if coverage is not None:
        if len(coverage) != table.arity:
            raise TableError(
                f"table {table.name!r}: coverage arity {len(coverage)} != {table.arity}"
            )
        for gap in coverage_gaps(table, coverage):
            warnings.append(f"table {table.name!r}: no entry covers {gap}")
    return warnings


def _integer_cells(span: Interval, cuts: List[int]) -> List[Interval]:
    """Partition the integer points of span into runs between cut positions.

    A cut at position p starts a new run at p, so no run straddles a point
    where some fact's coverage status can change.
    """
    lo, hi = math.ceil(span.lo), math.floor(span.hi)
    if lo > hi:
        return []
    cutset = {c for c in cuts if lo < c <= hi}
    cells: List[Interval] = []
    start = lo
    for p in range(lo + 1, hi + 1):
        if p in cutset:
            cells.append(Interval(start, p - 1))
            start = p
    cells.append(Interval(start, hi))
    return cells


def coverage_gaps(table: Table, box: Sequence[Interval]) -> List[str]:
    """Regions of the box not covered by any fact.

    Integral key columns are checked on the integer lattice (the
    questionnaire only ever produces whole numbers for them), which makes
    the check exact for the shipped rulesets.  A non-integral column is
    scanned against the one-dimensional union of its key intervals, so
    box-shaped gaps that hide inside per-column coverage are not detected
    there; none of the shipped tables has such a column.
    """
    gaps: List[str] = []
    integral_axes = [i for i, col in enumerate(table.key_columns) if col.integral]
    continuous_axes = [i for i, col in enumerate(table.key_columns) if not col.integral]

    # cells per integral axis: maximal integer runs not crossing any key edge
    axis_cells: List[List[Interval]] = []
    for i in integral_axes:
        cuts: List[int] = []
        for fact in table.facts:
            cuts.append(math.ceil(fact.keys[i].lo))
            cuts.append(math.floor(fact.keys[i].hi) + 1)
        axis_cells.append(_integer_cells(box[i], cuts))

    def cells_product(axes: List[List[Interval]]) -> List[List[Interval]]:
        combos: List[List[Interval]] = [[]]
        for cells in axes:
            combos = [c + [cell] for c in combos for cell in cells]
        return combos

    for combo in cells_product(axis_cells):
        cell_by_axis = dict(zip(integral_axes, combo))
        candidates = [
            f for f in table.facts
            if all(f.keys[i].overlaps(cell_by_axis[i]) for i in integral_axes)
        ]
        label = ", ".join(
            f"{table.key_columns[i].name}={cell_by_axis[i]}" for i in integral_axes
        )
        if not candidates:
            gaps.append(label or "entire box")
            continue
        for j in continuous_axes:
            missing = _uncovered_spans(box[j], [f.keys[j] for f in candidates])
            for span in missing:
                gaps.append(
                    (label + ", " if label else "") + f"{table.key_columns[j].name}={span}"
                )
    return gaps


def _uncovered_spans(span: Interval, covers: List[Interval]) -> List[Interval]:
    relevant = sorted(
        (c for c in covers if c.overlaps(span)), key=lambda c: (c.lo, c.hi)
    )
    gaps: List[Interval] = []
    cursor = span.lo
    for c in relevant:
        if c.lo > cursor:
            gaps.append(Interval(cursor, c.lo))
        cursor = max(cursor, c.hi)
        if cursor >= span.hi:
            break
    if cursor < span.hi:
        gaps.append(Interval(cursor, span.hi))
    return gaps

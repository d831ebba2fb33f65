"""Ruleset loading and validation.

A ruleset is the data-driven description of one rent-index edition:
allowed input ranges, the district list, the base-rent table, deviation
tables, per-question deviation percentages, the imprecision band and the
fixed-cost catalogue.  It arrives as a single JSON document in which every
rational value is written as a decimal string (or plain integer), never as
a JSON float, so parsing is bit exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, IO, List, Optional, Sequence, Tuple, Union

from .intervals import Interval, rat
from .tables import Table, TableFact, KeyColumn, TableError, coverage_gaps, validate_table

# key-column names a table may bind to; each maps to one questionnaire dimension
DIMENSIONS = ("size", "rooms", "year", "category")


class RulesetError(Exception):
    """The ruleset document is malformed or violates an invariant."""


@dataclass(frozen=True)
class FlagQuestion:
    """One yes/no question and its deviation percentages."""

    id: str
    group: str  # "house" or "flat"
    yes_percent: Fraction
    no_percent: Fraction

    def hull(self) -> Interval:
        return Interval(
            min(self.yes_percent, self.no_percent),
            max(self.yes_percent, self.no_percent),
        )


@dataclass(frozen=True)
class FixedCostItem:
    id: str
    lo: Fraction
    hi: Fraction

    def range(self) -> Interval:
        return Interval(self.lo, self.hi)


@dataclass
class Ruleset:
    city: str
    edition: int
    currency: str
    size_range: Interval
    rooms_range: Interval
    year_range: Interval
    districts: Dict[str, int]  # name -> category, insertion-ordered
    base_rent: Table
    deviation_tables: List[Table]
    house_flags: List[FlagQuestion]
    flat_flags: List[FlagQuestion]
    imprecision: Union[Interval, Table]
    fixed_costs: List[FixedCostItem]
    warnings: List[str] = field(default_factory=list)

    @property
    def flags(self) -> List[FlagQuestion]:
        return self.house_flags + self.flat_flags

    def flag_by_id(self, qid: str) -> FlagQuestion:
        for q in self.flags:
            if q.id == qid:
                return q
        raise KeyError(qid)

    def category_range(self) -> Interval:
        cats = self.districts.values()
        return Interval(min(cats), max(cats))

    def dimension_range(self, dim: str) -> Interval:
        return {
            "size": self.size_range,
            "rooms": self.rooms_range,
            "year": self.year_range,
            "category": self.category_range(),
        }[dim]

    def fixed_cost_hull(self) -> Interval:
        lo = sum((item.lo for item in self.fixed_costs), Fraction(0))
        hi = sum((item.hi for item in self.fixed_costs), Fraction(0))
        return Interval(lo, hi)

    def max_total_deviation(self) -> Interval:
        """Widest possible deviation sum over all answer combinations."""
        total = Interval.point(0)
        for table in self.deviation_tables:
            total = total + table.value_hull()
        for q in self.flags:
            total = total + q.hull()
        return total


# -- document parsing --------------------------------------------------------


def _reject_float(s: str) -> None:
    raise RulesetError(
        f"JSON float {s!r} is not exact; write rationals as decimal strings"
    )


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise RulesetError(f"{where}: missing key {key!r}")
    return obj[key]


def _parse_rat(value, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise RulesetError(f"{where}: expected decimal string or integer, got {value!r}")
    try:
        return rat(value)
    except (ValueError, TypeError) as exc:
        raise RulesetError(f"{where}: {exc}") from exc


def _parse_interval(value, where: str) -> Interval:
    if not isinstance(value, list) or len(value) != 2:
        raise RulesetError(f"{where}: expected [lo, hi] pair, got {value!r}")
    lo = _parse_rat(value[0], where)
    hi = _parse_rat(value[1], where)
    try:
        return Interval(lo, hi)
    except ValueError as exc:
        raise RulesetError(f"{where}: {exc}") from exc


def _parse_table(doc: dict, where: str) -> Tuple[Table, str]:
    name = _require(doc, "name", where)
    role = _require(doc, "role", where)
    if role not in ("base_rent", "deviation", "imprecision"):
        raise RulesetError(f"{where}: unknown table role {role!r}")
    columns = []
    for i, col in enumerate(_require(doc, "keys", where)):
        cwhere = f"{where}.keys[{i}]"
        columns.append(
            KeyColumn(
                name=_require(col, "name", cwhere),
                unit=_require(col, "unit", cwhere),
                integral=bool(col.get("integral", True)),
            )
        )
        if columns[-1].name not in DIMENSIONS:
            raise RulesetError(
                f"{cwhere}: key column must bind one of {DIMENSIONS}, "
                f"got {columns[-1].name!r}"
            )
    facts = []
    for i, row in enumerate(_require(doc, "facts", where)):
        fwhere = f"{where}.facts[{i}]"
        if not isinstance(row, list) or len(row) != len(columns) + 1:
            raise RulesetError(
                f"{fwhere}: expected {len(columns)} key intervals plus a value"
            )
        keys = tuple(
            _parse_interval(cell, f"{fwhere}[{j}]") for j, cell in enumerate(row[:-1])
        )
        facts.append(TableFact(keys=keys, value=_parse_rat(row[-1], fwhere)))
    try:
        table = Table(
            name=name,
            key_columns=tuple(columns),
            value_unit=_require(doc, "value_unit", where),
            facts=tuple(facts),
        )
    except TableError as exc:
        raise RulesetError(f"{where}: {exc}") from exc
    return table, role


def _parse_flags(doc, group: str, where: str) -> List[FlagQuestion]:
    out = []
    for i, entry in enumerate(doc):
        fwhere = f"{where}[{i}]"
        out.append(
            FlagQuestion(
                id=_require(entry, "id", fwhere),
                group=group,
                yes_percent=_parse_rat(_require(entry, "yes", fwhere), fwhere),
                no_percent=_parse_rat(_require(entry, "no", fwhere), fwhere),
            )
        )
    return out


def load_ruleset(source: Union[str, bytes, IO]) -> Ruleset:
    """Parse and fully validate a ruleset document.

    ``source`` may be a filesystem path, raw JSON bytes/text starting with
    '{', or an open file object.  Structural problems and base-rent
    coverage gaps refuse the load; softer findings (deviation-table gaps,
    overlaps, a total deviation beyond ±60%) are collected as warnings.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        looks_like_json = (
            source.lstrip()[:1] == (b"{" if isinstance(source, bytes) else "{")
        )
        if looks_like_json:
            text = source
        else:
            with open(source, "rb") as fh:
                text = fh.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text, parse_float=_reject_float)
    except json.JSONDecodeError as exc:
        raise RulesetError(f"ruleset is not valid JSON: {exc}") from exc

    warnings: List[str] = []

    meta = _require(doc, "meta", "ruleset")
    ranges = _require(doc, "ranges", "ruleset")
    size_range = _parse_interval(_require(ranges, "size", "ranges"), "ranges.size")
    rooms_range = _parse_interval(_require(ranges, "rooms", "ranges"), "ranges.rooms")
    year_range = _parse_interval(_require(ranges, "year", "ranges"), "ranges.year")

    districts: Dict[str, int] = {}
    for i, entry in enumerate(_require(doc, "districts", "ruleset")):
        dwhere = f"districts[{i}]"
        name = _require(entry, "name", dwhere)
        category = _require(entry, "category", dwhere)
        if not isinstance(category, int) or isinstance(category, bool):
            raise RulesetError(f"{dwhere}: category must be an integer")
        if name in districts:
            raise RulesetError(f"{dwhere}: duplicate district {name!r}")
        districts[name] = category
    if not districts:
        raise RulesetError("ruleset: district list is empty")

    base_rent: Optional[Table] = None
    deviation_tables: List[Table] = []
    imprecision_tables: Dict[str, Table] = {}
    for i, tdoc in enumerate(_require(doc, "tables", "ruleset")):
        table, role = _parse_table(tdoc, f"tables[{i}]")
        if role == "base_rent":
            if base_rent is not None:
                raise RulesetError("ruleset: more than one base_rent table")
            base_rent = table
        elif role == "deviation":
            deviation_tables.append(table)
        else:
            imprecision_tables[table.name] = table
    if base_rent is None:
        raise RulesetError("ruleset: missing base_rent table")

    flags_doc = _require(doc, "flags", "ruleset")
    house_flags = _parse_flags(_require(flags_doc, "house", "flags"), "house", "flags.house")
    flat_flags = _parse_flags(_require(flags_doc, "flat", "flags"), "flat", "flags.flat")
    seen_ids = set()
    for q in house_flags + flat_flags:
        if q.id in seen_ids:
            raise RulesetError(f"flags: duplicate question id {q.id!r}")
        seen_ids.add(q.id)

    imprecision_doc = _require(doc, "imprecision", "ruleset")
    imprecision: Union[Interval, Table]
    if "constant" in imprecision_doc:
        imprecision = _parse_interval(imprecision_doc["constant"], "imprecision.constant")
    elif "table" in imprecision_doc:
        tname = imprecision_doc["table"]
        if tname not in imprecision_tables:
            raise RulesetError(f"imprecision: no table named {tname!r} with role imprecision")
        imprecision = imprecision_tables[tname]
    else:
        raise RulesetError("imprecision: expected 'constant' or 'table'")

    fixed_costs: List[FixedCostItem] = []
    for i, entry in enumerate(_require(doc, "fixed_costs", "ruleset")):
        fwhere = f"fixed_costs[{i}]"
        lo = _parse_rat(_require(entry, "min", fwhere), fwhere)
        hi = _parse_rat(_require(entry, "max", fwhere), fwhere)
        if lo < 0:
            raise RulesetError(f"{fwhere}: fixed-cost minimum must not be negative")
        if lo > hi:
            raise RulesetError(f"{fwhere}: min exceeds max")
        item_id = _require(entry, "id", fwhere)
        if any(item.id == item_id for item in fixed_costs):
            raise RulesetError(f"{fwhere}: duplicate item id {item_id!r}")
        fixed_costs.append(FixedCostItem(id=item_id, lo=lo, hi=hi))

    rs = Ruleset(
        city=_require(meta, "city", "meta"),
        edition=_require(meta, "edition", "meta"),
        currency=_require(meta, "currency", "meta"),
        size_range=size_range,
        rooms_range=rooms_range,
        year_range=year_range,
        districts=districts,
        base_rent=base_rent,
        deviation_tables=deviation_tables,
        house_flags=house_flags,
        flat_flags=flat_flags,
        imprecision=imprecision,
        fixed_costs=fixed_costs,
        warnings=warnings,
    )
    _validate(rs)
    return rs


def _table_box(rs: Ruleset, table: Table) -> List[Interval]:
    return [rs.dimension_range(col.name) for col in table.key_columns]


def _validate(rs: Ruleset) -> None:
    # every table structurally sound; deviation-table gaps and overlaps
    # are warnings, base-rent coverage is checked hard below
    for table in [rs.base_rent] + rs.deviation_tables:
        cov = None if table is rs.base_rent else _table_box(rs, table)
        try:
            rs.warnings.extend(validate_table(table, coverage=cov))
        except TableError as exc:
            raise RulesetError(str(exc)) from exc

    # the base-rent table must cover the whole allowed box, no exceptions
    gaps = coverage_gaps(rs.base_rent, _table_box(rs, rs.base_rent))
    if gaps:
        raise RulesetError(
            "base_rent table does not cover the allowed ranges; first gap at "
            + gaps[0]
        )

    if isinstance(rs.imprecision, Table):
        gaps = coverage_gaps(rs.imprecision, _table_box(rs, rs.imprecision))
        if gaps:
            raise RulesetError(
                "imprecision table does not cover the allowed ranges; first gap at "
                + gaps[0]
            )

    total = rs.max_total_deviation()
    if total.lo < -60 or total.hi > 60:
        rs.warnings.append(
            f"maximum total deviation {total} exceeds the usual ±60% band"
        )
    for item in rs.fixed_costs:
        if item.lo > 0:
            rs.warnings.append(
                f"fixed-cost item {item.id!r} has minimum {item.lo} > 0; "
                "a not-applicable answer will fall below the unanswered range"
            )

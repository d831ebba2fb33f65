"""Questionnaire answers and the rent-estimation pipeline.

The estimate assembles a constraint store: every answered range narrows an
input variable, every open question leaves its full allowed range in
place, table lookups and yes/no deviations feed a sum constraint, and the
rent formula itself is a chain of sum and product constraints.  The result
is the tightest rent interval the given partial information supports.

The monthly rent is

    size * base rent per m2
         * (deviation percent sum + 100) * 0.01
         * (imprecision percent + 100) * 0.01
         + fixed costs

computed over intervals throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional

from .intervals import Interval
from .ruleset import Ruleset
from .store import ConstraintStore, MulConstraint, SumConstraint, eval_mul, eval_sum
from .tables import Table, lookup_hull


class EstimateError(Exception):
    """The answers cannot produce an estimate."""


class OutOfDomain(EstimateError):
    """An answer lies outside the ruleset's allowed ranges."""


class InconsistentAnswers(EstimateError):
    """The constraint store collapsed; the answers contradict each other."""


class RefinementError(ValueError):
    """A refinement attempted to widen or contradict an earlier answer."""


class TriState(enum.Enum):
    YES = "Yes"
    NO = "No"
    UNKNOWN = "?"


@dataclass
class FixedCostAnswer:
    """Answer to one fixed-cost item.

    ``applies`` NO forces the item to zero; otherwise a supplied amount
    interval is used, and with neither the item stays at its full range.
    """

    applies: TriState = TriState.UNKNOWN
    amount: Optional[Interval] = None


@dataclass
class Answers:
    size: Optional[Interval] = None
    rooms: Optional[Interval] = None
    year: Optional[Interval] = None
    district: Optional[str] = None
    house_flags: Dict[str, TriState] = field(default_factory=dict)
    flat_flags: Dict[str, TriState] = field(default_factory=dict)
    fixed_costs: Dict[str, FixedCostAnswer] = field(default_factory=dict)

    def flag(self, qid: str) -> TriState:
        return self.house_flags.get(qid) or self.flat_flags.get(qid) or TriState.UNKNOWN

    def is_complete(self, rs: Ruleset) -> bool:
        """True when every question is answered to a single value."""
        for iv in (self.size, self.rooms, self.year):
            if iv is None or not iv.is_singleton:
                return False
        if self.district is None:
            return False
        if any(self.flag(q.id) is TriState.UNKNOWN for q in rs.flags):
            return False
        for item in rs.fixed_costs:
            answer = self.fixed_costs.get(item.id, FixedCostAnswer())
            if answer.applies is TriState.NO:
                continue
            if answer.amount is None or not answer.amount.is_singleton:
                return False
        return True


def default_answers(rs: Ruleset) -> Answers:
    """A blank form: everything unknown, every range fully open."""
    return Answers(
        house_flags={q.id: TriState.UNKNOWN for q in rs.house_flags},
        flat_flags={q.id: TriState.UNKNOWN for q in rs.flat_flags},
        fixed_costs={item.id: FixedCostAnswer() for item in rs.fixed_costs},
    )


@dataclass
class Breakdown:
    size: Interval            # m2 actually used (answer meet allowed range)
    base_rate: Interval       # currency per m2
    deviation_sum: Interval   # percent
    imprecision: Interval     # percent
    fixed_costs: Interval     # currency per month


@dataclass
class RentEstimate:
    rent: Interval            # currency per month
    breakdown: Breakdown
    warnings: List[str] = field(default_factory=list)


def _meet_allowed(name: str, answered: Optional[Interval], allowed: Interval) -> Interval:
    if answered is None:
        return allowed
    meet = answered.intersect(allowed)
    if meet is None:
        raise OutOfDomain(f"{name} {answered} is outside the allowed range {allowed}")
    return meet


def _table_query(table: Table, dims: Dict[str, Interval]) -> List[Interval]:
    return [dims[col.name] for col in table.key_columns]


def estimate(answers: Answers, rs: Ruleset) -> RentEstimate:
    """Estimate the rent interval for arbitrarily partial answers."""
    warnings: List[str] = []

    if answers.district is not None and answers.district not in rs.districts:
        raise OutOfDomain(f"unknown district {answers.district!r}")

    dims = {
        "size": _meet_allowed("size", answers.size, rs.size_range),
        "rooms": _meet_allowed("rooms", answers.rooms, rs.rooms_range),
        "year": _meet_allowed("year", answers.year, rs.year_range),
        "category": (
            Interval.point(rs.districts[answers.district])
            if answers.district is not None
            else rs.category_range()
        ),
    }

    store = ConstraintStore()
    for name, iv in dims.items():
        store.declare(name, iv)

    base_rate = lookup_hull(rs.base_rent, _table_query(rs.base_rent, dims))
    store.declare("base_rate", base_rate)

    # one deviation variable per source, all feeding the percentage sum
    deviation_vars: List[str] = []
    for table in rs.deviation_tables:
        iv = lookup_hull(table, _table_query(table, dims))
        var = f"dev_table_{table.name}"
        store.declare(var, iv)
        deviation_vars.append(var)
    for q in rs.flags:
        state = answers.flag(q.id)
        if state is TriState.YES:
            iv = Interval.point(q.yes_percent)
        elif state is TriState.NO:
            iv = Interval.point(q.no_percent)
        else:
            iv = q.hull()
        var = f"dev_flag_{q.id}"
        store.declare(var, iv)
        deviation_vars.append(var)

    dev_sum = SumConstraint(
        offset=Interval.point(0),
        terms=tuple((Fraction(1), v) for v in deviation_vars),
        output="deviation_sum",
    )
    store.declare("deviation_sum", _forward_sum(store, dev_sum))
    store.post_sum(dev_sum)

    if isinstance(rs.imprecision, Table):
        imprecision = lookup_hull(rs.imprecision, _table_query(rs.imprecision, dims))
    else:
        imprecision = rs.imprecision
    store.declare("imprecision", imprecision)

    # fixed costs: per item either the answered amount, the full range, or 0
    item_vars: List[str] = []
    for item in rs.fixed_costs:
        answer = answers.fixed_costs.get(item.id, FixedCostAnswer())
        if answer.applies is TriState.NO:
            iv = Interval.point(0)
        elif answer.amount is not None:
            meet = answer.amount.intersect(item.range())
            if meet is None:
                raise OutOfDomain(
                    f"fixed cost {item.id!r} {answer.amount} is outside {item.range()}"
                )
            iv = meet
        else:
            iv = item.range()
        var = f"fixed_{item.id}"
        store.declare(var, iv)
        item_vars.append(var)
    fixed_sum = SumConstraint(
        offset=Interval.point(0),
        terms=tuple((Fraction(1), v) for v in item_vars),
        output="fixed_costs",
    )
    store.declare("fixed_costs", _forward_sum(store, fixed_sum))
    store.post_sum(fixed_sum)

    # (deviation_sum + 100) * 0.01, same for the imprecision band
    for src, plus, factor in (
        ("deviation_sum", "deviation_plus100", "deviation_factor"),
        ("imprecision", "imprecision_plus100", "imprecision_factor"),
    ):
        sc = SumConstraint(
            offset=Interval.point(100), terms=((Fraction(1), src),), output=plus
        )
        store.declare(plus, _forward_sum(store, sc))
        store.post_sum(sc)
        mc = MulConstraint(
            factor=Interval.point(Fraction(1, 100)), terms=(plus,), output=factor
        )
        store.declare(factor, _forward_mul(store, mc))
        store.post_mul(mc)

    gross = MulConstraint(
        factor=Interval.point(1),
        terms=("size", "base_rate", "deviation_factor", "imprecision_factor"),
        output="gross_rent",
    )
    store.declare("gross_rent", _forward_mul(store, gross))
    store.post_mul(gross)

    rent_sum = SumConstraint(
        offset=Interval.point(0),
        terms=((Fraction(1), "gross_rent"), (Fraction(1), "fixed_costs")),
        output="rent",
    )
    store.declare("rent", _forward_sum(store, rent_sum))
    store.post_sum(rent_sum)

    store.propagate()
    if not store.consistent:
        raise InconsistentAnswers("the answers admit no rent value")

    if not answers.is_complete(rs):
        warnings.append("incomplete answers: the estimate covers every completion")

    return RentEstimate(
        rent=store.get_domain("rent"),
        breakdown=Breakdown(
            size=store.get_domain("size"),
            base_rate=store.get_domain("base_rate"),
            deviation_sum=store.get_domain("deviation_sum"),
            imprecision=store.get_domain("imprecision"),
            fixed_costs=store.get_domain("fixed_costs"),
        ),
        warnings=warnings,
    )


def _forward_sum(store: ConstraintStore, sc: SumConstraint) -> Interval:
    """Initial domain for a sum output: its value over current inputs."""
    return eval_sum(sc, store.domains)


def _forward_mul(store: ConstraintStore, mc: MulConstraint) -> Interval:
    return eval_mul(mc, store.domains)


def recombine(b: Breakdown) -> Interval:
    """Apply the rent formula to a breakdown; must reproduce the estimate."""
    dev_factor = b.deviation_sum.shifted(100).scaled(Fraction(1, 100))
    imp_factor = b.imprecision.shifted(100).scaled(Fraction(1, 100))
    return b.size * b.base_rate * dev_factor * imp_factor + b.fixed_costs


# -- refinement --------------------------------------------------------------


def _refine_interval(
    name: str, previous: Optional[Interval], delta: Optional[Interval]
) -> Optional[Interval]:
    if delta is None:
        return previous
    if previous is not None and not previous.contains_interval(delta):
        raise RefinementError(
            f"refinement must narrow: {name} {delta} is not within {previous}"
        )
    return delta


def _refine_flag(qid: str, previous: TriState, delta: TriState) -> TriState:
    if delta is TriState.UNKNOWN or delta is previous:
        return previous
    if previous is TriState.UNKNOWN:
        return delta
    raise RefinementError(f"refinement must narrow: {qid} {previous.value} -> {delta.value}")


def refine(previous: Answers, delta: Answers) -> Answers:
    """Merge a follow-up round of answers into an earlier one.

    Every delta field must determine or narrow what was there before;
    widening or contradicting raises RefinementError.  Used by the what-if
    loop: refined answers always yield a nested rent interval.
    """
    merged = replace(
        previous,
        size=_refine_interval("size", previous.size, delta.size),
        rooms=_refine_interval("rooms", previous.rooms, delta.rooms),
        year=_refine_interval("year", previous.year, delta.year),
        house_flags=dict(previous.house_flags),
        flat_flags=dict(previous.flat_flags),
        fixed_costs={k: replace(v) for k, v in previous.fixed_costs.items()},
    )
    if delta.district is not None:
        if previous.district is not None and previous.district != delta.district:
            raise RefinementError(
                f"refinement must narrow: district {previous.district!r} -> {delta.district!r}"
            )
        merged.district = delta.district

    for flags, delta_flags in (
        (merged.house_flags, delta.house_flags),
        (merged.flat_flags, delta.flat_flags),
    ):
        for qid, state in delta_flags.items():
            flags[qid] = _refine_flag(qid, flags.get(qid, TriState.UNKNOWN), state)

    for item_id, danswer in delta.fixed_costs.items():
        current = merged.fixed_costs.get(item_id, FixedCostAnswer())
        applies = _refine_flag(f"fixed cost {item_id}", current.applies, danswer.applies)
        amount = _refine_interval(
            f"fixed cost {item_id}", current.amount, danswer.amount
        )
        if applies is TriState.NO and amount is not None:
            raise RefinementError(
                f"fixed cost {item_id}: an amount contradicts a not-applicable answer"
            )
        merged.fixed_costs[item_id] = FixedCostAnswer(applies=applies, amount=amount)
    return merged


# -- currency rendering ------------------------------------------------------


def round_half_up(value: Fraction, places: int = 2) -> Fraction:
    """Commercial rounding: halves go away from zero."""
    scale = Fraction(10) ** places
    scaled = value * scale
    sign = -1 if scaled < 0 else 1
    return sign * math.floor(abs(scaled) + Fraction(1, 2)) / scale


def format_amount(value: Fraction, lang: str = "de", places: int = 2) -> str:
    """Fixed-point rendering with the language's decimal separator."""
    rounded = round_half_up(value, places)
    scaled = rounded * Fraction(10) ** places
    digits = str(abs(int(scaled))).rjust(places + 1, "0")
    sign = "-" if rounded < 0 else ""
    sep = "," if lang == "de" else "."
    if places == 0:
        return f"{sign}{digits}"
    return f"{sign}{digits[:-places]}{sep}{digits[-places:]}"

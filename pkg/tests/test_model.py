import random
from fractions import Fraction

import pytest

from rentspan.intervals import Interval
from rentspan.model import (
    Answers,
    FixedCostAnswer,
    OutOfDomain,
    RefinementError,
    TriState,
    default_answers,
    estimate,
    format_amount,
    recombine,
    refine,
    round_half_up,
)
from rentspan.ruleset import Ruleset
from rentspan.tables import KeyColumn, Table, TableFact

from answergen import random_answers, random_ground_completion, random_refinement


def ground_zero_case(rs):
    """All deviations pinned to zero except the year_rooms table cell at -2."""
    a = default_answers(rs)
    a.size = Interval.point(80)
    a.rooms = Interval.point(2)
    a.year = Interval.point(1975)
    a.district = "Haidhausen"
    for q in rs.flags:
        target = a.house_flags if q.group == "house" else a.flat_flags
        target[q.id] = TriState.YES if q.yes_percent == 0 else TriState.NO
    for item in rs.fixed_costs:
        a.fixed_costs[item.id] = FixedCostAnswer(applies=TriState.NO)
    return a


def test_worked_ground_case(rs):
    # 80 m2 * 10.00/m2 * 0.98 * [0.90, 1.10] + 0 = [705.60, 862.40]
    est = estimate(ground_zero_case(rs), rs)
    assert est.rent == Interval(Fraction(35280, 50), Fraction(43120, 50))
    assert format_amount(est.rent.lo, "de") == "705,60"
    assert format_amount(est.rent.hi, "de") == "862,40"
    assert format_amount(est.rent.lo, "en") == "705.60"
    assert est.breakdown.base_rate == Interval.point(10)
    assert est.breakdown.deviation_sum == Interval.point(-2)
    assert est.breakdown.fixed_costs == Interval.point(0)
    assert est.warnings == []


def test_blank_form_gives_global_interval(rs):
    blank = estimate(default_answers(rs), rs)
    assert blank.breakdown.size == rs.size_range
    assert blank.breakdown.base_rate == rs.base_rent.value_hull()
    assert any(w.startswith("incomplete") for w in blank.warnings)
    # global bounds computed independently from the ruleset's hulls
    dev = rs.max_total_deviation()
    dev_factor = dev.shifted(100).scaled(Fraction(1, 100))
    imp_factor = rs.imprecision.shifted(100).scaled(Fraction(1, 100))
    expected = (
        rs.size_range * rs.base_rent.value_hull() * dev_factor * imp_factor
        + rs.fixed_cost_hull()
    )
    assert blank.rent == expected


def test_default_answers_are_fully_open(rs):
    d = default_answers(rs)
    assert d.size is None and d.rooms is None and d.year is None
    assert d.district is None
    assert all(v is TriState.UNKNOWN for v in d.house_flags.values())
    assert all(v is TriState.UNKNOWN for v in d.flat_flags.values())
    est = estimate(d, rs)
    assert est.breakdown.size == Interval.of(22, 160)


def mini_ruleset(fragment_facts):
    base = Table(
        name="base",
        key_columns=(
            KeyColumn("size", "m2"), KeyColumn("year", "year"), KeyColumn("category", "cat"),
        ),
        value_unit="DM/m2",
        facts=(
            TableFact(
                keys=(Interval.of(22, 160), Interval.of(1966, 1986), Interval.point(1)),
                value=Fraction(10),
            ),
        ),
    )
    year_rooms = Table(
        name="year_rooms",
        key_columns=(KeyColumn("year", "year"), KeyColumn("rooms", "rooms")),
        value_unit="percent",
        facts=fragment_facts,
    )
    return Ruleset(
        city="Test", edition=1, currency="DM",
        size_range=Interval.of(22, 160),
        rooms_range=Interval.of(1, 9),
        year_range=Interval.of(1966, 1986),
        districts={"A": 1},
        base_rent=base,
        deviation_tables=[year_rooms],
        house_flags=[], flat_flags=[],
        imprecision=Interval.point(0),
        fixed_costs=[],
    )


def test_year_rooms_answer_contributes_its_hull():
    rows = [
        ((1966, 1977), (1, 1), "-3.5"), ((1966, 1977), (2, 3), "-2.0"),
        ((1966, 1977), (4, 9), "-3.0"), ((1978, 1983), (1, 1), "2.0"),
        ((1978, 1983), (2, 3), "10.0"), ((1978, 1983), (4, 9), "3.0"),
        ((1984, 1986), (1, 1), "6.0"), ((1984, 1986), (2, 3), "18.0"),
        ((1984, 1986), (4, 9), "7.0"),
    ]
    facts = tuple(
        TableFact(keys=(Interval.of(*y), Interval.of(*r)), value=Fraction(v))
        for y, r, v in rows
    )
    rs = mini_ruleset(facts)
    a = default_answers(rs)
    a.year = Interval.of(1980, 1985)
    a.rooms = Interval.of(1, 3)
    est = estimate(a, rs)
    assert est.breakdown.deviation_sum == Interval.of(Fraction(2), Fraction(18))


def test_out_of_domain_size(rs):
    a = default_answers(rs)
    a.size = Interval.of(300, 400)
    with pytest.raises(OutOfDomain):
        estimate(a, rs)


def test_unknown_district(rs):
    a = default_answers(rs)
    a.district = "Atlantis"
    with pytest.raises(OutOfDomain):
        estimate(a, rs)


def test_answer_overlap_is_clipped_to_allowed_range(rs):
    a = default_answers(rs)
    a.size = Interval.of(10, 30)  # extends below the allowed minimum
    est = estimate(a, rs)
    assert est.breakdown.size == Interval.of(22, 30)


def test_breakdown_recombines_exactly(rs):
    rng = random.Random(515)
    for _ in range(60):
        est = estimate(random_answers(rs, rng), rs)
        assert recombine(est.breakdown) == est.rent


# -- refinement -----------------------------------------------------------


def test_refine_determines_flag(rs):
    a = default_answers(rs)
    b = refine(a, Answers(house_flags={"Lift": TriState.YES}))
    assert b.flag("Lift") is TriState.YES


def test_refine_narrows_size(rs):
    a = default_answers(rs)
    a.size = Interval.of(22, 160)
    b = refine(a, Answers(size=Interval.of(76, 85)))
    assert b.size == Interval.of(76, 85)


def test_refine_rejects_widening(rs):
    a = default_answers(rs)
    a.size = Interval.of(76, 85)
    with pytest.raises(RefinementError):
        refine(a, Answers(size=Interval.of(22, 160)))


def test_refine_rejects_flag_flip(rs):
    a = default_answers(rs)
    a.house_flags["Lift"] = TriState.YES
    with pytest.raises(RefinementError):
        refine(a, Answers(house_flags={"Lift": TriState.NO}))


def test_refine_rejects_district_change(rs):
    a = default_answers(rs)
    a.district = "Schwabing"
    with pytest.raises(RefinementError):
        refine(a, Answers(district="Laim"))


def test_refine_rejects_amount_on_not_applicable(rs):
    a = default_answers(rs)
    a.fixed_costs["CableTV"] = FixedCostAnswer(applies=TriState.NO)
    with pytest.raises(RefinementError):
        refine(a, Answers(fixed_costs={"CableTV": FixedCostAnswer(amount=Interval.point(5))}))


def test_refinement_chains_nest(rs):
    rng = random.Random(1234)
    blank_rent = estimate(default_answers(rs), rs).rent
    for _ in range(40):
        answers = default_answers(rs)
        previous_rent = blank_rent
        for _ in range(rng.randint(1, 4)):
            answers = random_refinement(rs, rng, answers)
            rent = estimate(answers, rs).rent
            assert previous_rent.contains_interval(rent)
            previous_rent = rent
        assert blank_rent.contains_interval(previous_rent)


def test_ground_estimates_lie_inside_partial_ones(rs):
    rng = random.Random(77)
    for _ in range(40):
        partial = random_answers(rs, rng)
        partial_rent = estimate(partial, rs).rent
        for _ in range(3):
            ground = random_ground_completion(rs, rng, partial)
            assert ground.is_complete(rs)
            ground_est = estimate(ground, rs)
            assert partial_rent.contains_interval(ground_est.rent)
            assert ground_est.rent.is_singleton or not ground_est.warnings
            # ground imprecision still spans the band, so the rent is an interval
            assert ground_est.breakdown.deviation_sum.is_singleton


# -- rounding -------------------------------------------------------------


def test_half_up_rounding():
    assert round_half_up(Fraction("2.345")) == Fraction("2.35")
    assert round_half_up(Fraction("2.344")) == Fraction("2.34")
    assert round_half_up(Fraction("-2.345")) == Fraction("-2.35")
    assert format_amount(Fraction("1234.5"), "de", 0) == "1235"
    assert format_amount(Fraction("0.005"), "en") == "0.01"
    assert format_amount(Fraction(0), "en") == "0.00"

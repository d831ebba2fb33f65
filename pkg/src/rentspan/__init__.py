"""Rent estimation from partial questionnaire answers.

An interval constraint store with forward propagation, interval-keyed
fact tables with hull lookups, and a questionnaire pipeline that turns
arbitrarily incomplete answers into a tight monthly-rent interval,
served over a small built-in HTTP endpoint.
"""

from .intervals import Interval, intersect, rat
from .model import (
    Answers,
    Breakdown,
    EstimateError,
    FixedCostAnswer,
    InconsistentAnswers,
    OutOfDomain,
    RentEstimate,
    TriState,
    default_answers,
    estimate,
    refine,
)
from .ruleset import Ruleset, RulesetError, load_ruleset
from .store import (
    ConstraintStore,
    CyclicDerivation,
    InconsistentStore,
    MulConstraint,
    OrderingConstraint,
    Relation,
    SumConstraint,
    UndeclaredVariable,
)
from .tables import NoMatchingFact, Table, TableFact, lookup_hull, validate_table

__all__ = [
    "Answers",
    "Breakdown",
    "ConstraintStore",
    "CyclicDerivation",
    "EstimateError",
    "FixedCostAnswer",
    "InconsistentAnswers",
    "InconsistentStore",
    "Interval",
    "MulConstraint",
    "NoMatchingFact",
    "OrderingConstraint",
    "OutOfDomain",
    "Relation",
    "RentEstimate",
    "Ruleset",
    "RulesetError",
    "SumConstraint",
    "Table",
    "TableFact",
    "TriState",
    "UndeclaredVariable",
    "default_answers",
    "estimate",
    "intersect",
    "load_ruleset",
    "lookup_hull",
    "rat",
    "refine",
    "validate_table",
]

__version__ = "0.1.0"

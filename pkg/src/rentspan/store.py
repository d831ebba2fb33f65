"""Interval constraint store with forward propagation.

Three constraint families are supported:

* orderings between two variables (=, <, =<, >, >=),
* linear sums  c0 + c1*x1 + ... + cn*xn = y,
* scaled products  c * x1 * ... * xn = y.

Propagation is forward only: sums and products push interval bounds from
their term variables into the output variable, never backwards, so an
acyclic derivation graph guarantees a fixpoint.  Orderings narrow both
participants.  Strictness of orderings is not encoded in the narrowing;
it is checked exactly once both sides are ground (see ``propagate``).

Inconsistency is a state, not an exception: any empty intersection or
failed ground check clears the ``consistent`` flag, and query operations
refuse service from then on.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .intervals import Interval, RationalLike, rat

VarId = str


class StoreError(Exception):
    """Base class for constraint-store usage errors."""


class UndeclaredVariable(StoreError):
    def __init__(self, name: VarId):
        super().__init__(f"undeclared variable: {name}")
        self.name = name


class CyclicDerivation(StoreError):
    def __init__(self, output: VarId):
        super().__init__(f"cyclic derivation through variable: {output}")
        self.output = output


class InconsistentStore(StoreError):
    def __init__(self) -> None:
        super().__init__("store inconsistent")


class PropagationLimit(StoreError):
    """Internal error: the fixpoint loop exceeded its round budget."""


class Relation(enum.Enum):
    LT = "<"
    LE = "=<"
    GT = ">"
    GE = ">="
    EQ = "="


@dataclass(frozen=True)
class OrderingConstraint:
    left: VarId
    relation: Relation
    right: VarId


@dataclass(frozen=True)
class SumConstraint:
    """offset + sum(coeff_i * var_i) = output."""

    offset: Interval
    terms: Tuple[Tuple[Fraction, VarId], ...]
    output: VarId

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "terms", tuple((rat(c), v) for c, v in self.terms)
        )
        seen = {v for _, v in self.terms}
        if len(seen) != len(self.terms) or self.output in seen:
            raise ValueError("sum term variables must be distinct from each other and from the output")

    @property
    def inputs(self) -> Tuple[VarId, ...]:
        return tuple(v for _, v in self.terms)


@dataclass(frozen=True)
class MulConstraint:
    """factor * var_1 * ... * var_n = output."""

    factor: Interval
    terms: Tuple[VarId, ...]
    output: VarId

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        seen = set(self.terms)
        if len(seen) != len(self.terms) or self.output in seen:
            raise ValueError("product term variables must be distinct from each other and from the output")

    @property
    def inputs(self) -> Tuple[VarId, ...]:
        return self.terms


def eval_sum(sc: SumConstraint, domains: Dict[VarId, Interval]) -> Interval:
    """Consume terms left to right, each c*x contributing [min(cA,cB), max(cA,cB)]."""
    acc = sc.offset
    for coeff, var in sc.terms:
        acc = acc + domains[var].scaled(coeff)
    return acc


def eval_mul(mc: MulConstraint, domains: Dict[VarId, Interval]) -> Interval:
    """Consume terms left to right with four-product interval multiplication."""
    acc = mc.factor
    for var in mc.terms:
        acc = acc * domains[var]
    return acc


# An ordering edge (x, y, strict) reads "x < y" when strict, else "x =< y".
_Edge = Tuple[VarId, VarId, bool]


class ConstraintStore:
    """Variable domains plus posted constraints and a consistency flag.

    A store is a plain single-threaded value: methods mutate it in place
    and it is never shared between threads.
    """

    def __init__(self) -> None:
        self._domains: Dict[VarId, Interval] = {}
        self.orderings: List[OrderingConstraint] = []
        self.sums: List[SumConstraint] = []
        self.muls: List[MulConstraint] = []
        self.consistent: bool = True

    # -- declarations ------------------------------------------------------

    def declare(self, name: VarId, iv: Interval) -> "ConstraintStore":
        """Declare a variable, intersecting with any existing domain.

        An empty intersection marks the store inconsistent rather than
        raising.
        """
        if not name:
            raise ValueError("variable name must be non-empty")
        current = self._domains.get(name)
        if current is None:
            self._domains[name] = iv
        else:
            meet = current.intersect(iv)
            if meet is None:
                self.consistent = False
            else:
                self._domains[name] = meet
        return self

    def is_declared(self, name: VarId) -> bool:
        return name in self._domains

    @property
    def domains(self) -> Dict[VarId, Interval]:
        """Snapshot of all domains, available even on inconsistent stores."""
        return dict(self._domains)

    def get_domain(self, name: VarId) -> Interval:
        if not self.consistent:
            raise InconsistentStore()
        if name not in self._domains:
            raise UndeclaredVariable(name)
        return self._domains[name]

    # -- posting -----------------------------------------------------------

    def _require_declared(self, names: Iterable[VarId]) -> None:
        for name in names:
            if name not in self._domains:
                raise UndeclaredVariable(name)

    def post_ordering(self, oc: OrderingConstraint) -> "ConstraintStore":
        self._require_declared((oc.left, oc.right))
        if oc.left == oc.right and oc.relation in (Relation.LT, Relation.GT):
            # X < X can never hold
            self.consistent = False
        self.orderings.append(oc)
        return self

    def post_sum(self, sc: SumConstraint) -> "ConstraintStore":
        self._require_declared(sc.inputs + (sc.output,))
        self._check_acyclic(sc.output, sc.inputs)
        self.sums.append(sc)
        return self

    def post_mul(self, mc: MulConstraint) -> "ConstraintStore":
        self._require_declared(mc.inputs + (mc.output,))
        self._check_acyclic(mc.output, mc.inputs)
        self.muls.append(mc)
        return self

    def _check_acyclic(self, output: VarId, inputs: Sequence[VarId]) -> None:
        # A cycle appears iff some input is already derivable from `output`.
        reachable: Set[VarId] = set()
        frontier = [output]
        edges: Dict[VarId, Set[VarId]] = {}
        for c in self.sums + self.muls:  # type: ignore[operator]
            for v in c.inputs:
                edges.setdefault(v, set()).add(c.output)
        while frontier:
            node = frontier.pop()
            if node in reachable:
                continue
            reachable.add(node)
            frontier.extend(edges.get(node, ()))
        if any(v in reachable for v in inputs):
            raise CyclicDerivation(output)

    # -- propagation -------------------------------------------------------

    def _ordering_edges(self) -> Optional[List[_Edge]]:
        """Normalized ordering edges plus their transitive closure.

        Returns None when the closure derives a strict self-loop
        (e.g. A>B, B>C, C>A), which is inconsistent regardless of domains.
        """
        edges: Set[_Edge] = set()
        for oc in self.orderings:
            if oc.relation is Relation.LT:
                edges.add((oc.left, oc.right, True))
            elif oc.relation is Relation.LE:
                edges.add((oc.left, oc.right, False))
            elif oc.relation is Relation.GT:
                edges.add((oc.right, oc.left, True))
            elif oc.relation is Relation.GE:
                edges.add((oc.right, oc.left, False))
            else:  # EQ: one =< edge each way narrows both to the intersection
                edges.add((oc.left, oc.right, False))
                edges.add((oc.right, oc.left, False))
        # Transitive closure; composed edges are strict if either part is.
        changed = True
        while changed:
            changed = False
            for (a, b, s1) in list(edges):
                for (c, d, s2) in list(edges):
                    if b == c:
                        composed = (a, d, s1 or s2)
                        if composed not in edges:
                            edges.add(composed)
                            changed = True
        for (a, b, strict) in edges:
            if a == b and strict:
                return None
        return sorted(edges)

    def _topo_constraints(self) -> List[object]:
        """Sums and products in dependency order (inputs before outputs)."""
        constraints: List[object] = list(self.sums) + list(self.muls)
        producers: Dict[VarId, List[int]] = {}
        for i, c in enumerate(constraints):
            producers.setdefault(c.output, []).append(i)  # type: ignore[attr-defined]
        indegree = []
        dependents: Dict[int, List[int]] = {}
        for i, c in enumerate(constraints):
            deps = 0
            for v in c.inputs:  # type: ignore[attr-defined]
                for j in producers.get(v, ()):
                    dependents.setdefault(j, []).append(i)
                    deps += 1
            indegree.append(deps)
        order: List[int] = [i for i, d in enumerate(indegree) if d == 0]
        head = 0
        while head < len(order):
            for j in dependents.get(order[head], ()):
                indegree[j] -= 1
                if indegree[j] == 0:
                    order.append(j)
            head += 1
        # post-time acyclicity check makes a full order certain
        assert len(order) == len(constraints)
        return [constraints[i] for i in order]

    def _narrow(self, name: VarId, iv: Interval) -> bool:
        """Intersect a domain with iv; returns True when the domain changed."""
        meet = self._domains[name].intersect(iv)
        if meet is None:
            self.consistent = False
            return False
        if meet != self._domains[name]:
            self._domains[name] = meet
            return True
        return False

    def propagate(self) -> "ConstraintStore":
        """Run all rules to a fixpoint.

        Each round: (a) ordering narrowing until stable, (b) every sum and
        product re-evaluated from its current input domains with the result
        intersected into the output, (d) ground orderings checked exactly.
        Domains only ever shrink, so the loop terminates; a generous round
        cap guards against defects.
        """
        if not self.consistent:
            return self
        edges = self._ordering_edges()
        if edges is None:
            self.consistent = False
            return self
        derived = self._topo_constraints()
        n_constraints = len(edges) + len(derived)
        max_rounds = max(1, len(self._domains)) * max(1, n_constraints) + 1

        rounds = 0
        changed = True
        while changed and self.consistent:
            rounds += 1
            if rounds > max_rounds:
                raise PropagationLimit(
                    f"propagation did not stabilize within {max_rounds} rounds"
                )
            changed = False

            # (a) X < Y, X::A:B, Y::C:D  ==>  X::A:D, Y::A:D
            narrowing = True
            while narrowing and self.consistent:
                narrowing = False
                for (x, y, _strict) in edges:
                    if x == y:
                        continue
                    bound = Interval(self._domains[x].lo, self._domains[y].hi) \
                        if self._domains[x].lo <= self._domains[y].hi else None
                    if bound is None:
                        self.consistent = False
                        break
                    if self._narrow(x, bound):
                        narrowing = changed = True
                    if not self.consistent:
                        break
                    if self._narrow(y, bound):
                        narrowing = changed = True
                    if not self.consistent:
                        break

            if not self.consistent:
                break

            # (b) re-evaluate sums/products from current inputs
            for c in derived:
                if isinstance(c, SumConstraint):
                    result = eval_sum(c, self._domains)
                else:
                    result = eval_mul(c, self._domains)
                if self._narrow(c.output, result):  # type: ignore[attr-defined]
                    changed = True
                if not self.consistent:
                    break

            if not self.consistent:
                break

            # (d) ground orderings evaluated exactly (this is where
            # strictness bites: the narrowing above ignores it).  The
            # closure edges subsume every posted constraint, EQ included.
            for (x, y, strict) in edges:
                dx, dy = self._domains[x], self._domains[y]
                if dx.is_singleton and dy.is_singleton:
                    if (dx.lo >= dy.lo) if strict else (dx.lo > dy.lo):
                        self.consistent = False
                        break

        return self

"""Query algebra: literals, clauses, disjunctive queries, and the textual
grammar used to report redescriptions.

    query   := clause ('|' clause)*
    clause  := ['!'] '(' literal ('&' literal)* ')'
    literal := name | '!' name | '[' name '<=' num ']' | '[' name '>' num ']'
             | '[' name '=' cat ']' | '[' name '!=' cat ']'

Serialization and parsing round-trip exactly (floats via repr).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .data import View


class QueryParseError(ValueError):
    pass


@dataclass(frozen=True)
class Literal:
    name: str
    op: str  # "bool" | "notbool" | "le" | "gt" | "eq" | "ne"
    value: object = None

    def serialize(self) -> str:
        if self.op == "bool":
            return self.name
        if self.op == "notbool":
            return f"!{self.name}"
        if self.op == "le":
            return f"[{self.name}<={self.value!r}]"
        if self.op == "gt":
            return f"[{self.name}>{self.value!r}]"
        if self.op == "eq":
            return f"[{self.name}={self.value}]"
        if self.op == "ne":
            return f"[{self.name}!={self.value}]"
        raise ValueError(f"unknown op {self.op!r}")

    def evaluate(self, view: View) -> np.ndarray:
        """Truth mask over entities; a missing value fails every test."""
        j = view.attribute_index(self.name)
        col = view.columns[j]
        missing = view.missing_mask(j)
        if self.op == "bool":
            return (col == 1) & ~missing
        if self.op == "notbool":
            return (col == 0) & ~missing
        if self.op == "le":
            with np.errstate(invalid="ignore"):
                return (col <= self.value) & ~missing
        if self.op == "gt":
            with np.errstate(invalid="ignore"):
                return (col > self.value) & ~missing
        attr = view.attributes[j]
        try:
            code = attr.categories.index(self.value)
        except ValueError:
            code = -2  # unseen category: matches nothing / everything present
        if self.op == "eq":
            return (col == code) & ~missing
        if self.op == "ne":
            return (col != code) & ~missing
        raise ValueError(f"unknown op {self.op!r}")


@dataclass(frozen=True)
class Clause:
    """Conjunction of literals, optionally negated as a whole. `leaf` records
    the generating tree leaf when known (not serialized)."""

    literals: tuple[Literal, ...]
    negated: bool = False
    leaf: int | None = None

    def serialize(self) -> str:
        body = "(" + "&".join(lit.serialize() for lit in self.literals) + ")"
        return ("!" + body) if self.negated else body

    def evaluate(self, view: View) -> np.ndarray:
        mask = np.ones(view.entity_count, dtype=bool)
        for lit in self.literals:
            mask &= lit.evaluate(view)
        return ~mask if self.negated else mask


@dataclass(frozen=True)
class Query:
    side: str
    clauses: tuple[Clause, ...]

    def serialize(self) -> str:
        return "|".join(cl.serialize() for cl in self.clauses)

    def evaluate(self, view: View) -> np.ndarray:
        """Entity-level support mask (non-private; negation is the true
        complement of the clause)."""
        mask = np.zeros(view.entity_count, dtype=bool)
        for cl in self.clauses:
            mask |= cl.evaluate(view)
        return mask

    def effective_leaves(self, leaf_count: int) -> frozenset[int]:
        """Leaf set whose union of supports realizes this query under the
        count-combination rules (a negated clause stands for every leaf but
        its own)."""
        out: set[int] = set()
        for cl in self.clauses:
            if cl.leaf is None:
                raise ValueError("clause has no generating leaf")
            if cl.negated:
                out.update(i for i in range(leaf_count) if i != cl.leaf)
            else:
                out.add(cl.leaf)
        return frozenset(out)

    def with_clause(self, clause: Clause) -> "Query":
        return Query(self.side, self.clauses + (clause,))


def leaf_query(tree, leaf_index: int, view: View) -> Query:
    """Conjunction of the pass/fail tests along the root-to-leaf path; fail
    edges contribute the negated test."""
    literals = []
    for sp, passed in tree.leaf_path(leaf_index):
        attr = view.attributes[sp.attr_idx]
        kind = sp.test[0]
        if kind == "true":
            literals.append(Literal(attr.name, "bool" if passed else "notbool"))
        elif kind == "le":
            literals.append(Literal(attr.name, "le" if passed else "gt", sp.test[1]))
        else:
            cat = attr.categories[sp.test[1]]
            literals.append(Literal(attr.name, "eq" if passed else "ne", cat))
    return Query(tree.side, (Clause(tuple(literals), leaf=leaf_index),))


_NAME_RE = re.compile(r"[A-Za-z0-9_.\-]+")
_NUM_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def fail(self, msg: str):
        raise QueryParseError(f"{msg} at position {self.pos} in {self.text!r}")

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.fail(f"expected {ch!r}")
        self.pos += 1

    def name(self) -> str:
        m = _NAME_RE.match(self.text, self.pos)
        if not m:
            self.fail("expected a name")
        self.pos = m.end()
        return m.group()

    def literal(self) -> Literal:
        if self.peek() == "[":
            self.pos += 1
            nm = self.name()
            if self.text.startswith("<=", self.pos):
                self.pos += 2
                m = _NUM_RE.match(self.text, self.pos)
                if not m:
                    self.fail("expected a number")
                self.pos = m.end()
                lit = Literal(nm, "le", float(m.group()))
            elif self.peek() == ">":
                self.pos += 1
                m = _NUM_RE.match(self.text, self.pos)
                if not m:
                    self.fail("expected a number")
                self.pos = m.end()
                lit = Literal(nm, "gt", float(m.group()))
            elif self.text.startswith("!=", self.pos):
                self.pos += 2
                lit = Literal(nm, "ne", self.name())
            elif self.peek() == "=":
                self.pos += 1
                lit = Literal(nm, "eq", self.name())
            else:
                self.fail("expected a comparison operator")
            self.expect("]")
            return lit
        if self.peek() == "!":
            self.pos += 1
            return Literal(self.name(), "notbool")
        return Literal(self.name(), "bool")

    def clause(self) -> Clause:
        negated = False
        if self.peek() == "!":
            negated = True
            self.pos += 1
        self.expect("(")
        literals = [self.literal()]
        while self.peek() == "&":
            self.pos += 1
            literals.append(self.literal())
        self.expect(")")
        return Clause(tuple(literals), negated=negated)

    def query(self, side: str) -> Query:
        clauses = [self.clause()]
        while self.peek() == "|":
            self.pos += 1
            clauses.append(self.clause())
        if self.pos != len(self.text):
            self.fail("trailing input")
        return Query(side, tuple(clauses))


def parse_query(text: str, side: str) -> Query:
    return _Parser(text).query(side)

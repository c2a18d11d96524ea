"""Boolean event expressions over named basic variables.

Grammar (loosest binding first)::

    expr   := term (('|' | 'or') term)*
    term   := factor (('&' | 'and') factor)*
    factor := ('!' | 'not') factor | '(' expr ')' | IDENT

Binary operators associate to the left.  Expressions are immutable and
hashable; equality is structural, while :func:`canonical_key` compares
expressions by truth table.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .config import DEFAULT_CAP
from .errors import EventSyntaxError, MissingVariableError, SupportTooLargeError

__all__ = [
    "Var", "Not", "And", "Or", "EventExpr", "TruthAssignment",
    "parse_event", "to_text", "evaluate", "support", "joint_support",
    "truth_table", "canonical_key", "enumerate_support_assignments",
    "assignment_matrix", "evaluate_columns", "complement", "literal",
]


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Not:
    child: "EventExpr"

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class And:
    left: "EventExpr"
    right: "EventExpr"

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Or:
    left: "EventExpr"
    right: "EventExpr"

    def __str__(self) -> str:
        return to_text(self)


EventExpr = Union[Var, Not, And, Or]
TruthAssignment = Mapping[str, bool]

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[!&|()]))")
_KEYWORDS = {"not": "!", "and": "&", "or": "|"}


# -- parsing ---------------------------------------------------------------


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    end = len(text.rstrip())
    while pos < end:
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise EventSyntaxError(f"unexpected character {text[bad]!r}", text, bad)
        start = m.start(m.lastgroup)
        if m.lastgroup == "ident":
            word = m.group("ident")
            if word in _KEYWORDS:
                tokens.append(("op", _KEYWORDS[word], start))
            else:
                tokens.append(("ident", word, start))
        else:
            tokens.append(("op", m.group("op"), start))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def fail(self, message: str, pos: int | None = None):
        if pos is None:
            tok = self.peek()
            pos = tok[2] if tok else len(self.text)
        raise EventSyntaxError(message, self.text, pos)

    def accept(self, op: str) -> bool:
        tok = self.peek()
        if tok is not None and tok[0] == "op" and tok[1] == op:
            self.i += 1
            return True
        return False

    def expr(self) -> EventExpr:
        node = self.term()
        while self.accept("|"):
            node = Or(node, self.term())
        return node

    def term(self) -> EventExpr:
        node = self.factor()
        while self.accept("&"):
            node = And(node, self.factor())
        return node

    def factor(self) -> EventExpr:
        tok = self.peek()
        if tok is None:
            self.fail("unexpected end of expression")
        kind, value, pos = tok
        if kind == "ident":
            self.i += 1
            return Var(value)
        if value == "!":
            self.i += 1
            return Not(self.factor())
        if value == "(":
            self.i += 1
            node = self.expr()
            if not self.accept(")"):
                self.fail("unclosed parenthesis", pos)
            return node
        self.fail(f"unexpected {value!r}")


def parse_event(text: str) -> EventExpr:
    """Parse ``text`` into an expression tree.

    >>> parse_event("p & !q")
    And(left=Var(name='p'), right=Not(child=Var(name='q')))
    """
    if not text or not text.strip():
        raise EventSyntaxError("empty event expression")
    parser = _Parser(text)
    node = parser.expr()
    if parser.peek() is not None:
        parser.fail(f"unexpected {parser.peek()[1]!r}")
    return node


# -- printing --------------------------------------------------------------

_PREC = {Or: 1, And: 2, Not: 3, Var: 4}


def to_text(e: EventExpr) -> str:
    """Render with the fewest parentheses that still re-parse to the same tree."""
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Not):
        inner = to_text(e.child)
        return "!" + (f"({inner})" if _PREC[type(e.child)] < 3 else inner)
    op = " | " if isinstance(e, Or) else " & "
    prec = _PREC[type(e)]
    left = to_text(e.left)
    right = to_text(e.right)
    if _PREC[type(e.left)] < prec:
        left = f"({left})"
    if _PREC[type(e.right)] <= prec:
        right = f"({right})"
    return left + op + right


# -- semantics -------------------------------------------------------------


@lru_cache(maxsize=None)
def support(e: EventExpr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Not):
        return support(e.child)
    return support(e.left) | support(e.right)


def joint_support(events: Iterable[EventExpr]) -> list[str]:
    names: set[str] = set()
    for e in events:
        names |= support(e)
    return sorted(names)


def _eval(e: EventExpr, t: TruthAssignment) -> bool:
    if isinstance(e, Var):
        return bool(t[e.name])
    if isinstance(e, Not):
        return not _eval(e.child, t)
    if isinstance(e, And):
        return _eval(e.left, t) and _eval(e.right, t)
    return _eval(e.left, t) or _eval(e.right, t)


def evaluate(e: EventExpr, t: TruthAssignment) -> bool:
    for name in sorted(support(e)):
        if name not in t:
            raise MissingVariableError(name)
    return _eval(e, t)


def evaluate_columns(e: EventExpr, columns: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorised :func:`evaluate` over boolean columns, one per variable."""
    if isinstance(e, Var):
        try:
            return columns[e.name]
        except KeyError:
            raise MissingVariableError(e.name) from None
    if isinstance(e, Not):
        return ~evaluate_columns(e.child, columns)
    if isinstance(e, And):
        return evaluate_columns(e.left, columns) & evaluate_columns(e.right, columns)
    return evaluate_columns(e.left, columns) | evaluate_columns(e.right, columns)


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise SupportTooLargeError(n, cap)


def assignment_matrix(names: Sequence[str], cap: int = DEFAULT_CAP) -> np.ndarray:
    """Boolean array of shape (2**n, n); row k is the k-th assignment.

    Rows count in binary with the first name as the most significant bit,
    so row 0 is all-false and the order is lexicographic.
    """
    n = len(names)
    _check_cap(n, cap)
    k = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((k[:, None] >> shifts[None, :]) & 1).astype(bool)


def enumerate_support_assignments(
    events: Sequence[EventExpr], cap: int = DEFAULT_CAP
) -> list[dict[str, bool]]:
    names = joint_support(events)
    rows = assignment_matrix(names, cap)
    return [dict(zip(names, map(bool, row))) for row in rows]


def truth_table(events: Sequence[EventExpr], cap: int = DEFAULT_CAP) -> tuple[list[str], np.ndarray]:
    """Joint support and the (2**n, len(events)) table of event values."""
    names = joint_support(events)
    rows = assignment_matrix(names, cap)
    columns = {name: rows[:, i] for i, name in enumerate(names)}
    table = np.empty((rows.shape[0], len(events)), dtype=bool)
    for j, e in enumerate(events):
        table[:, j] = evaluate_columns(e, columns)
    return names, table


@lru_cache(maxsize=65536)
def canonical_key(e: EventExpr) -> str:
    """Semantic identity: essential variables plus their truth table.

    Variables the function ignores are dropped first, so ``p & (q | !q)``
    and ``p`` share a key, as do all tautologies.
    """
    names, table = truth_table([e])
    bits = table[:, 0]
    n = len(names)
    for i in range(n - 1, -1, -1):
        # axis i of the reshaped table is variable names[i]
        cube = bits.reshape((2,) * len(names)) if names else bits
        lo = np.take(cube, 0, axis=i)
        hi = np.take(cube, 1, axis=i)
        if np.array_equal(lo, hi):
            bits = lo.reshape(-1)
            names = names[:i] + names[i + 1:]
    return ",".join(names) + ":" + "".join("1" if b else "0" for b in bits)


def complement(e: EventExpr) -> EventExpr:
    """Negation with a double negation collapsed."""
    return e.child if isinstance(e, Not) else Not(e)


def literal(e: EventExpr) -> tuple[str, bool] | None:
    """``(name, polarity)`` when ``e`` is semantically a single literal."""
    key = canonical_key(e)
    names, bits = key.split(":")
    if "," in names or not names:
        return None
    return names, bits == "01"

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capagg.errors import EventSyntaxError, MissingVariableError, SupportTooLargeError
from capagg.events import (
    And, Not, Or, Var, canonical_key, complement, enumerate_support_assignments,
    evaluate, joint_support, literal, parse_event, support, to_text, truth_table,
)

NAMES = ["a", "b", "c", "d"]


def exprs(max_leaves=8):
    leaves = st.sampled_from(NAMES).map(Var)
    return st.recursive(
        leaves,
        lambda inner: st.one_of(
            inner.map(Not),
            st.tuples(inner, inner).map(lambda t: And(*t)),
            st.tuples(inner, inner).map(lambda t: Or(*t)),
        ),
        max_leaves=max_leaves,
    )


def brute_table(e, names):
    """Truth values over all assignments, via Python's own boolean operators."""
    def ev(node, t):
        if isinstance(node, Var):
            return t[node.name]
        if isinstance(node, Not):
            return not ev(node.child, t)
        if isinstance(node, And):
            return ev(node.left, t) and ev(node.right, t)
        return ev(node.left, t) or ev(node.right, t)

    return tuple(ev(e, dict(zip(names, bits))) for bits in itertools.product([False, True], repeat=len(names)))


class TestParse:
    def test_precedence_not_and_or(self):
        assert parse_event("!p & q | r") == Or(And(Not(Var("p")), Var("q")), Var("r"))

    def test_left_associative(self):
        assert parse_event("p & q & r") == And(And(Var("p"), Var("q")), Var("r"))

    def test_keywords_and_parentheses(self):
        assert parse_event("not (p or q) and r") == And(Not(Or(Var("p"), Var("q"))), Var("r"))

    @pytest.mark.parametrize("text, pos", [("p & ", 4), ("(p | q", 0), ("p $ q", 2), ("p q", 2)])
    def test_syntax_errors_report_position(self, text, pos):
        with pytest.raises(EventSyntaxError) as info:
            parse_event(text)
        assert info.value.position == pos

    def test_empty_is_rejected(self):
        with pytest.raises(EventSyntaxError):
            parse_event("   ")

    def test_minimal_parentheses(self):
        assert to_text(parse_event("(p & q) | r")) == "p & q | r"
        assert to_text(parse_event("p & (q | r)")) == "p & (q | r)"
        assert to_text(parse_event("p & (q & r)")) == "p & (q & r)"
        assert to_text(parse_event("!!p")) == "!!p"

    @settings(max_examples=200, deadline=None)
    @given(exprs())
    def test_round_trip(self, e):
        assert parse_event(to_text(e)) == e


class TestEvaluate:
    def test_examples(self):
        e = parse_event("p & !q")
        assert evaluate(e, {"p": True, "q": False})
        assert not evaluate(e, {"p": True, "q": True})
        assert evaluate(parse_event("p | q"), {"p": False, "q": True})

    def test_missing_variable(self):
        with pytest.raises(MissingVariableError):
            evaluate(parse_event("p & q"), {"p": True})

    def test_extra_variables_ignored(self):
        assert evaluate(Var("p"), {"p": True, "z": False})

    @settings(max_examples=150, deadline=None)
    @given(exprs())
    def test_vectorised_table_matches_brute_force(self, e):
        names, table = truth_table([e])
        assert tuple(table[:, 0]) == brute_table(e, names)


class TestSupport:
    def test_support_and_joint_support(self):
        assert support(parse_event("q & !p")) == frozenset({"p", "q"})
        assert joint_support([parse_event("r"), parse_event("p | q")]) == ["p", "q", "r"]

    def test_enumeration_is_complete_and_ordered(self):
        rows = enumerate_support_assignments([parse_event("p & q"), parse_event("r")])
        assert len(rows) == 8
        assert len({tuple(sorted(r.items())) for r in rows}) == 8
        assert rows[0] == {"p": False, "q": False, "r": False}
        assert rows[1] == {"p": False, "q": False, "r": True}
        assert rows[-1] == {"p": True, "q": True, "r": True}

    def test_cap(self):
        e = parse_event(" | ".join(f"v{i}" for i in range(6)))
        with pytest.raises(SupportTooLargeError):
            enumerate_support_assignments([e], cap=5)
        assert len(enumerate_support_assignments([e], cap=6)) == 64


class TestCanonicalKey:
    def test_commuted_forms_share_key(self):
        assert canonical_key(parse_event("p & q")) == canonical_key(parse_event("q & p"))

    def test_de_morgan(self):
        assert canonical_key(parse_event("!(p | q)")) == canonical_key(parse_event("!p & !q"))

    def test_inessential_variables_dropped(self):
        assert canonical_key(parse_event("p & (q | !q)")) == canonical_key(parse_event("p")) == "p:01"

    def test_distinct_events_differ(self):
        assert canonical_key(parse_event("p & q")) != canonical_key(parse_event("p | q"))
        assert canonical_key(parse_event("p & !q")) == "p,q:0010"

    @settings(max_examples=200, deadline=None)
    @given(exprs(6), exprs(6))
    def test_key_equality_is_semantic_equivalence(self, e1, e2):
        names = sorted(support(e1) | support(e2))
        same = brute_table(e1, names) == brute_table(e2, names)
        assert (canonical_key(e1) == canonical_key(e2)) == same

    def test_complement_and_literal(self):
        assert complement(parse_event("!p")) == Var("p")
        assert complement(Var("p")) == Not(Var("p"))
        assert literal(parse_event("!!p")) == ("p", True)
        assert literal(parse_event("!p")) == ("p", False)
        assert literal(parse_event("p & q")) is None

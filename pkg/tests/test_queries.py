import numpy as np
import pytest
from hypothesis import given, strategies as st

from dp_redescribe import (
    Clause,
    DecisionTree,
    Literal,
    Query,
    QueryParseError,
    SplitPoint,
    leaf_query,
    parse_query,
)

from helpers import bool_view, num_view


def test_literal_serialization_forms():
    assert Literal("a", "bool").serialize() == "a"
    assert Literal("a", "notbool").serialize() == "!a"
    assert Literal("x", "le", 1.5).serialize() == "[x<=1.5]"
    assert Literal("x", "gt", 1.5).serialize() == "[x>1.5]"
    assert Literal("c", "eq", "red").serialize() == "[c=red]"
    assert Literal("c", "ne", "red").serialize() == "[c!=red]"


def test_query_round_trip_exact():
    text = "(a&!b&[x<=1.5])|!([y>0.25]&[c=red])|([c!=blu])"
    query = parse_query(text, "L")
    assert query.serialize() == text
    assert parse_query(query.serialize(), "L") == query


@given(st.lists(
    st.tuples(
        st.booleans(),
        st.lists(
            st.sampled_from([
                Literal("a", "bool"), Literal("b", "notbool"),
                Literal("x", "le", 0.5), Literal("x", "gt", 12.25),
                Literal("c", "eq", "u"), Literal("c", "ne", "v"),
            ]),
            min_size=1, max_size=4,
        ),
    ),
    min_size=1, max_size=4,
))
def test_round_trip_property(spec):
    query = Query("L", tuple(
        Clause(tuple(lits), negated=neg) for neg, lits in spec
    ))
    text = query.serialize()
    assert parse_query(text, "L") == query
    assert parse_query(text, "L").serialize() == text


def test_parse_errors():
    for bad in ["", "(a", "a", "(a)|", "([x<=z])", "(a)x", "!(a)!"]:
        with pytest.raises(QueryParseError):
            parse_query(bad, "L")


def test_literal_evaluation_missing_fails_both_polarities():
    view = bool_view({"a": [1, 0, -1]})
    np.testing.assert_array_equal(
        Literal("a", "bool").evaluate(view), [True, False, False]
    )
    np.testing.assert_array_equal(
        Literal("a", "notbool").evaluate(view), [False, True, False]
    )


def test_numeric_literal_evaluation():
    view = num_view({"x": [1.0, 2.0, np.nan]})
    np.testing.assert_array_equal(
        Literal("x", "le", 1.5).evaluate(view), [True, False, False]
    )
    np.testing.assert_array_equal(
        Literal("x", "gt", 1.5).evaluate(view), [False, True, False]
    )


def test_negated_clause_is_true_complement():
    view = bool_view({"a": [1, 1, 0], "b": [1, 0, 0]})
    clause = Clause((Literal("a", "bool"), Literal("b", "bool")), negated=True)
    np.testing.assert_array_equal(clause.evaluate(view), [False, True, True])


def test_leaf_query_paths():
    view = bool_view({"a": [1, 1, 0, 0], "c": [1, 0, 1, 0]})
    tree = DecisionTree("L", 2, [
        SplitPoint("L", 0, ("true",)),
        SplitPoint("L", 1, ("true",)),
        SplitPoint("L", 1, ("true",)),
    ])
    # leaf 0: a pass, c pass; leaf 1: a pass, c fail; leaf 3: both fail
    assert leaf_query(tree, 0, view).serialize() == "(a&c)"
    assert leaf_query(tree, 1, view).serialize() == "(a&!c)"
    assert leaf_query(tree, 3, view).serialize() == "(!a&!c)"


def test_effective_leaves():
    clause_plain = Clause((Literal("a", "bool"),), leaf=1)
    clause_neg = Clause((Literal("a", "bool"),), negated=True, leaf=0)
    assert Query("L", (clause_plain,)).effective_leaves(4) == {1}
    assert Query("L", (clause_neg,)).effective_leaves(4) == {1, 2, 3}
    assert Query("L", (clause_plain, clause_neg)).effective_leaves(4) == {1, 2, 3}

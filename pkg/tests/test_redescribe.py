import numpy as np
import pytest

from dp_redescribe import (
    Attribute,
    Constraints,
    DecisionTree,
    RandomSource,
    SplitPoint,
    combined_support,
    extract_reds,
    jaccard,
    make_initial_target,
    noisy_leaf_tables,
    prune,
    pvalue,
    sat,
)
from dp_redescribe.redescribe import Redescription

from helpers import binom_tail, bool_view, make_curator


def small_curator(no_noise=True):
    # left 'a' and right 'c' agree on 3 of 4 entities (fig-style toy)
    left = bool_view({"a": [1, 1, 1, 0], "b": [1, 0, 1, 0]})
    right = bool_view({"c": [1, 1, 1, 1], "d": [0, 1, 0, 1]})
    return make_curator(left, right, total=10.0, no_noise=no_noise)


def depth1_tree(side, attr_idx):
    return DecisionTree(side, 1, [SplitPoint(side, attr_idx, ("true",))])


def test_noisy_tables_exact_in_no_noise_mode():
    curator = small_curator()
    t_l, t_r = depth1_tree("L", 0), depth1_tree("R", 0)
    table = noisy_leaf_tables(curator, t_l, t_r, 0.5, RandomSource(0))
    # left leaf 0 = a true {0,1,2}; right leaf 0 = c true = all
    np.testing.assert_array_equal(table.inter, [[3, 0], [1, 0]])
    np.testing.assert_array_equal(table.left, [3, 1])
    np.testing.assert_array_equal(table.right, [4, 0])
    assert table.dsize == 4
    assert curator.accountant.ledger == [
        ("extract-inter", 0.25), ("extract-left", 0.25)
    ]


def test_combined_support_with_negation():
    curator = small_curator()
    table = noisy_leaf_tables(curator, depth1_tree("L", 0),
                              depth1_tree("R", 1), 0.5, RandomSource(0))
    eff_l = np.array([True, False])
    eff_r_neg = np.array([True, False])  # negation of right leaf 1
    inter, s_l, s_r = combined_support(table, eff_l, eff_r_neg)
    # d true on entities {1,3}; leaf 0 of right tree = d true
    assert s_l == 3 and s_r == 2 and inter == 1


def test_jaccard_examples():
    assert jaccard(3, 4, 3) == pytest.approx(0.75)
    assert jaccard(5, 5, 5) == pytest.approx(1.0)
    assert jaccard(-2.0, 4, 3) == 0.0
    assert jaccard(0.0, 0.0, 0.0) == 0.0  # degenerate floor


def test_pvalue_examples_and_oracle():
    assert pvalue(5, 5, 5, 10) == pytest.approx(binom_tail(10, 0.25, 5))
    assert pvalue(5, 5, 5, 10) == pytest.approx(0.0781, abs=5e-5)
    assert pvalue(3, 3, 0, 10) == 1.0
    assert pvalue(10, 10, 10, 10) == 1.0
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(2, 200))
        s_l = float(rng.integers(0, n + 1))
        s_r = float(rng.integers(0, n + 1))
        inter = float(rng.integers(0, int(min(s_l, s_r)) + 1))
        want = binom_tail(n, (s_l / n) * (s_r / n), int(np.ceil(inter)))
        got = pvalue(s_l, s_r, inter, float(n))
        assert got == pytest.approx(want, rel=1e-9, abs=1e-300)


def test_sat_inclusive_boundaries():
    cons = Constraints(max_pvalue=0.01, min_jaccard=0.1, min_support=10,
                       max_support_fraction=0.8)
    assert sat(inter=10, jacc=0.1, pval=0.01, cons=cons, dsize=100)
    assert not sat(inter=10, jacc=0.05, pval=0.001, cons=cons, dsize=100)
    assert not sat(inter=9.9, jacc=0.5, pval=0.001, cons=cons, dsize=100)
    assert not sat(inter=81, jacc=0.5, pval=0.001, cons=cons, dsize=100)
    assert sat(inter=80, jacc=0.5, pval=0.001, cons=cons, dsize=100)


def test_extract_reds_finds_planted_pair():
    rng = np.random.default_rng(0)
    n = 200
    z = rng.integers(0, 2, size=n)
    left = bool_view({"a": z.tolist(),
                      "b": rng.integers(0, 2, size=n).tolist()})
    right = bool_view({"c": z.tolist(),
                       "d": rng.integers(0, 2, size=n).tolist()})
    curator = make_curator(left, right, total=10.0, no_noise=True)
    reds = extract_reds(curator, depth1_tree("L", 0), depth1_tree("R", 0),
                        1.0, Constraints(), RandomSource(0))
    perfect = [r for r in reds if r.jaccard == pytest.approx(1.0)]
    assert perfect, "planted identical attribute pair not recovered"
    texts = {(r.query_left.serialize(), r.query_right.serialize())
             for r in perfect}
    assert ("(a)", "(c)") in texts


def test_extract_reds_min_supp_above_everything():
    curator = small_curator()
    cons = Constraints(min_support=1e6)
    reds = extract_reds(curator, depth1_tree("L", 0), depth1_tree("R", 0),
                        1.0, cons, RandomSource(0))
    assert reds == []


def test_extract_reds_clause_budget():
    rng = np.random.default_rng(7)
    n = 300
    left = bool_view({f"l{j}": rng.integers(0, 2, size=n).tolist()
                      for j in range(3)})
    right = bool_view({f"r{j}": rng.integers(0, 2, size=n).tolist()
                       for j in range(3)})
    curator = make_curator(left, right, total=10.0)
    t_l = DecisionTree("L", 2, [SplitPoint("L", j, ("true",))
                                for j in (0, 1, 2)])
    t_r = DecisionTree("R", 2, [SplitPoint("R", j, ("true",))
                                for j in (0, 1, 2)])
    reds = extract_reds(curator, t_l, t_r, 1.0,
                        Constraints(min_support=5), RandomSource(3))
    for red in reds:
        assert 1 <= len(red.query_left.clauses) <= 4
        assert 1 <= len(red.query_right.clauses) <= 4
        assert not (red.query_left.clauses[0].negated
                    and red.query_right.clauses[0].negated)


def test_prune_threshold():
    def red(inter):
        from dp_redescribe import parse_query

        return Redescription(
            query_left=parse_query("(a)", "L"),
            query_right=parse_query("(b)", "R"),
            supp_left=inter, supp_right=inter, supp_inter=inter,
            dsize=100.0, jaccard=1.0, pvalue=0.0,
        )

    reds = [red(5.0), red(50.0), red(500.0)]
    assert prune(reds, 0.0) == reds
    assert [r.supp_inter for r in prune(reds, 50.0)] == [50.0, 500.0]
    assert prune(reds, np.inf) == []

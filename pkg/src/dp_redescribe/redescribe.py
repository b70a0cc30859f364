"""Noisy redescription extraction from a pair of decision trees.

All statistics come from two noised leaf-count tables (leaf-pair
intersections and left-leaf sizes) built in two passes over the data; every
query-level support is a sum of table cells, so no further budget is spent.
Negated clauses are estimated by the all-other-leaves heuristic, which lower
bounds the exact complement support and matches it when no values are
missing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sstats

from .privacy import CuratorHandle, RandomSource, laplace_noise_array
from .queries import Clause, Query, leaf_query
from .tree import DecisionTree

MAX_EXTENSION_ROUNDS = 3
_DENOM_FLOOR = 1e-9


@dataclass(frozen=True)
class Constraints:
    """Quality gates applied to noisy statistics."""

    max_pvalue: float = 0.01
    min_jaccard: float = 0.1
    min_support: float = 10.0
    max_support_fraction: float = 0.8

    def __post_init__(self):
        if not (0.0 <= self.min_jaccard <= 1.0):
            raise ValueError("min_jaccard must lie in [0, 1]")
        if not (0.0 < self.max_support_fraction <= 1.0):
            raise ValueError("max_support_fraction must lie in (0, 1]")


@dataclass
class NoisyCountTable:
    """Leaf-level noisy counts: `inter[i, j]` estimates the overlap of left
    leaf i and right leaf j, `left[i]` the size of left leaf i. The right
    vector and dataset size are derived, not separately measured."""

    inter: np.ndarray
    left: np.ndarray

    @property
    def right(self) -> np.ndarray:
        return self.inter.sum(axis=0)

    @property
    def dsize(self) -> float:
        return float(self.left.sum())


@dataclass
class Redescription:
    query_left: Query
    query_right: Query
    supp_left: float
    supp_right: float
    supp_inter: float
    dsize: float
    jaccard: float
    pvalue: float
    label: str = ""

    def key(self) -> tuple[str, str]:
        return (self.query_left.serialize(), self.query_right.serialize())


def noisy_leaf_tables(curator: CuratorHandle, tree_left: DecisionTree,
                      tree_right: DecisionTree, eps_extract: float,
                      rng: RandomSource) -> NoisyCountTable:
    """Two passes: leaf-pair intersection counts, then left-leaf counts.

    Each pass perturbs a partition of the entities (disjoint cells), so each
    costs eps_extract/2 by parallel composition; cells get Laplace noise of
    scale 2/eps_extract. Charges exactly eps_extract in two ledger entries.
    """
    if eps_extract <= 0:
        raise ValueError("extraction budget must be positive")
    left_view = curator.dataset.view(tree_left.side)
    right_view = curator.dataset.view(tree_right.side)
    leaf_l = tree_left.route(left_view)
    leaf_r = tree_right.route(right_view)
    n_l, n_r = tree_left.leaf_count, tree_right.leaf_count

    both = (leaf_l >= 0) & (leaf_r >= 0)
    flat = leaf_l[both] * n_r + leaf_r[both]
    inter = np.bincount(flat, minlength=n_l * n_r).reshape(n_l, n_r)
    inter = inter.astype(np.float64)
    left = np.bincount(leaf_l[leaf_l >= 0], minlength=n_l).astype(np.float64)

    if not curator.no_noise:
        scale = 2.0 / eps_extract
        inter = inter + laplace_noise_array(scale, inter.shape, rng)
        left = left + laplace_noise_array(scale, left.shape, rng)
    curator.accountant.charge("extract-inter", eps_extract / 2.0)
    curator.accountant.charge("extract-left", eps_extract / 2.0)
    return NoisyCountTable(inter=inter, left=left)


def combined_support(table: NoisyCountTable, eff_left: np.ndarray,
                     eff_right: np.ndarray) -> tuple[float, float, float]:
    """(inter, supp_left, supp_right) for queries whose effective leaf sets
    are given as boolean masks; plain sums of unclamped noisy cells."""
    if not eff_left.any() or not eff_right.any():
        raise ValueError("effective leaf sets must be nonempty")
    inter = float(table.inter[np.ix_(eff_left, eff_right)].sum())
    supp_l = float(table.left[eff_left].sum())
    supp_r = float(table.right[eff_right].sum())
    return inter, supp_l, supp_r


def jaccard(inter: float, supp_left: float, supp_right: float) -> float:
    """Jaccard index of noisy supports, clamped into [0, 1]. Returns 0 when
    the union estimate degenerates to (almost) nothing."""
    i = max(inter, 0.0)
    denom = max(supp_left + supp_right - i, i)
    if denom < _DENOM_FLOOR:
        return 0.0
    return min(max(i / denom, 0.0), 1.0)


def pvalue(supp_left: float, supp_right: float, inter: float,
           dsize: float) -> float:
    """Binomial-tail significance: probability that two random queries with
    marginal frequencies supp/dsize overlap in at least ceil(inter) of the
    round(dsize) entities."""
    n = int(round(dsize))
    if n < 1:
        return 1.0
    p = min(max(supp_left / dsize, 0.0), 1.0) * min(max(supp_right / dsize, 0.0), 1.0)
    k = int(np.ceil(max(inter, 0.0)))
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    return float(sstats.binom.sf(k - 1, n, p))


def sat(inter: float, jacc: float, pval: float, cons: Constraints,
        dsize: float) -> bool:
    """All constraint comparisons are inclusive at the thresholds."""
    return (pval <= cons.max_pvalue
            and jacc >= cons.min_jaccard
            and cons.min_support <= inter
            and inter <= cons.max_support_fraction * dsize)


def _leaf_mask(leaf: int, negated: bool, leaf_count: int) -> np.ndarray:
    mask = np.zeros(leaf_count, dtype=bool)
    mask[leaf] = True
    return ~mask if negated else mask


def extract_reds(curator: CuratorHandle, tree_left: DecisionTree,
                 tree_right: DecisionTree, eps_extract: float,
                 cons: Constraints, rng: RandomSource,
                 label: str = "") -> list[Redescription]:
    """Build the noisy count table, enumerate simple leaf-pair redescriptions
    (including single-negation variants), extend each greedily with up to
    three disjunctive clauses alternating sides, and keep those satisfying
    the constraints on noisy statistics."""
    table = noisy_leaf_tables(curator, tree_left, tree_right, eps_extract, rng)
    dsize = table.dsize
    right_vec = table.right
    left_view = curator.dataset.view(tree_left.side)
    right_view = curator.dataset.view(tree_right.side)
    n_l, n_r = tree_left.leaf_count, tree_right.leaf_count

    # Candidate single-clause queries per side, plain before negated within
    # each leaf so that greedy tie-breaks favour the lowest leaf, plain form.
    def side_candidates(tree, view, leaf_count):
        out = []
        for leaf in range(leaf_count):
            base = leaf_query(tree, leaf, view).clauses[0]
            for negated in (False, True):
                clause = Clause(base.literals, negated=negated, leaf=leaf)
                out.append((clause, _leaf_mask(leaf, negated, leaf_count)))
        return out

    cands_l = side_candidates(tree_left, left_view, n_l)
    cands_r = side_candidates(tree_right, right_view, n_r)

    results: list[Redescription] = []
    seen: set[tuple[str, str]] = set()
    for cl, mask_l0 in cands_l:
        for cr, mask_r0 in cands_r:
            if cl.negated and cr.negated:
                continue
            q_l = Query(tree_left.side, (cl,))
            q_r = Query(tree_right.side, (cr,))
            mask_l, mask_r = mask_l0, mask_r0
            inter, s_l, s_r = combined_support(table, mask_l, mask_r)
            jacc = jaccard(inter, s_l, s_r)

            for round_no in range(MAX_EXTENSION_ROUNDS):
                improved = False
                for side in ("L", "R"):
                    cands = cands_l if side == "L" else cands_r
                    # adding clauses on one side leaves the other side's
                    # support fixed, so one marginal vector covers all
                    # candidate intersections this round
                    if side == "L":
                        marginal = table.inter @ mask_r
                    else:
                        marginal = mask_l @ table.inter
                    best = None
                    for clause, mask in cands:
                        if side == "L":
                            new_l, new_r = mask_l | mask, mask_r
                            c_inter = float(marginal[new_l].sum())
                            c_sl = float(table.left[new_l].sum())
                            c_sr = s_r
                        else:
                            new_l, new_r = mask_l, mask_r | mask
                            c_inter = float(marginal[new_r].sum())
                            c_sl = s_l
                            c_sr = float(right_vec[new_r].sum())
                        c_jacc = jaccard(c_inter, c_sl, c_sr)
                        if c_jacc <= jacc:
                            continue
                        c_pval = pvalue(c_sl, c_sr, c_inter, dsize)
                        if not sat(c_inter, c_jacc, c_pval, cons, dsize):
                            continue
                        if best is None or c_jacc > best[0]:
                            best = (c_jacc, clause, new_l, new_r,
                                    c_inter, c_sl, c_sr)
                    if best is not None:
                        jacc, clause, mask_l, mask_r, inter, s_l, s_r = best
                        if side == "L":
                            q_l = q_l.with_clause(clause)
                        else:
                            q_r = q_r.with_clause(clause)
                        improved = True
                if not improved:
                    break

            pval = pvalue(s_l, s_r, inter, dsize)
            if not sat(inter, jacc, pval, cons, dsize):
                continue
            red = Redescription(
                query_left=q_l, query_right=q_r,
                supp_left=s_l, supp_right=s_r, supp_inter=inter,
                dsize=dsize, jaccard=jacc, pvalue=pval, label=label,
            )
            if red.key() not in seen:
                seen.add(red.key())
                results.append(red)
    return results


def prune(reds: list[Redescription], min_noisy_support: float) -> list[Redescription]:
    """Drop redescriptions whose noisy intersection support falls below the
    threshold (the post-hoc filter against noise artifacts)."""
    return [r for r in reds if r.supp_inter >= min_noisy_support]

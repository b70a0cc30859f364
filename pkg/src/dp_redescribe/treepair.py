"""Joint MCMC sampling of matched tree-pairs.

A pair consists of an anchor tree, fitted to the initial target, and a
follower tree on the other view, fitted to the classes induced by the
anchor's leaves. The Metropolis walk proposes single-split replacements in
either tree; replacing an anchor split also refreshes the follower's
statistics because its target changes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .data import LEFT, Attribute, opposite
from .privacy import CuratorHandle, RandomSource, mh_accept
from .target import TargetVariable, make_initial_target, target_from_leaves
from .tree import (
    STABILIZE_WINDOW,
    DecisionTree,
    _WindowVar,
    quality_norm,
    random_split_tree,
    replace_node,
    split_catalog,
)

PAIR_SCORE_SENSITIVITY = 1.0


@dataclass
class TreePair:
    anchor: DecisionTree
    follower: DecisionTree
    initial_target: TargetVariable
    follower_target: TargetVariable

    @property
    def left(self) -> DecisionTree:
        return self.anchor if self.anchor.side == LEFT else self.follower

    @property
    def right(self) -> DecisionTree:
        return self.follower if self.anchor.side == LEFT else self.anchor


def score_pair(pair: TreePair, total_entities: int) -> float:
    """q(anchor)*(1+q(follower))/2 with the normalized purity q; in [0,1]."""
    q_a = quality_norm(pair.anchor, total_entities)
    q_f = quality_norm(pair.follower, total_entities)
    return q_a * (1.0 + q_f) / 2.0


def proposal_probability(curator: CuratorHandle, depth: int, side: str) -> float:
    """Probability of one specific (node, split) proposal when the node lies
    in the tree over `side`. Constant across chain states at fixed depth, so
    the proposal distribution is symmetric."""
    total_nodes = 2 * ((1 << depth) - 1)
    return 1.0 / (total_nodes * len(split_catalog(curator, side)))


def sample_tree_pair(curator: CuratorHandle, attribute: Attribute,
                     attribute_side: str, depth: int, eps_pair: float,
                     mc_iter: int, sigma: float, rng: RandomSource) -> TreePair:
    """Metropolis sampling of a tree-pair whose stationary distribution is the
    exponential mechanism over all same-depth pairs (pair score, sensitivity
    1). Charges exactly eps_pair as a single ledger entry."""
    if eps_pair <= 0:
        raise ValueError("pair budget must be positive")
    if mc_iter < 1:
        raise ValueError("need at least one iteration")
    n = curator.dataset.entity_count
    anchor_side = opposite(attribute_side)

    initial_target = make_initial_target(curator, attribute_side, attribute)
    anchor = random_split_tree(curator, anchor_side, depth, initial_target, rng)
    follower_target = target_from_leaves(curator, anchor)
    follower = random_split_tree(
        curator, attribute_side, depth, follower_target, rng
    )

    pair = TreePair(anchor, follower, initial_target, follower_target)
    score = score_pair(pair, n)

    anchor_view = curator.dataset.view(anchor_side)
    follower_view = curator.dataset.view(attribute_side)
    anchor_splits = split_catalog(curator, anchor_side)
    follower_splits = split_catalog(curator, attribute_side)
    n_internal = anchor.internal_count
    gen = rng.rng
    win = _WindowVar(STABILIZE_WINDOW)

    memo: dict[tuple, tuple[TreePair, float]] = {}
    key = (anchor.split_key(), follower.split_key())
    memo[key] = (pair, score)

    if n_internal > 0:
        for _ in range(mc_iter):
            if win.stabilized(sigma):
                break
            win.push(score)
            node = int(gen.integers(0, 2 * n_internal))
            in_anchor = node < n_internal
            if in_anchor:
                sp = anchor_splits[int(gen.integers(0, len(anchor_splits)))]
                new_key = (
                    key[0][:node] + ((sp.attr_idx, sp.test),) + key[0][node + 1:],
                    key[1],
                )
            else:
                node -= n_internal
                sp = follower_splits[int(gen.integers(0, len(follower_splits)))]
                new_key = (
                    key[0],
                    key[1][:node] + ((sp.attr_idx, sp.test),) + key[1][node + 1:],
                )
            hit = memo.get(new_key)
            if hit is None:
                if in_anchor:
                    cand_anchor = replace_node(
                        pair.anchor, node, sp, anchor_view, initial_target
                    )
                    cand_target = target_from_leaves(curator, cand_anchor)
                    cand_follower = DecisionTree(
                        attribute_side, depth, pair.follower.splits
                    )
                    cand_follower.compute_stats(follower_view, cand_target)
                    cand = TreePair(
                        cand_anchor, cand_follower, initial_target, cand_target
                    )
                else:
                    cand_follower = replace_node(
                        pair.follower, node, sp, follower_view,
                        pair.follower_target,
                    )
                    cand = TreePair(
                        pair.anchor, cand_follower, initial_target,
                        pair.follower_target,
                    )
                hit = (cand, score_pair(cand, n))
                if len(memo) < 65536:
                    memo[new_key] = hit
            cand, cand_score = hit
            if mh_accept(score, cand_score, eps_pair, PAIR_SCORE_SENSITIVITY, rng):
                pair, key, score = cand, new_key, cand_score

    curator.accountant.charge("treepair-mcmc", eps_pair)
    return pair

"""Fixed-depth binary decision trees and the two single-tree DP builders.

Trees are full binary trees of depth d stored in heap order: internal nodes
occupy indices 0 .. 2^d-2 (children of i at 2i+1 / 2i+2, pass side first),
leaves are indexed 0 .. 2^d-1. Degenerate splits are allowed, so leaves may
be empty. Entities that hit a missing split attribute are dropped from the
leaf counts entirely.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .data import SplitPoint, View
from .privacy import CuratorHandle, RandomSource, exp_mech_select, mh_accept
from .target import TargetVariable

GINI_SENSITIVITY = 2.0
STABILIZE_WINDOW = 500


class DecisionTree:
    def __init__(self, side: str, depth: int, splits: list[SplitPoint]):
        if depth < 0:
            raise ValueError("depth must be nonnegative")
        if len(splits) != (1 << depth) - 1:
            raise ValueError("full binary tree of depth d needs 2^d-1 splits")
        self.side = side
        self.depth = depth
        self.splits = list(splits)
        self.leaf_class_counts: np.ndarray | None = None
        self.leaf_counts: np.ndarray | None = None
        self._route_cache: np.ndarray | None = None

    @property
    def leaf_count(self) -> int:
        return 1 << self.depth

    @property
    def internal_count(self) -> int:
        return (1 << self.depth) - 1

    def route(self, view: View) -> np.ndarray:
        """Leaf index per entity; -1 where a missing split attribute was hit."""
        if self._route_cache is not None:
            return self._route_cache
        n = view.entity_count
        pos = np.zeros(n, dtype=np.int64)
        for i, sp in enumerate(self.splits):
            sel = pos == i
            if not sel.any():
                continue
            passed, missing = sp.evaluate(view)
            nxt = np.where(passed, 2 * i + 1, 2 * i + 2)
            nxt = np.where(missing, -1, nxt)
            pos = np.where(sel, nxt, pos)
        leaf = np.where(pos >= 0, pos - self.internal_count, -1)
        self._route_cache = leaf
        return leaf

    def compute_stats(self, view: View, target: TargetVariable) -> None:
        leaf = self.route(view)
        routed = leaf >= 0
        c = target.class_count
        flat = leaf[routed] * c + target.labels[routed]
        counts = np.bincount(flat, minlength=self.leaf_count * c)
        self.leaf_class_counts = counts.reshape(self.leaf_count, c).astype(np.float64)
        self.leaf_counts = self.leaf_class_counts.sum(axis=1)

    def split_key(self) -> tuple:
        return tuple((sp.attr_idx, sp.test) for sp in self.splits)

    def leaf_path(self, leaf_index: int) -> list[tuple[SplitPoint, bool]]:
        """(split, passed) pairs along the root-to-leaf path."""
        pos = leaf_index + self.internal_count
        path = []
        while pos > 0:
            parent = (pos - 1) // 2
            path.append((self.splits[parent], pos == 2 * parent + 1))
            pos = parent
        path.reverse()
        return path

    def describe(self, view: View) -> str:
        """Nested textual form of the split tests (no leaf statistics)."""
        def rec(pos: int) -> str:
            if pos >= self.internal_count:
                return f"leaf{pos - self.internal_count}"
            sp = self.splits[pos]
            return (f"[{sp.describe(view)} "
                    f"yes:{rec(2 * pos + 1)} no:{rec(2 * pos + 2)}]")
        return rec(0)


def quality_g1(tree: DecisionTree) -> float:
    """Negated total Gini impurity over the leaves; in [-tau, 0], with 0 for
    pure (or empty) leaves."""
    cc = tree.leaf_class_counts
    counts = tree.leaf_counts
    nz = counts > 0
    if not nz.any():
        return 0.0
    sq = (cc[nz] ** 2).sum(axis=1) / counts[nz]
    return float((sq - counts[nz]).sum())


def quality_norm(tree: DecisionTree, total_entities: int) -> float:
    """Size-normalized purity in [0, 1]; 1 iff every nonempty leaf is pure
    and no entity was dropped by missing values."""
    if total_entities <= 0:
        return 0.0
    cc = tree.leaf_class_counts
    counts = tree.leaf_counts
    nz = counts > 0
    if not nz.any():
        return 0.0
    sq = (cc[nz] ** 2).sum(axis=1) / counts[nz]
    return float(sq.sum() / total_entities)


def split_catalog(curator: CuratorHandle, side: str) -> list[SplitPoint]:
    """Cached list of all split points of one view."""
    cache = getattr(curator, "_split_catalog", None)
    if cache is None:
        cache = {}
        curator._split_catalog = cache
    if side not in cache:
        from .data import enumerate_split_points

        cache[side] = enumerate_split_points(curator.dataset.view(side), side)
    return cache[side]


def random_split_tree(curator: CuratorHandle, side: str, depth: int,
                      target: TargetVariable, rng: RandomSource) -> DecisionTree:
    """Full binary tree with uniformly random splits, stats precomputed."""
    splits = split_catalog(curator, side)
    if depth > 0 and not splits:
        raise ValueError(f"view {side} has no split points")
    n_internal = (1 << depth) - 1
    picks = rng.rng.integers(0, len(splits), size=n_internal) if n_internal else []
    tree = DecisionTree(side, depth, [splits[i] for i in picks])
    tree.compute_stats(curator.dataset.view(side), target)
    return tree


def replace_node(tree: DecisionTree, node_index: int, new_split: SplitPoint,
                 view: View, target: TargetVariable) -> DecisionTree:
    """New tree sharing every other split, with stats recomputed. The fixed
    full-binary shape means the subtree below the node is kept as-is."""
    if not (0 <= node_index < tree.internal_count):
        raise IndexError(f"node {node_index} is not an internal node")
    splits = list(tree.splits)
    splits[node_index] = new_split
    out = DecisionTree(tree.side, tree.depth, splits)
    out.compute_stats(view, target)
    return out


def stabilized_var(history, window: int = STABILIZE_WINDOW,
                   threshold: float = 0.0) -> bool:
    """True iff the population variance of the trailing window is below the
    threshold (and the history is long enough to fill the window)."""
    if len(history) < window:
        return False
    tail = np.asarray(history[-window:], dtype=np.float64)
    return bool(tail.var() < threshold)


class _WindowVar:
    """Streaming population variance over a trailing window."""

    def __init__(self, window: int):
        self.window = window
        self.values: deque[float] = deque()
        self.s1 = 0.0
        self.s2 = 0.0

    def push(self, x: float) -> None:
        self.values.append(x)
        self.s1 += x
        self.s2 += x * x
        if len(self.values) > self.window:
            old = self.values.popleft()
            self.s1 -= old
            self.s2 -= old * old

    def stabilized(self, threshold: float) -> bool:
        k = len(self.values)
        if k < self.window:
            return False
        mean = self.s1 / k
        var = max(self.s2 / k - mean * mean, 0.0)
        return var < threshold


def _gini_quality_of_partition(pass_cc: np.ndarray, node_cc: np.ndarray) -> np.ndarray:
    """Quality of binary splits given per-split pass class counts (S x C) and
    the node's class counts (C,). Higher is better; equals the negated summed
    child impurity (sensitivity 2)."""
    fail_cc = node_cc[None, :] - pass_cc
    p_tot = pass_cc.sum(axis=1)
    f_tot = fail_cc.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        p_sq = np.where(p_tot > 0, (pass_cc ** 2).sum(axis=1) / np.maximum(p_tot, 1), 0.0)
        f_sq = np.where(f_tot > 0, (fail_cc ** 2).sum(axis=1) / np.maximum(f_tot, 1), 0.0)
    return (p_sq - p_tot) + (f_sq - f_tot)


def gini_split_qualities(view: View, subset: np.ndarray, target: TargetVariable,
                         splits: list[SplitPoint]) -> np.ndarray:
    """Gini quality of every candidate split, restricted to the entities in
    `subset` (boolean mask). Missing-valued entities are dropped per split."""
    c = target.class_count
    labels = target.labels
    out = np.empty(len(splits), dtype=np.float64)

    by_attr: dict[int, list[int]] = {}
    for k, sp in enumerate(splits):
        by_attr.setdefault(sp.attr_idx, []).append(k)

    for attr_idx, idxs in by_attr.items():
        col = view.columns[attr_idx]
        missing = view.missing_mask(attr_idx)
        present = subset & ~missing
        node_cc = np.bincount(labels[present], minlength=c).astype(np.float64)
        kind = splits[idxs[0]].test[0]
        if kind == "le":
            vals = col[present]
            labs = labels[present]
            order = np.argsort(vals, kind="stable")
            sorted_vals = vals[order]
            onehot = np.zeros((vals.shape[0] + 1, c))
            if vals.shape[0]:
                np.add.at(onehot, (np.arange(1, vals.shape[0] + 1), labs[order]), 1.0)
            cum = np.cumsum(onehot, axis=0)
            thresholds = np.array([splits[k].test[1] for k in idxs])
            bounds = np.searchsorted(sorted_vals, thresholds, side="right")
            out[idxs] = _gini_quality_of_partition(cum[bounds], node_cc)
        else:
            for k in idxs:
                passed, _ = splits[k].evaluate(view)
                pass_cc = np.bincount(
                    labels[present & passed], minlength=c
                ).astype(np.float64)
                out[k] = _gini_quality_of_partition(pass_cc[None, :], node_cc)[0]
    return out


def create_dt_expmech(curator: CuratorHandle, side: str, target: TargetVariable,
                      depth: int, eps_tree: float, rng: RandomSource) -> DecisionTree:
    """Level-wise DP tree induction: each level picks splits through the
    exponential mechanism with budget eps_tree/d; siblings share the level
    budget by parallel composition. Charges exactly eps_tree in d entries."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if eps_tree <= 0:
        raise ValueError("tree budget must be positive")
    view = curator.dataset.view(side)
    splits = split_catalog(curator, side)
    if not splits:
        raise ValueError(f"view {side} has no split points")
    eps_level = eps_tree / depth

    chosen: list[SplitPoint | None] = [None] * ((1 << depth) - 1)
    subsets = {0: np.ones(view.entity_count, dtype=bool)}
    for level in range(depth):
        for node in range((1 << level) - 1, (1 << (level + 1)) - 1):
            subset = subsets[node]
            qualities = gini_split_qualities(view, subset, target, splits)
            pick = exp_mech_select(
                splits, qualities, eps_level, GINI_SENSITIVITY, rng,
                no_noise=curator.no_noise,
            )
            sp = splits[pick]
            chosen[node] = sp
            passed, missing = sp.evaluate(view)
            subsets[2 * node + 1] = subset & passed
            subsets[2 * node + 2] = subset & ~passed & ~missing
        curator.accountant.charge(f"tree-expmech-level{level}", eps_level)

    tree = DecisionTree(side, depth, chosen)
    tree.compute_stats(view, target)
    return tree


def create_dt_mcmc(curator: CuratorHandle, side: str, target: TargetVariable,
                   depth: int, eps_tree: float, mc_iter: int, sigma: float,
                   rng: RandomSource) -> DecisionTree:
    """DP tree sampling: a Metropolis walk over same-shape trees whose
    stationary distribution matches the exponential mechanism with quality
    g1 (sensitivity 2). Uses the whole eps_tree; single ledger entry."""
    if eps_tree <= 0:
        raise ValueError("tree budget must be positive")
    if mc_iter < 1:
        raise ValueError("need at least one iteration")
    view = curator.dataset.view(side)
    splits = split_catalog(curator, side)
    tree = random_split_tree(curator, side, depth, target, rng)
    gen = rng.rng

    # Repeated states are common on small split spaces; memoize state + score.
    score = quality_g1(tree)
    memo: dict[tuple, tuple[DecisionTree, float]] = {}
    key = tree.split_key()
    memo[key] = (tree, score)
    win = _WindowVar(STABILIZE_WINDOW)

    n_internal = tree.internal_count
    if n_internal > 0:
        for _ in range(mc_iter):
            if win.stabilized(sigma):
                break
            win.push(score)
            node = int(gen.integers(0, n_internal))
            pick = int(gen.integers(0, len(splits)))
            sp = splits[pick]
            new_key = key[:node] + ((sp.attr_idx, sp.test),) + key[node + 1:]
            hit = memo.get(new_key)
            if hit is None:
                cand = replace_node(tree, node, sp, view, target)
                hit = (cand, quality_g1(cand))
                if len(memo) < 65536:
                    memo[new_key] = hit
            cand, new_score = hit
            if mh_accept(score, new_score, eps_tree, GINI_SENSITIVITY, rng):
                tree, key, score = cand, new_key, new_score

    curator.accountant.charge("tree-mcmc", eps_tree)
    return tree

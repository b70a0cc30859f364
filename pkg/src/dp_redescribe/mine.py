"""Mining drivers: the alternating single-tree algorithms and the joint
tree-pair sampler, plus the budget split between their building blocks.

Each driver spends exactly the configured epsilon: the alternation scheme
divides it into InTr*(2*RMIter+1) equal units (one per tree construction and
one per extraction), the tree-pair scheme into InTr trials split omega /
(1-omega) between sampling and extraction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import LEFT, RIGHT, Attribute, opposite
from .privacy import CuratorHandle, RandomSource
from .redescribe import Constraints, Redescription, extract_reds
from .target import make_initial_target, target_from_leaves
from .tree import DecisionTree, create_dt_expmech, create_dt_mcmc
from .treepair import sample_tree_pair

ALT_EXPM = "alt-expm"
ALT_MCMC = "alt-mcmc"
TREEPAIR = "treepair"
ALGORITHMS = (ALT_EXPM, ALT_MCMC, TREEPAIR)


@dataclass
class MinerConfig:
    algorithm: str
    epsilon: float
    intr: int = 1
    rmiter: int = 1
    mciter: int = 10000
    sigma: float = 0.005
    depth: int = 4
    omega: float = 0.1
    constraints: Constraints = field(default_factory=Constraints)
    seed: int = 0
    prune_threshold: float = 0.0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.intr < 1:
            raise ValueError("need at least one initial trial")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.algorithm != TREEPAIR and self.rmiter < 1:
            raise ValueError("alternation algorithms need rmiter >= 1")
        if self.algorithm == TREEPAIR and not (0.0 < self.omega < 1.0):
            raise ValueError("omega must lie strictly between 0 and 1")


def _initial_attributes(curator: CuratorHandle, count: int,
                        rng: RandomSource) -> list[tuple[str, Attribute]]:
    """Server-side draw of initial attributes from the union of both views,
    without replacement while distinct usable attributes remain."""
    pool: list[tuple[str, Attribute]] = []
    for side in (LEFT, RIGHT):
        view = curator.dataset.view(side)
        for j, attr in enumerate(view.attributes):
            if not np.all(view.missing_mask(j)):
                pool.append((side, attr))
    if not pool:
        raise ValueError("no usable attribute in either view")
    gen = rng.rng
    order = gen.permutation(len(pool))
    picks = [pool[i] for i in order[:count]]
    while len(picks) < count:
        picks.append(pool[int(gen.integers(0, len(pool)))])
    return picks


def _build_tree(curator: CuratorHandle, algorithm: str, side: str, target,
                config: MinerConfig, eps_tree: float,
                rng: RandomSource) -> DecisionTree:
    if algorithm == ALT_EXPM:
        return create_dt_expmech(curator, side, target, config.depth,
                                 eps_tree, rng)
    return create_dt_mcmc(curator, side, target, config.depth, eps_tree,
                          config.mciter, config.sigma, rng)


def _merge(into: list[Redescription], seen: set, reds: list[Redescription]):
    for red in reds:
        if red.key() not in seen:
            seen.add(red.key())
            into.append(red)


def create_reds_alt(curator: CuratorHandle, config: MinerConfig,
                    rng: RandomSource | None = None) -> list[Redescription]:
    """Alternating scheme: per trial, grow a tree against a random initial
    attribute on the opposite view, then RMIter times re-target from the
    latest tree's leaves, grow the other side's tree, and extract. Unit
    budget epsilon/(InTr*(2*RMIter+1))."""
    if config.algorithm not in (ALT_EXPM, ALT_MCMC):
        raise ValueError("create_reds_alt handles the alternation algorithms")
    if rng is None:
        rng = RandomSource(config.seed)
    eps_unit = config.epsilon / (config.intr * (2 * config.rmiter + 1))
    picks = _initial_attributes(curator, config.intr, rng)

    results: list[Redescription] = []
    seen: set = set()
    for trial, (attr_side, attr) in enumerate(picks):
        trial_rng = rng.substream(trial)
        target = make_initial_target(curator, attr_side, attr)
        side = opposite(attr_side)
        tree = _build_tree(curator, config.algorithm, side, target, config,
                           eps_unit, trial_rng.substream(0))
        trees = {side: tree}
        for it in range(config.rmiter):
            target = target_from_leaves(curator, tree)
            side = opposite(side)
            tree = _build_tree(curator, config.algorithm, side, target,
                               config, eps_unit, trial_rng.substream(2 * it + 1))
            trees[side] = tree
            reds = extract_reds(
                curator, trees[LEFT], trees[RIGHT], eps_unit,
                config.constraints, trial_rng.substream(2 * it + 2),
                label=f"trial{trial}-alt{it}",
            )
            _merge(results, seen, reds)
    return results


def mine_treepair(curator: CuratorHandle, config: MinerConfig,
                  rng: RandomSource | None = None) -> list[Redescription]:
    """Joint scheme: per trial, MCMC-sample a matched tree-pair with
    omega*epsilon/InTr, then extract with the remaining (1-omega) share."""
    if config.algorithm != TREEPAIR:
        raise ValueError("mine_treepair handles the treepair algorithm")
    if rng is None:
        rng = RandomSource(config.seed)
    eps_trial = config.epsilon / config.intr
    eps_sample = config.omega * eps_trial
    eps_extract = eps_trial - eps_sample
    picks = _initial_attributes(curator, config.intr, rng)

    results: list[Redescription] = []
    seen: set = set()
    for trial, (attr_side, attr) in enumerate(picks):
        trial_rng = rng.substream(trial)
        pair = sample_tree_pair(
            curator, attr, attr_side, config.depth, eps_sample,
            config.mciter, config.sigma, trial_rng.substream(0),
        )
        reds = extract_reds(
            curator, pair.left, pair.right, eps_extract, config.constraints,
            trial_rng.substream(1), label=f"trial{trial}-pair",
        )
        _merge(results, seen, reds)
    return results


def mine(curator: CuratorHandle, config: MinerConfig,
         rng: RandomSource | None = None) -> list[Redescription]:
    if config.algorithm == TREEPAIR:
        return mine_treepair(curator, config, rng)
    return create_reds_alt(curator, config, rng)

"""Differentially private redescription mining over two-view tabular data."""

from .data import (
    Attribute,
    Dataset,
    LEFT,
    ParseError,
    RIGHT,
    SchemaError,
    SplitPoint,
    View,
    enumerate_split_points,
    load_view,
    opposite,
)
from .mine import ALGORITHMS, MinerConfig, create_reds_alt, mine, mine_treepair
from .privacy import (
    BudgetAccountant,
    BudgetError,
    CuratorHandle,
    RandomSource,
    exp_mech_probabilities,
    exp_mech_select,
    laplace_noise,
    mh_accept,
    noisy_count,
)
from .queries import Clause, Literal, Query, QueryParseError, leaf_query, parse_query
from .redescribe import (
    Constraints,
    NoisyCountTable,
    Redescription,
    combined_support,
    extract_reds,
    jaccard,
    noisy_leaf_tables,
    prune,
    pvalue,
    sat,
)
from .target import (
    DegenerateAttributeError,
    TargetVariable,
    freedman_diaconis_bins,
    make_initial_target,
    target_from_leaves,
)
from .tree import (
    DecisionTree,
    create_dt_expmech,
    create_dt_mcmc,
    quality_g1,
    quality_norm,
    split_catalog,
    stabilized_var,
)
from .treepair import TreePair, sample_tree_pair, score_pair

__version__ = "0.1.0"

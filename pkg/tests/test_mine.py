import numpy as np
import pytest

from dp_redescribe import (
    BudgetAccountant,
    Constraints,
    CuratorHandle,
    Dataset,
    MinerConfig,
    RandomSource,
    create_reds_alt,
    mine,
    mine_treepair,
)

from helpers import bool_view, random_bool_views


def planted_dataset(seed=0, n=400):
    rng = np.random.default_rng(seed)
    z = rng.integers(0, 2, size=n)
    noise = lambda: rng.integers(0, 2, size=n).tolist()
    left = bool_view({"a": z.tolist(), "b": noise(), "e": noise()})
    right = bool_view({"c": z.tolist(), "d": noise(), "f": noise()})
    return Dataset(left=left, right=right)


def run_config(**kw):
    base = dict(algorithm="alt-expm", epsilon=1.0, intr=1, rmiter=1,
                mciter=300, sigma=0.0, depth=2, omega=0.1,
                constraints=Constraints(min_support=5), seed=0)
    base.update(kw)
    return MinerConfig(**base)


@pytest.mark.parametrize("algorithm,intr,rmiter", [
    ("alt-expm", 1, 1), ("alt-expm", 2, 3),
    ("alt-mcmc", 1, 2), ("alt-mcmc", 3, 1),
])
def test_alternation_budget_exact(algorithm, intr, rmiter):
    dataset = planted_dataset()
    acc = BudgetAccountant(total=1.0)
    curator = CuratorHandle(dataset, acc)
    config = run_config(algorithm=algorithm, intr=intr, rmiter=rmiter)
    create_reds_alt(curator, config)
    assert acc.spent == pytest.approx(1.0, abs=1e-9)
    unit = 1.0 / (intr * (2 * rmiter + 1))
    extract_total = sum(e for lbl, e in acc.ledger if lbl.startswith("extract"))
    assert extract_total == pytest.approx(intr * rmiter * unit, abs=1e-9)


@pytest.mark.parametrize("omega", [0.1, 0.5])
def test_treepair_budget_split(omega):
    dataset = planted_dataset()
    acc = BudgetAccountant(total=1.0)
    curator = CuratorHandle(dataset, acc)
    config = run_config(algorithm="treepair", intr=4, omega=omega, mciter=100)
    mine_treepair(curator, config)
    assert acc.spent == pytest.approx(1.0, abs=1e-9)
    sampling = [e for lbl, e in acc.ledger if lbl == "treepair-mcmc"]
    assert sampling == pytest.approx([omega * 0.25] * 4)


def test_no_noise_recovers_planted_pair():
    dataset = planted_dataset()
    curator = CuratorHandle(dataset, BudgetAccountant(total=1.0),
                            no_noise=True)
    config = run_config(algorithm="alt-expm", intr=2, rmiter=1)
    reds = create_reds_alt(curator, config)
    assert any(r.jaccard == pytest.approx(1.0) for r in reds)


def test_fixed_seed_bit_identical():
    def run():
        dataset = planted_dataset()
        curator = CuratorHandle(dataset, BudgetAccountant(total=1.0))
        return mine(curator, run_config(algorithm="alt-mcmc", intr=2,
                                        seed=17))

    a, b = run(), run()
    assert [(r.key(), r.supp_inter, r.jaccard, r.pvalue) for r in a] == \
           [(r.key(), r.supp_inter, r.jaccard, r.pvalue) for r in b]


def test_results_deduplicated():
    dataset = planted_dataset()
    curator = CuratorHandle(dataset, BudgetAccountant(total=2.0),
                            no_noise=True)
    config = run_config(algorithm="alt-expm", epsilon=2.0, intr=3, rmiter=2)
    reds = create_reds_alt(curator, config)
    keys = [r.key() for r in reds]
    assert len(keys) == len(set(keys))


def test_alternation_trees_stay_in_their_view():
    # queries on each side must only mention that side's attribute names
    dataset = planted_dataset()
    curator = CuratorHandle(dataset, BudgetAccountant(total=1.0),
                            no_noise=True)
    reds = mine(curator, run_config(algorithm="alt-expm", intr=2, rmiter=2))
    left_names = {a.name for a in dataset.left.attributes}
    right_names = {a.name for a in dataset.right.attributes}
    for red in reds:
        for cl in red.query_left.clauses:
            assert {lit.name for lit in cl.literals} <= left_names
        for cl in red.query_right.clauses:
            assert {lit.name for lit in cl.literals} <= right_names


def test_config_validation():
    with pytest.raises(ValueError):
        MinerConfig(algorithm="bogus", epsilon=1.0)
    with pytest.raises(ValueError):
        MinerConfig(algorithm="alt-expm", epsilon=0.0)
    with pytest.raises(ValueError):
        MinerConfig(algorithm="treepair", epsilon=1.0, omega=0.0)
    with pytest.raises(ValueError):
        MinerConfig(algorithm="alt-expm", epsilon=1.0, rmiter=0)

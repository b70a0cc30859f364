"""Command-line front end: mining runs, the non-private evaluation harness,
summary statistics, and post-hoc pruning.

Exit codes: 0 success, 2 usage/config error, 3 data parse failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, replace

import numpy as np
from scipy import stats as sstats

from .data import Dataset, ParseError, SchemaError, load_view
from .mine import ALGORITHMS, MinerConfig, mine
from .privacy import BudgetAccountant, CuratorHandle, RandomSource
from .queries import QueryParseError, parse_query
from .redescribe import Constraints, Redescription, jaccard, prune, pvalue

SEED_ENV = "DP_REDESCRIBE_SEED"

RESULT_COLUMNS = [
    "id", "run", "query_left", "query_right", "supp_left", "supp_right",
    "supp_inter", "dsize", "jaccard", "pvalue", "label",
]

_RESULT_HEADER_COMMENT = """\
# Redescription mining results. Columns:
#   id          row number within this file
#   run         index of the mining run that produced the row
#   query_left  left-view query (grammar: clause('|'clause)*, clause ['!']'('lit('&'lit)*')')
#   query_right right-view query, same grammar
#   supp_left   noisy support of the left query
#   supp_right  noisy support of the right query
#   supp_inter  noisy support of the intersection
#   dsize       noisy dataset-size estimate used for constraints
#   jaccard     noisy Jaccard index
#   pvalue      noisy binomial-tail p-value
#   label       budget trace label of the producing step
"""

_CONFIG_KEYS = {
    "algorithm", "epsilon", "intr", "rmiter", "mciter", "sigma", "depth",
    "omega", "seed", "prune_threshold", "max_pvalue", "min_jaccard",
    "min_support", "max_support_fraction",
}
_INT_KEYS = {"intr", "rmiter", "mciter", "depth", "seed"}
_FLOAT_KEYS = {"epsilon", "sigma", "omega", "prune_threshold", "max_pvalue",
               "min_jaccard", "min_support", "max_support_fraction"}


class UsageError(ValueError):
    pass


def load_config_file(path: str) -> dict:
    """Flat `key = value` text; blank lines and #-comments ignored."""
    out: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            if key in _INT_KEYS:
                out[key] = int(value)
            elif key in _FLOAT_KEYS:
                out[key] = float(value)
            else:
                out[key] = value
    return out


def build_miner_config(args) -> MinerConfig:
    """Merge config file values with CLI flags (flags win), then validate."""
    cfg = load_config_file(args.config) if args.config else {}
    flag_map = {
        "algorithm": args.algo, "epsilon": args.epsilon, "intr": args.intr,
        "rmiter": args.rmiter, "mciter": args.mciter, "sigma": args.sigma,
        "depth": args.depth, "omega": args.omega, "seed": args.seed,
        "prune_threshold": args.prune_threshold,
    }
    for key, value in flag_map.items():
        if value is not None:
            cfg[key] = value
    if "seed" not in cfg:
        env = os.environ.get(SEED_ENV)
        cfg["seed"] = int(env) if env else 0
    if "algorithm" not in cfg:
        raise UsageError("missing --algo (or algorithm in config)")
    if "epsilon" not in cfg:
        raise UsageError("missing --epsilon (or epsilon in config)")
    cons = Constraints(
        max_pvalue=cfg.pop("max_pvalue", 0.01),
        min_jaccard=cfg.pop("min_jaccard", 0.1),
        min_support=cfg.pop("min_support", 10.0),
        max_support_fraction=cfg.pop("max_support_fraction", 0.8),
    )
    try:
        return MinerConfig(constraints=cons, **cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def load_dataset(left_path: str, right_path: str) -> Dataset:
    def fmt(path):
        return "arff" if path.lower().endswith(".arff") else "csv"

    return Dataset(
        left=load_view(left_path, fmt(left_path)),
        right=load_view(right_path, fmt(right_path)),
    )


def write_results(path: str, rows: list[tuple[int, Redescription]]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(_RESULT_HEADER_COMMENT)
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for i, (run, red) in enumerate(rows):
            writer.writerow([
                i, run, red.query_left.serialize(), red.query_right.serialize(),
                repr(red.supp_left), repr(red.supp_right),
                repr(red.supp_inter), repr(red.dsize),
                repr(red.jaccard), repr(red.pvalue), red.label,
            ])


def read_results(path: str) -> list[tuple[int, Redescription]]:
    rows: list[tuple[int, Redescription]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(ln for ln in fh if not ln.startswith("#"))
        header = next(reader, None)
        if header != RESULT_COLUMNS:
            raise ParseError(f"{path}: unexpected result columns {header!r}")
        for rec in reader:
            if len(rec) != len(RESULT_COLUMNS):
                raise ParseError(f"{path}: malformed result row {rec!r}")
            red = Redescription(
                query_left=parse_query(rec[2], "L"),
                query_right=parse_query(rec[3], "R"),
                supp_left=float(rec[4]), supp_right=float(rec[5]),
                supp_inter=float(rec[6]), dsize=float(rec[7]),
                jaccard=float(rec[8]), pvalue=float(rec[9]), label=rec[10],
            )
            rows.append((int(rec[1]), red))
    return rows


def cmd_mine(args) -> int:
    config = build_miner_config(args)
    dataset = load_dataset(args.left, args.right)
    runs = args.runs if args.runs else 1
    budget_each = args.budget_each if args.budget_each else config.epsilon

    os.makedirs(args.out, exist_ok=True)
    all_rows: list[tuple[int, Redescription]] = []
    ledgers = []
    wall0, cpu0 = time.perf_counter(), time.process_time()
    for run in range(runs):
        accountant = BudgetAccountant(total=budget_each)
        curator = CuratorHandle(dataset, accountant, no_noise=args.no_noise)
        run_config = replace(config, epsilon=budget_each,
                             seed=config.seed + run)
        reds = mine(curator, run_config, RandomSource(run_config.seed))
        if config.prune_threshold > 0:
            reds = prune(reds, config.prune_threshold)
        all_rows.extend((run, red) for red in reds)
        ledgers.append({
            "run": run, "seed": run_config.seed, "spent": accountant.spent,
            "total": accountant.total, "entries": accountant.ledger_rows(),
        })
    wall, cpu = time.perf_counter() - wall0, time.process_time() - cpu0

    csv_path = os.path.join(args.out, "redescriptions.csv")
    write_results(csv_path, all_rows)
    report = {
        "config": _config_dict(config),
        "runs": runs,
        "budget_each": budget_each,
        "redescription_count": len(all_rows),
        "privacy": "NON-PRIVATE" if args.no_noise else "PRIVATE",
        "ledgers": ledgers,
        "wall_seconds": wall,
        "cpu_seconds": cpu,
    }
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"wrote {len(all_rows)} redescriptions to {csv_path}")
    return 0


def _config_dict(config: MinerConfig) -> dict:
    d = asdict(config)
    d["constraints"] = asdict(config.constraints)
    return d


EVAL_COLUMNS = [
    "id", "run", "query_left", "query_right", "noisy_jaccard",
    "true_supp_left", "true_supp_right", "true_supp_inter", "true_jaccard",
    "true_pvalue", "jaccard_gap", "significant", "error",
]


def cmd_evaluate(args) -> int:
    """Non-private oracle: recompute every statistic with full data access.
    Never touches a budget accountant."""
    dataset = load_dataset(args.left, args.right)
    rows = read_results(args.results)
    n = dataset.entity_count
    out_rows = []
    for i, (run, red) in enumerate(rows):
        rec = {"id": i, "run": run,
               "query_left": red.query_left.serialize(),
               "query_right": red.query_right.serialize(),
               "noisy_jaccard": repr(red.jaccard)}
        try:
            mask_l = red.query_left.evaluate(dataset.left)
            mask_r = red.query_right.evaluate(dataset.right)
        except KeyError as exc:
            rec["error"] = str(exc)
            out_rows.append(rec)
            continue
        s_l = int(mask_l.sum())
        s_r = int(mask_r.sum())
        inter = int((mask_l & mask_r).sum())
        true_j = jaccard(inter, s_l, s_r)
        true_p = pvalue(s_l, s_r, inter, float(n))
        rec.update({
            "true_supp_left": s_l, "true_supp_right": s_r,
            "true_supp_inter": inter, "true_jaccard": repr(true_j),
            "true_pvalue": repr(true_p),
            "jaccard_gap": repr(abs(red.jaccard - true_j)),
            "significant": int(true_p <= 0.01), "error": "",
        })
        out_rows.append(rec)
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=EVAL_COLUMNS, restval="")
        writer.writeheader()
        writer.writerows(out_rows)
    print(f"evaluated {len(out_rows)} redescriptions into {args.out}")
    return 0


def cmd_stats(args) -> int:
    with open(args.eval, newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if not r.get("error")]
    if len(rows) < 3:
        print("need at least 3 evaluated redescriptions for summary stats",
              file=sys.stderr)
        return 1
    noisy = np.array([float(r["noisy_jaccard"]) for r in rows])
    true = np.array([float(r["true_jaccard"]) for r in rows])
    rho = float(sstats.spearmanr(noisy, true).statistic)
    pct_sig = 100.0 * sum(int(r["significant"]) for r in rows) / len(rows)
    hist, _ = np.histogram(true, bins=np.linspace(0.0, 1.0, 11))
    print(f"rows: {len(rows)}")
    print(f"spearman_rho: {rho:.4f}")
    print(f"pct_significant: {pct_sig:.1f}")
    for b, count in enumerate(hist):
        print(f"jaccard_bin [{b / 10:.1f},{(b + 1) / 10:.1f}): {count}")
    if args.scatter_out:
        with open(args.scatter_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["noisy_jaccard", "true_jaccard"])
            writer.writerows(zip(noisy.tolist(), true.tolist()))
        print(f"scatter data written to {args.scatter_out}")
    return 0


def cmd_prune(args) -> int:
    rows = read_results(args.results)
    kept = [(run, red) for run, red in rows
            if red.supp_inter >= args.threshold]
    write_results(args.out, kept)
    print(f"kept {len(kept)} of {len(rows)} redescriptions "
          f"(dropped {len(rows) - len(kept)})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dp-redescribe",
        description="Differentially private redescription mining.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mine = sub.add_parser("mine", help="run a mining algorithm")
    p_mine.add_argument("--algo", choices=ALGORITHMS)
    p_mine.add_argument("--epsilon", type=float)
    p_mine.add_argument("--intr", type=int)
    p_mine.add_argument("--rmiter", type=int)
    p_mine.add_argument("--mciter", type=int)
    p_mine.add_argument("--sigma", type=float)
    p_mine.add_argument("--depth", type=int)
    p_mine.add_argument("--omega", type=float)
    p_mine.add_argument("--seed", type=int)
    p_mine.add_argument("--no-noise", action="store_true",
                        help="disable noise (output is NOT private)")
    p_mine.add_argument("--config", help="flat key = value config file")
    p_mine.add_argument("--left", required=True)
    p_mine.add_argument("--right", required=True)
    p_mine.add_argument("--out", required=True)
    p_mine.add_argument("--runs", type=int)
    p_mine.add_argument("--budget-each", type=float)
    p_mine.add_argument("--prune-threshold", type=float)
    p_mine.set_defaults(func=cmd_mine)

    p_eval = sub.add_parser("evaluate",
                            help="recompute true statistics (non-private)")
    p_eval.add_argument("--results", required=True)
    p_eval.add_argument("--left", required=True)
    p_eval.add_argument("--right", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(func=cmd_evaluate)

    p_stats = sub.add_parser("stats", help="summarize an evaluation table")
    p_stats.add_argument("--eval", required=True)
    p_stats.add_argument("--scatter-out")
    p_stats.set_defaults(func=cmd_stats)

    p_prune = sub.add_parser("prune", help="filter results by noisy support")
    p_prune.add_argument("--results", required=True)
    p_prune.add_argument("--threshold", type=float, required=True)
    p_prune.add_argument("--out", required=True)
    p_prune.set_defaults(func=cmd_prune)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, SchemaError, QueryParseError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

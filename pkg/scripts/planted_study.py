"""Leave-one-task-out comparison of every strategy and ablation on planted bundles.

    python3 scripts/planted_study.py --seeds 0 1 2 --noise 0.005 0.02

Prints a stats table per (seed, noise) plus the mean overfit gap, i.e. test
regret minus the training-side estimate, for each strategy.
"""

import argparse
import time

import numpy as np

from zeroshot_portfolio.evaluation import STATS_COLUMNS, loo_cv, overfit_gap
from zeroshot_portfolio.mining import MiningOptions
from zeroshot_portfolio.planted import generate_planted

RUNS = [
    ("ours", "ours", {}),
    ("ours metric=mean", "ours", {"metric": "mean"}),
    ("ours no-early-stop", "ours", {"early_stopping": False}),
    ("per_task_best", "per_task_best", {}),
    ("greedy_mean", "greedy_mean", {}),
    ("single_best", "single_best", {}),
]


def study(n_tasks, n_configs, n_clusters, noise, seed, epsilon):
    bundle = generate_planted(n_tasks, n_configs, n_clusters, noise, seed)
    print(f"\nseed={seed} noise={noise} tasks={n_tasks} configs={n_configs} clusters={n_clusters}")
    print(f"{'':<20}" + "".join(f"{c:>9}" for c in STATS_COLUMNS) + f"{'gap':>10}{'size':>6}")
    for label, strategy, kw in RUNS:
        report = loo_cv(bundle, strategy, MiningOptions(epsilon=epsilon, **kw))
        gap = np.mean([g for _, g in overfit_gap(report)])
        size = np.mean([r.portfolio_size for r in report.per_task])
        stats = "".join(f"{getattr(report.stats, c):>9.4f}" for c in STATS_COLUMNS)
        print(f"{label:<20}{stats}{gap:>+10.4f}{size:>6.1f}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--tasks", type=int, default=50)
    p.add_argument("--configs", type=int, default=200)
    p.add_argument("--clusters", type=int, default=4)
    p.add_argument("--noise", type=float, nargs="+", default=[0.005, 0.02])
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--epsilon", type=float, default=0.01)
    args = p.parse_args()
    start = time.perf_counter()
    for seed in args.seeds:
        for noise in args.noise:
            study(args.tasks, args.configs, args.clusters, noise, seed, args.epsilon)
    print(f"\n{time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()

"""Portfolio size against the number of training tasks, ours vs per-task-best.

    python3 scripts/scalability.py --tasks 40 --seed 3 --out curve.csv

The greedy should plateau at the number of planted clusters while the
per-task union keeps growing with every task.
"""

import argparse
import csv

from zeroshot_portfolio.evaluation import scalability_curve
from zeroshot_portfolio.planted import generate_planted


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--tasks", type=int, default=40)
    p.add_argument("--configs", type=int, default=200)
    p.add_argument("--clusters", type=int, default=4)
    p.add_argument("--noise", type=float, default=0.005)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="optional CSV with n_tasks,ours,per_task_best")
    args = p.parse_args()

    bundle = generate_planted(args.tasks, args.configs, args.clusters, args.noise, args.seed)
    ours = scalability_curve(bundle, bundle.task_ids, "ours")
    ptb = scalability_curve(bundle, bundle.task_ids, "per_task_best")
    rows = [(n, a, b) for (n, a), (_, b) in zip(ours, ptb)]
    print(f"{'n_tasks':>8}{'ours':>6}{'per_task_best':>15}")
    for n, a, b in rows:
        print(f"{n:>8}{a:>6}{b:>15}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n_tasks", "ours", "per_task_best"])
            w.writerows(rows)


if __name__ == "__main__":
    main()

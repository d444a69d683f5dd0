"""Brute-force reference implementations.

Written with plain Python loops and no imports from the package, so that a
bug in the library cannot leak into the expected values.
"""

import csv
import math


def column_min(values, members, t):
    return min(values[s][t] for s in members)


def brute_ser(values, members, eps):
    if not members:
        return math.inf
    n_tasks = len(values[0])
    return math.fsum(max(column_min(values, members, t) - eps, 0.0) for t in range(n_tasks))


def brute_mean(values, members):
    n_tasks = len(values[0])
    return math.fsum(column_min(values, members, t) for t in range(n_tasks)) / n_tasks


def brute_greedy(values, eps, metric="ser", early_stopping=True, max_size=None, tol=1e-12):
    """Enumerate every one-config extension at each step; returns the member list."""
    n_configs = len(values)
    chosen, left, e = [], list(range(n_configs)), math.inf
    while left and e > eps and (max_size is None or len(chosen) < max_size):
        scored = {}
        for c in left:
            ext = chosen + [c]
            m = brute_mean(values, ext)
            scored[c] = (brute_ser(values, ext, eps) if metric == "ser" else m, m)
        best = min(s for s, _ in scored.values())
        if early_stopping and chosen and (1 - eps / 2) * e < best:
            break
        tied = [c for c in left if scored[c][0] <= best + tol * abs(best)]
        best_mean = min(scored[c][1] for c in tied)
        tied = [c for c in tied if scored[c][1] <= best_mean + tol * abs(best_mean)]
        pick = min(tied)
        chosen.append(pick)
        left.remove(pick)
        e = best
    return chosen


def brute_greedy_mean(values, size):
    chosen, left = [], list(range(len(values)))
    for _ in range(size):
        scores = [(brute_mean(values, chosen + [c]), c) for c in left]
        best = min(s for s, _ in scores)
        pick = min(c for s, c in scores if s <= best + 1e-12 * abs(best))
        chosen.append(pick)
        left.remove(pick)
    return chosen


def brute_column_argmin(values):
    out = []
    for t in range(len(values[0])):
        best = 0
        for c in range(1, len(values)):
            if values[c][t] < values[best][t]:
                best = c
        out.append(best)
    return out


def raw_matrix_from_csv(path, config_ids, task_ids):
    """Recompute the fold-mean matrix with worst-in-column imputation straight from a CSV."""
    sums = {}
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    for task_id, config_id, _fold, loss in rows:
        if loss == "" or loss.lower() == "nan":
            continue
        sums.setdefault((config_id, task_id), []).append(float(loss))
    matrix = []
    for c in config_ids:
        matrix.append([None] * len(task_ids))
        for j, t in enumerate(task_ids):
            losses = sums.get((c, t))
            if losses:
                matrix[-1][j] = math.fsum(losses) / len(losses)
    for j in range(len(task_ids)):
        worst = max(row[j] for row in matrix if row[j] is not None)
        for row in matrix:
            if row[j] is None:
                row[j] = worst
    return matrix


def percentile(sorted_values, q):
    """Linear interpolation at rank q * (n - 1)."""
    pos = q * (len(sorted_values) - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(sorted_values) - 1)
    frac = pos - lo
    return sorted_values[lo] + (sorted_values[hi] - sorted_values[lo]) * frac


def average_ranks(xs):
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    ranks = [0.0] * len(xs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(a, b):
    ra, rb = average_ranks(a), average_ranks(b)
    ma, mb = sum(ra) / len(ra), sum(rb) / len(rb)
    cov = sum((x - ma) * (y - mb) for x, y in zip(ra, rb))
    va = sum((x - ma) ** 2 for x in ra)
    vb = sum((y - mb) ** 2 for y in rb)
    return cov / math.sqrt(va * vb)


def population_std(xs):
    m = sum(xs) / len(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / len(xs))


def euclid(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))

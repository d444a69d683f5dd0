"""Portfolio mining over a regret matrix.

The main entry point is :func:`greedy_build`, a bottom-up greedy that adds one
configuration at a time minimising the sum-of-excess-regret (SER), with early
stopping. The baseline miners reproduce the per-task-best and greedy-mean
portfolio styles used for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .core import RegretMatrix
from .errors import EmptyMatrix, EmptyPortfolio, IndexOutOfRange, PortfolioError, SizeTooLarge

SER = "ser"
MEAN = "mean"
METRICS = (SER, MEAN)

TARGET_REACHED = "target_reached"
EARLY_STOPPED = "early_stopped"
EXHAUSTED = "exhausted"
SIZE_CAP = "size_cap"


@dataclass(frozen=True)
class MiningOptions:
    epsilon: float = 0.01
    metric: str = SER
    early_stopping: bool = True
    max_size: Optional[int] = None
    tie_tolerance: float = 1e-12

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.max_size is not None and self.max_size < 1:
            raise ValueError("max_size must be a positive integer")
        if not self.tie_tolerance >= 0:
            raise ValueError("tie_tolerance must be >= 0")


@dataclass(frozen=True)
class Step:
    config: int
    ser: float
    mean_regret: float


@dataclass(frozen=True)
class Portfolio:
    members: tuple[int, ...]
    trace: tuple[Step, ...] = ()
    epsilon: float = 0.01
    metric: str = SER
    stop_reason: Optional[str] = None

    def __len__(self):
        return len(self.members)


def _check_matrix(R: RegretMatrix) -> np.ndarray:
    values = R.values
    if values.size == 0:
        raise EmptyMatrix("regret matrix has no configs or no tasks")
    if np.isnan(values).any():
        raise ValueError("regret matrix contains NaN")
    return values


def _column_min(values: np.ndarray, members: Iterable[int]) -> np.ndarray:
    members = list(members)
    for m in members:
        if not 0 <= m < values.shape[0]:
            raise IndexOutOfRange(f"config index {m} outside [0, {values.shape[0]})")
    return values[members].min(axis=0)


def _ser_of(colmin: np.ndarray, epsilon: float) -> float:
    return math.fsum(np.maximum(colmin - epsilon, 0.0).tolist())


def _mean_of(colmin: np.ndarray) -> float:
    return math.fsum(colmin.tolist()) / colmin.shape[0]


def ser(R: RegretMatrix, members: Iterable[int], epsilon: float = 0.01) -> float:
    """Sum over tasks of the portfolio's regret in excess of ``epsilon``; inf when empty."""
    members = list(members)
    if not members:
        return math.inf
    return _ser_of(_column_min(R.values, members), epsilon)


def mean_regret(R: RegretMatrix, members: Iterable[int]) -> float:
    members = list(members)
    if not members:
        raise EmptyPortfolio("mean regret of an empty portfolio is undefined")
    return _mean_of(_column_min(R.values, members))


def _within(x: float, best: float, tol: float) -> bool:
    return x <= best + tol * abs(best)


def _pick(candidates, scores, means, tol) -> int:
    """Position of the winner: best score, then lower mean regret, then lower config index."""
    best = min(scores)
    tied = [k for k, s in enumerate(scores) if _within(s, best, tol)]
    if len(tied) > 1:
        best_mean = min(means[k] for k in tied)
        tied = [k for k in tied if _within(means[k], best_mean, tol)]
    return min(tied, key=lambda k: candidates[k])


def _extension_scores(values, current, candidates, epsilon):
    """SER and mean regret of every one-config extension of the current column minima."""
    ext = np.minimum(current[np.newaxis, :], values[candidates])
    sers = [_ser_of(row, epsilon) for row in ext]
    means = [_mean_of(row) for row in ext]
    return ext, sers, means


def _greedy(values, metric, epsilon, early_stopping, max_size, tol, stop_on_target):
    n_configs, n_tasks = values.shape
    remaining = list(range(n_configs))
    current = np.full(n_tasks, np.inf)
    members: list[int] = []
    trace: list[Step] = []
    e = math.inf
    while True:
        if stop_on_target and e <= epsilon:
            reason = TARGET_REACHED
            break
        if not remaining:
            reason = EXHAUSTED
            break
        if max_size is not None and len(members) >= max_size:
            reason = SIZE_CAP
            break
        ext, sers, means = _extension_scores(values, current, remaining, epsilon)
        scores = sers if metric == SER else means
        best = min(scores)
        if not math.isfinite(best):
            raise PortfolioError("every extension scores infinite; regret matrix is degenerate")
        # the first step always proceeds: e is infinite
        if early_stopping and members and (1 - epsilon / 2) * e < best:
            reason = EARLY_STOPPED
            break
        k = _pick(remaining, scores, means, tol)
        chosen = remaining.pop(k)
        members.append(chosen)
        current = ext[k]
        trace.append(Step(chosen, sers[k], means[k]))
        e = best
    return members, trace, reason


def greedy_build(R: RegretMatrix, opts: Optional[MiningOptions] = None) -> Portfolio:
    """Grow a portfolio greedily with early stopping.

    Each round scores every one-config extension of the current set by SER
    (or by mean regret when ``opts.metric == "mean"``). The round's best score
    becomes the running error ``e``; the loop ends when ``e <= epsilon``, the
    candidates run out or ``max_size`` is hit. With early stopping on, a round
    whose best score is not below ``(1 - epsilon/2) * e`` is discarded and the
    unextended portfolio is returned.
    """
    opts = opts or MiningOptions()
    values = _check_matrix(R)
    members, trace, reason = _greedy(
        values,
        opts.metric,
        opts.epsilon,
        opts.early_stopping,
        opts.max_size,
        opts.tie_tolerance,
        stop_on_target=True,
    )
    return Portfolio(tuple(members), tuple(trace), opts.epsilon, opts.metric, reason)


def mine_per_task_best(R: RegretMatrix, epsilon: float = 0.01) -> Portfolio:
    """Union of every task's best config, ordered by the first task that needs it."""
    values = _check_matrix(R)
    members: list[int] = []
    for j in range(values.shape[1]):
        c = int(np.argmin(values[:, j]))
        if c not in members:
            members.append(c)
    return Portfolio(tuple(members), (), epsilon, "per_task_best", None)


def mine_greedy_mean(
    R: RegretMatrix, size: int, epsilon: float = 0.01, tie_tolerance: float = 1e-12
) -> Portfolio:
    """Ordered portfolio of exactly ``size`` configs grown by mean regret alone.

    ``epsilon`` only feeds the SER column of the trace.
    """
    values = _check_matrix(R)
    if size < 1:
        raise ValueError("size must be a positive integer")
    if size > values.shape[0]:
        raise SizeTooLarge(f"size {size} exceeds {values.shape[0]} configs")
    members, trace, reason = _greedy(
        values, MEAN, epsilon, False, size, tie_tolerance, stop_on_target=False
    )
    return Portfolio(tuple(members), tuple(trace), epsilon, "greedy_mean", reason)


def best_single(
    R: RegretMatrix, criterion: str = MEAN, epsilon: float = 0.01, tie_tolerance: float = 1e-12
) -> int:
    """Index of the best one-config portfolio.

    Ties follow the greedy's rule (lower mean regret, then lower index), so the
    result matches the first pick of :func:`greedy_build` under the same metric.
    """
    if criterion not in METRICS:
        raise ValueError(f"criterion must be one of {METRICS}")
    values = _check_matrix(R)
    candidates = list(range(values.shape[0]))
    _, sers, means = _extension_scores(values, np.full(values.shape[1], np.inf), candidates, epsilon)
    scores = sers if criterion == SER else means
    return candidates[_pick(candidates, scores, means, tie_tolerance)]

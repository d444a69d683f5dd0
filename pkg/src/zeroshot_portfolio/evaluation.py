"""Evaluation harness: leave-one-task-out regret reports and the analysis exports.

Every routine here works on an already-built regret matrix; no model is
trained. ``loo_cv`` is the central loop. The rest are analyses layered on
top of it or on a fitted decision model.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from . import core
from .core import ConfigRecord, EvaluationRecord, RegretMatrix, TaskRecord
from .decision import DecisionModel, fit_decision, fit_standardizer, recommend, standardize
from .errors import (
    DimensionMismatch,
    EmptyList,
    MalformedRow,
    MissingFile,
    TooFewAnchors,
    TooFewTasks,
    UnknownTaskId,
)
from .mining import (
    SIZE_CAP,
    MiningOptions,
    Portfolio,
    Step,
    best_single,
    greedy_build,
    mean_regret,
    mine_greedy_mean,
    mine_per_task_best,
    ser,
)

OURS = "ours"
PER_TASK_BEST = "per_task_best"
GREEDY_MEAN = "greedy_mean"
SINGLE_BEST = "single_best"
STRATEGIES = (OURS, PER_TASK_BEST, GREEDY_MEAN, SINGLE_BEST)

# greedy_mean portfolios default to 5 members, inside the 3-7 models an
# online k-shot search typically gets through in a one-minute budget
DEFAULT_GREEDY_MEAN_SIZE = 5


@dataclass(frozen=True, eq=False)
class Bundle:
    R: RegretMatrix
    tasks: tuple[TaskRecord, ...]
    configs: tuple[ConfigRecord, ...]

    def __post_init__(self):
        if [t.task_id for t in self.tasks] != self.R.task_ids:
            raise DimensionMismatch("bundle tasks are not aligned with the regret columns")
        if [c.config_id for c in self.configs] != self.R.config_ids:
            raise DimensionMismatch("bundle configs are not aligned with the regret rows")

    @classmethod
    def from_regret(cls, R: RegretMatrix) -> "Bundle":
        return cls(R, R.tasks, R.configs)

    @classmethod
    def load(
        cls,
        evaluations,
        metafeatures,
        configs,
        missing_policy: str = core.WORST_IN_COLUMN,
        baseline=None,
    ) -> "Bundle":
        """Read the three input files and derive the regret matrix."""
        records = core.read_evaluations(evaluations)
        tasks = core.read_metafeatures(metafeatures)
        config_table = core.read_configs(configs)
        P = core.build_performance_matrix(records, config_table, tasks, missing_policy)
        explicit = core.read_baseline(baseline) if baseline is not None else None
        R = core.compute_regret(P, core.compute_baseline(P, explicit))
        return cls.from_regret(R)

    def save(self, evaluations, metafeatures, configs) -> None:
        """Write the bundle as single-fold losses equal to its regrets."""
        records = [
            EvaluationRecord(t.task_id, c.config_id, 0, float(self.R.values[i, j]))
            for j, t in enumerate(self.tasks)
            for i, c in enumerate(self.configs)
        ]
        core.write_evaluations(records, evaluations)
        core.write_metafeatures(self.tasks, metafeatures)
        core.write_configs(self.configs, configs)

    @property
    def task_ids(self) -> list[str]:
        return [t.task_id for t in self.tasks]

    def without_task(self, index: int) -> "Bundle":
        return Bundle.from_regret(self.R.drop_task(index))


@dataclass(frozen=True)
class Stats:
    mean: float
    std: float
    p25: float
    p50: float
    p75: float
    p95: float
    p99: float
    n: int


STATS_COLUMNS = ("mean", "std", "p25", "p50", "p75", "p95", "p99")


def regret_stats(values: Sequence[float]) -> Stats:
    """Mean, population std and linearly interpolated percentiles."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise EmptyList("cannot summarise an empty list")
    n = x.size
    mean = math.fsum(x.tolist()) / n
    std = math.sqrt(math.fsum(((x - mean) ** 2).tolist()) / n)
    p = np.percentile(x, [25, 50, 75, 95, 99])
    return Stats(mean, std, *(float(v) for v in p), n)


@dataclass(frozen=True)
class TaskResult:
    task_id: str
    train_ser_at_stop: float
    train_regret: float  # mean regret of the training anchors' assignments
    test_regret: float
    config_id: str
    portfolio_size: int
    kshot_regret: Optional[float] = None


@dataclass(frozen=True)
class RegretReport:
    strategy: str
    per_task: tuple[TaskResult, ...]
    stats: Stats
    k: Optional[int] = None
    kshot_stats: Optional[Stats] = None

    def test_regrets(self) -> list[float]:
        return [r.test_regret for r in self.per_task]


def mine(
    R: RegretMatrix,
    strategy: str = OURS,
    opts: Optional[MiningOptions] = None,
    size: Optional[int] = None,
) -> Portfolio:
    """Dispatch to a portfolio miner by strategy name."""
    opts = opts or MiningOptions()
    if strategy == OURS:
        return greedy_build(R, opts)
    if strategy == PER_TASK_BEST:
        return mine_per_task_best(R, opts.epsilon)
    if strategy == GREEDY_MEAN:
        if size is None:
            size = opts.max_size or DEFAULT_GREEDY_MEAN_SIZE
        size = min(size, R.n_configs)
        return mine_greedy_mean(R, size, opts.epsilon, opts.tie_tolerance)
    if strategy == SINGLE_BEST:
        c = best_single(R, opts.metric, opts.epsilon, opts.tie_tolerance)
        step = Step(c, ser(R, [c], opts.epsilon), mean_regret(R, [c]))
        return Portfolio((c,), (step,), opts.epsilon, SINGLE_BEST, SIZE_CAP)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


Observer = Callable[[str, Sequence[str]], None]


def loo_cv(
    bundle: Bundle,
    strategy: str = OURS,
    opts: Optional[MiningOptions] = None,
    size: Optional[int] = None,
    k: Optional[int] = None,
    observer: Optional[Observer] = None,
) -> RegretReport:
    """Leave-one-task-out evaluation of a mining strategy plus the 1-NN decision.

    For each held-out task the strategy mines on the remaining columns, the
    decision model is fitted on the remaining tasks, and the recommended
    config's regret is read from the held-out column. ``observer`` receives
    ``(stage, task_ids)`` for every mining and fitting input so callers can
    audit for leakage. With ``k`` set, each row also records the k-shot regret
    of the mined portfolio taken in order.
    """
    opts = opts or MiningOptions()
    R = bundle.R
    if R.n_tasks < 2:
        raise TooFewTasks("leave-one-out needs at least two tasks")
    row_of = {cid: i for i, cid in enumerate(R.config_ids)}
    results = []
    for j, held in enumerate(bundle.tasks):
        train = bundle.without_task(j)
        if observer is not None:
            observer("mine", train.R.task_ids)
        portfolio = mine(train.R, strategy, opts, size)
        if observer is not None:
            observer("fit", [t.task_id for t in train.tasks])
        model = fit_decision(portfolio, train.R, train.tasks)
        rec = recommend(model, held)
        kept = [row_of[c.config_id] for c in model.portfolio]
        results.append(
            TaskResult(
                task_id=held.task_id,
                train_ser_at_stop=ser(train.R, portfolio.members, opts.epsilon),
                train_regret=mean_regret(train.R, kept),
                test_regret=float(R.values[row_of[rec.config.config_id], j]),
                config_id=rec.config.config_id,
                portfolio_size=len(model.portfolio),
                kshot_regret=None if k is None else simulate_kshot(R, portfolio, k, j),
            )
        )
    stats = regret_stats([r.test_regret for r in results])
    kshot = None if k is None else regret_stats([r.kshot_regret for r in results])
    return RegretReport(strategy, tuple(results), stats, k, kshot)


def simulate_kshot(R: RegretMatrix, ordered: Portfolio, k: int, task: int) -> float:
    """Best regret among the first k portfolio members tried in order."""
    if not ordered.members:
        raise ValueError("portfolio is empty")
    if k < 1:
        raise ValueError("k must be positive")
    tried = list(ordered.members[:k])
    return float(R.values[tried, task].min())


def overfit_gap(report: RegretReport) -> list[tuple[str, float]]:
    """Test regret minus the training-side estimate; positive means optimistic training."""
    return [(r.task_id, r.test_regret - r.train_regret) for r in report.per_task]


def scalability_curve(
    bundle: Bundle,
    order: Sequence[str],
    strategy: str = OURS,
    opts: Optional[MiningOptions] = None,
    size: Optional[int] = None,
) -> list[tuple[int, int]]:
    """Portfolio size after mining on each prefix of ``order``."""
    index = {tid: j for j, tid in enumerate(bundle.task_ids)}
    if not order:
        raise ValueError("order must name at least one task")
    if len(set(order)) != len(order):
        raise ValueError("order repeats a task")
    for tid in order:
        if tid not in index:
            raise UnknownTaskId(f"unknown task_id {tid!r}")
    cols = [index[tid] for tid in order]
    curve = []
    for n in range(1, len(cols) + 1):
        portfolio = mine(bundle.R.select_tasks(cols[:n]), strategy, opts, size)
        curve.append((n, len(portfolio.members)))
    return curve


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """Spearman's rho with average ranks for ties; 0.0 when either side is constant."""
    ra = rankdata(a, method="average")
    rb = rankdata(b, method="average")
    ra = ra - ra.mean()
    rb = rb - rb.mean()
    denom = math.sqrt(float((ra * ra).sum()) * float((rb * rb).sum()))
    if denom == 0.0:
        return 0.0
    return max(-1.0, min(1.0, float((ra * rb).sum()) / denom))


def metafeature_rank_correlation(bundle: Bundle, task: int) -> float:
    """Rank agreement between metafeature distance and transfer regret for one task.

    For every other task u, pairs the standardized distance from ``task`` to u
    with the regret on ``task`` of u's best config. Positive rho means that
    configs from closer tasks transfer better.
    """
    if bundle.R.n_tasks < 3:
        raise TooFewTasks("rank correlation needs at least three tasks")
    s = fit_standardizer(bundle.tasks)
    Z = np.stack([standardize(s, t) for t in bundle.tasks])
    best = np.argmin(bundle.R.values, axis=0)
    others = [u for u in range(bundle.R.n_tasks) if u != task]
    dist = [float(np.linalg.norm(Z[u] - Z[task])) for u in others]
    transfer = [float(bundle.R.values[best[u], task]) for u in others]
    return spearman(dist, transfer)


def pca_components(X: np.ndarray, n: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Top ``n`` principal axes (rows) and their variances.

    Axes are ordered by descending eigenvalue; each is signed so that its
    largest-magnitude loading is positive.
    """
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / X.shape[0]
    w, V = np.linalg.eigh(cov)
    order = np.argsort(-w, kind="stable")[:n]
    comps = V[:, order].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    return comps, w[order]


@dataclass(frozen=True)
class MapRow:
    task_id: str
    pc1: float
    pc2: float
    member_index: int


def export_decision_map(m: DecisionModel) -> list[MapRow]:
    """2-D PCA coordinates of the standardized anchors, with their assigned member."""
    if len(m.anchors) < 2:
        raise TooFewAnchors("need at least two anchors for a projection")
    X = np.array([a.vector for a in m.anchors])
    comps, _ = pca_components(X, 2)
    coords = (X - X.mean(axis=0)) @ comps.T
    return [
        MapRow(a.task_id, float(c[0]), float(c[1]), a.member_index)
        for a, c in zip(m.anchors, coords)
    ]


# ---------------------------------------------------------------------------
# report.json and the CSV exports


def report_to_json(report: RegretReport) -> dict:
    return {
        "strategy": report.strategy,
        "k": report.k,
        "stats": asdict(report.stats),
        "kshot_stats": None if report.kshot_stats is None else asdict(report.kshot_stats),
        "per_task": [asdict(r) for r in report.per_task],
    }


def report_from_json(doc: dict) -> RegretReport:
    kshot = doc.get("kshot_stats")
    return RegretReport(
        strategy=doc["strategy"],
        per_task=tuple(TaskResult(**r) for r in doc["per_task"]),
        stats=Stats(**doc["stats"]),
        k=doc.get("k"),
        kshot_stats=None if kshot is None else Stats(**kshot),
    )


def write_report(report: RegretReport, path) -> None:
    text = json.dumps(report_to_json(report), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_report(path) -> RegretReport:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"no such file: {path}")
    return report_from_json(json.loads(path.read_text(encoding="utf-8")))


def _write_rows(path, header, rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _read_rows(path, header, converters) -> list[tuple]:
    fh, reader = core._open_csv(path, header)
    rows = []
    with fh:
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedRow(reader.line_num, f"expected {len(header)} fields")
            try:
                rows.append(tuple(conv(cell) for conv, cell in zip(converters, row)))
            except ValueError as exc:
                raise MalformedRow(reader.line_num, str(exc)) from None
    return rows


CURVE_HEADER = ["n_tasks", "portfolio_size"]
MAP_HEADER = ["task_id", "pc1", "pc2", "member_index"]
CORRELATION_HEADER = ["task_id", "rho"]


def write_curve(curve, path) -> None:
    _write_rows(path, CURVE_HEADER, curve)


def read_curve(path) -> list[tuple[int, int]]:
    return _read_rows(path, CURVE_HEADER, (int, int))


def write_decision_map(rows: Sequence[MapRow], path) -> None:
    _write_rows(path, MAP_HEADER, [(r.task_id, repr(r.pc1), repr(r.pc2), r.member_index) for r in rows])


def read_decision_map(path) -> list[MapRow]:
    return [MapRow(*r) for r in _read_rows(path, MAP_HEADER, (str, float, float, int))]


def write_correlation(rows: Sequence[tuple[str, float]], path) -> None:
    _write_rows(path, CORRELATION_HEADER, [(tid, repr(float(rho))) for tid, rho in rows])


def read_correlation(path) -> list[tuple[str, float]]:
    return _read_rows(path, CORRELATION_HEADER, (str, float))

"""Zero-shot decision function: 1-nearest-neighbour over standardized metafeatures.

A fitted :class:`DecisionModel` is self-contained. Answering a query touches
only the stored anchors, never the regret matrix or evaluation records.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import ConfigRecord, RegretMatrix, TaskRecord, config_from_json
from .errors import (
    DimensionMismatch,
    EmptyModel,
    EmptyPortfolio,
    EmptyTable,
    MalformedRow,
    MissingFile,
    RangeViolation,
    SchemaViolation,
    VersionMismatch,
)
from .mining import Portfolio

FORMAT_VERSION = 1
METAFEATURE_NAMES = ("n_instances", "n_features", "n_classes", "pct_numeric")


@dataclass(frozen=True)
class Standardizer:
    means: tuple[float, ...]
    stds: tuple[float, ...]

    def __post_init__(self):
        if len(self.means) != 4 or len(self.stds) != 4:
            raise SchemaViolation("standardizer needs 4 means and 4 stds")
        if not all(math.isfinite(s) and s > 0 for s in self.stds):
            raise SchemaViolation("standardizer stds must be finite and > 0")
        if not all(math.isfinite(m) for m in self.means):
            raise SchemaViolation("standardizer means must be finite")


def fit_standardizer(tasks: Sequence[TaskRecord]) -> Standardizer:
    """Population mean and std per metafeature; constant features get std 1."""
    if len(tasks) == 0:
        raise EmptyTable("cannot fit a standardizer on zero tasks")
    X = np.stack([t.metafeatures() for t in tasks])
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds[stds == 0] = 1.0
    return Standardizer(tuple(means.tolist()), tuple(stds.tolist()))


def standardize(s: Standardizer, t: TaskRecord) -> np.ndarray:
    return (t.metafeatures() - np.asarray(s.means)) / np.asarray(s.stds)


@dataclass(frozen=True)
class Anchor:
    task: TaskRecord
    vector: tuple[float, ...]
    member_index: int

    @property
    def task_id(self) -> str:
        return self.task.task_id


@dataclass(frozen=True)
class Recommendation:
    config: ConfigRecord
    member_index: int
    neighbor_task_id: str
    distance: float

    def to_json(self) -> dict:
        return {
            "config_id": self.config.config_id,
            "learner": self.config.learner,
            "payload": self.config.payload,
            "neighbor_task_id": self.neighbor_task_id,
            "distance": self.distance,
        }


def recommendation_json(rec: Recommendation) -> str:
    """Canonical one-line JSON; the CLI and the HTTP service both emit exactly this."""
    return json.dumps(rec.to_json(), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class DecisionModel:
    portfolio: tuple[ConfigRecord, ...]
    standardizer: Standardizer
    anchors: tuple[Anchor, ...]
    epsilon: float
    metric: str = "ser"
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        m = len(self.portfolio)
        assigned = set()
        for a in self.anchors:
            if not 0 <= a.member_index < m:
                raise SchemaViolation(
                    f"anchor {a.task_id!r} points at member {a.member_index}, portfolio has {m}"
                )
            assigned.add(a.member_index)
        if len(assigned) != m:
            raise SchemaViolation("every portfolio member needs at least one anchor")
        ids = [a.task_id for a in self.anchors]
        if len(set(ids)) != len(ids):
            raise SchemaViolation("duplicate anchor task_id")
        matrix = np.array([a.vector for a in self.anchors], dtype=np.float64).reshape(-1, 4)
        matrix.setflags(write=False)
        object.__setattr__(self, "_matrix", matrix)

    def distances(self, t: TaskRecord) -> np.ndarray:
        diff = self._matrix - standardize(self.standardizer, t)[np.newaxis, :]
        return np.sqrt((diff * diff).sum(axis=1))


def assign_configs(R: RegretMatrix, portfolio: Portfolio) -> np.ndarray:
    """Per task, the position in ``portfolio.members`` of its lowest-regret member.

    ``argmin`` returns the first minimum, so ties go to the earlier member.
    """
    if not portfolio.members:
        raise EmptyPortfolio("portfolio has no members")
    return np.argmin(R.values[list(portfolio.members)], axis=0)


def fit_decision(
    portfolio: Portfolio, R: RegretMatrix, tasks: Optional[Sequence[TaskRecord]] = None
) -> DecisionModel:
    tasks = list(R.tasks if tasks is None else tasks)
    if not tasks:
        raise EmptyTable("no training tasks")
    if [t.task_id for t in tasks] != R.task_ids:
        raise DimensionMismatch("task table is not aligned with the regret matrix columns")
    labels = assign_configs(R, portfolio)
    used = sorted(set(labels.tolist()))  # members nobody picks can never be recommended
    remap = {old: new for new, old in enumerate(used)}
    standardizer = fit_standardizer(tasks)
    anchors = tuple(
        Anchor(t, tuple(standardize(standardizer, t).tolist()), remap[int(lab)])
        for t, lab in zip(tasks, labels)
    )
    configs = tuple(R.configs[portfolio.members[p]] for p in used)
    return DecisionModel(configs, standardizer, anchors, portfolio.epsilon, portfolio.metric)


def recommend(m: DecisionModel, t: TaskRecord) -> Recommendation:
    if not m.anchors:
        raise EmptyModel("decision model has no anchors")
    d = m.distances(t)
    best = d.min()
    k = min(np.flatnonzero(d == best), key=lambda i: m.anchors[i].task_id)
    a = m.anchors[k]
    return Recommendation(m.portfolio[a.member_index], a.member_index, a.task_id, float(d[k]))


def recommend_ranked(m: DecisionModel, t: TaskRecord, k: int) -> list[Recommendation]:
    """Members ordered by distance from ``t`` to their closest anchor.

    Equal distances are ordered by the anchor's task_id, the same rule
    :func:`recommend` uses, so the head of the list always equals it.
    """
    if not m.anchors:
        raise EmptyModel("decision model has no anchors")
    if k < 1:
        raise ValueError("k must be positive")
    d = m.distances(t)
    nearest: dict[int, tuple[float, str]] = {}
    for dist, a in zip(d.tolist(), m.anchors):
        key = (dist, a.task_id)
        if a.member_index not in nearest or key < nearest[a.member_index]:
            nearest[a.member_index] = key
    order = sorted(nearest, key=lambda idx: (*nearest[idx], idx))
    return [
        Recommendation(m.portfolio[idx], idx, nearest[idx][1], nearest[idx][0])
        for idx in order[:k]
    ]


# ---------------------------------------------------------------------------
# portfolio.json


def model_to_json(m: DecisionModel) -> dict:
    return {
        "format_version": m.format_version,
        "epsilon": m.epsilon,
        "metric": m.metric,
        "standardizer": {"means": list(m.standardizer.means), "stds": list(m.standardizer.stds)},
        "portfolio": [c.to_json() for c in m.portfolio],
        "anchors": [
            {
                "task_id": a.task_id,
                "metafeatures": {
                    "n_instances": a.task.n_instances,
                    "n_features": a.task.n_features,
                    "n_classes": a.task.n_classes,
                    "pct_numeric": a.task.pct_numeric,
                },
                "member_index": a.member_index,
            }
            for a in m.anchors
        ],
    }


def _require(doc: dict, key: str, types, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaViolation(f"{where}: missing {key!r}")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, types):
        raise SchemaViolation(f"{where}: {key!r} has the wrong type")
    return value


def _real_list(doc, key, where) -> tuple[float, ...]:
    values = _require(doc, key, list, where)
    if len(values) != 4 or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
    ):
        raise SchemaViolation(f"{where}: {key!r} must be 4 numbers")
    return tuple(float(v) for v in values)


def model_from_json(doc) -> DecisionModel:
    if not isinstance(doc, dict):
        raise SchemaViolation("model document must be a JSON object")
    version = _require(doc, "format_version", int, "model")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"format_version {version} is not supported (expected {FORMAT_VERSION})")
    epsilon = float(_require(doc, "epsilon", (int, float), "model"))
    metric = _require(doc, "metric", str, "model")
    std_doc = _require(doc, "standardizer", dict, "model")
    standardizer = Standardizer(
        _real_list(std_doc, "means", "standardizer"), _real_list(std_doc, "stds", "standardizer")
    )
    try:
        configs = tuple(
            config_from_json(c, f"portfolio[{i}]")
            for i, c in enumerate(_require(doc, "portfolio", list, "model"))
        )
    except MalformedRow as exc:
        raise SchemaViolation(str(exc)) from None
    anchors = []
    for i, a in enumerate(_require(doc, "anchors", list, "model")):
        where = f"anchors[{i}]"
        task_id = _require(a, "task_id", str, where)
        mf = _require(a, "metafeatures", dict, where)
        counts = [_require(mf, name, int, where) for name in METAFEATURE_NAMES[:3]]
        pct = float(_require(mf, "pct_numeric", (int, float), where))
        member = _require(a, "member_index", int, where)
        try:
            task = TaskRecord(task_id, *counts, pct)
        except RangeViolation as exc:
            raise SchemaViolation(f"{where}: {exc}") from None
        anchors.append(Anchor(task, tuple(standardize(standardizer, task).tolist()), member))
    return DecisionModel(configs, standardizer, tuple(anchors), epsilon, metric, version)


def write_model(m: DecisionModel, path) -> None:
    text = json.dumps(model_to_json(m), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_model(path) -> DecisionModel:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"no such file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"not valid JSON: {exc.msg}") from None
    return model_from_json(doc)

"""Domain records, file ingestion and the performance / baseline / regret matrices.

Matrices are oriented rows = configurations, columns = tasks. All arrays are
float64 and marked read-only once built.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    CoverageGap,
    DimensionMismatch,
    DuplicateKey,
    DuplicateTaskId,
    EmptyColumn,
    EmptyInput,
    MalformedRow,
    MissingEvaluation,
    MissingFile,
    RangeViolation,
    UnknownId,
)

EVALUATION_HEADER = ["task_id", "config_id", "fold", "loss"]
METAFEATURE_HEADER = ["task_id", "n_instances", "n_features", "n_classes", "pct_numeric"]
BASELINE_HEADER = ["task_id", "loss"]

WORST_IN_COLUMN = "worst-in-column"
REJECT = "reject"
MISSING_POLICIES = (WORST_IN_COLUMN, REJECT)


@dataclass(frozen=True)
class TaskRecord:
    task_id: str
    n_instances: int
    n_features: int
    n_classes: int
    pct_numeric: float

    def __post_init__(self):
        for name in ("n_instances", "n_features", "n_classes"):
            if getattr(self, name) < 0:
                raise RangeViolation(f"{self.task_id}: {name} must be >= 0")
        if not (0.0 <= self.pct_numeric <= 1.0):
            raise RangeViolation(
                f"{self.task_id}: pct_numeric={self.pct_numeric!r} outside [0, 1]"
            )

    def metafeatures(self) -> np.ndarray:
        return np.array(
            [self.n_instances, self.n_features, self.n_classes, self.pct_numeric],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class ConfigRecord:
    config_id: str
    learner: str
    payload: dict = field(default_factory=dict)
    source_task_id: Optional[str] = None
    is_library_default: bool = False

    def to_json(self) -> dict:
        doc: dict[str, Any] = {
            "config_id": self.config_id,
            "learner": self.learner,
            "payload": self.payload,
        }
        if self.source_task_id is not None:
            doc["source_task_id"] = self.source_task_id
        if self.is_library_default:
            doc["is_library_default"] = True
        return doc


@dataclass(frozen=True)
class EvaluationRecord:
    task_id: str
    config_id: str
    fold: int
    loss: float  # NaN marks a failed fold

    @property
    def failed(self) -> bool:
        return not math.isfinite(self.loss)


# ---------------------------------------------------------------------------
# CSV / JSON ingestion


def _open_csv(path, header: list[str]):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"no such file: {path}")
    fh = path.open(newline="", encoding="utf-8-sig")
    reader = csv.reader(fh)
    first = next(reader, None)
    if first is None or [c.strip() for c in first] != header:
        fh.close()
        raise MalformedRow(1, f"expected header {','.join(header)}")
    return fh, reader


def _parse_int(text: str, line: int, name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise MalformedRow(line, f"{name}={text!r} is not an integer") from None


def _parse_float(text: str, line: int, name: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise MalformedRow(line, f"{name}={text!r} is not a number") from None


def read_evaluations(path) -> list[EvaluationRecord]:
    fh, reader = _open_csv(path, EVALUATION_HEADER)
    records = []
    seen = set()
    with fh:
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 4:
                raise MalformedRow(line, f"expected 4 fields, got {len(row)}")
            task_id, config_id, fold_s, loss_s = (c.strip() for c in row)
            if not task_id or not config_id:
                raise MalformedRow(line, "empty task_id or config_id")
            fold = _parse_int(fold_s, line, "fold")
            if fold < 0:
                raise MalformedRow(line, "fold must be >= 0")
            if loss_s == "" or loss_s.lower() == "nan":
                loss = math.nan
            else:
                loss = _parse_float(loss_s, line, "loss")
                if math.isinf(loss):
                    loss = math.nan
            key = (task_id, config_id, fold)
            if key in seen:
                raise DuplicateKey(f"line {line}: duplicate evaluation {key}")
            seen.add(key)
            records.append(EvaluationRecord(task_id, config_id, fold, loss))
    return records


def write_evaluations(records: Iterable[EvaluationRecord], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EVALUATION_HEADER)
        for r in records:
            writer.writerow([r.task_id, r.config_id, r.fold, "" if r.failed else repr(r.loss)])


def read_metafeatures(path) -> list[TaskRecord]:
    fh, reader = _open_csv(path, METAFEATURE_HEADER)
    tasks = []
    seen = set()
    with fh:
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 5:
                raise MalformedRow(line, f"expected 5 fields, got {len(row)}")
            task_id = row[0].strip()
            if not task_id:
                raise MalformedRow(line, "empty task_id")
            counts = [
                _parse_int(row[i].strip(), line, METAFEATURE_HEADER[i]) for i in (1, 2, 3)
            ]
            pct = _parse_float(row[4].strip(), line, "pct_numeric")
            if task_id in seen:
                raise DuplicateTaskId(f"line {line}: duplicate task_id {task_id!r}")
            seen.add(task_id)
            tasks.append(TaskRecord(task_id, *counts, pct))
    return tasks


def write_metafeatures(tasks: Iterable[TaskRecord], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METAFEATURE_HEADER)
        for t in tasks:
            writer.writerow(
                [t.task_id, t.n_instances, t.n_features, t.n_classes, repr(float(t.pct_numeric))]
            )


def config_from_json(doc, where: str = "config") -> ConfigRecord:
    if not isinstance(doc, dict):
        raise MalformedRow(0, f"{where}: expected an object")
    try:
        config_id = doc["config_id"]
        learner = doc["learner"]
    except KeyError as exc:
        raise MalformedRow(0, f"{where}: missing field {exc.args[0]!r}") from None
    payload = doc.get("payload", {})
    source = doc.get("source_task_id")
    default = doc.get("is_library_default", False)
    if not isinstance(config_id, str) or not isinstance(learner, str):
        raise MalformedRow(0, f"{where}: config_id and learner must be strings")
    if not isinstance(payload, dict):
        raise MalformedRow(0, f"{where}: payload must be an object")
    if source is not None and not isinstance(source, str):
        raise MalformedRow(0, f"{where}: source_task_id must be a string")
    if not isinstance(default, bool):
        raise MalformedRow(0, f"{where}: is_library_default must be a boolean")
    return ConfigRecord(config_id, learner, payload, source, default)


def read_configs(path) -> list[ConfigRecord]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"no such file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedRow(exc.lineno, exc.msg) from None
    if not isinstance(doc, list):
        raise MalformedRow(1, "configs file must hold a JSON array")
    configs = [config_from_json(entry, f"entry {i}") for i, entry in enumerate(doc)]
    _check_unique([c.config_id for c in configs], "config_id")
    return configs


def write_configs(configs: Iterable[ConfigRecord], path) -> None:
    text = json.dumps([c.to_json() for c in configs], indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _check_unique(ids: Sequence[str], what: str) -> None:
    seen = set()
    for i in ids:
        if i in seen:
            exc = DuplicateTaskId if what == "task_id" else DuplicateKey
            raise exc(f"duplicate {what} {i!r}")
        seen.add(i)


# ---------------------------------------------------------------------------
# Matrices


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64 if np.asarray(a).dtype != bool else bool)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PerformanceMatrix:
    configs: tuple[ConfigRecord, ...]
    tasks: tuple[TaskRecord, ...]
    values: np.ndarray
    observed_mask: np.ndarray
    missing_policy: str = WORST_IN_COLUMN

    @property
    def config_ids(self) -> list[str]:
        return [c.config_id for c in self.configs]

    @property
    def task_ids(self) -> list[str]:
        return [t.task_id for t in self.tasks]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class BaselineVector:
    task_ids: tuple[str, ...]
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class RegretMatrix:
    configs: tuple[ConfigRecord, ...]
    tasks: tuple[TaskRecord, ...]
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.configs), len(self.tasks)):
            raise DimensionMismatch(
                f"values shape {self.values.shape} does not match "
                f"{len(self.configs)} configs x {len(self.tasks)} tasks"
            )

    @classmethod
    def from_array(cls, values, config_ids=None, task_ids=None) -> "RegretMatrix":
        """Wrap a bare array, inventing placeholder records for missing ids."""
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionMismatch("regret values must be two-dimensional")
        n_c, n_t = values.shape
        config_ids = config_ids or [f"c{i}" for i in range(n_c)]
        task_ids = task_ids or [f"t{j}" for j in range(n_t)]
        configs = tuple(ConfigRecord(cid, "unknown") for cid in config_ids)
        tasks = tuple(TaskRecord(tid, 0, 0, 0, 0.0) for tid in task_ids)
        return cls(configs, tasks, _frozen(values))

    @property
    def n_configs(self) -> int:
        return len(self.configs)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def config_ids(self) -> list[str]:
        return [c.config_id for c in self.configs]

    @property
    def task_ids(self) -> list[str]:
        return [t.task_id for t in self.tasks]

    def select_tasks(self, indices: Sequence[int]) -> "RegretMatrix":
        indices = list(indices)
        return RegretMatrix(
            self.configs,
            tuple(self.tasks[j] for j in indices),
            _frozen(self.values[:, indices]),
        )

    def drop_task(self, index: int) -> "RegretMatrix":
        return self.select_tasks([j for j in range(self.n_tasks) if j != index])

    def equals(self, other: "RegretMatrix") -> bool:
        return (
            self.config_ids == other.config_ids
            and self.task_ids == other.task_ids
            and np.array_equal(self.values, other.values)
        )


def _collect_cells(records, config_index, task_index, skip_cell=None):
    """Group successful losses by (row, column); validates ids and keys."""
    cells: dict[tuple[int, int], list[float]] = {}
    seen = set()
    for r in records:
        if r.config_id not in config_index:
            raise UnknownId(f"unknown config_id {r.config_id!r}")
        if r.task_id not in task_index:
            raise UnknownId(f"unknown task_id {r.task_id!r}")
        key = (r.task_id, r.config_id, r.fold)
        if key in seen:
            raise DuplicateKey(f"duplicate evaluation {key}")
        seen.add(key)
        cell = (config_index[r.config_id], task_index[r.task_id])
        if skip_cell is not None and skip_cell(cell):
            raise DuplicateKey(f"evaluation {key} falls in an already-built cell")
        bucket = cells.setdefault(cell, [])
        if not r.failed:
            bucket.append(r.loss)
    return cells


def _place(values, mask, cells) -> None:
    for (i, j), losses in cells.items():
        if losses:
            # fsum is order-independent, so incremental and one-shot builds agree bit-for-bit
            values[i, j] = math.fsum(losses) / len(losses)
            mask[i, j] = True


def _impute(values, mask, task_ids, policy) -> None:
    for j, task_id in enumerate(task_ids):
        col = mask[:, j]
        if not col.any():
            raise EmptyColumn(task_id)
        if col.all():
            continue
        if policy == REJECT:
            missing = int((~col).sum())
            raise MissingEvaluation(f"task {task_id!r} has {missing} unevaluated configs")
        values[~col, j] = values[col, j].max()


def build_performance_matrix(
    records: Sequence[EvaluationRecord],
    configs: Sequence[ConfigRecord],
    tasks: Sequence[TaskRecord],
    missing_policy: str = WORST_IN_COLUMN,
) -> PerformanceMatrix:
    """Mean loss per (config, task) over folds, imputing cells that never succeeded.

    Cells without a successful fold take the column's worst observed loss under
    ``worst-in-column``; ``reject`` raises instead.
    """
    if missing_policy not in MISSING_POLICIES:
        raise ValueError(f"missing_policy must be one of {MISSING_POLICIES}")
    if not records or not configs or not tasks:
        raise EmptyInput("need at least one record, config and task")
    configs, tasks = tuple(configs), tuple(tasks)
    _check_unique([c.config_id for c in configs], "config_id")
    _check_unique([t.task_id for t in tasks], "task_id")
    config_index = {c.config_id: i for i, c in enumerate(configs)}
    task_index = {t.task_id: j for j, t in enumerate(tasks)}

    cells = _collect_cells(records, config_index, task_index)
    values = np.full((len(configs), len(tasks)), np.nan)
    mask = np.zeros(values.shape, dtype=bool)
    _place(values, mask, cells)
    _impute(values, mask, [t.task_id for t in tasks], missing_policy)
    return PerformanceMatrix(configs, tasks, _frozen(values), _frozen(mask), missing_policy)


def update_incremental(
    P: PerformanceMatrix,
    new_records: Sequence[EvaluationRecord],
    new_configs: Sequence[ConfigRecord] = (),
    new_tasks: Sequence[TaskRecord] = (),
) -> PerformanceMatrix:
    """Extend ``P`` with new configs and/or tasks without re-reading old records.

    Only cells in the new rows and columns are computed; imputed cells are
    refreshed because a new row can move a column's worst observed loss.
    """
    old_c, old_t = P.shape
    configs = P.configs + tuple(new_configs)
    tasks = P.tasks + tuple(new_tasks)
    _check_unique([c.config_id for c in configs], "config_id")
    _check_unique([t.task_id for t in tasks], "task_id")
    config_index = {c.config_id: i for i, c in enumerate(configs)}
    task_index = {t.task_id: j for j, t in enumerate(tasks)}

    cells = _collect_cells(
        new_records, config_index, task_index, skip_cell=lambda c: c[0] < old_c and c[1] < old_t
    )
    values = np.full((len(configs), len(tasks)), np.nan)
    mask = np.zeros(values.shape, dtype=bool)
    values[:old_c, :old_t] = np.where(P.observed_mask, P.values, np.nan)
    mask[:old_c, :old_t] = P.observed_mask
    _place(values, mask, cells)
    _impute(values, mask, [t.task_id for t in tasks], P.missing_policy)
    return PerformanceMatrix(configs, tasks, _frozen(values), _frozen(mask), P.missing_policy)


def read_baseline(path) -> BaselineVector:
    fh, reader = _open_csv(path, BASELINE_HEADER)
    ids, vals = [], []
    with fh:
        for row in reader:
            if not row:
                continue
            line = reader.line_num
            if len(row) != 2:
                raise MalformedRow(line, f"expected 2 fields, got {len(row)}")
            ids.append(row[0].strip())
            vals.append(_parse_float(row[1].strip(), line, "loss"))
    _check_unique(ids, "task_id")
    return BaselineVector(tuple(ids), _frozen(vals))


def compute_baseline(
    P: PerformanceMatrix, explicit: Optional[BaselineVector] = None
) -> BaselineVector:
    if explicit is not None:
        lookup = dict(zip(explicit.task_ids, explicit.values.tolist()))
        vals = []
        for task_id in P.task_ids:
            if task_id not in lookup:
                raise CoverageGap(task_id)
            vals.append(lookup[task_id])
        return BaselineVector(tuple(P.task_ids), _frozen(vals))
    observed = np.where(P.observed_mask, P.values, np.inf)
    return BaselineVector(tuple(P.task_ids), _frozen(observed.min(axis=0)))


def compute_regret(P: PerformanceMatrix, B: BaselineVector) -> RegretMatrix:
    if list(B.task_ids) != P.task_ids or B.values.shape != (P.shape[1],):
        raise DimensionMismatch("baseline task list differs from the performance matrix")
    return RegretMatrix(P.configs, P.tasks, _frozen(P.values - B.values[np.newaxis, :]))

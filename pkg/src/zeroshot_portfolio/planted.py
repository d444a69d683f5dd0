"""Synthetic bundles with a known answer.

Tasks fall into well-separated metafeature clusters. Each cluster has one
planted config that is near-best on every task of the cluster and poor
elsewhere. Each task also has a specialist config, the product of that task's
own search, which wins its own column by a sliver but transfers badly to
the rest of the cluster. The remaining configs are uniform filler.

Raw losses, before each column is shifted so its minimum is 0:

=============  ==========================  =============================  ===============
config         own cluster                 other clusters                 source task
=============  ==========================  =============================  ===============
planted k      ``|N(0, sigma)|``           ``0.5 + U(0, 0.05)``            n/a
specialist u   planted loss + U(0.02, 0.1) ``0.5 + U(0, 0.05)``            0.9 x planted loss
filler         ``U(0.2, 0.8)``             ``U(0.2, 0.8)``                n/a
=============  ==========================  =============================  ===============

After the shift the planted regret on its own cluster is ``0.1 * |N(0, sigma)|``
and the specialist sits at exactly 0 on its source task.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigRecord, RegretMatrix, TaskRecord
from .decision import fit_standardizer, standardize
from .errors import InvalidShape
from .evaluation import Bundle

OFF_CLUSTER_REGRET = 0.5
OFF_CLUSTER_SPREAD = 0.05
FILLER_RANGE = (0.2, 0.8)
OVERFIT_RANGE = (0.02, 0.1)
SPECIALIST_SHARE = 0.9  # specialist's own-task loss as a fraction of the planted loss
MIN_SEPARATION = 6.0
WITHIN_SPREAD = 0.02  # latent units; centroids sit on a unit grid
LEARNERS = ("lgbm", "xgboost", "rf", "extra_tree", "catboost", "lrl1")

# latent coordinate -> (offset, scale) per metafeature
_LATENT_MAP = ((50_000.0, 20_000.0), (500.0, 200.0), (20.0, 8.0), (0.5, 0.2))
_GRID = np.array(np.meshgrid(*[np.arange(-2, 3)] * 4, indexing="ij")).reshape(4, -1).T


@dataclass(frozen=True, eq=False)
class PlantedBundle(Bundle):
    task_clusters: tuple[int, ...] = ()
    planted: tuple[int, ...] = ()  # config row of each cluster's planted config

    def cluster_sizes(self) -> list[int]:
        return np.bincount(self.task_clusters, minlength=len(self.planted)).tolist()

    def as_bundle(self) -> Bundle:
        return Bundle(self.R, self.tasks, self.configs)


def _latent_to_task(task_id: str, z: np.ndarray) -> TaskRecord:
    (o0, s0), (o1, s1), (o2, s2), (o3, s3) = _LATENT_MAP
    return TaskRecord(
        task_id,
        int(round(o0 + s0 * z[0])),
        int(round(o1 + s1 * z[1])),
        int(round(o2 + s2 * z[2])),
        float(min(1.0, max(0.0, o3 + s3 * z[3]))),
    )


def cluster_separation(tasks, labels) -> tuple[float, float]:
    """(closest centroid pair distance, largest task-to-centroid distance), standardized."""
    s = fit_standardizer(tasks)
    Z = np.stack([standardize(s, t) for t in tasks])
    labels = np.asarray(labels)
    ks = np.unique(labels)
    centroids = np.stack([Z[labels == k].mean(axis=0) for k in ks])
    spread = max(
        float(np.linalg.norm(Z[i] - centroids[np.searchsorted(ks, labels[i])]))
        for i in range(len(tasks))
    )
    if len(ks) < 2:
        return float("inf"), spread
    diffs = centroids[:, None, :] - centroids[None, :, :]
    d = np.sqrt((diffs**2).sum(axis=-1))
    return float(d[np.triu_indices(len(ks), 1)].min()), spread


def generate_planted(
    n_tasks: int, n_configs: int, n_clusters: int, noise_sigma: float, seed: int
) -> PlantedBundle:
    if n_tasks < 1 or n_configs < 1 or n_clusters < 1:
        raise InvalidShape("n_tasks, n_configs and n_clusters must be positive")
    if n_clusters > min(n_tasks, n_configs):
        raise InvalidShape(f"{n_clusters} clusters need at least that many tasks and configs")
    if n_clusters > len(_GRID):
        raise InvalidShape(f"at most {len(_GRID)} clusters are supported")
    if not noise_sigma >= 0:
        raise InvalidShape("noise_sigma must be >= 0")
    rng = np.random.default_rng(seed)

    labels = np.concatenate(
        [np.arange(n_clusters), rng.integers(0, n_clusters, n_tasks - n_clusters)]
    )
    labels = rng.permutation(labels)
    while True:
        centroids = _GRID[rng.choice(len(_GRID), n_clusters, replace=False)].astype(float)
        # a coordinate shared by every centroid would let noise dominate after standardizing
        if n_clusters == 1 or all(len(set(col)) > 1 for col in centroids.T):
            break
    width = len(str(n_tasks - 1))
    task_ids = [f"task_{j:0{width}d}" for j in range(n_tasks)]
    for _ in range(100):
        z = centroids[labels] + rng.normal(0.0, WITHIN_SPREAD, (n_tasks, 4))
        z[:, 2] = centroids[labels, 2]  # class count is shared within a cluster
        tasks = tuple(_latent_to_task(tid, zj) for tid, zj in zip(task_ids, z))
        sep, spread = cluster_separation(tasks, labels)
        if sep >= MIN_SEPARATION * spread:
            break
    else:
        raise InvalidShape("could not draw well-separated clusters")

    n_specialists = min(n_tasks, n_configs - n_clusters)
    n_fill = n_configs - n_clusters - n_specialists
    in_cluster = labels[np.newaxis, :] == np.arange(n_clusters)[:, np.newaxis]

    noise = np.abs(rng.normal(0.0, noise_sigma, (n_clusters, n_tasks)))
    off = OFF_CLUSTER_REGRET + rng.uniform(0, OFF_CLUSTER_SPREAD, (n_clusters, n_tasks))
    planted = np.where(in_cluster, noise, off)
    planted_home = planted[labels, np.arange(n_tasks)]  # planted loss on each task's own cluster

    spec_tasks = np.arange(n_specialists)
    same = labels[spec_tasks][:, np.newaxis] == labels[np.newaxis, :]
    overfit = rng.uniform(*OVERFIT_RANGE, (n_specialists, n_tasks))
    off = OFF_CLUSTER_REGRET + rng.uniform(0, OFF_CLUSTER_SPREAD, (n_specialists, n_tasks))
    specialists = np.where(same, planted_home[np.newaxis, :] + overfit, off)
    specialists[spec_tasks, spec_tasks] = SPECIALIST_SHARE * planted_home[spec_tasks]

    fillers = rng.uniform(*FILLER_RANGE, (n_fill, n_tasks))
    losses = np.vstack([planted, specialists, fillers])
    regrets = losses - losses.min(axis=0, keepdims=True)
    regrets.setflags(write=False)

    configs = [
        ConfigRecord(f"planted_{k}", LEARNERS[k % len(LEARNERS)], {"role": "planted", "cluster": k})
        for k in range(n_clusters)
    ]
    configs += [
        ConfigRecord(
            f"specialist_{task_ids[u]}",
            LEARNERS[(n_clusters + u) % len(LEARNERS)],
            {"role": "specialist"},
            source_task_id=task_ids[u],
        )
        for u in range(n_specialists)
    ]
    width = len(str(max(n_fill - 1, 0)))
    configs += [
        ConfigRecord(f"filler_{i:0{width}d}", LEARNERS[i % len(LEARNERS)], {"role": "filler"})
        for i in range(n_fill)
    ]
    R = RegretMatrix(tuple(configs), tasks, regrets)
    return PlantedBundle(
        R,
        R.tasks,
        R.configs,
        task_clusters=tuple(int(k) for k in labels),
        planted=tuple(range(n_clusters)),
    )

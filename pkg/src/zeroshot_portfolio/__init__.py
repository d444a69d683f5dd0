"""Zero-shot configuration portfolios: mine a compact portfolio from a task x config
regret matrix and recommend a member for unseen tasks by metafeature nearest neighbour."""

from importlib import resources

from .core import (
    BaselineVector,
    ConfigRecord,
    EvaluationRecord,
    PerformanceMatrix,
    RegretMatrix,
    TaskRecord,
    build_performance_matrix,
    compute_baseline,
    compute_regret,
    read_configs,
    read_evaluations,
    read_metafeatures,
    update_incremental,
)
from .decision import (
    DecisionModel,
    Recommendation,
    Standardizer,
    assign_configs,
    fit_decision,
    fit_standardizer,
    read_model,
    recommend,
    recommend_ranked,
    standardize,
    write_model,
)
from .errors import PortfolioError
from .evaluation import Bundle, RegretReport, Stats, loo_cv, regret_stats
from .mining import (
    MiningOptions,
    Portfolio,
    best_single,
    greedy_build,
    mean_regret,
    mine_greedy_mean,
    mine_per_task_best,
    ser,
)
from .planted import generate_planted

__all__ = [
    "BaselineVector",
    "Bundle",
    "ConfigRecord",
    "DecisionModel",
    "EvaluationRecord",
    "MiningOptions",
    "PerformanceMatrix",
    "Portfolio",
    "PortfolioError",
    "Recommendation",
    "RegretMatrix",
    "RegretReport",
    "Standardizer",
    "Stats",
    "TaskRecord",
    "assign_configs",
    "best_single",
    "build_performance_matrix",
    "compute_baseline",
    "compute_regret",
    "fit_decision",
    "fit_standardizer",
    "generate_planted",
    "greedy_build",
    "load_sample_metafeatures",
    "loo_cv",
    "mean_regret",
    "mine_greedy_mean",
    "mine_per_task_best",
    "read_configs",
    "read_evaluations",
    "read_metafeatures",
    "read_model",
    "recommend",
    "recommend_ranked",
    "regret_stats",
    "resources",
    "sample_metafeatures_path",
    "ser",
    "standardize",
    "update_incremental",
    "write_model",
]

__version__ = "0.1.0"


def sample_metafeatures_path():
    """Path to the bundled OpenML metafeature table."""
    return resources.files(__name__) / "data" / "openml_metafeatures.csv"


def load_sample_metafeatures() -> list[TaskRecord]:
    with resources.as_file(sample_metafeatures_path()) as path:
        return read_metafeatures(path)

"""Command-line front end (``zsp``).

Exit codes: 0 on success, 1 when the inputs or the run fail, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import core, evaluation
from .core import TaskRecord
from .decision import fit_decision, read_model, recommend, recommendation_json, write_model
from .errors import InvalidShape, PortfolioError, RangeViolation
from .evaluation import STATS_COLUMNS, STRATEGIES, Bundle
from .mining import METRICS, MiningOptions, ser
from .planted import generate_planted
from .service import make_server

log = logging.getLogger("zeroshot_portfolio")


class UsageError(Exception):
    pass


def _bundle_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--evals", required=True, help="evaluations.csv")
    p.add_argument("--meta", required=True, help="metafeatures.csv")
    p.add_argument("--configs", required=True, help="configs.json")
    p.add_argument("--baseline", help="optional task_id,loss CSV overriding the column minima")
    p.add_argument("--missing-policy", choices=core.MISSING_POLICIES, default=core.WORST_IN_COLUMN)


def _mining_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", choices=STRATEGIES, default=evaluation.OURS)
    p.add_argument("--epsilon", type=float, default=0.01, help="target regret (default 0.01)")
    p.add_argument("--metric", choices=METRICS, default="ser")
    p.add_argument("--no-early-stop", dest="early_stopping", action="store_false")
    p.add_argument("--max-size", type=int)
    p.add_argument("--size", type=int, help="portfolio size for --strategy greedy_mean")


def _options(args) -> MiningOptions:
    if args.epsilon < 0:
        raise UsageError("--epsilon must be >= 0")
    if args.max_size is not None and args.max_size < 1:
        raise UsageError("--max-size must be positive")
    if args.size is not None and args.size < 1:
        raise UsageError("--size must be positive")
    return MiningOptions(args.epsilon, args.metric, args.early_stopping, args.max_size)


def _load_bundle(args) -> Bundle:
    return Bundle.load(args.evals, args.meta, args.configs, args.missing_policy, args.baseline)


def cmd_mine(args) -> int:
    opts = _options(args)
    bundle = _load_bundle(args)
    portfolio = evaluation.mine(bundle.R, args.strategy, opts, args.size)
    model = fit_decision(portfolio, bundle.R, bundle.tasks)
    write_model(model, args.out)
    print(f"strategy: {args.strategy}")
    print(f"members: {', '.join(bundle.R.config_ids[i] for i in portfolio.members)}")
    print(f"final_ser: {ser(bundle.R, portfolio.members, opts.epsilon)!r}")
    print(f"stop_reason: {portfolio.stop_reason}")
    print(f"model: {args.out} ({len(model.portfolio)} configs, {len(model.anchors)} anchors)")
    return 0


def _query_from_args(args) -> TaskRecord:
    if args.row is not None:
        parts = [p.strip() for p in args.row.split(",")]
        if len(parts) != 4:
            raise UsageError("--row needs n_instances,n_features,n_classes,pct_numeric")
        try:
            values = [int(p) for p in parts[:3]] + [float(parts[3])]
        except ValueError:
            raise UsageError(f"cannot parse --row {args.row!r}") from None
    else:
        values = [args.n_instances, args.n_features, args.n_classes, args.pct_numeric]
        if any(v is None for v in values):
            raise UsageError(
                "give --n-instances, --n-features, --n-classes and --pct-numeric (or --row)"
            )
    try:
        return TaskRecord("query", *values)
    except RangeViolation as exc:
        raise UsageError(str(exc)) from None


def cmd_recommend(args) -> int:
    query = _query_from_args(args)
    model = read_model(args.model)
    print(recommendation_json(recommend(model, query)))
    return 0


def _stats_line(label: str, stats) -> str:
    return f"{label:<16}" + "".join(f"{getattr(stats, c):>9.4f}" for c in STATS_COLUMNS)


def cmd_evaluate(args) -> int:
    opts = _options(args)
    if args.k is not None and args.k < 1:
        raise UsageError("--k must be positive")
    bundle = _load_bundle(args)
    report = evaluation.loo_cv(bundle, args.strategy, opts, args.size, args.k)
    if args.out:
        evaluation.write_report(report, args.out)
    print(f"{'':<16}" + "".join(f"{c:>9}" for c in STATS_COLUMNS))
    print(_stats_line(args.strategy, report.stats))
    if report.kshot_stats is not None:
        print(_stats_line(f"{args.strategy} k={args.k}", report.kshot_stats))
    print(f"tasks: {report.stats.n}")
    return 0


def cmd_curve(args) -> int:
    opts = _options(args)
    bundle = _load_bundle(args)
    order = bundle.task_ids if args.order is None else [t.strip() for t in args.order.split(",")]
    curve = evaluation.scalability_curve(bundle, order, args.strategy, opts, args.size)
    evaluation.write_curve(curve, args.out)
    for n, size in curve:
        print(f"{n}\t{size}")
    return 0


def cmd_map(args) -> int:
    rows = evaluation.export_decision_map(read_model(args.model))
    evaluation.write_decision_map(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_correlate(args) -> int:
    bundle = _load_bundle(args)
    rows = [
        (t.task_id, evaluation.metafeature_rank_correlation(bundle, j))
        for j, t in enumerate(bundle.tasks)
    ]
    evaluation.write_correlation(rows, args.out)
    for tid, rho in rows:
        print(f"{tid}\t{rho:.4f}")
    return 0


def _prefix_paths(prefix: str) -> tuple[Path, Path, Path]:
    if prefix.endswith(("/", os.sep)) or Path(prefix).is_dir():
        base = Path(prefix)
        base.mkdir(parents=True, exist_ok=True)
        return base / "evaluations.csv", base / "metafeatures.csv", base / "configs.json"
    return (
        Path(prefix + "evaluations.csv"),
        Path(prefix + "metafeatures.csv"),
        Path(prefix + "configs.json"),
    )


def cmd_generate(args) -> int:
    try:
        bundle = generate_planted(args.tasks, args.configs, args.clusters, args.noise, args.seed)
    except InvalidShape as exc:
        raise UsageError(str(exc)) from None
    paths = _prefix_paths(args.out)
    bundle.save(*paths)
    for p in paths:
        print(p)
    return 0


def cmd_serve(args) -> int:
    model = read_model(args.model)
    port = int(os.environ.get("PORT", args.port))
    server = make_server(model, args.host, port)
    host, bound = server.server_address[:2]
    print(f"serving {args.model} on http://{host}:{bound}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zsp", description="Mine configuration portfolios and recommend zero-shot."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="mine a portfolio and write portfolio.json")
    _bundle_args(p)
    _mining_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("recommend", help="recommend a config for one task")
    p.add_argument("--model", required=True)
    p.add_argument("--n-instances", type=int)
    p.add_argument("--n-features", type=int)
    p.add_argument("--n-classes", type=int)
    p.add_argument("--pct-numeric", type=float)
    p.add_argument("--row", help="n_instances,n_features,n_classes,pct_numeric")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("evaluate", help="leave-one-task-out regret report")
    _bundle_args(p)
    _mining_args(p)
    p.add_argument("--k", type=int, help="also report k-shot regret of the ordered portfolio")
    p.add_argument("--out", help="report.json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("curve", help="portfolio size versus number of training tasks")
    _bundle_args(p)
    _mining_args(p)
    p.add_argument("--order", help="comma-separated task ids (default: file order)")
    p.add_argument("--out", required=True, help="curve.csv")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("map", help="2-D PCA export of a model's anchors")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="decision_map.csv")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("correlate", help="per-task metafeature rank correlation")
    _bundle_args(p)
    p.add_argument("--out", required=True, help="correlation.csv")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("generate", help="write a synthetic planted bundle")
    p.add_argument("--tasks", type=int, default=50)
    p.add_argument("--configs", type=int, default=200)
    p.add_argument("--clusters", type=int, default=4)
    p.add_argument("--noise", type=float, default=0.005)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix or directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("serve", help="HTTP recommendation service")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080, help="overridden by $PORT")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"zsp {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (PortfolioError, OSError) as exc:
        print(f"zsp {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

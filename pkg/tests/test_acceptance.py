"""One test per acceptance criterion; each prints a PASS/FAIL line.

Lines are also collected in ``conftest.ACCEPTANCE_LINES`` and repeated in the
terminal summary. Run on its own with ``pytest tests/test_acceptance.py -s``.
"""

import json
import math
import threading
import time
import http.client

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES, random_regret
from zeroshot_portfolio import RegretMatrix, load_sample_metafeatures
from zeroshot_portfolio.cli import main
from zeroshot_portfolio.core import (
    ConfigRecord,
    EvaluationRecord,
    TaskRecord,
    read_configs,
    read_evaluations,
    read_metafeatures,
    write_configs,
    write_evaluations,
    write_metafeatures,
)
from zeroshot_portfolio.decision import fit_decision, read_model, recommend, write_model
from zeroshot_portfolio.evaluation import (
    MapRow,
    loo_cv,
    read_correlation,
    read_curve,
    read_decision_map,
    read_report,
    regret_stats,
    simulate_kshot,
    write_correlation,
    write_curve,
    write_decision_map,
    write_report,
)
from zeroshot_portfolio.mining import MiningOptions, Portfolio, greedy_build, ser
from zeroshot_portfolio.planted import generate_planted
from zeroshot_portfolio.service import make_server


def record(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# 1 ---------------------------------------------------------------------------


def test_c01_stepwise_oracle_equivalence():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    mismatches = 0
    steps = 0
    for k in range(200):
        M = random_regret(rng, int(rng.integers(1, 9)), int(rng.integers(1, 11)), discrete=k % 2 == 0)
        eps = float(rng.choice([0.0, 0.01, 0.05, 0.1]))
        for metric in ("ser", "mean"):
            got = list(greedy_build(M, MiningOptions(epsilon=eps, metric=metric)).members)
            want = oracles.brute_greedy(M.values.tolist(), eps, metric)
            steps += len(want)
            mismatches += got != want
    elapsed = time.perf_counter() - start
    record(
        "01 stepwise oracle equivalence",
        mismatches == 0 and elapsed < 30,
        f"{mismatches} mismatching runs of 400 ({steps} steps), {elapsed:.2f}s (limit 30s)",
    )


# 2 ---------------------------------------------------------------------------


def test_c02_ser_monotonicity_fuzz():
    rng = np.random.default_rng(7)
    violations = 0
    for _ in range(1000):
        n_c, n_t = int(rng.integers(1, 12)), int(rng.integers(1, 12))
        M = RegretMatrix.from_array(rng.uniform(0, 1, (n_c, n_t)))
        members = rng.permutation(n_c)[: int(rng.integers(0, n_c + 1))].tolist()
        extra = int(rng.integers(0, n_c))
        eps = float(rng.uniform(0, 0.2))
        violations += not ser(M, members + [extra], eps) <= ser(M, members, eps)
    record("02 SER monotonicity", violations == 0, f"{violations} violations in 1000 triples")


# 3 ---------------------------------------------------------------------------


def test_c03_planted_recovery():
    start = time.perf_counter()
    b = generate_planted(50, 200, 4, 0.005, seed=0)
    p = greedy_build(b.R, MiningOptions(epsilon=0.01))
    report = loo_cv(b, "ours", MiningOptions(epsilon=0.01))
    elapsed = time.perf_counter() - start
    share = sum(r.test_regret <= 0.01 for r in report.per_task) / len(report.per_task)
    exact = set(p.members) == set(b.planted) and len(p.members) == 4
    record(
        "03 planted recovery",
        exact and share >= 0.95 and elapsed < 10,
        f"members={sorted(p.members)} planted={sorted(b.planted)}, "
        f"{share:.0%} of tasks within eps (need 95%), {elapsed:.2f}s (limit 10s)",
    )


# 4 ---------------------------------------------------------------------------


def test_c04_compactness(planted):
    from zeroshot_portfolio.mining import mine_per_task_best

    ours = len(greedy_build(planted.R).members)
    ptb = len(mine_per_task_best(planted.R).members)
    record(
        "04 compactness vs per-task-best",
        planted.R.n_tasks >= 20 and ours == 4 and ptb >= 16 and ptb / ours >= 4,
        f"{planted.R.n_tasks} tasks, |ours|={ours}, |per_task_best|={ptb}, ratio {ptb / ours:.1f}",
    )


# 5 ---------------------------------------------------------------------------


def _train_minus_test(report):
    return float(np.mean([r.train_regret - r.test_regret for r in report.per_task]))


def test_c05_overfit_gap_sign(planted_noisy):
    ptb = _train_minus_test(loo_cv(planted_noisy, "per_task_best"))
    ours = _train_minus_test(loo_cv(planted_noisy, "ours"))
    ratio = math.inf if ours == 0 else abs(ptb) / abs(ours)
    record(
        "05 overfit gap sign",
        ptb < 0 and ratio >= 5,
        f"per_task_best train-test {ptb:+.4g}, ours {ours:+.3g}, ratio {ratio:.3g} (need >= 5)",
    )


# 6 ---------------------------------------------------------------------------


def test_c06_ablation_direction(planted):
    def mean_test(strategy, **kw):
        return loo_cv(planted, strategy, MiningOptions(**kw)).stats.mean

    ours = mean_test("ours")
    by_mean = mean_test("ours", metric="mean")
    no_stop = mean_test("ours", early_stopping=False)
    single = mean_test("single_best")
    within_2x = max(by_mean, no_stop) <= 2 * min(by_mean, no_stop)
    ok = (
        ours <= by_mean
        and within_2x
        and max(by_mean, no_stop) < single
        and single >= 3 * ours
    )
    record(
        "06 ablation direction",
        ok,
        f"ours={ours:.4g} metric=mean={by_mean:.4g} no-early-stop={no_stop:.4g} "
        f"single_best={single:.4g}",
    )


# 7 ---------------------------------------------------------------------------


def test_c07_statistics_oracle():
    rng = np.random.default_rng(70)
    worst = 0.0
    non_monotone = 0
    for _ in range(100):
        xs = rng.exponential(0.05, int(rng.integers(1, 300))).tolist()
        s = regret_stats(xs)
        srt = sorted(xs)
        want = {
            "mean": math.fsum(xs) / len(xs),
            "std": oracles.population_std(xs),
            **{f"p{q}": oracles.percentile(srt, q / 100) for q in (25, 50, 75, 95, 99)},
        }
        worst = max(worst, max(abs(getattr(s, k) - v) for k, v in want.items()))
        non_monotone += not (s.p25 <= s.p50 <= s.p75 <= s.p95 <= s.p99)
    record(
        "07 statistics oracle",
        worst <= 1e-12 and non_monotone == 0,
        f"max abs deviation {worst:.2e} (limit 1e-12), {non_monotone} non-monotone",
    )


# 8 ---------------------------------------------------------------------------


def _random_tasks(rng, n, prefix="t"):
    return [
        TaskRecord(f"{prefix}{j:03d}", int(rng.integers(100, 100000)), int(rng.integers(2, 500)),
                   int(rng.integers(0, 20)), float(rng.uniform(0, 1)))
        for j in range(n)
    ]


def test_c08_decision_invariances():
    import dataclasses

    rng = np.random.default_rng(80)
    affine_bad = self_bad = 0
    for _ in range(50):
        n_t = int(rng.integers(2, 25))
        tasks = _random_tasks(rng, n_t)
        values = rng.uniform(0, 1, (int(rng.integers(2, 10)), n_t))
        values -= values.min(axis=0)
        R = RegretMatrix.from_array(values, task_ids=[t.task_id for t in tasks])
        p = greedy_build(R, MiningOptions(epsilon=0.0, early_stopping=False, max_size=5))
        m = fit_decision(p, R, tasks)
        scale = lambda t: dataclasses.replace(t, n_instances=t.n_instances * 1000)  # noqa: E731
        m2 = fit_decision(p, R, [scale(t) for t in tasks])
        for q in _random_tasks(rng, 10, "q"):
            a, b = recommend(m, q), recommend(m2, scale(q))
            affine_bad += (a.member_index, a.neighbor_task_id) != (b.member_index, b.neighbor_task_id)
        for anchor, t in zip(m.anchors, tasks):
            rec = recommend(m, t)
            self_bad += (rec.member_index, rec.neighbor_task_id) != (anchor.member_index, t.task_id)
    record(
        "08 decision invariances",
        affine_bad == 0 and self_bad == 0,
        f"{affine_bad} affine mismatches in 500 queries, {self_bad} self-consistency failures",
    )


# 9 ---------------------------------------------------------------------------


def test_c09_bundled_table_row_values():
    by_id = {t.task_id: t for t in load_sample_metafeatures()}
    aus, poker = by_id["Australian"], by_id["poker"]
    ok = (
        (aus.n_instances, aus.n_features, aus.n_classes, aus.pct_numeric) == (621, 14, 2, 0.428571429)
        and (poker.n_instances, poker.n_features, poker.n_classes, poker.pct_numeric)
        == (922509, 10, 0, 1.0)
    )
    record("09b bundled table row values", ok, f"Australian={aus}, poker={poker}")


def test_c09_bundled_table_row_count():
    n = len(load_sample_metafeatures())
    # the source appendix table has 76 rows; see the decisions ledger
    record("09a bundled table row count", n == 77, f"parsed {n} TaskRecords, criterion expects 77")


# 10 --------------------------------------------------------------------------


def test_c10_service_equivalence(planted, tmp_path, capsys):
    model_path = tmp_path / "portfolio.json"
    write_model(fit_decision(greedy_build(planted.R), planted.R, planted.tasks), model_path)
    server = make_server(read_model(model_path))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]

    def post(body):
        conn = http.client.HTTPConnection(host, port, timeout=10)
        conn.request("POST", "/recommend", body=body)
        resp = conn.getresponse()
        out = resp.status, resp.read()
        conn.close()
        return out

    rng = np.random.default_rng(100)
    mismatches = 0
    try:
        for _ in range(100):
            q = {"n_instances": int(rng.integers(1, 10**6)), "n_features": int(rng.integers(1, 3000)),
                 "n_classes": int(rng.integers(0, 40)), "pct_numeric": float(rng.uniform(0, 1))}
            status, body = post(json.dumps(q))
            capsys.readouterr()
            main(["recommend", "--model", str(model_path), "--row",
                  f"{q['n_instances']},{q['n_features']},{q['n_classes']},{q['pct_numeric']!r}"])
            mismatches += status != 200 or body != capsys.readouterr().out.encode()
        bad = [
            (b'{"n_instances": 1, "n_features": 1, "n_classes": 0}', 400),
            (b"{not json", 400),
            (b'{"n_instances": "1", "n_features": 1, "n_classes": 0, "pct_numeric": 0.5}', 400),
            (b'{"n_instances": 1, "n_features": 1, "n_classes": 0, "pct_numeric": 2.0}', 422),
            (b'{"n_instances": -1, "n_features": 1, "n_classes": 0, "pct_numeric": 0.5}', 422),
        ]
        wrong_codes = sum(post(body)[0] != code for body, code in bad)
    finally:
        server.shutdown()
        server.server_close()
    record(
        "10 service equivalence",
        mismatches == 0 and wrong_codes == 0,
        f"{mismatches}/100 body mismatches vs recommend CLI, {wrong_codes}/5 wrong error codes",
    )


# 11 --------------------------------------------------------------------------


def test_c11_kshot_monotonicity():
    rng = np.random.default_rng(110)
    violations = 0
    for _ in range(100):
        n_c, n_t = int(rng.integers(1, 15)), int(rng.integers(1, 10))
        R = random_regret(rng, n_c, n_t)
        members = tuple(rng.permutation(n_c)[: int(rng.integers(1, n_c + 1))].tolist())
        t = int(rng.integers(0, n_t))
        seq = [simulate_kshot(R, Portfolio(members), k, t) for k in range(1, n_c + 3)]
        violations += any(a < b for a, b in zip(seq, seq[1:]))
    record("11 k-shot monotonicity", violations == 0, f"{violations} violations in 100 pairs")


# 12 --------------------------------------------------------------------------


def _weird_float(rng):
    return float(rng.choice([rng.normal() * 10.0 ** rng.integers(-300, 300), 0.1 + 0.2, -0.0,
                             5e-324, 1.7976931348623157e308, rng.uniform()]))


def test_c12_round_trip_fidelity(tmp_path):
    rng = np.random.default_rng(120)
    failures = []
    for i in range(50):
        n = int(rng.integers(0, 15))
        ev = [EvaluationRecord(f"t{j}", f"c,{j}\"x" if j % 3 == 0 else f"c{j}", int(rng.integers(0, 9)),
                               math.nan if rng.random() < 0.2 else _weird_float(rng)) for j in range(n)]
        write_evaluations(ev, tmp_path / "e.csv")
        back = read_evaluations(tmp_path / "e.csv")
        same = len(back) == len(ev) and all(
            (a.task_id, a.config_id, a.fold) == (b.task_id, b.config_id, b.fold)
            and (a.failed and b.failed or a.loss == b.loss) for a, b in zip(ev, back))
        if not same:
            failures.append(f"evaluations#{i}")

        mf = [TaskRecord(f"task {j}", int(rng.integers(0, 10**9)), int(rng.integers(0, 10**4)),
                         int(rng.integers(0, 100)), float(rng.uniform())) for j in range(n)]
        write_metafeatures(mf, tmp_path / "m.csv")
        if read_metafeatures(tmp_path / "m.csv") != mf:
            failures.append(f"metafeatures#{i}")

        cf = [ConfigRecord(f"c{j}", "lgbm", {"lr": _weird_float(rng), "n": int(rng.integers(1, 999)),
                                             "tag": "ü\n"}, f"t{j}" if j % 2 else None, bool(j % 3))
              for j in range(n)]
        write_configs(cf, tmp_path / "c.json")
        if read_configs(tmp_path / "c.json") != cf:
            failures.append(f"configs#{i}")

        curve = [(j + 1, int(rng.integers(1, 50))) for j in range(n)]
        write_curve(curve, tmp_path / "curve.csv")
        if read_curve(tmp_path / "curve.csv") != curve:
            failures.append(f"curve#{i}")

        rows = [MapRow(f"t{j}", _weird_float(rng), _weird_float(rng), int(rng.integers(0, 5)))
                for j in range(n)]
        write_decision_map(rows, tmp_path / "map.csv")
        if read_decision_map(tmp_path / "map.csv") != rows:
            failures.append(f"map#{i}")

        corr = [(f"t{j}", float(rng.uniform(-1, 1))) for j in range(n)]
        write_correlation(corr, tmp_path / "corr.csv")
        if read_correlation(tmp_path / "corr.csv") != corr:
            failures.append(f"correlation#{i}")

        n_t = int(rng.integers(2, 12))
        tasks = _random_tasks(rng, n_t)
        values = rng.uniform(0, 1, (int(rng.integers(1, 8)), n_t))
        values -= values.min(axis=0)
        R = RegretMatrix.from_array(values, task_ids=[t.task_id for t in tasks])
        m = fit_decision(greedy_build(R, MiningOptions(epsilon=0.0, early_stopping=False)), R, tasks)
        write_model(m, tmp_path / "p.json")
        if read_model(tmp_path / "p.json") != m:
            failures.append(f"portfolio#{i}")

    from zeroshot_portfolio.evaluation import Bundle

    b = generate_planted(12, 30, 3, 0.01, seed=5)
    report = loo_cv(Bundle.from_regret(b.R), "greedy_mean", k=2)
    write_report(report, tmp_path / "r.json")
    if read_report(tmp_path / "r.json") != report:
        failures.append("report")
    record(
        "12 round-trip fidelity",
        not failures,
        f"350 fuzzed file instances + 1 report, failures: {failures or 'none'}",
    )


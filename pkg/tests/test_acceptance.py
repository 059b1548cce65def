"""Acceptance criteria 1-11, one test each, at the published tolerances.

Each test appends a "criterion N: PASS|FAIL ..." line that conftest prints in
the terminal summary. Criteria 1 and 3 do not reproduce; they are strict
xfails so a future fix shows up as XPASS (analysis in the decisions ledger).
"""

import copy
import json
import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from tsforecast import cli, diagnostics, experiments, metrics, svm
from tsforecast.datasets import DATASET_NAMES, load_dataset
from tsforecast.series import Difference, TransformPipeline, fractional_difference


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("reproduce") / "all.json"
    t0 = time.perf_counter()
    code = cli.main(["--out", "json", "reproduce", "all", "--check", "--output", str(out)])
    elapsed = time.perf_counter() - t0
    rows = json.loads(out.read_text())["rows"]
    return code, elapsed, rows


def pick(rows, table, row, measure):
    return next(r for r in rows if r["table"] == table and r["row"] == row and r["measure"] == measure)


def _sarima(full_run, n, table, row, published_mape, limit):
    rows = full_run[2]
    mape = pick(rows, table, row, "mape")
    rt = pick(rows, table, row, "runtime_s")
    ok = abs(mape["reproduced"] - published_mape) <= 1.0 and rt["reproduced"] < limit
    record(n, ok, f"{table} {row}: mape {mape['reproduced']:.4f} vs {published_mape} +-1pp, "
                  f"runtime {rt['reproduced']:.2f}s < {limit}s")
    assert mape["pass"] and rt["pass"]
    assert ok


@pytest.mark.xfail(strict=True, reason="Yule-Walker AR(12) on log10 lynx gives MAPE 8.5%; see ledger")
def test_criterion_1_lynx_ar12(full_run):
    rows = full_run[2]
    mape = pick(rows, "lynx", "AR(12)", "mape")["reproduced"]
    rmse = pick(rows, "lynx", "AR(12)", "rmse")["reproduced"]
    rt = pick(rows, "lynx", "AR(12)", "runtime_s")["reproduced"]
    ok = abs(mape - 1.950160) <= 0.75 and abs(rmse / 0.071577 - 1) <= 0.30 and rt < 1.0
    record(1, ok, f"lynx AR(12): mape {mape:.4f} vs 1.950160 +-0.75pp, rmse {rmse:.4f} vs 0.071577 +-30%, "
                  f"runtime {rt:.3f}s")
    assert ok


def test_criterion_2_airline_sarima(full_run):
    _sarima(full_run, 2, "airline", "SARIMA(0,1,1)x(0,1,1)12", 2.244234, 10.0)


@pytest.mark.xfail(strict=True, reason="CSS and exact ML both give about 4% MAPE on qsales; see ledger")
def test_criterion_3_qsales_sarima(full_run):
    _sarima(full_run, 3, "qsales", "SARIMA(0,1,1)x(0,1,1)4", 1.335287, 5.0)


def test_criterion_4_deaths_sarima(full_run):
    _sarima(full_run, 4, "deaths", "SARIMA(0,1,1)x(0,1,1)12", 1.694144, 10.0)


def test_criterion_5_svm_rows(full_run):
    rows = full_run[2]
    res = {r["table"]: r["reproduced"] for r in rows if r["measure"] == "system_residual"}
    assert set(res) == {"lynx", "sunspot", "airline", "qsales", "beer"} | ({"deaths"} & set(res))
    worst = max(res.values())
    mape = pick(rows, "lynx", "SVM", "mape")["reproduced"]
    ok = worst <= 1e-8 and mape <= 2 * 5.811812
    record(5, ok, f"max system residual {worst:.2e} <= 1e-8 over {len(res)} rows, "
                  f"lynx SVM mape {mape:.4f} <= {2 * 5.811812:.4f} (recursive protocol)")
    assert ok


def test_criterion_6_neural(full_run):
    rows = full_run[2]
    grads = [r["reproduced"] for r in rows if r["measure"] == "gradient_check"]
    mono = [r["reproduced"] for r in rows if r["measure"] == "max_loss_increase"]
    mape = pick(rows, "airline", "ANN(1,2,12;2)", "mape")["reproduced"]
    ok = len(grads) == 3 and max(grads) < 1e-4 and len(mono) == 3 and max(mono) <= 0 and mape <= 5.0
    record(6, ok, f"gradient check max {max(grads):.1e} < 1e-4, max loss increase {max(mono):.1e} <= 0, "
                  f"airline ANN(1,2,12;2) median mape {mape:.4f} <= 5 over 10 seeds")
    assert ok


def _lssvm_case(rng, n_points, n=4, sigma=1.0, gamma=50.0):
    x = np.cumsum(rng.standard_normal(n_points + n + 1)) * 0.3
    X, y = svm.embed(x, svm.WindowConfig(n, n_points))
    return X, y, svm.RbfKernel(sigma), gamma


def test_criterion_7_dlssvm(rng):
    t0 = time.perf_counter()
    worst_add = 0.0
    for trial in range(20):
        X, y, k, gamma = _lssvm_case(rng, 30, sigma=rng.uniform(0.5, 3), gamma=10 ** rng.uniform(0, 3))
        m = svm.fit_lssvm(X[:-1], y[:-1], gamma, k)
        grown = svm.dlssvm_add(m, X[-1], y[-1])
        direct = np.linalg.inv(svm.bordered_matrix(X, gamma, k))
        worst_add = max(worst_add, float(np.max(np.abs(grown.q_inverse - direct))))

    x = np.cumsum(rng.standard_normal(200)) * 0.3
    cfg = svm.WindowConfig(4, 60)
    Xa, ya = svm.embed(x, svm.WindowConfig(4, 110))
    k, gamma = svm.RbfKernel(1.5), 100.0
    m = svm.fit_lssvm(Xa[:60], ya[:60], gamma, k)
    worst_cycle = 0.0
    for i in range(50):
        m = svm.dlssvm_prune(svm.dlssvm_add(m, Xa[60 + i], ya[60 + i]))
        batch = svm.fit_lssvm(Xa[i + 1: 61 + i], ya[i + 1: 61 + i], gamma, k)
        worst_cycle = max(worst_cycle, float(np.max(np.abs(m.alpha - batch.alpha))), abs(m.b - batch.b))
    elapsed = time.perf_counter() - t0
    ok = worst_add <= 1e-8 and worst_cycle <= 1e-6 and elapsed < 5.0
    record(7, ok, f"single add |dQinv|inf {worst_add:.1e} <= 1e-8, 50 cycles on a {cfg.N}-point window "
                  f"|d alpha| {worst_cycle:.1e} <= 1e-6, {elapsed:.2f}s < 5s")
    assert ok


def _brute_acf(x, K):
    n = len(x)
    m = sum(x) / n
    c = []
    for k in range(K + 1):
        s = 0.0
        for t in range(n - k):
            s += (x[t] - m) * (x[t + k] - m)
        c.append(s / n)
    return np.array([ck / c[0] for ck in c])


def _yw_last(r, k):
    R = np.array([[r[abs(i - j)] for j in range(k)] for i in range(k)])
    return np.linalg.solve(R, r[1: k + 1])[-1]


def test_criterion_8_diagnostics_oracles(rng):
    worst_acf = worst_pacf = 0.0
    for _ in range(100):
        n = int(rng.integers(30, 200))
        phi = rng.uniform(-0.8, 0.8)
        e = rng.standard_normal(n)
        x = np.empty(n)
        x[0] = e[0]
        for t in range(1, n):
            x[t] = phi * x[t - 1] + e[t]
        x = x * rng.uniform(0.1, 100) + rng.uniform(-50, 50)
        K = min(20, n // 4)
        got = diagnostics.acf(x, K).values
        ref = _brute_acf(x.tolist(), K)
        worst_acf = max(worst_acf, float(np.max(np.abs(got - ref))))
        pac = diagnostics.pacf(x, K).values
        yw = np.array([_yw_last(ref, k) for k in range(1, K + 1)])
        worst_pacf = max(worst_pacf, float(np.max(np.abs(pac[1:] - yw))))
    ok = worst_acf <= 1e-12 and worst_pacf <= 1e-10
    record(8, ok, f"ACF vs double loop {worst_acf:.1e} <= 1e-12, PACF vs Yule-Walker solves "
                  f"{worst_pacf:.1e} <= 1e-10 on 100 series")
    assert ok


def _toy_oracle():
    y, f = [1.0, 2.0, 3.0], [2.0, 2.0, 2.0]
    e = [a - b for a, b in zip(y, f)]
    n = 3
    mse = sum(v * v for v in e) / n
    ybar = sum(y) / n
    var = sum((v - ybar) ** 2 for v in y) / (n - 1)
    return {
        "mfe": sum(e) / n,
        "mae": sum(abs(v) for v in e) / n,
        "mape": 100 * sum(abs(a / b) for a, b in zip(e, y)) / n,
        "mpe": 100 * sum(a / b for a, b in zip(e, y)) / n,
        "mse": mse,
        "sse": sum(v * v for v in e),
        "smse": sum(math.copysign(v * v, v) if v else 0.0 for v in e) / n,
        "rmse": math.sqrt(mse),
        "nmse": mse / var,
        "theil_u": math.sqrt(mse) / (math.sqrt(sum(v * v for v in f) / n) * math.sqrt(sum(v * v for v in y) / n)),
    }


def test_criterion_9_metrics(rng):
    got = metrics.evaluate([1, 2, 3], [2, 2, 2])
    oracle = _toy_oracle()
    toy_err = max(abs(getattr(got, k) - v) for k, v in oracle.items())

    bad = 0
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        y = rng.uniform(0.5, 100, n)
        f = y + rng.normal(0, 5, n)
        lam = float(rng.uniform(0.01, 100))
        a, b = metrics.evaluate(y, f), metrics.evaluate(lam * y, lam * f)
        close = lambda u, v: math.isclose(u, v, rel_tol=1e-9, abs_tol=1e-12)
        scale_ok = (
            all(close(getattr(b, k), lam * getattr(a, k)) for k in ("mfe", "mae", "rmse"))
            and all(close(getattr(b, k), lam ** 2 * getattr(a, k)) for k in ("mse", "sse", "smse"))
            and all(close(getattr(b, k), getattr(a, k)) for k in ("mape", "mpe", "nmse"))
            # product-form denominator: U carries degree -1 in the common scale
            and close(b.theil_u, a.theil_u / lam)
        )
        c = metrics.evaluate(y, 2 * y - f)  # every error flips sign
        sign_ok = (
            all(close(getattr(c, k), -getattr(a, k)) for k in ("mfe", "mpe", "smse"))
            and all(close(getattr(c, k), getattr(a, k)) for k in ("mae", "mape", "mse", "rmse", "nmse"))
            and np.sign(a.mfe) == np.sign(np.sum(y - f))
            and a.mae >= abs(a.mfe) and a.rmse >= a.mae - 1e-12
        )
        bad += not (scale_ok and sign_ok)
    ok = toy_err <= 1e-9 and bad == 0
    record(9, ok, f"toy triple max error {toy_err:.1e} <= 1e-9 on 10 measures, "
                  f"{1000 - bad}/1000 pairs satisfy scale and sign laws")
    assert ok


def test_criterion_10_round_trips():
    worst, worst_frac, count = 0.0, 0.0, 0
    for row in experiments.table_rows("all", (0,)):
        cfg = row.config
        pipe = TransformPipeline([copy.deepcopy(s) for s in (*cfg.scale, *cfg.transform)])
        x = load_dataset(cfg.dataset.name).values
        back = pipe.invert(pipe.apply(x))
        worst = max(worst, float(np.max(np.abs(back - x) / np.maximum(1.0, np.abs(x)))))
        count += 1
    for name in DATASET_NAMES:
        x = load_dataset(name).values
        full = Difference(1).apply(x)
        for T in (1, 5, x.size - 1):
            # truncation T drops the first T outputs; higher weights vanish at d = 1
            got = fractional_difference(x, 1.0, T)
            worst_frac = max(worst_frac, float(np.max(np.abs(got - full[T - 1:]))))
    ok = worst <= 1e-10 and worst_frac == 0.0 and count >= 6
    record(10, ok, f"invert(apply(x)) max error {worst:.1e} <= 1e-10 over {count} row pipelines, "
                   f"fractional d=1 vs Difference(1) max gap {worst_frac}")
    assert ok


def test_criterion_11_full_reproduce(full_run):
    code, elapsed, rows = full_run
    judged = {(r["table"], r["row"]) for r in rows if r["pass"] is not None}
    needed = {key for key in experiments._RULES} | {
        (r.config.dataset.name, r.config.label)
        for r in experiments.table_rows("all", (0,)) if isinstance(r.config.model, experiments.SvmSpec)
    }
    props = sum(r["table"] == "properties" for r in rows)
    failing = any(r["pass"] is False for r in rows)
    ok = elapsed < 300 and needed <= judged and props == 6 and code == (3 if failing else 0)
    record(11, ok, f"reproduce all --check in {elapsed:.1f}s < 300s, verdicts on {len(judged)} rows "
                   f"plus {props} property checks, exit code {code}")
    assert ok

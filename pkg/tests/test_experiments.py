import numpy as np
import pytest

from tsforecast import experiments as E
from tsforecast.datasets import descriptor, load_dataset
from tsforecast.series import Log10, NaturalLog, TransformPipeline


def _row(table, label, seeds=(0,)):
    return next(r for r in E.table_rows(table, seeds) if r.config.label == label)


def test_table_layouts():
    assert [r.config.label for r in E.table_rows("7.2", (0,))] == ["AR(12)", "ARMA(12,9)", "ANN", "SVM"]
    beer = [r.config.label for r in E.table_rows("beer", (0,))]
    assert [l for l in beer if l.startswith("SANN")] == ["SANN(1)", "SANN(2)", "SANN(3)", "SANN(4)"]
    assert len(E.table_rows("all", (0,))) == 4 + 3 + 8 + 5 + 6 + 3
    with pytest.raises(ValueError):
        E.resolve_tables("7.9")


def test_evaluation_scales():
    assert _row("lynx", "AR(12)").config.evaluation_scale == "transformed"
    assert _row("deaths", "SVM").config.scale[0].k == 100.0
    assert _row("airline", "SVM").config.evaluation_scale == "original"
    tl = _row("airline", "ANN(1,12,13;2)").config.model.topology
    assert tl.lags == (1, 12, 13)


def test_run_experiment_stochastic():
    rep = E.run_experiment(_row("lynx", "AR(12)").config)
    assert rep.actual.size == rep.forecast.size == 14
    assert np.allclose(rep.actual, np.log10(load_dataset("lynx").values[100:]))
    d = rep.to_dict()
    assert d["config"]["model"]["method"] == "yule-walker" and d["version"]


def test_run_experiment_neural_reports_seed_medians():
    cfg = _row("deaths", "SANN(4)", seeds=(0, 1, 2)).config
    rep = E.run_experiment(cfg)
    assert len(rep.per_seed) == 3
    assert rep.evaluation.mape == sorted(e.mape for e in rep.per_seed)[1]
    assert rep.forecast.size == 12
    again = E.run_experiment(cfg)
    assert np.array_equal(rep.forecast, again.forecast)


def test_run_experiment_svm_protocols():
    rec = E.run_experiment(_row("lynx", "SVM").config)
    one = E.run_experiment(E.table_rows("lynx", (0,), svm_protocol="one-step")[3].config)
    assert rec.extras["system_residual"] <= 1e-8
    assert rec.config.model.protocol == "recursive" and one.config.model.protocol == "one-step"
    assert rec.forecast[0] == pytest.approx(one.forecast[0])
    assert not np.allclose(rec.forecast, one.forecast)


def test_sunspot_svm_rescale_round_trip():
    rep = E.run_experiment(_row("sunspot", "SVM").config)
    assert np.allclose(rep.actual, load_dataset("sunspot").values[221:])
    assert rep.forecast.min() > -50 and rep.forecast.max() < 300


def test_config_validation():
    d = descriptor("lynx")
    with pytest.raises(ValueError):
        E.ExperimentConfig(d, "x", E.SvmSpec(1.0, 1.0, 10, 95))
    with pytest.raises(ValueError):
        E.ExperimentConfig(d, "x", E.StochasticSpec(E.stochastic.SarimaOrder(1)), scale=(Log10(),),
                           evaluation_scale="original")
    with pytest.raises(ValueError):
        E.SvmSpec(1.0, 1.0, 2, 3, protocol="batch")


def test_diagram_round_trip(tmp_path):
    rep = E.run_experiment(_row("lynx", "AR(12)").config)
    path = tmp_path / "d.csv"
    E.emit_diagram_data(rep, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,actual,forecast" and len(lines) == 15
    idx, a, f = E.read_diagram_data(path)
    assert idx.tolist() == list(range(101, 115))
    assert np.array_equal(a, rep.actual) and np.array_equal(f, rep.forecast)
    with pytest.raises(OSError):
        E.emit_diagram_data(rep, tmp_path / "missing" / "d.csv")


def test_reproduce_lynx_table():
    comp = E.reproduce("7.2", seeds=(0, 1))
    measures = [r for r in comp.rows if r.measure in E.MEASURES]
    assert len(measures) == 4 * 5
    assert [r.row for r in comp.rows][0] == "AR(12)"
    ar_mape = next(r for r in comp.rows if r.row == "AR(12)" and r.measure == "mape")
    assert ar_mape.paper == 1.950160 and ar_mape.passed is not None
    again = E.reproduce("7.2", seeds=(0, 1))
    assert [r.reproduced for r in again.rows if r.measure != "runtime_s"] == \
        [r.reproduced for r in comp.rows if r.measure != "runtime_s"]


def test_comparison_csv(tmp_path):
    comp = E.reproduce("deaths", seeds=(0,), workers=3)
    p = tmp_path / "c.csv"
    comp.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "table,row,measure,paper,reproduced,rel_diff,pass"
    assert [r.config.label for r in comp.reports] == ["SARIMA(0,1,1)x(0,1,1)12", "SANN(4)", "SVM"]

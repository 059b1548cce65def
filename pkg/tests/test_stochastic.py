import math

import numpy as np
import pytest

from tsforecast import stochastic as S
from tsforecast.datasets import load_dataset
from tsforecast.errors import EstimationError, SearchError
from tsforecast.metrics import evaluate
from tsforecast.series import Log10, NaturalLog, TransformPipeline


def test_order_properties():
    o = S.SarimaOrder(1, 1, 1, 0, 1, 1, 12)
    assert o.n_arma == 3 and not o.has_constant and o.n_params == 3 and o.total_lag == 13
    assert str(o) == "SARIMA(1,1,1)x(0,1,1)12"
    assert S.SarimaOrder(2).n_params == 3
    with pytest.raises(ValueError):
        S.SarimaOrder(P=1)
    with pytest.raises(ValueError):
        S.SarimaOrder(p=-1)


def test_polynomial_expansion():
    a = S.expand_ar([0.5], [0.3], 4)
    # (1 - 0.5L)(1 - 0.3L^4)
    assert np.allclose(a, [1, -0.5, 0, 0, -0.3, 0.15])
    b = S.expand_ma([0.4], [0.6], 2)
    assert np.allclose(b, [1, 0.4, 0.6, 0.24])
    assert S.min_root_modulus(np.array([1.0, -0.5])) == pytest.approx(2.0)


def test_information_criteria_formulas():
    sc = S.information_criteria(100, 3, 50.0)
    base = 100 * math.log(0.5)
    assert sc.aic == pytest.approx(base + 6)
    assert sc.bic == pytest.approx(base + 3 + 3 * math.log(100))
    assert S.information_criteria(100, 3, 50.0, standard=True).bic == pytest.approx(base + 3 * math.log(100))
    with pytest.raises(ValueError):
        S.information_criteria(10, 1, 0.0)


def test_yule_walker_recovers_ar2():
    x = S.simulate_arma(3000, phi=[0.6, -0.3], c=2.0, seed=4)
    m = S.fit_ar_yule_walker(x, 2)
    assert np.allclose(m.phi, [0.6, -0.3], atol=0.05)
    assert m.c / (1 - m.phi.sum()) == pytest.approx(2.0 / 0.7, rel=0.05)
    with pytest.raises(ValueError):
        S.fit_ar_yule_walker(x[:10], 5)


def test_css_recovers_arma11_and_objective_consistency():
    x = S.simulate_arma(2000, phi=[0.5], theta=[0.4], seed=11)
    m = S.fit_css(x, S.SarimaOrder(1, 0, 1))
    assert m.phi[0] == pytest.approx(0.5, abs=0.07)
    assert m.theta[0] == pytest.approx(0.4, abs=0.07)
    e = S.model_residuals(m, m.pipeline.apply(x))
    assert float(e @ e) == pytest.approx(m.sse, rel=1e-9)
    stat, inv, _ = S.check_roots(m)
    assert stat and inv


def test_css_pure_differencing_closed_form():
    x = np.cumsum(np.random.default_rng(2).standard_normal(50)) + 10
    m = S.fit_css(x, S.SarimaOrder(0, 1, 0))
    assert m.c == 0.0 and m.sse == pytest.approx(float(np.sum(np.diff(x) ** 2)))
    fc = S.forecast(m, x, 3)
    assert np.allclose(fc, x[-1])


def test_css_too_short():
    with pytest.raises(EstimationError):
        S.fit_css(np.arange(1.0, 8.0), S.SarimaOrder(2, 0, 2))


def test_forecast_ma1_reverts_to_mean():
    x = S.simulate_arma(400, theta=[0.6], c=5.0, seed=3)
    m = S.fit_css(x, S.SarimaOrder(0, 0, 1))
    fc = S.forecast(m, x, 5)
    assert np.allclose(fc[1:], m.c)
    assert fc[0] != pytest.approx(m.c)


def test_forecast_ar1_decays_geometrically():
    m = S.SarimaModel(S.SarimaOrder(1), 0.0, [0.5], [], [], [], 1.0)
    x = np.array([0.3, -0.2, 0.1, 0.8])
    fc = S.forecast(m, x, 4)
    assert np.allclose(fc, 0.8 * 0.5 ** np.arange(1, 5))


def test_airline_model_fit():
    y = load_dataset("airline").values
    m = S.fit_css(y[:132], S.SarimaOrder(0, 1, 1, 0, 1, 1, 12), TransformPipeline([NaturalLog()]))
    assert -0.6 < m.theta[0] < -0.2 and -0.8 < m.Theta[0] < -0.3
    fc = S.forecast(m, y[:132], 12)
    assert evaluate(y[132:], fc).mape < 4.0
    d = S.diagnostic_check(m, y[:132])
    assert 0.0 <= d.fraction_inside <= 1.0


def test_model_serialization_round_trip():
    y = load_dataset("lynx").values
    m = S.fit_ar_yule_walker(y[:100], 3, TransformPipeline([Log10()]))
    m2 = S.SarimaModel.from_dict(m.to_dict())
    assert np.allclose(S.forecast(m, y[:100], 5), S.forecast(m2, y[:100], 5))


def test_root_penalty():
    assert S.root_penalty([0.5], [0.2], [], []) == 0.0
    assert S.root_penalty([1.2], [], [], []) > 0.0
    assert S.root_penalty([], [-1.5], [], []) > 0.0


def test_box_jenkins_search_picks_true_order():
    x = S.simulate_arma(300, phi=[0.7], seed=22)
    grid = [S.SarimaOrder(p, 0, q) for p in range(3) for q in range(2)]
    r = S.box_jenkins_search(x, grid, "bic")
    assert r.model.order == S.SarimaOrder(1, 0, 0)
    assert r.diagnostics.passed
    # evaluation order does not matter
    r2 = S.box_jenkins_search(x, list(reversed(grid)), "bic", workers=3)
    assert r2.model.order == r.model.order
    with pytest.raises(ValueError):
        S.box_jenkins_search(x, grid, "hqic")
    with pytest.raises(SearchError):
        S.box_jenkins_search(x[:6], [S.SarimaOrder(3, 0, 3)])


def test_simulators():
    y = S.simulate_nma(500, 0.5, seed=1)
    assert len(y) == 500
    a = S.simulate_arma(10, phi=[0.5], seed=9)
    assert np.array_equal(a, S.simulate_arma(10, phi=[0.5], seed=9))
    add = S.simulate_components(24, trend=lambda t: t, seasonal=np.tile([1.0, -1.0], 12))
    assert add.values[3] == pytest.approx(2.0)
    mul = S.simulate_components(4, trend=2.0, seasonal=[1, 2, 3, 4], mode="multiplicative")
    assert mul.values.tolist() == [2.0, 4.0, 6.0, 8.0]
    with pytest.raises(ValueError):
        S.simulate_components(4, mode="mixed")

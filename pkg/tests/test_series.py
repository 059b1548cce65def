import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma as G

from tsforecast.errors import DomainError, StateError
from tsforecast.series import (BoxCox, Difference, Log10, NaturalLog, RangeRescale, ScaleDivide,
                               TimeSeries, TransformPipeline, apply, fracdiff_weights,
                               fractional_difference, invert, read_series, split, write_series)


def test_timeseries_validates():
    with pytest.raises(ValueError):
        TimeSeries([])
    with pytest.raises(ValueError):
        TimeSeries([1.0, math.nan])
    with pytest.raises(ValueError):
        TimeSeries([1.0, 2.0, 3.0], period=4)
    ts = TimeSeries([1, 2, 3, 4], period=2, label="x")
    assert len(ts) == 4 and ts.period == 2
    with pytest.raises(ValueError):
        ts.values[0] = 9.0


def test_split():
    a, b = split(TimeSeries(np.arange(10.0), period=4), 7)
    assert len(a) == 7 and len(b) == 3 and a.period == 4 and b.period is None
    with pytest.raises(ValueError):
        split(TimeSeries(np.arange(10.0)), 10)


def test_difference_examples():
    p = TransformPipeline([Difference(1)])
    z = p.apply(np.array([1.0, 4.0, 9.0, 16.0]))
    assert z.tolist() == [3.0, 5.0, 7.0]
    assert p.invert(z).tolist() == [1.0, 4.0, 9.0, 16.0]
    # continuation integrates from the last observation
    assert p.invert_forecast([9.0, 11.0]).tolist() == [25.0, 36.0]


def test_seasonal_difference_continuation():
    x = np.arange(1, 25, dtype=float) + np.tile([0.0, 5.0, -3.0, 1.0], 6)
    p = TransformPipeline([Difference(1), Difference(4)])
    z = p.apply(x)
    assert z.size == x.size - 5 and np.allclose(z, 0.0)
    fc = p.invert_forecast(np.zeros(4))
    assert np.allclose(fc, x[-4:] + 4.0)


def test_unapplied_steps_raise():
    with pytest.raises(StateError):
        Difference(1).invert(np.zeros(3))
    with pytest.raises(StateError):
        RangeRescale(0, 1).invert(np.zeros(3))


def test_domain_errors():
    for step in (Log10(), NaturalLog(), BoxCox(0.5)):
        with pytest.raises(DomainError):
            step.apply(np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        RangeRescale(0, 1).apply(np.ones(4))
    with pytest.raises(ValueError):
        ScaleDivide(0.0)


def test_boxcox_zero_is_log():
    x = np.array([0.5, 1.0, 7.0])
    assert np.array_equal(BoxCox(0.0).apply(x), np.log(x))


def test_rescale_maps_range():
    r = RangeRescale(100.0, 400.0)
    z = r.apply(np.array([3.0, 5.0, 11.0]))
    assert z.min() == 100.0 and z.max() == 400.0
    assert np.allclose(r.invert(z), [3.0, 5.0, 11.0])


def test_pipeline_serialization_round_trip():
    x = np.linspace(1, 30, 30) ** 1.3
    p = TransformPipeline([NaturalLog(), Difference(1), Difference(12)])
    z = p.apply(x)
    q = TransformPipeline.from_list(p.to_list())
    assert np.allclose(q.invert(z), x, rtol=1e-12)
    assert q.total_lag == 13


def test_module_level_helpers_keep_timeseries():
    ts = TimeSeries(np.arange(1.0, 30.0), period=12)
    p = TransformPipeline([Log10()])
    z = apply(p, ts)
    assert isinstance(z, TimeSeries) and z.period == 12
    back = invert(p, z)
    assert np.allclose(back.values, ts.values)


positive = st.lists(st.floats(0.01, 1e4, allow_nan=False), min_size=20, max_size=60)


@settings(max_examples=60, deadline=None)
@given(positive, st.sampled_from(["log10", "log", "div", "boxcox", "rescale"]), st.integers(1, 4))
def test_round_trip_property(values, kind, lag):
    step = {"log10": Log10(), "log": NaturalLog(), "div": ScaleDivide(7.0),
            "boxcox": BoxCox(0.3), "rescale": RangeRescale(1.0, 2.0)}[kind]
    x = np.array(values)
    if kind == "rescale" and np.ptp(x) == 0:
        return
    p = TransformPipeline([step, Difference(lag)])
    z = p.apply(x)
    assert np.allclose(p.invert(z), x, rtol=1e-10, atol=1e-10 * np.abs(x).max())


def _gamma_ratio(d, k):
    # pi_k = Gamma(k - d) / (Gamma(k + 1) Gamma(-d))
    return G(k - d) / (G(k + 1) * G(-d))


@pytest.mark.parametrize("d", [0.2, 0.45, -0.3, 0.75])
def test_fracdiff_weights_match_gamma_ratio(d):
    w = fracdiff_weights(d, 30)
    oracle = np.array([1.0] + [_gamma_ratio(d, k) for k in range(1, 31)])
    assert np.allclose(w, oracle, rtol=1e-10, atol=1e-14)


def test_fracdiff_integer_cases():
    x = np.random.default_rng(1).standard_normal(50).cumsum()
    assert np.array_equal(fractional_difference(x, 0.0, 5), x[5:])
    one = fractional_difference(x, 1.0, 1)
    assert np.array_equal(one, TransformPipeline([Difference(1)]).apply(x))
    assert np.allclose(fracdiff_weights(2.0, 4), [1, -2, 1, 0, 0])


def test_fracdiff_truncation_bounds():
    with pytest.raises(ValueError):
        fractional_difference(np.arange(5.0), 0.3, 5)
    with pytest.raises(ValueError):
        fractional_difference(np.arange(5.0), 0.3, 0)


def test_series_io(tmp_path):
    p = tmp_path / "s.dat"
    write_series([1.5, 2.0, 3.25], p, header=["demo"])
    text = p.read_text()
    assert text.startswith("# demo")
    ts = read_series(p, label="demo")
    assert ts.values.tolist() == [1.5, 2.0, 3.25] and ts.label == "demo"

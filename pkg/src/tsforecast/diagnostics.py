"""Sample ACVF/ACF/PACF and a Dickey-Fuller unit-root check."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSeriesError
from .series import as_array

# 5% critical value, constant / no trend / no augmentation
DF_CRITICAL_5PCT = -2.86


@dataclass(frozen=True)
class CorrelogramResult:
    lags: np.ndarray
    values: np.ndarray
    band: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["lag", "value", "band_low", "band_high"])
            for k, v in zip(self.lags, self.values):
                w.writerow([int(k), repr(float(v)), repr(-float(self.band)), repr(float(self.band))])


@dataclass(frozen=True)
class StationarityVerdict:
    test_statistic: float
    critical_value: float
    stationary: bool


def default_max_lag(n: int) -> int:
    return max(1, n // 4)


def acvf(series, max_lag: int | None = None) -> np.ndarray:
    """c_k = (1/n) sum_{t=1}^{n-k} (x_t - mean)(x_{t+k} - mean), k = 0..max_lag."""
    x = as_array(series)
    n = x.size
    if max_lag is None:
        max_lag = default_max_lag(n)
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must be in [0, {n - 1}]")
    d = x - x.mean()
    return np.array([d[: n - k] @ d[k:] / n for k in range(max_lag + 1)])


def acf(series, max_lag: int | None = None) -> CorrelogramResult:
    x = as_array(series)
    c = acvf(x, max_lag)
    if c[0] <= 0:
        raise DegenerateSeriesError("constant series has no autocorrelation")
    return CorrelogramResult(np.arange(c.size), c / c[0], float(1.96 / np.sqrt(x.size)))


def durbin_levinson(r: np.ndarray) -> np.ndarray:
    """Partial autocorrelations phi_kk, k = 1..len(r)-1, from autocorrelations r_0..r_K."""
    K = r.size - 1
    out = np.empty(K)
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, K + 1):
        a = (r[k] - phi @ r[k - 1:0:-1]) / v
        phi = np.append(phi - a * phi[::-1], a)
        v *= 1.0 - a * a
        out[k - 1] = a
        if v <= 1e-14 and k < K:
            raise DegenerateSeriesError("autocorrelation Toeplitz system is singular")
    return out


def pacf(series, max_lag: int | None = None) -> CorrelogramResult:
    """PACF by Durbin-Levinson; values[0] holds 1 for lag 0."""
    x = as_array(series)
    r = acf(x, max_lag).values
    vals = np.concatenate([[1.0], durbin_levinson(r)])
    return CorrelogramResult(np.arange(vals.size), vals, float(1.96 / np.sqrt(x.size)))


def dickey_fuller(series) -> StationarityVerdict:
    """Regress dx_t on (1, x_{t-1}); t-ratio of the lagged level coefficient."""
    x = as_array(series)
    if x.size < 10:
        raise ValueError("Dickey-Fuller needs at least 10 observations")
    dy = np.diff(x)
    lag = x[:-1]
    if np.ptp(lag) == 0:
        raise DegenerateSeriesError("lagged level has zero variance")
    X = np.column_stack([np.ones_like(lag), lag])
    beta, *_ = np.linalg.lstsq(X, dy, rcond=None)
    resid = dy - X @ beta
    dof = dy.size - 2
    s2 = resid @ resid / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    stat = float(beta[1] / np.sqrt(cov[1, 1]))
    return StationarityVerdict(stat, DF_CRITICAL_5PCT, stat < DF_CRITICAL_5PCT)

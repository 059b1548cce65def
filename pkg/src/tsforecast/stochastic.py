"""Box-Jenkins models: estimation, forecasting, order selection and simulators.

Models are written on the differenced scale z_t as

    a(L) z_t = c + b(L) e_t

where a(L) = phi(L) Phi(L^s) and b(L) = theta(L) Theta(L^s) are expanded by
coefficient convolution. Lag polynomials are stored as coefficient arrays
indexed by lag, so ``a = [1, -phi_1, ..., -phi_p]`` and
``b = [1, theta_1, ..., theta_q]``.
"""

from __future__ import annotations

import copy
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.signal import lfilter

from . import diagnostics
from .errors import DegenerateSeriesError, EstimationError, SearchError
from .numerics import NelderMeadConfig, levinson_toeplitz, nelder_mead
from .series import Difference, TimeSeries, TransformPipeline, as_array

ROOT_TOL = 1e-9
PENALTY_WEIGHT = 1e6
# optimizer feasibility margin; keeps returned optima strictly inside ROOT_TOL
_PENALTY_MARGIN = 1e-6


@dataclass(frozen=True)
class SarimaOrder:
    p: int = 0
    d: int = 0
    q: int = 0
    P: int = 0
    D: int = 0
    Q: int = 0
    s: int = 1

    def __post_init__(self):
        if min(self.p, self.d, self.q, self.P, self.D, self.Q) < 0:
            raise ValueError("orders must be nonnegative")
        if self.s < 1:
            raise ValueError("seasonal period must be positive")
        if self.s == 1 and (self.P or self.D or self.Q):
            raise ValueError("seasonal orders require s > 1")

    @property
    def n_arma(self) -> int:
        return self.p + self.q + self.P + self.Q

    @property
    def has_constant(self) -> bool:
        return self.d == 0 and self.D == 0

    @property
    def n_params(self) -> int:
        return self.n_arma + int(self.has_constant)

    @property
    def total_lag(self) -> int:
        return self.d + self.D * self.s

    def key(self) -> tuple:
        return (self.p, self.q, self.P, self.Q, self.d, self.D, self.s)

    def __str__(self) -> str:
        if self.s == 1:
            return f"ARIMA({self.p},{self.d},{self.q})"
        return f"SARIMA({self.p},{self.d},{self.q})x({self.P},{self.D},{self.Q}){self.s}"


def seasonal_poly(coefs: Sequence[float], s: int, sign: float) -> np.ndarray:
    """[1, sign*c_1 at lag s, sign*c_2 at lag 2s, ...]."""
    out = np.zeros(len(coefs) * s + 1)
    out[0] = 1.0
    for i, c in enumerate(coefs, start=1):
        out[i * s] = sign * c
    return out


def expand_ar(phi, Phi, s: int) -> np.ndarray:
    return np.convolve(seasonal_poly(phi, 1, -1.0), seasonal_poly(Phi, s, -1.0))


def expand_ma(theta, Theta, s: int) -> np.ndarray:
    return np.convolve(seasonal_poly(theta, 1, 1.0), seasonal_poly(Theta, s, 1.0))


def min_root_modulus(poly: np.ndarray) -> float:
    """Smallest root modulus of the lag polynomial poly[0] + poly[1] L + ...; inf if constant."""
    poly = np.trim_zeros(np.asarray(poly, dtype=float), "b")
    if poly.size <= 1:
        return math.inf
    roots = np.roots(poly[::-1])
    return float(np.min(np.abs(roots)))


@dataclass
class SarimaModel:
    order: SarimaOrder
    c: float
    phi: np.ndarray
    theta: np.ndarray
    Phi: np.ndarray
    Theta: np.ndarray
    sigma2: float
    pipeline: TransformPipeline = field(default_factory=TransformPipeline)
    sse: float = math.nan
    n_eff: int = 0
    method: str = "css"

    def __post_init__(self):
        for name in ("phi", "theta", "Phi", "Theta"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).ravel())

    @property
    def ar_poly(self) -> np.ndarray:
        return expand_ar(self.phi, self.Phi, self.order.s)

    @property
    def ma_poly(self) -> np.ndarray:
        return expand_ma(self.theta, self.Theta, self.order.s)

    def to_dict(self) -> dict:
        o = self.order
        return {
            "order": {"p": o.p, "d": o.d, "q": o.q, "P": o.P, "D": o.D, "Q": o.Q, "s": o.s},
            "c": self.c,
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
            "Phi": self.Phi.tolist(),
            "Theta": self.Theta.tolist(),
            "sigma2": self.sigma2,
            "pipeline": self.pipeline.to_list(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SarimaModel":
        return cls(
            SarimaOrder(**d["order"]), d["c"], d["phi"], d["theta"], d["Phi"], d["Theta"],
            d["sigma2"], TransformPipeline.from_list(d.get("pipeline", [])),
        )


@dataclass(frozen=True)
class CriterionScore:
    aic: float
    bic: float
    n_params: int


# ----------------------------------------------------------------------------
# residuals


def css_residuals(z: np.ndarray, c: float, ar: np.ndarray, ma: np.ndarray) -> np.ndarray:
    """One-step residuals, presample z at the sample mean and presample e at zero."""
    m = ar.size - 1
    z_ext = np.concatenate([np.full(m, z.mean()), z]) if m else z
    w = lfilter(ar, [1.0], z_ext)[m:] - c
    return lfilter([1.0], ma, w)


def model_residuals(model: SarimaModel, z: np.ndarray) -> np.ndarray:
    return css_residuals(z, model.c, model.ar_poly, model.ma_poly)


def _build_pipeline(order: SarimaOrder, transform: TransformPipeline | None) -> TransformPipeline:
    steps = list(copy.deepcopy(transform).steps) if transform is not None else []
    steps += [Difference(1) for _ in range(order.d)]
    steps += [Difference(order.s) for _ in range(order.D)]
    return TransformPipeline(steps)


# ----------------------------------------------------------------------------
# estimation


def _yule_walker(z: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    r = diagnostics.acf(z, p).values
    phi = levinson_toeplitz(r[:p], r[1: p + 1])
    return phi, r


def fit_ar_yule_walker(train, p: int, transform: TransformPipeline | None = None) -> SarimaModel:
    """AR(p) from the sample-autocorrelation Toeplitz system."""
    x = as_array(train)
    pipeline = _build_pipeline(SarimaOrder(p=p), transform)
    z = pipeline.apply(x)
    if p < 1 or p >= z.size / 2:
        raise ValueError(f"order p={p} needs 1 <= p < n/2 (n={z.size})")
    try:
        phi, r = _yule_walker(z, p)
    except DegenerateSeriesError as exc:
        raise EstimationError(f"Yule-Walker failed: {exc}") from exc
    mu = z.mean()
    c0 = diagnostics.acvf(z, 0)[0]
    model = SarimaModel(
        SarimaOrder(p=p), mu * (1.0 - phi.sum()), phi, [], [], [],
        c0 * (1.0 - phi @ r[1: p + 1]), pipeline, method="yule-walker",
    )
    e = model_residuals(model, z)
    model.sse, model.n_eff = float(e @ e), z.size
    return model


def _unpack(v: np.ndarray, order: SarimaOrder):
    i = 0
    c = 0.0
    if order.has_constant:
        c, i = v[0], 1
    parts = []
    for k in (order.p, order.q, order.P, order.Q):
        parts.append(v[i: i + k])
        i += k
    return (c, *parts)


def root_penalty(phi, theta, Phi, Theta, margin: float = _PENALTY_MARGIN) -> float:
    """Penalty for AR/MA factor roots at or inside the unit circle (plus margin)."""
    bound = 1.0 / (1.0 + margin)
    total = 0.0
    for coefs, sign in ((phi, -1.0), (Phi, -1.0), (theta, 1.0), (Theta, 1.0)):
        if len(coefs) == 0:
            continue
        m = min_root_modulus(seasonal_poly(coefs, 1, sign))
        total += max(0.0, 1.0 / m - bound)
    return PENALTY_WEIGHT * total


def fit_css(
    train,
    order: SarimaOrder,
    transform: TransformPipeline | None = None,
    config: NelderMeadConfig = NelderMeadConfig(),
) -> SarimaModel:
    """Conditional-sum-of-squares fit, minimized by Nelder-Mead.

    The differencing implied by `order` is appended to `transform`. The
    constant is estimated only when the model is undifferenced.
    """
    x = as_array(train)
    pipeline = _build_pipeline(order, transform)
    z = pipeline.apply(x)
    n = z.size
    if n < 3 * (order.n_arma + 1):
        raise EstimationError(
            f"{order}: {n} observations after differencing, need >= {3 * (order.n_arma + 1)}")
    s = order.s

    if order.n_arma == 0:
        c = z.mean() if order.has_constant else 0.0
        e = z - c
        sse = float(e @ e)
        return SarimaModel(order, c, [], [], [], [], sse / n, pipeline, sse, n)

    phi0 = np.zeros(order.p)
    if order.p:
        try:
            phi0, _ = _yule_walker(z, order.p)
        except (DegenerateSeriesError, ArithmeticError):
            phi0 = np.zeros(order.p)
        if min_root_modulus(seasonal_poly(phi0, 1, -1.0)) <= 1.0 + _PENALTY_MARGIN:
            phi0 = np.zeros(order.p)
    start = np.concatenate([
        [z.mean() * (1.0 - phi0.sum())] if order.has_constant else [],
        phi0, np.zeros(order.q + order.P + order.Q),
    ])

    def objective(v):
        c, phi, theta, Phi, Theta = _unpack(v, order)
        e = css_residuals(z, c, expand_ar(phi, Phi, s), expand_ma(theta, Theta, s))
        return float(e @ e) + root_penalty(phi, theta, Phi, Theta)

    res = nelder_mead(objective, start, config)
    if not np.isfinite(res.fun):
        raise EstimationError(f"{order}: optimizer returned a non-finite objective")
    c, phi, theta, Phi, Theta = _unpack(res.x, order)
    model = SarimaModel(order, float(c), phi, theta, Phi, Theta, math.nan, pipeline)
    stationary, invertible, mods = check_roots(model)
    if not (stationary and invertible):
        raise EstimationError(
            f"{order}: optimum violates root conditions (min moduli {mods[0]:.6g}, {mods[1]:.6g})")
    e = model_residuals(model, z)
    model.sse = float(e @ e)
    model.sigma2 = model.sse / n
    model.n_eff = n
    return model


def check_roots(model: SarimaModel) -> tuple[bool, bool, tuple[float, float]]:
    """(stationary, invertible, (min |root| of AR poly, min |root| of MA poly))."""
    ar = min_root_modulus(model.ar_poly)
    ma = min_root_modulus(model.ma_poly)
    return ar > 1.0 + ROOT_TOL, ma > 1.0 + ROOT_TOL, (ar, ma)


# ----------------------------------------------------------------------------
# forecasting


def forecast(model: SarimaModel, train, horizon: int) -> np.ndarray:
    """Multi-step forecasts on the original scale (future shocks set to zero)."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    pipeline = copy.deepcopy(model.pipeline)
    z = pipeline.apply(as_array(train))
    ar, ma = model.ar_poly, model.ma_poly
    e = css_residuals(z, model.c, ar, ma)
    m, k = ar.size - 1, ma.size - 1
    pad = max(m, k)
    zz = np.concatenate([np.full(pad, z.mean()), z, np.zeros(horizon)])
    ee = np.concatenate([np.zeros(pad), e, np.zeros(horizon)])
    start = pad + z.size
    a, b = -ar[1:], ma[1:]
    for t in range(start, start + horizon):
        val = model.c
        if m:
            val += a @ zz[t - m: t][::-1]
        if k:
            val += b @ ee[t - k: t][::-1]
        zz[t] = val
    return pipeline.invert_forecast(zz[start:])


# ----------------------------------------------------------------------------
# order selection


def information_criteria(n: int, n_params: int, sse: float, standard: bool = False) -> CriterionScore:
    """AIC = n ln(sse/n) + 2p and BIC = n ln(sse/n) + p + p ln(n).

    ``standard=True`` swaps in the usual BIC penalty p ln(n).
    """
    if sse <= 0:
        raise ValueError("sse must be positive")
    if n < 1 or n_params < 0:
        raise ValueError("n must be positive and n_params nonnegative")
    base = n * math.log(sse / n)
    aic = base + 2 * n_params
    bic = base + n_params * math.log(n) + (0 if standard else n_params)
    return CriterionScore(aic, bic, n_params)


def score(model: SarimaModel, standard: bool = False) -> CriterionScore:
    return information_criteria(model.n_eff, model.order.n_params, model.sse, standard)


@dataclass(frozen=True)
class DiagnosticResult:
    passed: bool
    fraction_inside: float
    correlogram: diagnostics.CorrelogramResult


def diagnostic_check(model: SarimaModel, train) -> DiagnosticResult:
    """Pass when >= 95% of residual autocorrelations at lags 1..n/4 sit inside the 95% band."""
    z = copy.deepcopy(model.pipeline).apply(as_array(train))
    e = model_residuals(model, z)
    if np.ptp(e) == 0:
        cg = diagnostics.CorrelogramResult(np.arange(1), np.ones(1), 1.96 / math.sqrt(e.size))
        return DiagnosticResult(True, 1.0, cg)
    cg = diagnostics.acf(e, diagnostics.default_max_lag(e.size))
    inside = np.abs(cg.values[1:]) <= cg.band
    frac = float(inside.mean())
    return DiagnosticResult(frac >= 0.95, frac, cg)


@dataclass
class SearchResult:
    model: SarimaModel
    score: CriterionScore
    diagnostics: DiagnosticResult
    table: list[tuple[SarimaOrder, CriterionScore]]
    failures: dict


def box_jenkins_search(
    train,
    grid: Iterable[SarimaOrder],
    criterion: str = "aic",
    transform: TransformPipeline | None = None,
    pure_ar: str = "yule-walker",
    standard_bic: bool = False,
    workers: int = 1,
) -> SearchResult:
    """Fit every order, keep the one minimizing AIC or BIC.

    Ties go to fewer parameters, then to the lexicographically smaller
    (p, q, P, Q), so the result does not depend on evaluation order.
    """
    grid = list(dict.fromkeys(grid))
    if not grid:
        raise ValueError("grid is empty")
    criterion = criterion.lower()
    if criterion not in ("aic", "bic"):
        raise ValueError("criterion must be 'aic' or 'bic'")

    def fit_one(order):
        try:
            if pure_ar == "yule-walker" and order.p > 0 and order.n_arma == order.p and order.total_lag == 0:
                m = fit_ar_yule_walker(train, order.p, transform)
            else:
                m = fit_css(train, order, transform)
            return order, m, score(m, standard_bic), None
        except (EstimationError, ValueError, ArithmeticError) as exc:
            return order, None, None, str(exc)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(fit_one, grid))
    else:
        results = [fit_one(o) for o in grid]

    ok = [(o, m, sc) for o, m, sc, err in results if m is not None]
    failures = {str(o): err for o, m, sc, err in results if m is None}
    if not ok:
        raise SearchError(f"every candidate failed: {failures}")
    ok.sort(key=lambda r: (getattr(r[2], criterion), r[2].n_params, r[0].key()))
    best_order, best, best_score = ok[0]
    return SearchResult(
        best, best_score, diagnostic_check(best, train),
        [(o, sc) for o, _, sc in ok], failures,
    )


# ----------------------------------------------------------------------------
# simulators


def simulate_arma(
    n: int, phi=(), theta=(), c: float = 0.0, sigma: float = 1.0, seed=None, burn: int = 500,
) -> np.ndarray:
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n + burn) * sigma
    ar = seasonal_poly(phi, 1, -1.0)
    ma = seasonal_poly(theta, 1, 1.0)
    y = lfilter(ma, ar, e) + c / ar.sum()
    return y[burn:]


def simulate_nma(n: int, alpha: float, seed=None) -> TimeSeries:
    """y_t = e_t + alpha * e_{t-1}^2 with standard normal shocks."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n + 1)
    return TimeSeries(e[1:] + alpha * e[:-1] ** 2, label=f"nma(alpha={alpha})")


Component = Callable[[np.ndarray], np.ndarray] | Sequence[float] | float | None


def _component(gen: Component, t: np.ndarray, neutral: float) -> np.ndarray:
    if gen is None:
        return np.full(t.size, neutral)
    if callable(gen):
        return np.asarray(gen(t), dtype=float) * np.ones(t.size)
    arr = np.asarray(gen, dtype=float)
    if arr.ndim == 0:
        return np.full(t.size, float(arr))
    if arr.size != t.size:
        raise ValueError("component length does not match n")
    return arr


def simulate_components(
    n: int,
    trend: Component = None,
    seasonal: Component = None,
    cyclical: Component = None,
    irregular: Component = None,
    mode: str = "additive",
) -> TimeSeries:
    """Combine trend, seasonal, cyclical and irregular parts additively or multiplicatively.

    Each component is a callable of the time index 0..n-1, a sequence of
    length n, a scalar, or None (0 for additive, 1 for multiplicative).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    mode = mode.lower()
    if mode not in ("additive", "multiplicative"):
        raise ValueError("mode must be 'additive' or 'multiplicative'")
    t = np.arange(n, dtype=float)
    neutral = 0.0 if mode == "additive" else 1.0
    parts = [_component(g, t, neutral) for g in (trend, seasonal, cyclical, irregular)]
    y = sum(parts) if mode == "additive" else np.prod(parts, axis=0)
    return TimeSeries(y, label=mode)

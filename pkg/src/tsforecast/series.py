"""Time-series container, train/test splitting and invertible transforms.

A :class:`TransformPipeline` is an ordered chain of steps. Applying it
records whatever state each step needs to be undone exactly (presample
values for differencing, source range for rescaling), so forecasts made on
the transformed scale can be carried back to the original one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, StateError


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    period: int | None = None
    label: str = ""

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).ravel()
        if arr.size < 1:
            raise ValueError("a time series needs at least one observation")
        if not np.all(np.isfinite(arr)):
            raise ValueError("time series values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if self.period is not None:
            s = int(self.period)
            if not 2 <= s <= arr.size:
                raise ValueError(f"period {s} must satisfy 2 <= s <= {arr.size}")
            object.__setattr__(self, "period", s)

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def with_values(self, values, label: str | None = None) -> "TimeSeries":
        """Same metadata, new values; drops the period if it no longer fits."""
        values = np.asarray(values, dtype=float)
        period = self.period if self.period is not None and 2 <= self.period <= values.size else None
        return TimeSeries(values, period, self.label if label is None else label)


def as_array(x) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return np.array(x.values)
    return np.asarray(x, dtype=float).ravel()


def split(series: TimeSeries, n_train: int) -> tuple[TimeSeries, TimeSeries]:
    n = len(series)
    if not 1 <= n_train < n:
        raise ValueError(f"n_train must be in [1, {n - 1}], got {n_train}")
    v = series.values
    return series.with_values(v[:n_train]), series.with_values(v[n_train:])


# ----------------------------------------------------------------------------
# transform steps


class TransformStep:
    """Base class. Pointwise steps are stateless, so both inversions coincide."""

    kind = "step"

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def invert(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def invert_forecast(self, z: np.ndarray) -> np.ndarray:
        return self.invert(z)

    def params(self) -> dict:
        return {}

    def state(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params(), **self.state()}


class Log10(TransformStep):
    kind = "log10"

    def apply(self, x):
        if np.any(x <= 0):
            raise DomainError("log10 requires strictly positive values")
        return np.log10(x)

    def invert(self, z):
        return 10.0 ** z


class NaturalLog(TransformStep):
    kind = "log"

    def apply(self, x):
        if np.any(x <= 0):
            raise DomainError("natural log requires strictly positive values")
        return np.log(x)

    def invert(self, z):
        return np.exp(z)


@dataclass
class ScaleDivide(TransformStep):
    k: float
    kind = "scale_divide"

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("divisor must be positive")

    def apply(self, x):
        return x / self.k

    def invert(self, z):
        return z * self.k

    def params(self):
        return {"k": self.k}


@dataclass
class BoxCox(TransformStep):
    lam: float
    kind = "boxcox"

    def apply(self, x):
        if np.any(x <= 0):
            raise DomainError("Box-Cox requires strictly positive values")
        if self.lam == 0:
            return np.log(x)
        return (x ** self.lam - 1.0) / self.lam

    def invert(self, z):
        if self.lam == 0:
            return np.exp(z)
        return (self.lam * z + 1.0) ** (1.0 / self.lam)

    def params(self):
        return {"lam": self.lam}


@dataclass
class RangeRescale(TransformStep):
    """Affine map of the recorded source range [min, max] onto [lo, hi]."""

    lo: float
    hi: float
    src_min: float | None = None
    src_max: float | None = None
    kind = "range_rescale"

    def apply(self, x):
        mn, mx = float(np.min(x)), float(np.max(x))
        if not mx > mn:
            raise DomainError("range rescale needs source max > min")
        self.src_min, self.src_max = mn, mx
        return self.lo + (x - mn) * (self.hi - self.lo) / (mx - mn)

    def invert(self, z):
        if self.src_min is None:
            raise StateError("range rescale was never applied")
        return self.src_min + (z - self.lo) * (self.src_max - self.src_min) / (self.hi - self.lo)

    def params(self):
        return {"lo": self.lo, "hi": self.hi}

    def state(self):
        return {"src_min": self.src_min, "src_max": self.src_max}


@dataclass(eq=False)
class Difference(TransformStep):
    """x_t - x_{t-lag}. Keeps the first and last `lag` inputs for inversion."""

    lag: int = 1
    head: np.ndarray | None = field(default=None, repr=False)
    tail: np.ndarray | None = field(default=None, repr=False)
    kind = "difference"

    def __post_init__(self):
        if int(self.lag) < 1:
            raise ValueError("lag must be a positive integer")
        self.lag = int(self.lag)
        if self.head is not None:
            self.head = np.asarray(self.head, dtype=float)
            self.tail = np.asarray(self.tail, dtype=float)

    def apply(self, x):
        if x.size <= self.lag:
            raise ValueError(f"series of length {x.size} is too short for lag {self.lag}")
        self.head = x[: self.lag].copy()
        self.tail = x[-self.lag:].copy()
        return x[self.lag:] - x[: -self.lag]

    def _integrate(self, z, start):
        out = np.empty(z.size + self.lag)
        out[: self.lag] = start
        for t in range(z.size):
            out[t + self.lag] = z[t] + out[t]
        return out

    def invert(self, z):
        if self.head is None:
            raise StateError("difference step was never applied")
        return self._integrate(np.asarray(z, dtype=float), self.head)

    def invert_forecast(self, z):
        if self.tail is None:
            raise StateError("difference step was never applied")
        return self._integrate(np.asarray(z, dtype=float), self.tail)[self.lag:]

    def params(self):
        return {"lag": self.lag}

    def state(self):
        if self.head is None:
            return {}
        return {"head": self.head.tolist(), "tail": self.tail.tolist()}


_STEP_TYPES = {cls.kind: cls for cls in (Log10, NaturalLog, ScaleDivide, BoxCox, RangeRescale, Difference)}


def step_from_dict(d: dict) -> TransformStep:
    d = dict(d)
    cls = _STEP_TYPES[d.pop("kind")]
    return cls(**d)


@dataclass
class TransformPipeline:
    steps: list[TransformStep] = field(default_factory=list)

    def apply(self, series):
        """Apply steps left to right, recording inversion state."""
        x = as_array(series)
        for step in self.steps:
            x = step.apply(x)
        if isinstance(series, TimeSeries):
            return series.with_values(x)
        return x

    def invert(self, series, continuation: bool = False):
        """Undo :meth:`apply`.

        With ``continuation=True`` the input is taken to be values that follow
        the end of the series the pipeline was applied to (forecasts), and
        differencing is re-integrated from the last recorded actuals.
        """
        z = as_array(series)
        for step in reversed(self.steps):
            z = step.invert_forecast(z) if continuation else step.invert(z)
        if isinstance(series, TimeSeries):
            return series.with_values(z)
        return z

    def invert_forecast(self, values) -> np.ndarray:
        return self.invert(as_array(values), continuation=True)

    @property
    def total_lag(self) -> int:
        return sum(s.lag for s in self.steps if isinstance(s, Difference))

    def to_list(self) -> list[dict]:
        return [s.to_dict() for s in self.steps]

    @classmethod
    def from_list(cls, items: Iterable[dict]) -> "TransformPipeline":
        return cls([step_from_dict(d) for d in items])


def apply(pipeline: TransformPipeline, series):
    return pipeline.apply(series)


def invert(pipeline: TransformPipeline, series, continuation: bool = False):
    return pipeline.invert(series, continuation=continuation)


# ----------------------------------------------------------------------------
# fractional differencing


def fracdiff_weights(d: float, truncation: int) -> np.ndarray:
    """Binomial coefficients of (1 - L)^d up to lag `truncation`."""
    w = np.empty(truncation + 1)
    w[0] = 1.0
    for k in range(1, truncation + 1):
        w[k] = w[k - 1] * (k - 1 - d) / k
    return w


def fractional_difference(series, d: float, truncation: int):
    x = as_array(series)
    if truncation < 1 or truncation > x.size - 1:
        raise ValueError(f"truncation must be in [1, {x.size - 1}], got {truncation}")
    w = fracdiff_weights(d, truncation)
    # y_t = sum_k w_k x_{t-k}, valid part only
    out = np.convolve(x, w, mode="valid")
    if isinstance(series, TimeSeries):
        return series.with_values(out)
    return out


# ----------------------------------------------------------------------------
# plain-text I/O


def read_series(path, period: int | None = None, label: str | None = None) -> TimeSeries:
    """One observation per line; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    values = parse_values(path.read_text().splitlines())
    return TimeSeries(values, period, label if label is not None else path.stem)


def parse_values(lines: Sequence[str]) -> list[float]:
    out = []
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        out.append(float(line))
    return out


def write_series(series, path, header: Sequence[str] = ()) -> None:
    with open(path, "w") as f:
        for h in header:
            f.write(f"# {h}\n")
        for v in as_array(series):
            f.write(f"{float(v)!r}\n")

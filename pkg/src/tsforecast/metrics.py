"""Forecast accuracy measures over an (actual, forecast) pair, e_t = y_t - f_t.

Percentages (MAPE, MPE) are in percent. Theil's U uses the product of the
two root-mean-square terms in its denominator; :func:`theil_u1` gives the
more common sum form. Fields that cannot be computed for a given input are
None and named in ``flags``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

FIELDS = ("mfe", "mae", "mape", "mpe", "mse", "sse", "smse", "rmse", "nmse", "theil_u")


@dataclass(frozen=True)
class ForecastEvaluation:
    mfe: float
    mae: float
    mape: float | None
    mpe: float | None
    mse: float
    sse: float
    smse: float
    rmse: float
    nmse: float | None
    theil_u: float | None
    n: int
    flags: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["flags"] = list(self.flags)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "ForecastEvaluation":
        return cls(**{k: d[k] for k in FIELDS}, n=int(d["n"]), flags=tuple(d.get("flags", ())))


def _pair(actual, forecast) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(actual, dtype=float).ravel()
    f = np.asarray(forecast, dtype=float).ravel()
    if y.size != f.size:
        raise ValueError(f"length mismatch: {y.size} actuals vs {f.size} forecasts")
    if y.size == 0:
        raise ValueError("need at least one observation")
    return y, f


def evaluate(actual, forecast) -> ForecastEvaluation:
    y, f = _pair(actual, forecast)
    n = y.size
    e = y - f
    flags: list[str] = []

    mse = float(e @ e) / n
    if np.all(y != 0):
        mape = float(np.mean(np.abs(e / y))) * 100.0
        mpe = float(np.mean(e / y)) * 100.0
    else:
        mape = mpe = None
        flags += ["mape", "mpe"]

    nmse = None
    if n >= 2:
        var = float(np.var(y, ddof=1))
        if var > 0:
            nmse = mse / var
    if nmse is None:
        flags.append("nmse")

    den = math.sqrt(float(f @ f) / n) * math.sqrt(float(y @ y) / n)
    theil = math.sqrt(mse) / den if den > 0 else None
    if theil is None:
        flags.append("theil_u")

    return ForecastEvaluation(
        mfe=float(e.mean()),
        mae=float(np.abs(e).mean()),
        mape=mape,
        mpe=mpe,
        mse=mse,
        sse=n * mse,
        smse=float(np.mean(np.sign(e) * e * e)),
        rmse=math.sqrt(mse),
        nmse=nmse,
        theil_u=theil,
        n=n,
        flags=tuple(flags),
    )


def theil_u1(actual, forecast) -> float | None:
    """RMSE / (RMS(f) + RMS(y)); bounded in [0, 1]."""
    y, f = _pair(actual, forecast)
    n = y.size
    den = math.sqrt(float(f @ f) / n) + math.sqrt(float(y @ y) / n)
    if den == 0:
        return None
    e = y - f
    return math.sqrt(float(e @ e) / n) / den

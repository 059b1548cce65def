"""Dense linear solves, Levinson recursion and a Nelder-Mead minimizer.

Matrices are plain 2-D numpy arrays. Factorizations are delegated to
LAPACK through scipy; the Toeplitz solver and the simplex search are
implemented here because their exact behaviour (O(p^2) recursion,
termination rule, determinism) is part of the contract.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateSeriesError, FactorizationError


def _square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def solve_spd(A, b) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A by Cholesky."""
    A = _square(A)
    if not np.allclose(A, A.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(A).max())):
        raise FactorizationError("matrix is not symmetric")
    try:
        factor = sla.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"Cholesky failed: {exc}") from exc
    return sla.cho_solve(factor, np.asarray(b, dtype=float), check_finite=False)


def _lu(A):
    A = _square(A)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    d = np.abs(np.diag(lu))
    if d.min() <= A.shape[0] * np.finfo(float).eps * max(d.max(), 1e-300):
        raise FactorizationError("matrix is singular to working precision")
    return lu, piv


def solve_general(A, b) -> np.ndarray:
    """Solve A x = b by LU with partial pivoting."""
    return sla.lu_solve(_lu(A), np.asarray(b, dtype=float), check_finite=False)


def invert(A) -> np.ndarray:
    A = _square(A)
    return sla.lu_solve(_lu(A), np.eye(A.shape[0]), check_finite=False)


def levinson_toeplitz(first_row, rhs) -> np.ndarray:
    """Solve the symmetric Toeplitz system T x = rhs, T[i, j] = first_row[|i - j|].

    Levinson's recursion; O(p^2) time.
    """
    t = np.asarray(first_row, dtype=float)
    b = np.asarray(rhs, dtype=float)
    n = b.size
    if t.size < n:
        raise ValueError("first_row shorter than rhs")
    if t[0] == 0:
        raise DegenerateSeriesError("Toeplitz leading entry is zero")
    r = t[1:n] / t[0]
    b = b / t[0]
    x = np.array([b[0]])
    if n == 1:
        return x
    y = np.array([-r[0]])
    alpha, beta = -r[0], 1.0
    for k in range(1, n):
        beta = (1.0 - alpha * alpha) * beta
        if beta <= 1e-14:
            raise FactorizationError("Toeplitz system is singular or indefinite")
        mu = (b[k] - r[:k] @ x[::-1]) / beta
        x = np.append(x + mu * y[::-1], mu)
        if k < n - 1:
            alpha = (-r[k] - r[:k] @ y[::-1]) / beta
            y = np.append(y + alpha * y[::-1], alpha)
    return x


@dataclass(frozen=True)
class NelderMeadConfig:
    initial_step: float = 0.1
    xtol: float = 1e-8
    max_iter: int | None = None  # defaults to 200 * dim
    reflect: float = 1.0
    expand: float = 2.0
    contract: float = 0.5
    shrink: float = 0.5


@dataclass(frozen=True)
class NelderMeadResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    start,
    config: NelderMeadConfig = NelderMeadConfig(),
) -> NelderMeadResult:
    """Minimize `objective` by the downhill simplex method.

    Stops when every vertex lies within `xtol` (max-norm) of the best one,
    or after `max_iter` iterations. Fully deterministic for a given start.
    """
    x0 = np.atleast_1d(np.asarray(start, dtype=float))
    dim = x0.size
    f0 = float(objective(x0))
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the starting point")
    max_iter = config.max_iter if config.max_iter is not None else 200 * dim

    def f(x):
        v = float(objective(x))
        return v if np.isfinite(v) else np.inf

    sim = np.empty((dim + 1, dim))
    fs = np.empty(dim + 1)
    sim[0], fs[0] = x0, f0
    for i in range(dim):
        v = x0.copy()
        v[i] += config.initial_step if v[i] == 0 else config.initial_step * max(abs(v[i]), 1.0) * np.sign(v[i])
        sim[i + 1], fs[i + 1] = v, f(v)

    converged = False
    it = 0
    while it < max_iter:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if np.max(np.abs(sim[1:] - sim[0])) < config.xtol:
            converged = True
            break
        it += 1
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + config.reflect * (centroid - sim[-1])
        fr = f(xr)
        if fr < fs[0]:
            xe = centroid + config.expand * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + config.contract * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = centroid - config.contract * (centroid - sim[-1])
            fc = f(xc)
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        for i in range(1, dim + 1):
            sim[i] = sim[0] + config.shrink * (sim[i] - sim[0])
            fs[i] = f(sim[i])
    order = np.argsort(fs, kind="stable")
    return NelderMeadResult(sim[order[0]].copy(), float(fs[order[0]]), it, converged)

"""RBF least-squares SVM regression with a sliding-window (DLS-SVM) variant.

Training solves the bordered system

    [ 0   1^T           ] [b    ]   [0]
    [ 1   Omega + I/gamma ] [alpha] = [y]

and keeps the inverse of its matrix Q. The dynamic variant grows Q^-1 by a
block (Schur complement) update when a point arrives and shrinks it by the
reverse update when the oldest point leaves, so a window slide costs
O(N^2) instead of a fresh O(N^3) solve.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import RankDeficiencyError, SearchError
from .numerics import invert, solve_general
from .series import as_array

PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class RbfKernel:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("kernel width must be positive")

    def __call__(self, x, y) -> float:
        return kernel_eval(self, x, y)

    def matrix(self, A, B) -> np.ndarray:
        return _kernel_matrix(self, np.atleast_2d(A), np.atleast_2d(B))


def kernel_eval(k: RbfKernel, x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    d = x - y
    # divide in two steps so huge widths cannot overflow sigma**2
    return float(np.exp(-((d @ d) / (2.0 * k.sigma)) / k.sigma))


def _kernel_matrix(k: RbfKernel, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # exact pairwise differences; the expanded-norm trick loses precision
    # when sigma is many orders of magnitude above the data spread
    d = A[:, None, :] - B[None, :, :]
    return np.exp(-(np.einsum("ijk,ijk->ij", d, d) / (2.0 * k.sigma)) / k.sigma)


@dataclass(frozen=True)
class WindowConfig:
    n: int
    N: int

    def __post_init__(self):
        if self.n < 1 or self.N < 1:
            raise ValueError("n and N must be positive")


def _shifted_kernel_matrix(k: RbfKernel, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """K(a, b) - 1 = expm1(-|a-b|^2 / 2 sigma^2), accurate when sigma dwarfs the data."""
    d = A[:, None, :] - B[None, :, :]
    return np.expm1(-(np.einsum("ijk,ijk->ij", d, d) / (2.0 * k.sigma)) / k.sigma)


def bordered_matrix(X: np.ndarray, gamma: float, kernel: RbfKernel) -> np.ndarray:
    N = X.shape[0]
    Q = np.empty((N + 1, N + 1))
    Q[0, 0] = 0.0
    Q[0, 1:] = 1.0
    Q[1:, 0] = 1.0
    Q[1:, 1:] = _kernel_matrix(kernel, X, X) + np.eye(N) / gamma
    return Q


def _shifted_bordered(X: np.ndarray, gamma: float, kernel: RbfKernel) -> np.ndarray:
    # Omega - 11^T in place of Omega. Because 1^T alpha = 0 the solution is
    # unchanged, and the inverse differs from Q^-1 only at entry (0, 0), by +1.
    N = X.shape[0]
    S = np.empty((N + 1, N + 1))
    S[0, 0] = 0.0
    S[0, 1:] = 1.0
    S[1:, 0] = 1.0
    S[1:, 1:] = _shifted_kernel_matrix(kernel, X, X) + np.eye(N) / gamma
    return S


def _equilibrate(S: np.ndarray) -> np.ndarray:
    """Diagonal D with D^-1 S D^-1 carrying an O(1) kernel block and unit border."""
    s = float(np.max(np.abs(S[1:, 1:])))
    r = math.sqrt(s)
    return np.concatenate([[1.0 / r], np.full(S.shape[0] - 1, r)])


@dataclass(frozen=True)
class LssvmModel:
    inputs: np.ndarray
    targets: np.ndarray
    alpha: np.ndarray
    b: float
    gamma: float
    kernel: RbfKernel
    shifted_inverse: np.ndarray  # inverse of the shifted bordered matrix

    @property
    def size(self) -> int:
        return self.targets.size

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def q_inverse(self) -> np.ndarray:
        """Inverse of the bordered matrix Q."""
        out = self.shifted_inverse.copy()
        out[0, 0] -= 1.0
        return out

    def system_matrix(self) -> np.ndarray:
        return bordered_matrix(self.inputs, self.gamma, self.kernel)

    def system_residual_vector(self) -> np.ndarray:
        """Q [b; alpha] - [0; y], with Omega alpha evaluated as 1 (1^T alpha) + (Omega - 11^T) alpha."""
        S = _shifted_bordered(self.inputs, self.gamma, self.kernel)
        r = S @ np.concatenate([[self.b], self.alpha]) - np.concatenate([[0.0], self.targets])
        r[1:] += math.fsum(self.alpha)
        return r

    def system_residual(self) -> float:
        """Normwise backward error ||r|| / (||Q|| ||x|| + ||rhs||), infinity norms."""
        r = self.system_residual_vector()
        qn = float(np.max(np.sum(np.abs(self.system_matrix()), axis=1)))
        xn = max(abs(self.b), float(np.max(np.abs(self.alpha))))
        rn = float(np.max(np.abs(self.targets)))
        return float(np.max(np.abs(r)) / (qn * xn + rn))

    def rhs_relative_residual(self) -> float:
        """||r|| / (1 + ||rhs||); sensitive to the size of alpha, reported for reference."""
        r = self.system_residual_vector()
        return float(np.max(np.abs(r)) / (1.0 + np.max(np.abs(self.targets))))

    def to_dict(self) -> dict:
        return {
            "sigma": self.kernel.sigma,
            "gamma": self.gamma,
            "n": self.dim,
            "inputs": self.inputs.tolist(),
            "targets": self.targets.tolist(),
            "alpha": self.alpha.tolist(),
            "b": self.b,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LssvmModel":
        X = np.asarray(d["inputs"], dtype=float).reshape(-1, d["n"])
        k = RbfKernel(d["sigma"])
        return cls(X, np.asarray(d["targets"], float), np.asarray(d["alpha"], float),
                   float(d["b"]), float(d["gamma"]), k, _shifted_inverse(X, float(d["gamma"]), k))


def embed(series, config: WindowConfig) -> tuple[np.ndarray, np.ndarray]:
    """Last N lag-vectors of dimension n and their one-step targets."""
    x = as_array(series)
    n, N = config.n, config.N
    if x.size < n + N:
        raise ValueError(f"series of length {x.size} too short for n={n}, N={N}")
    start = x.size - n - N
    idx = start + np.arange(N)[:, None] + np.arange(n)[None, :]
    return x[idx], x[start + n: start + n + N].copy()


def _shifted_inverse(X, gamma, kernel) -> np.ndarray:
    S = _shifted_bordered(X, gamma, kernel)
    D = _equilibrate(S)
    return invert(S / np.outer(D, D)) / np.outer(D, D)


def _from_inverse(X, y, gamma, kernel, sinv) -> LssvmModel:
    sol = sinv @ np.concatenate([[0.0], y])
    return LssvmModel(X, y, sol[1:], float(sol[0]), gamma, kernel, sinv)


def fit_lssvm(inputs, targets, gamma: float, kernel: RbfKernel) -> LssvmModel:
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise ValueError("inputs and targets differ in length")
    if y.size < 2:
        raise ValueError("need at least two training points")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    S = _shifted_bordered(X, gamma, kernel)
    D = _equilibrate(S)
    Se = S / np.outer(D, D)
    sol = solve_general(Se, np.concatenate([[0.0], y]) / D) / D
    sinv = invert(Se) / np.outer(D, D)
    return LssvmModel(X.copy(), y.copy(), sol[1:], float(sol[0]), float(gamma), kernel, sinv)


def predict(model: LssvmModel, x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.dim:
        raise ValueError(f"expected input of dimension {model.dim}, got {x.size}")
    return float(predict_many(model, x[None, :])[0])


def predict_many(model: LssvmModel, X) -> np.ndarray:
    # sum_i alpha_i K(x, x_i) + b with the constant part of K dropped (1^T alpha = 0)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.dim:
        raise ValueError(f"expected inputs of dimension {model.dim}, got {X.shape[1]}")
    return _shifted_kernel_matrix(model.kernel, X, model.inputs) @ model.alpha + model.b


def dlssvm_add(model: LssvmModel, x_new, y_new: float) -> LssvmModel:
    """Grow the window by one point using the block-inverse update."""
    x_new = np.asarray(x_new, dtype=float).ravel()
    if x_new.size != model.dim:
        raise ValueError(f"expected input of dimension {model.dim}, got {x_new.size}")
    # shifted kernel column; the new diagonal entry is 1/gamma + K(x, x) - 1
    k = np.concatenate([[1.0], _shifted_kernel_matrix(model.kernel, x_new[None, :], model.inputs)[0]])
    k_star = 1.0 / model.gamma
    Pk = model.shifted_inverse @ k
    rho = k_star - k @ Pk
    # exact arithmetic gives rho >= 1/gamma
    if not rho > PIVOT_TOL * k_star:
        raise RankDeficiencyError(f"Schur complement {rho:.3e} lost to rounding")
    M = model.size + 2
    sinv = np.empty((M, M))
    sinv[:-1, :-1] = model.shifted_inverse + np.outer(Pk, Pk) / rho
    sinv[:-1, -1] = -Pk / rho
    sinv[-1, :-1] = -Pk / rho
    sinv[-1, -1] = 1.0 / rho
    X = np.vstack([model.inputs, x_new])
    y = np.append(model.targets, float(y_new))
    return _from_inverse(X, y, model.gamma, model.kernel, sinv)


def dlssvm_prune(model: LssvmModel) -> LssvmModel:
    """Drop the oldest point: move it last in the inverse, then remove it by a Schur downdate."""
    if model.size < 3:
        raise ValueError("window must hold at least 3 points to prune")
    N = model.size
    order = np.r_[0, 2: N + 1, 1]
    Ph = model.shifted_inverse[np.ix_(order, order)]
    q = Ph[-1, -1]
    if not q > PIVOT_TOL:
        raise RankDeficiencyError(f"pivot {q:.3e} too small")
    P = Ph[:-1, -1]
    sinv = Ph[:-1, :-1] - np.outer(P, P) / q
    return _from_inverse(model.inputs[1:].copy(), model.targets[1:].copy(), model.gamma, model.kernel, sinv)


def slide(model: LssvmModel, x_new, y_new: float) -> LssvmModel:
    """add + prune, rebuilding from scratch if either update is rank deficient."""
    try:
        return dlssvm_prune(dlssvm_add(model, x_new, y_new))
    except RankDeficiencyError:
        X = np.vstack([model.inputs[1:], np.asarray(x_new, float).ravel()])
        y = np.append(model.targets[1:], float(y_new))
        return fit_lssvm(X, y, model.gamma, model.kernel)


def rolling_forecast(
    series, config: WindowConfig, gamma: float, kernel: RbfKernel, horizon: int, actuals=None,
) -> np.ndarray:
    """One-step-ahead forecasts over `horizon` steps with a sliding window.

    With `actuals` each true value is fed into the window once it is known
    (evaluation mode). Without them the prediction stands in for the value.
    """
    X, y = embed(series, config)
    return continue_forecast(fit_lssvm(X, y, gamma, kernel), series, horizon, actuals)


def continue_forecast(model: LssvmModel, series, horizon: int, actuals=None) -> np.ndarray:
    """Roll a fitted model forward from the end of `series` (see :func:`rolling_forecast`)."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    hist = list(as_array(series))
    n = model.dim
    if len(hist) < n:
        raise ValueError(f"series shorter than the input dimension {n}")
    if actuals is not None:
        actuals = as_array(actuals)
        if actuals.size < horizon:
            raise ValueError("fewer actuals than the horizon")
    out = np.empty(horizon)
    for h in range(horizon):
        x_in = np.asarray(hist[-n:])
        out[h] = predict(model, x_in)
        nxt = float(actuals[h]) if actuals is not None else out[h]
        hist.append(nxt)
        if h < horizon - 1:
            model = slide(model, x_in, nxt)
    return out


@dataclass(frozen=True)
class GridResult:
    sigma: float
    gamma: float
    n: int
    N: int
    score: float
    table: tuple


def _validate(x: np.ndarray, sigma: float, gamma: float, n: int, holdout: int) -> float:
    fit_part = x[: x.size - holdout]
    N = fit_part.size - n
    if N < 2:
        return math.inf
    pred = rolling_forecast(fit_part, WindowConfig(n, N), gamma, RbfKernel(sigma), holdout,
                            actuals=x[x.size - holdout:])
    e = x[x.size - holdout:] - pred
    mse = float(e @ e / holdout)
    return mse if np.isfinite(mse) else math.inf


def grid_search(
    series,
    sigma_grid: Sequence[float],
    gamma_grid: Sequence[float],
    n_grid: Sequence[int],
    holdout_fraction: float = 0.2,
    folds: int = 1,
    workers: int = 1,
) -> GridResult:
    """Rolling-origin validation over (sigma, gamma, n).

    The last ceil(holdout_fraction * len) training points are predicted one
    step at a time; candidates are ranked by MSE, ties going to the lower
    sigma, then gamma, then n. N is always the training length minus n.
    `folds` is reserved and must be 1.
    """
    if folds != 1:
        raise NotImplementedError("only a single rolling-origin fold is supported")
    x = as_array(series)
    if not (len(sigma_grid) and len(gamma_grid) and len(n_grid)):
        raise ValueError("grids must be nonempty")
    holdout = max(1, math.ceil(holdout_fraction * x.size))
    cands = list(itertools.product(sorted(set(sigma_grid)), sorted(set(gamma_grid)), sorted(set(n_grid))))

    def run(c):
        try:
            return c, _validate(x, *c, holdout)
        except (ValueError, ArithmeticError):
            return c, math.inf

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            scored = list(ex.map(run, cands))
    else:
        scored = [run(c) for c in cands]
    finite = [r for r in scored if np.isfinite(r[1])]
    if not finite:
        raise SearchError("every (sigma, gamma, n) candidate failed")
    (sigma, gamma, n), best = min(finite, key=lambda r: (r[1], r[0]))
    return GridResult(sigma, gamma, n, x.size - n, best, tuple(scored))

"""Single-hidden-layer forecasting networks trained by backpropagation.

Three topologies share one weight layout:

* FNN(p, h): inputs are the p most recent observations.
* TLNN(lags, h): inputs are the observations at the given lags; the
  constant unit feeding the output is the output bias.
* SANN(s, m): one full season of s observations in, the next season out.

Hidden units use the logistic sigmoid, the output layer is linear.
Weight matrices carry the bias (constant-input) weights in row 0.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

from .errors import TrainingError
from .series import as_array


@dataclass(frozen=True)
class NetworkTopology:
    kind: str  # "fnn" | "tlnn" | "sann"
    lags: tuple[int, ...] = ()
    hidden: int = 1
    period: int | None = None

    def __post_init__(self):
        if self.kind not in ("fnn", "tlnn", "sann"):
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.hidden < 1:
            raise ValueError("hidden count must be >= 1")
        if self.kind == "sann":
            if self.period is None or self.period < 1:
                raise ValueError("SANN needs a positive seasonal period")
        else:
            lags = tuple(int(l) for l in self.lags)
            if not lags or min(lags) < 1 or any(b <= a for a, b in zip(lags, lags[1:])):
                raise ValueError("lags must be strictly increasing positive integers")
            object.__setattr__(self, "lags", lags)

    @classmethod
    def fnn(cls, p: int, h: int) -> "NetworkTopology":
        if p < 1:
            raise ValueError("input count must be >= 1")
        return cls("fnn", tuple(range(1, p + 1)), h)

    @classmethod
    def tlnn(cls, lags: Sequence[int], h: int) -> "NetworkTopology":
        return cls("tlnn", tuple(lags), h)

    @classmethod
    def sann(cls, s: int, m: int) -> "NetworkTopology":
        return cls("sann", (), m, s)

    @property
    def n_inputs(self) -> int:
        return self.period if self.kind == "sann" else len(self.lags)

    @property
    def n_outputs(self) -> int:
        return self.period if self.kind == "sann" else 1

    @property
    def window(self) -> int:
        """Number of trailing observations one forward pass consumes."""
        return self.period if self.kind == "sann" else self.lags[-1]

    def __str__(self) -> str:
        if self.kind == "sann":
            return f"SANN(s={self.period}; {self.hidden})"
        if self.kind == "fnn":
            return f"FNN({len(self.lags)}x{self.hidden}x1)"
        return f"NN({', '.join(map(str, self.lags))}; {self.hidden})"


@dataclass
class NetworkWeights:
    input_to_hidden: np.ndarray  # (n_inputs + 1, hidden)
    hidden_to_output: np.ndarray  # (hidden + 1, n_outputs)

    def copy(self) -> "NetworkWeights":
        return NetworkWeights(self.input_to_hidden.copy(), self.hidden_to_output.copy())

    def flat(self) -> np.ndarray:
        return np.concatenate([self.input_to_hidden.ravel(), self.hidden_to_output.ravel()])

    def unflat(self, v: np.ndarray) -> "NetworkWeights":
        k = self.input_to_hidden.size
        return NetworkWeights(
            v[:k].reshape(self.input_to_hidden.shape),
            v[k:].reshape(self.hidden_to_output.shape),
        )


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.05
    epochs: int = 5000
    seed: int = 0
    init_half_width: float = 0.5

    def __post_init__(self):
        if self.learning_rate <= 0 or self.init_half_width <= 0 or self.epochs < 0:
            raise ValueError("learning_rate and init_half_width must be positive, epochs >= 0")


@dataclass
class TrainedNetwork:
    topology: NetworkTopology
    weights: NetworkWeights
    config: TrainingConfig
    loss_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_dict(self) -> dict:
        t = self.topology
        return {
            "kind": t.kind,
            "dims": {"lags": list(t.lags), "hidden": t.hidden, "period": t.period,
                     "inputs": t.n_inputs, "outputs": t.n_outputs},
            "input_to_hidden": self.weights.input_to_hidden.tolist(),
            "hidden_to_output": self.weights.hidden_to_output.tolist(),
            "direct_constant_to_output": float(self.weights.hidden_to_output[0, 0]) if t.kind == "tlnn" else None,
            "seed": self.config.seed,
            "config": asdict(self.config),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedNetwork":
        dims = d["dims"]
        topo = NetworkTopology(d["kind"], tuple(dims["lags"]), dims["hidden"], dims["period"])
        w = NetworkWeights(np.array(d["input_to_hidden"], float), np.array(d["hidden_to_output"], float))
        return cls(topo, w, TrainingConfig(**d["config"]))


def sigmoid(x):
    return expit(x)


def init_weights(topology: NetworkTopology, config: TrainingConfig) -> NetworkWeights:
    rng = np.random.default_rng(config.seed)
    a = config.init_half_width
    w1 = rng.uniform(-a, a, (topology.n_inputs + 1, topology.hidden))
    w2 = rng.uniform(-a, a, (topology.hidden + 1, topology.n_outputs))
    return NetworkWeights(w1, w2)


def _inputs_from_window(topology: NetworkTopology, window: np.ndarray) -> np.ndarray:
    if topology.kind == "sann":
        return window
    return window[-np.asarray(topology.lags)]


def _forward_batch(w: NetworkWeights, X: np.ndarray):
    H = sigmoid(X @ w.input_to_hidden[1:] + w.input_to_hidden[0])
    return H, H @ w.hidden_to_output[1:] + w.hidden_to_output[0]


def forward(topology: NetworkTopology, weights: NetworkWeights, window) -> np.ndarray | float:
    """Network output for one window of trailing observations (oldest first)."""
    window = np.asarray(window, dtype=float).ravel()
    if window.size != topology.window:
        raise ValueError(f"{topology} expects a window of {topology.window}, got {window.size}")
    _, out = _forward_batch(weights, _inputs_from_window(topology, window)[None, :])
    return out[0] if topology.kind == "sann" else float(out[0, 0])


def patterns(topology: NetworkTopology, series) -> tuple[np.ndarray, np.ndarray]:
    """Input/target pairs. Lag networks slide by one step; SANN pairs consecutive
    seasons, aligned so the last season of the series is the last target."""
    y = as_array(series)
    if topology.kind == "sann":
        s = topology.period
        k = y.size // s
        if k < 2:
            raise ValueError(f"need at least two full seasons of length {s}, got {y.size} points")
        seasons = y[y.size - k * s:].reshape(k, s)
        return seasons[:-1].copy(), seasons[1:].copy()
    m = topology.lags[-1]
    if y.size <= m:
        raise ValueError(f"series of length {y.size} too short for max lag {m}")
    lags = np.asarray(topology.lags)
    X = np.stack([y[m - lag: y.size - lag] for lag in lags], axis=1)
    return X, y[m:, None]


def loss(weights: NetworkWeights, X: np.ndarray, Y: np.ndarray) -> float:
    """Sum of squared errors over all patterns and outputs."""
    _, out = _forward_batch(weights, X)
    e = Y - out
    return float(np.sum(e * e))


def gradient(weights: NetworkWeights, X: np.ndarray, Y: np.ndarray) -> NetworkWeights:
    """Backpropagated gradient of :func:`loss`."""
    H, out = _forward_batch(weights, X)
    d_out = -2.0 * (Y - out)
    g2 = np.vstack([d_out.sum(axis=0), H.T @ d_out])
    d_hid = (d_out @ weights.hidden_to_output[1:].T) * H * (1.0 - H)
    g1 = np.vstack([d_hid.sum(axis=0), X.T @ d_hid])
    return NetworkWeights(g1, g2)


def train(topology: NetworkTopology, series, config: TrainingConfig = TrainingConfig()) -> TrainedNetwork:
    """Full-batch gradient descent; each step uses the gradient averaged over patterns."""
    X, Y = patterns(topology, series)
    w = init_weights(topology, config)
    trace = np.empty(config.epochs)
    step = config.learning_rate / X.shape[0]
    for epoch in range(config.epochs):
        g = gradient(w, X, Y)
        w.input_to_hidden -= step * g.input_to_hidden
        w.hidden_to_output -= step * g.hidden_to_output
        trace[epoch] = loss(w, X, Y)
        if not np.isfinite(trace[epoch]):
            raise TrainingError(f"training diverged at epoch {epoch + 1}")
    return TrainedNetwork(topology, w, config, trace)


def gradient_check(topology: NetworkTopology, weights: NetworkWeights, X, Y, h: float = 1e-6) -> float:
    """Max relative gap between the backprop gradient and central differences."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float).reshape(X.shape[0], topology.n_outputs)
    ga = gradient(weights, X, Y).flat()
    v = weights.flat()
    gn = np.empty_like(v)
    for i in range(v.size):
        vp, vm = v.copy(), v.copy()
        vp[i] += h
        vm[i] -= h
        gn[i] = (loss(weights.unflat(vp), X, Y) - loss(weights.unflat(vm), X, Y)) / (2 * h)
    return float(np.max(np.abs(ga - gn) / (np.abs(ga) + np.abs(gn) + 1e-12)))


def forecast(net: TrainedNetwork, series, horizon: int) -> np.ndarray:
    """Recursive multi-step forecasts; SANN emits whole seasons per pass."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    topo = net.topology
    hist = list(as_array(series))
    if len(hist) < topo.window:
        raise ValueError("series shorter than the network window")
    out: list[float] = []
    while len(out) < horizon:
        window = np.asarray(hist[-topo.window:])
        pred = np.atleast_1d(forward(topo, net.weights, window))
        out.extend(pred.tolist())
        hist.extend(pred.tolist())
    return np.asarray(out[:horizon])

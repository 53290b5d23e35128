"""Minimal gated recurrent forecaster trained by hand-rolled backprop.

A single LSTM cell (input, forget, and output gates with a tanh candidate)
plus a linear readout, trained one-step-ahead on sliding windows of a scalar
series by full-batch gradient descent. Everything is float64 numpy and fully
deterministic for a given init seed, and the analytic gradients are exposed
so they can be verified against finite differences.

Parameter layout: gate pre-activations for a batch of scalar inputs x and
hidden state h are z = x * wx + h @ wh.T + b with z split row-blocks
[input, forget, candidate, output], each of width `hidden`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit as sigmoid


class TrainingDivergedError(Exception):
    """Loss left the finite range during training."""


@dataclass
class LstmConfig:
    lookback: int = 10
    hidden: int = 16
    epochs: int = 200
    learn_rate: float = 0.01
    init_seed: int = 0

    def validate(self) -> None:
        if self.lookback < 1 or self.hidden < 1 or self.epochs < 1:
            raise ValueError("lookback, hidden, and epochs must be positive")
        if self.learn_rate <= 0:
            raise ValueError("learn_rate must be positive")


PARAM_NAMES = ("wx", "wh", "b", "wy", "by")


def init_params(hidden: int, seed: int) -> dict[str, np.ndarray]:
    """Seeded uniform init; forget-gate biases start at 1 to keep memory open."""
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(hidden)
    params = {
        "wx": rng.uniform(-scale, scale, size=4 * hidden),
        "wh": rng.uniform(-scale, scale, size=(4 * hidden, hidden)),
        "b": np.zeros(4 * hidden),
        "wy": rng.uniform(-scale, scale, size=hidden),
        "by": np.zeros(1),
    }
    params["b"][hidden : 2 * hidden] = 1.0
    return params


def forward(params: dict[str, np.ndarray], windows: np.ndarray):
    """Run the cell over (n_windows, lookback) inputs; returns predictions and caches."""
    windows = np.atleast_2d(np.asarray(windows, dtype=float))
    n, steps = windows.shape
    hidden = params["wy"].shape[0]
    h = np.zeros((n, hidden))
    c = np.zeros((n, hidden))
    caches = []
    for t in range(steps):
        x = windows[:, t]
        z = np.outer(x, params["wx"]) + h @ params["wh"].T + params["b"]
        i = sigmoid(z[:, :hidden])
        f = sigmoid(z[:, hidden : 2 * hidden])
        g = np.tanh(z[:, 2 * hidden : 3 * hidden])
        o = sigmoid(z[:, 3 * hidden :])
        c_prev = c
        c = f * c_prev + i * g
        tanh_c = np.tanh(c)
        # h still holds the state *entering* this step at append time
        caches.append((h, x, i, f, g, o, c_prev, tanh_c))
        h = o * tanh_c
    predictions = h @ params["wy"] + params["by"][0]
    return predictions, (caches, h)


def loss_and_grads(params: dict[str, np.ndarray], windows: np.ndarray, targets: np.ndarray):
    """Mean squared one-step-ahead error and its analytic parameter gradients."""
    windows = np.atleast_2d(np.asarray(windows, dtype=float))
    targets = np.asarray(targets, dtype=float)
    n, _steps = windows.shape
    hidden = params["wy"].shape[0]

    predictions, (caches, h_last) = forward(params, windows)
    residual = predictions - targets
    loss = float(np.mean(residual**2))

    grads = {name: np.zeros_like(params[name]) for name in PARAM_NAMES}
    dpred = 2.0 * residual / n
    grads["wy"] = h_last.T @ dpred
    grads["by"][0] = float(np.sum(dpred))

    dh = np.outer(dpred, params["wy"])
    dc = np.zeros((n, hidden))
    for h_entering, x, i, f, g, o, c_prev, tanh_c in reversed(caches):
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c**2)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc = dc * f
        dz = np.concatenate(
            (
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g**2),
                do * o * (1.0 - o),
            ),
            axis=1,
        )
        grads["wx"] += dz.T @ x
        grads["wh"] += dz.T @ h_entering
        grads["b"] += dz.sum(axis=0)
        dh = dz @ params["wh"]
    return loss, grads


def train(
    params: dict[str, np.ndarray],
    windows: np.ndarray,
    targets: np.ndarray,
    epochs: int,
    learn_rate: float,
) -> list[float]:
    """Full-batch gradient descent in place; returns per-epoch losses."""
    losses = []
    for epoch in range(epochs):
        loss, grads = loss_and_grads(params, windows, targets)
        if not np.isfinite(loss):
            raise TrainingDivergedError(
                f"loss became non-finite at epoch {epoch}; "
                f"lower learn_rate (currently {learn_rate}) or shrink the init scale"
            )
        for name in PARAM_NAMES:
            params[name] -= learn_rate * grads[name]
        losses.append(loss)
    return losses


def make_windows(values: np.ndarray, lookback: int) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, dtype=float)
    n = len(values) - lookback
    if n < 1:
        raise ValueError("series shorter than lookback + 1")
    windows = np.stack([values[j : j + lookback] for j in range(n)])
    return windows, values[lookback:]


def fit_predict_lstm(train_values: np.ndarray, horizon: int, cfg: LstmConfig) -> float:
    """Train on a series and forecast `horizon` steps out recursively.

    The training segment is min-max normalized; a constant segment has zero
    range, making the denormalized forecast the constant itself. The returned
    value is clamped to [0, 1].
    """
    cfg.validate()
    train_values = np.asarray(train_values, dtype=float)
    if cfg.lookback >= len(train_values):
        raise ValueError("lookback must be shorter than the training segment")

    lo = float(np.min(train_values))
    span = float(np.max(train_values)) - lo
    normalized = (train_values - lo) / span if span > 0 else np.zeros_like(train_values)

    windows, targets = make_windows(normalized, cfg.lookback)
    params = init_params(cfg.hidden, cfg.init_seed)
    train(params, windows, targets, cfg.epochs, cfg.learn_rate)

    window = list(normalized[-cfg.lookback :])
    prediction = 0.0
    for _ in range(horizon):
        step_pred, _ = forward(params, np.asarray([window]))
        prediction = float(step_pred[0])
        window = window[1:] + [prediction]
    value = lo + prediction * span
    return min(1.0, max(0.0, value))

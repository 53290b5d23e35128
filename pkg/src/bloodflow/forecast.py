"""Shortage forecasting: predict a bank's acceptance ratio ten days ahead.

Three model families share one protocol: fit on the first `train_len` points
of a daily series (day indices are 1-based), forecast `horizon` steps
recursively, and report the final step clamped to [0, 1]. Evaluation compares
that prediction against the actual value at day train_len + horizon for every
bank and averages the absolute percent differences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .lstm import LstmConfig, fit_predict_lstm

MODEL_KINDS = ("linear", "arima", "lstm")

DEFAULT_TRAIN_LEN = 170
DEFAULT_HORIZON = 10


@dataclass
class ForecastTask:
    """One bank's acceptance-ratio history and the point to predict."""

    series: list[float]
    train_len: int = DEFAULT_TRAIN_LEN
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self) -> None:
        if self.train_len < 2 or self.horizon < 1:
            raise ValueError("need train_len >= 2 and horizon >= 1")
        if len(self.series) < self.train_len + self.horizon:
            raise ValueError(
                f"series has {len(self.series)} points; "
                f"need at least {self.train_len + self.horizon}"
            )
        if any(not 0.0 <= v <= 1.0 for v in self.series):
            raise ValueError("acceptance ratios must lie in [0, 1]")

    @property
    def target_index(self) -> int:
        return self.train_len + self.horizon - 1

    @property
    def actual(self) -> float:
        return self.series[self.target_index]

    def train_segment(self) -> np.ndarray:
        return np.asarray(self.series[: self.train_len], dtype=float)


def _clamp(value: float) -> float:
    return min(1.0, max(0.0, float(value)))


def fit_predict_linear(task: ForecastTask) -> float:
    """Least-squares line over days 1..train_len, extrapolated to the target day."""
    y = task.train_segment()
    t = np.arange(1, task.train_len + 1, dtype=float)
    slope, intercept = np.polyfit(t, y, 1)
    return _clamp(intercept + slope * (task.train_len + task.horizon))


class ArimaFitError(Exception):
    """Estimated model is explosive or produced a non-finite forecast."""


def _conditional_innovations(w: np.ndarray, c: float, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Innovation sequence conditional on zero pre-sample values."""
    p, q = len(phi), len(theta)
    n = len(w)
    e = np.zeros(n)
    for t in range(n):
        ar = sum(phi[i] * w[t - 1 - i] for i in range(min(p, t)))
        ma = sum(theta[j] * e[t - 1 - j] for j in range(min(q, t)))
        e[t] = w[t] - c - ar - ma
    return e


def _has_root_on_or_inside_unit_circle(coeffs: np.ndarray) -> bool:
    """Check the lag polynomial 1 - c1 z - ... - ck z^k for roots with |z| <= 1.

    Stationary AR (or invertible MA) coefficients keep all roots strictly
    outside the unit circle.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if len(coeffs) == 0 or not np.any(coeffs):
        return False
    descending = np.concatenate((-coeffs[::-1], [1.0]))
    roots = np.roots(descending)
    return bool(np.any(np.abs(roots) <= 1.0 + 1e-9))


def fit_predict_arima(task: ForecastTask, order: tuple[int, int, int] = (1, 1, 1)) -> float:
    """Difference, fit by conditional sum of squares, forecast recursively.

    The mean term is included only for undifferenced fits (d = 0), so a pure
    random walk (0,1,0) forecasts flat. AR-only orders are solved exactly by
    least squares; mixed orders start there and refine numerically. Raises
    ArimaFitError when the fitted model is explosive or non-invertible.
    """
    p, d, q = order
    if p < 0 or d < 0 or q < 0:
        raise ValueError("order components must be non-negative")
    if task.train_len <= p + d + q + 10:
        raise ValueError("training window too short for this order")

    y = task.train_segment()
    w = y.copy()
    for _ in range(d):
        w = np.diff(w)

    use_mean = d == 0
    if p == 0 and q == 0:
        c = float(np.mean(w)) if use_mean else 0.0
        phi = np.zeros(0)
        theta = np.zeros(0)
    else:
        # exact least squares for the AR part (theta = 0 start)
        rows = len(w) - p
        if rows <= max(p, q) + 1:
            raise ValueError("training window too short for this order")
        columns = [np.ones(rows)] if use_mean else []
        columns += [w[p - 1 - i : p - 1 - i + rows] for i in range(p)]
        if columns:
            design = np.column_stack(columns)
            beta, *_ = np.linalg.lstsq(design, w[p:], rcond=None)
        else:
            beta = np.zeros(0)
        offset = 1 if use_mean else 0
        c0 = float(beta[0]) if use_mean else 0.0
        phi0 = np.asarray(beta[offset : offset + p], dtype=float)
        theta0 = np.zeros(q)

        if q == 0:
            c, phi, theta = c0, phi0, theta0
        else:
            def css(params: np.ndarray) -> float:
                ci = params[0] if use_mean else 0.0
                k = 1 if use_mean else 0
                e = _conditional_innovations(w, ci, params[k : k + p], params[k + p :])
                return float(np.dot(e, e))

            x0 = np.concatenate(([c0] if use_mean else [], phi0, theta0))
            result = minimize(css, x0, method="Nelder-Mead",
                              options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000})
            params = result.x
            k = 1 if use_mean else 0
            c = float(params[0]) if use_mean else 0.0
            phi = np.asarray(params[k : k + p], dtype=float)
            theta = np.asarray(params[k + p :], dtype=float)

    if _has_root_on_or_inside_unit_circle(phi):
        raise ArimaFitError(f"explosive AR coefficients {phi.tolist()}")
    if _has_root_on_or_inside_unit_circle(theta):
        raise ArimaFitError(f"non-invertible MA coefficients {theta.tolist()}")

    # recursive forecast on the differenced scale with future innovations = 0
    e = _conditional_innovations(w, c, phi, theta)
    history = list(w)
    innovations = list(e)
    for _ in range(task.horizon):
        ar = sum(phi[i] * history[-1 - i] for i in range(p)) if p else 0.0
        ma = sum(theta[j] * innovations[-1 - j] for j in range(q)) if q else 0.0
        history.append(c + ar + ma)
        innovations.append(0.0)
    forecast_diff = np.asarray(history[len(w) :])

    # integrate d times back to the original scale
    forecast = forecast_diff
    tails = []
    level = y.copy()
    for _ in range(d):
        tails.append(level[-1])
        level = np.diff(level)
    for tail in reversed(tails):
        forecast = tail + np.cumsum(forecast)

    prediction = float(forecast[-1])
    if not math.isfinite(prediction):
        raise ArimaFitError("forecast diverged to a non-finite value")
    return _clamp(prediction)


@dataclass
class BankPrediction:
    bank_id: int
    predicted: float
    actual: float
    percent_difference: float
    fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "bank_id": self.bank_id,
            "predicted": self.predicted,
            "actual": self.actual,
            "percent_difference": self.percent_difference,
            "fallback": self.fallback,
        }


@dataclass
class EvalResult:
    model: str
    per_bank: list[BankPrediction]
    mean_percent_difference: float
    excluded_banks: list[int] = field(default_factory=list)
    arima_order: tuple[int, int, int] | None = None

    def to_dict(self) -> dict:
        d = {
            "model": self.model,
            "per_bank": [b.to_dict() for b in self.per_bank],
            "mean_percent_difference": self.mean_percent_difference,
            "excluded_banks": self.excluded_banks,
        }
        if self.arima_order is not None:
            d["arima_order"] = list(self.arima_order)
        return d

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

    def save_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("bank_id,predicted,actual,percent_difference\n")
            for b in self.per_bank:
                fh.write(f"{b.bank_id},{b.predicted!r},{b.actual!r},{b.percent_difference!r}\n")


def percent_difference(predicted: float, actual: float) -> float:
    """Absolute percent difference with the actual value as denominator."""
    if actual <= 0:
        raise ValueError("actual must be positive")
    return abs(predicted - actual) / actual * 100.0


def predict_task(
    kind: str,
    task: ForecastTask,
    *,
    arima_order: tuple[int, int, int] = (1, 1, 1),
    lstm_config: LstmConfig | None = None,
) -> tuple[float, bool]:
    """Run one model on one task; returns (prediction, used_linear_fallback)."""
    if kind == "linear":
        return fit_predict_linear(task), False
    if kind == "arima":
        try:
            return fit_predict_arima(task, arima_order), False
        except ArimaFitError:
            return fit_predict_linear(task), True
    if kind == "lstm":
        cfg = lstm_config if lstm_config is not None else LstmConfig()
        return fit_predict_lstm(task.train_segment(), task.horizon, cfg), False
    raise ValueError(f"unknown model kind {kind!r}; choose from {MODEL_KINDS}")


def evaluate_model(
    kind: str,
    tasks: dict[int, ForecastTask],
    *,
    arima_order: tuple[int, int, int] = (1, 1, 1),
    lstm_config: LstmConfig | None = None,
) -> EvalResult:
    """Predict every bank's target day and summarize percent differences.

    Banks whose actual value is zero cannot take a percent difference and are
    listed in excluded_banks instead.
    """
    if not tasks:
        raise ValueError("need at least one task")
    per_bank = []
    excluded = []
    for bank_id in sorted(tasks):
        task = tasks[bank_id]
        predicted, fallback = predict_task(
            kind, task, arima_order=arima_order, lstm_config=lstm_config
        )
        if task.actual <= 0:
            excluded.append(bank_id)
            continue
        per_bank.append(
            BankPrediction(
                bank_id=bank_id,
                predicted=predicted,
                actual=task.actual,
                percent_difference=percent_difference(predicted, task.actual),
                fallback=fallback,
            )
        )
    mean = (
        sum(b.percent_difference for b in per_bank) / len(per_bank) if per_bank else float("nan")
    )
    return EvalResult(
        model=kind,
        per_bank=per_bank,
        mean_percent_difference=mean,
        excluded_banks=excluded,
        arima_order=arima_order if kind == "arima" else None,
    )

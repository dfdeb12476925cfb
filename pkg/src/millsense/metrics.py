"""Regression evaluation metrics: MSE, MAE, and MAPE (in percent)."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, EmptyInput, NearZeroActual, NonFiniteInput

_MAPE_MIN_ACTUAL = 1e-9


def _validate(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(y_true, dtype=float).ravel()
    p = np.asarray(y_pred, dtype=float).ravel()
    if t.size == 0:
        raise EmptyInput("metric inputs must be non-empty")
    if t.size != p.size:
        raise DimensionMismatch(f"length mismatch: {t.size} actuals vs {p.size} predictions")
    for name, a in (("y_true", t), ("y_pred", p)):
        if not np.all(np.isfinite(a)):
            raise NonFiniteInput(f"{name} contains non-finite values")
    return t, p


def mse(y_true, y_pred) -> float:
    """Mean squared error."""
    t, p = _validate(y_true, y_pred)
    d = t - p
    return float(np.mean(d * d))


def mae(y_true, y_pred) -> float:
    """Mean absolute error."""
    t, p = _validate(y_true, y_pred)
    return float(np.mean(np.abs(t - p)))


def mape(y_true, y_pred) -> float:
    """Mean absolute percentage error, 100 * mean(|t - p| / |t|).

    Actuals with magnitude below 1e-9 are rejected rather than skipped:
    roughness values are strictly positive, so a zero actual signals data
    corruption.
    """
    t, p = _validate(y_true, y_pred)
    small = np.flatnonzero(np.abs(t) < _MAPE_MIN_ACTUAL)
    if small.size:
        i = int(small[0])
        raise NearZeroActual(f"actual value at index {i} is too close to zero: {t[i]!r}")
    return float(100.0 * np.mean(np.abs(t - p) / np.abs(t)))

from __future__ import annotations

import numbers

import numpy as np


def check_order(s, name="s"):
    if not isinstance(s, numbers.Real) or not 0.0 < float(s) < 1.0:
        raise ValueError(f"{name} must be a real number in (0, 1), got {s!r}")
    return float(s)


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not float(value) > 0.0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return float(value)


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_interval(interval, L, name="omega"):
    try:
        a, b = (float(v) for v in interval)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a pair (a, b), got {interval!r}") from None
    if not -L <= a < b <= L:
        raise ValueError(f"{name}=({a}, {b}) must satisfy -L <= a < b <= L with L={L}")
    return a, b


def check_points(x, L):
    """1D float array of evaluation points; a single feature column is accepted."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim > 1:
        raise ValueError(f"expected 1D points or a single column, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    return x


def check_nodal(values, N, name):
    values = np.asarray(values, dtype=float)
    if values.shape != (N,):
        raise ValueError(f"{name} must have shape ({N},), got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{name} must be finite")
    return values

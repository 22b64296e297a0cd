"""Input checks shared by the estimators and the command line."""

from __future__ import annotations

import math

import numpy as np


def check_counts(X) -> np.ndarray:
    """Coerce ``X`` to an ``(n, 2)`` int64 array of ``(n_s, n_d)`` outcomes.

    Rejects negative totals, ``|n_d| > n_s`` and parity mismatches.  An empty
    input gives a ``(0, 2)`` array.
    """
    arr = np.asarray(X)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"counts must have shape (n, 2), got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.isfinite(arr)) or not np.all(arr == np.round(arr)):
            raise ValueError("counts must be integers")
    arr = arr.astype(np.int64)
    ns, nd = arr[:, 0], arr[:, 1]
    bad = (ns < 0) | (np.abs(nd) > ns) | ((ns + nd) % 2 != 0)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ValueError(f"row {i} is not a valid (n_s, n_d) outcome: {tuple(arr[i])}")
    return arr


def check_window(window) -> tuple[float, float]:
    try:
        lo, hi = (float(w) for w in window)
    except (TypeError, ValueError):
        raise ValueError(f"window must be a pair of reals, got {window!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError(f"window must satisfy lo < hi, got ({lo}, {hi})")
    return lo, hi


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_real(value, name: str, minimum: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite")
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value

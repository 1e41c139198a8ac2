"""Small argument checks shared across the package."""

from __future__ import annotations

import math
from collections.abc import Sequence

DISTANCE_METRICS = ("chebyshev", "manhattan")
INDICATOR_SOURCES = ("truth", "detector")


def check_count(name: str, value) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return value


def check_finite(name: str, value) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return v


def check_in_range(name: str, value, lo: float, hi: float) -> float:
    v = check_finite(name, value)
    if not lo <= v <= hi:
        raise ValueError(f"{name} must be in [{lo}, {hi}], got {value!r}")
    return v


def check_positive(name: str, value) -> float:
    v = check_finite(name, value)
    if v <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    return v


def check_non_negative(name: str, value) -> float:
    v = check_finite(name, value)
    if v < 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return v


def check_choice(name: str, value, choices: Sequence[str]) -> str:
    if value not in choices:
        raise ValueError(f"{name} must be one of {list(choices)}, got {value!r}")
    return value


def check_weights(weights) -> tuple[float, ...]:
    """Ring weights: non-empty, all positive, non-increasing with distance."""
    out = tuple(check_positive("weight", w) for w in weights)
    if not out:
        raise ValueError("weights must contain at least one value")
    for a, b in zip(out, out[1:]):
        if b > a:
            raise ValueError(f"weights must be non-increasing, got {list(out)}")
    return out

"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import math


def check_positive(name: str, value: float) -> float:
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")
    return float(value)


def check_nonnegative(name: str, value: float) -> float:
    if not math.isfinite(value) or value < 0.0:
        raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
    return float(value)


def check_power_of_two(name: str, value: int, minimum: int = 64) -> int:
    n = int(value)
    if n != value or n < minimum or (n & (n - 1)) != 0:
        raise ValueError(f"{name} must be a power of two >= {minimum}, got {value!r}")
    return n


def check_spin_label(spin: str) -> str:
    if spin not in ("up", "down"):
        raise ValueError(f"spin must be 'up' or 'down', got {spin!r}")
    return spin

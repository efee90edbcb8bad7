"""Small shared helpers."""
from __future__ import annotations


def fmt(value: float) -> str:
    """Shortest decimal representation that round-trips the float exactly."""
    return repr(float(value))

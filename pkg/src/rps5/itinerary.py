"""Symbolic itineraries: proximity coding, letter words and root sequences.

A trajectory near the network visits single-species equilibria; recording
the last-visited equilibrium gives an itinerary of epochs.  Consecutive
visits step either one position forward (letter ``A``) or three positions
forward (letter ``B``) around the cycle, and the eventual repeating word is
the root sequence of the trajectory.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from ._util import fmt
from .integrate import Trajectory

__all__ = [
    "MAX_RADIUS",
    "ItineraryRecord",
    "Word",
    "RootDetection",
    "classify_point",
    "extract_itinerary",
    "word_of",
    "canonical_rotation",
    "detect_root",
    "epoch_ratios",
    "write_itinerary_csv",
]

#: Half the minimal distance between two single-species equilibria; proximity
#: balls with a radius below this bound cannot overlap.
MAX_RADIUS = math.sqrt(2.0) / 2.0

_AXES = np.eye(5)


def classify_point(x, radius: float) -> int:
    """Index (1..5) of the single-species equilibrium within ``radius``, else 0."""
    if not 0.0 < radius < MAX_RADIUS:
        raise ValueError(f"radius must lie in (0, {MAX_RADIUS:.6f}), got {radius}")
    x = np.asarray(x, dtype=float)
    d2 = ((x[None, :] - _AXES) ** 2).sum(axis=1)
    k = int(np.argmin(d2))
    return k + 1 if d2[k] <= radius * radius else 0


@dataclass
class ItineraryRecord:
    """Successive distinct last-visited equilibria with their entry times."""

    epochs: list[tuple[int, float]]
    radius: float

    def labels(self) -> list[int]:
        return [m for m, _ in self.epochs]

    def entry_times(self) -> np.ndarray:
        return np.array([t for _, t in self.epochs])

    def durations(self) -> np.ndarray:
        return np.diff(self.entry_times())


def extract_itinerary(traj: Trajectory, radius: float = 0.3) -> ItineraryRecord:
    """Last-visited-equilibrium epochs of a sampled trajectory.

    Proximity is evaluated in linear coordinates regardless of the storage
    mode.  Visits shorter than the sampling interval can be missed; lower
    ``record_stride`` for finer coding.
    """
    if not 0.0 < radius < MAX_RADIUS:
        raise ValueError(f"radius must lie in (0, {MAX_RADIUS:.6f}), got {radius}")
    xs = traj.states_linear()
    d2 = ((xs[:, None, :] - _AXES[None, :, :]) ** 2).sum(axis=2)
    nearest = d2.argmin(axis=1)
    near = d2[np.arange(len(xs)), nearest] <= radius * radius
    epochs: list[tuple[int, float]] = []
    last = 0
    for i in range(len(xs)):
        if near[i]:
            k = int(nearest[i]) + 1
            if k != last:
                epochs.append((k, float(traj.times[i])))
                last = k
    return ItineraryRecord(epochs=epochs, radius=radius)


@dataclass
class Word:
    """Letter encoding of an itinerary.

    Transitions whose index step is not +1 or +3 (mod 5) are flagged as
    defects (letter ``?``): the trajectory left the network neighbourhood.
    """

    letters: str
    defects: list[int] = field(default_factory=list)


def word_of(it: ItineraryRecord) -> Word:
    labels = it.labels()
    if len(labels) < 2:
        raise ValueError("itinerary needs at least two epochs to form a word")
    letters = []
    defects = []
    for n, (m1, m2) in enumerate(zip(labels, labels[1:])):
        step = (m2 - m1) % 5
        if step == 1:
            letters.append("A")
        elif step == 3:
            letters.append("B")
        else:
            letters.append("?")
            defects.append(n)
    return Word(letters="".join(letters), defects=defects)


def canonical_rotation(letters: str) -> str:
    """Lexicographically minimal rotation (A < B)."""
    if not letters:
        raise ValueError("empty word has no canonical rotation")
    return min(letters[i:] + letters[:i] for i in range(len(letters)))


@dataclass(frozen=True)
class RootDetection:
    status: str  # "root", "irregular" or "insufficient"
    root: str | None = None
    period: int = 0


def detect_root(word: Word | str, discard: float = 0.5, min_repeats: int = 3) -> RootDetection:
    """Detect the eventual repeating pattern of a word.

    The leading ``discard`` fraction is dropped as transient; the retained
    suffix must contain at least ``min_repeats`` full copies of a candidate
    period before it counts, and the smallest such period wins.  The root is
    returned in canonical rotation.
    """
    letters = word.letters if isinstance(word, Word) else word
    if not 0.0 <= discard < 1.0:
        raise ValueError(f"discard fraction must lie in [0, 1), got {discard}")
    suffix = letters[int(len(letters) * discard):]
    if len(suffix) < 8:
        return RootDetection(status="insufficient")
    for p in range(1, len(suffix) // min_repeats + 1):
        if all(suffix[i] == suffix[i + p] for i in range(len(suffix) - p)):
            root = suffix[:p]
            if set(root) <= {"A", "B"}:
                return RootDetection(status="root", root=canonical_rotation(root), period=p)
            break  # periodic but contains defect letters
    return RootDetection(status="irregular")


def epoch_ratios(it: ItineraryRecord, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Epoch durations and the period-``m`` spaced duration ratios.

    For a trajectory converging to a length-``m`` pattern the ratios
    approach the dominant eigenvalue of the pattern's transition-matrix
    product.
    """
    if m < 1:
        raise ValueError("period length must be >= 1")
    d = it.durations()
    if len(d) <= m:
        return d, np.empty(0)
    return d, d[m:] / d[:-m]


def write_itinerary_csv(it: ItineraryRecord, word: Word | None, stream: TextIO) -> None:
    """Rows ``n,m,tau,duration,letter`` (letter/duration empty on the last epoch)."""
    stream.write("n,m,tau,duration,letter\n")
    times = it.entry_times()
    for n, (m, tau) in enumerate(it.epochs):
        if n + 1 < len(it.epochs):
            duration = fmt(times[n + 1] - tau)
            letter = word.letters[n] if word is not None else ""
        else:
            duration = ""
            letter = ""
        stream.write(f"{n},{m},{fmt(tau)},{duration},{letter}\n")

"""Adaptive time integration of the competition equations.

A Dormand-Prince 5(4) embedded pair with PI step-size control, in either
linear population coordinates or logarithmic ones.  Log coordinates are the
default for studies of the approach to the network: components shrink to
e^-300 and beyond, far outside linear double precision.  Log values are
clamped at ``log_floor``; components that *start* at or below the floor are
treated as structural zeros and held there, which keeps boundary subspaces
exactly invariant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np

from ._util import fmt
from .errors import BoundarySubspaceError
from .model import Params, xi_q

__all__ = [
    "IntegratorOptions",
    "Trajectory",
    "integrate",
    "to_log",
    "to_linear",
    "default_start",
    "write_trajectory_csv",
]

# Dormand-Prince 5(4) tableau
_A2 = (1 / 5,)
_A3 = (3 / 40, 9 / 40)
_A4 = (44 / 45, -56 / 15, 32 / 9)
_A5 = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_A6 = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = tuple(
    b5 - b4
    for b5, b4 in zip(
        _B, (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
    )
)


@dataclass(frozen=True)
class IntegratorOptions:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    t_max: float = 1000.0
    max_steps: int = 2_000_000
    coords: str = "log"  # "linear" or "log"
    log_floor: float = -700.0
    record_stride: int = 1
    #: hold components that start at or below the floor there permanently
    #: (structural zeros, keeps boundary subspaces exactly invariant);
    #: disable when restarting from a clamped state
    pin_floor_start: bool = True

    def __post_init__(self) -> None:
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.t_max <= 0.0:
            raise ValueError("t_max must be positive")
        if self.log_floor >= 0.0:
            raise ValueError("log_floor must be negative")
        if self.coords not in ("linear", "log"):
            raise ValueError(f"coords must be 'linear' or 'log', got {self.coords!r}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


@dataclass
class Trajectory:
    """Recorded solution samples, stored in the active coordinate system."""

    times: np.ndarray
    states: np.ndarray
    mode: str
    params: Params
    truncated: bool = False
    truncation_reason: str | None = None
    clamp_events: int = 0
    meta: dict = field(default_factory=dict)

    def states_linear(self) -> np.ndarray:
        if self.mode == "linear":
            return self.states
        return np.exp(self.states)

    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()


def to_log(x, log_floor: float = -700.0) -> np.ndarray:
    """Componentwise natural log, clamped below at ``log_floor``."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise BoundarySubspaceError(
            "state has a zero component: it lies on a boundary subspace and "
            "has no log representation"
        )
    if np.any(x < 0.0):
        raise ValueError("log coordinates require positive components")
    return np.maximum(np.log(x), log_floor)


def to_linear(u) -> np.ndarray:
    """Componentwise exponential, inverse of :func:`to_log` above the floor."""
    return np.exp(np.asarray(u, dtype=float))


def default_start(p: Params, seed: int = 42, scale: float = 1e-3) -> np.ndarray:
    """Interior equilibrium plus a seeded pseudo-random perturbation."""
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(5)
    direction /= math.sqrt(float(direction @ direction))
    return xi_q(p).coords + scale * direction


def _rhs_linear(p: Params) -> Callable[[list[float]], list[float]]:
    ca, cb, ea, eb = p.c_a, p.c_b, p.e_a, p.e_b

    def rhs(x: list[float]) -> list[float]:
        x1, x2, x3, x4, x5 = x
        total = x1 + x2 + x3 + x4 + x5
        base = 1.0 - total
        return [
            x1 * (base - ca * x2 + eb * x3 - cb * x4 + ea * x5),
            x2 * (base - ca * x3 + eb * x4 - cb * x5 + ea * x1),
            x3 * (base - ca * x4 + eb * x5 - cb * x1 + ea * x2),
            x4 * (base - ca * x5 + eb * x1 - cb * x2 + ea * x3),
            x5 * (base - ca * x1 + eb * x2 - cb * x3 + ea * x4),
        ]

    return rhs


def _rhs_log(p: Params, pinned: tuple[bool, ...]) -> Callable[[list[float]], list[float]]:
    ca, cb, ea, eb = p.c_a, p.c_b, p.e_a, p.e_b
    exp = math.exp
    p1, p2, p3, p4, p5 = pinned

    def rhs(u: list[float]) -> list[float]:
        # exp underflows gracefully for very negative u; pinned components
        # contribute exactly zero so their subspace stays invariant
        x1 = 0.0 if p1 else exp(u[0])
        x2 = 0.0 if p2 else exp(u[1])
        x3 = 0.0 if p3 else exp(u[2])
        x4 = 0.0 if p4 else exp(u[3])
        x5 = 0.0 if p5 else exp(u[4])
        base = 1.0 - (x1 + x2 + x3 + x4 + x5)
        return [
            base - ca * x2 + eb * x3 - cb * x4 + ea * x5,
            base - ca * x3 + eb * x4 - cb * x5 + ea * x1,
            base - ca * x4 + eb * x5 - cb * x1 + ea * x2,
            base - ca * x5 + eb * x1 - cb * x2 + ea * x3,
            base - ca * x1 + eb * x2 - cb * x3 + ea * x4,
        ]

    return rhs


def integrate(p: Params, x0, opts: IntegratorOptions) -> Trajectory:
    """Integrate from ``x0`` (given in the coordinate system of ``opts.coords``).

    Returns a partial trajectory with ``truncated`` set instead of raising
    when the step size underflows or ``max_steps`` is exhausted.
    """
    u = [float(v) for v in np.asarray(x0, dtype=float)]
    if len(u) != 5:
        raise ValueError("state must have five components")

    log_mode = opts.coords == "log"
    floor = opts.log_floor
    if log_mode:
        if opts.pin_floor_start:
            pinned = tuple(v <= floor for v in u)
        else:
            pinned = (False,) * 5
        u = [max(v, floor) for v in u]
        rhs = _rhs_log(p, pinned)
    else:
        if any(v < 0.0 for v in u):
            raise ValueError("linear-mode start must lie in the closed positive orthant")
        pinned = (False,) * 5
        rhs = _rhs_linear(p)

    times = [0.0]
    states = [list(u)]
    t = 0.0
    h = 1e-4
    err_prev = 1.0
    k1 = rhs(u)
    steps = 0
    accepted = 0
    clamp_events = 0
    truncated = False
    reason = None
    atol, rtol = opts.abs_tol, opts.rel_tol

    while t < opts.t_max:
        if steps >= opts.max_steps:
            truncated, reason = True, "max_steps exceeded"
            break
        if h < 1e-13 * max(1.0, abs(t)):
            truncated, reason = True, "step size underflow"
            break
        if t + h > opts.t_max:
            h = opts.t_max - t
        steps += 1

        k2 = rhs([u[j] + h * (_A2[0] * k1[j]) for j in range(5)])
        k3 = rhs([u[j] + h * (_A3[0] * k1[j] + _A3[1] * k2[j]) for j in range(5)])
        k4 = rhs(
            [u[j] + h * (_A4[0] * k1[j] + _A4[1] * k2[j] + _A4[2] * k3[j]) for j in range(5)]
        )
        k5 = rhs(
            [
                u[j]
                + h * (_A5[0] * k1[j] + _A5[1] * k2[j] + _A5[2] * k3[j] + _A5[3] * k4[j])
                for j in range(5)
            ]
        )
        k6 = rhs(
            [
                u[j]
                + h
                * (
                    _A6[0] * k1[j]
                    + _A6[1] * k2[j]
                    + _A6[2] * k3[j]
                    + _A6[3] * k4[j]
                    + _A6[4] * k5[j]
                )
                for j in range(5)
            ]
        )
        unew = [
            u[j]
            + h * (_B[0] * k1[j] + _B[2] * k3[j] + _B[3] * k4[j] + _B[4] * k5[j] + _B[5] * k6[j])
            for j in range(5)
        ]
        k7 = rhs(unew)

        err = 0.0
        for j in range(5):
            e = h * (
                _E[0] * k1[j]
                + _E[2] * k3[j]
                + _E[3] * k4[j]
                + _E[4] * k5[j]
                + _E[5] * k6[j]
                + _E[6] * k7[j]
            )
            sc = atol + rtol * max(abs(u[j]), abs(unew[j]))
            err += (e / sc) ** 2
        err = math.sqrt(err / 5.0)

        if err <= 1.0:
            t += h
            clamped = False
            if log_mode:
                for j in range(5):
                    if pinned[j]:
                        if unew[j] != floor:
                            unew[j] = floor
                            clamped = True
                    elif unew[j] < floor:
                        unew[j] = floor
                        clamped = True
            else:
                for j in range(5):
                    if unew[j] < 0.0:
                        unew[j] = 0.0
                        clamped = True
                        clamp_events += 1
            u = unew
            # first-same-as-last stage is only valid if the clamp left the
            # accepted state untouched
            k1 = rhs(u) if clamped else k7
            accepted += 1
            if accepted % opts.record_stride == 0 or t >= opts.t_max:
                times.append(t)
                states.append(list(u))
            fac = 0.9 * err**-0.12 * err_prev**0.08
            err_prev = max(err, 1e-10)
            h *= min(5.0, max(0.2, fac))
        else:
            h *= max(0.2, 0.9 * err**-0.2)

    if times[-1] != t:
        times.append(t)
        states.append(list(u))

    return Trajectory(
        times=np.asarray(times),
        states=np.asarray(states),
        mode=opts.coords,
        params=p,
        truncated=truncated,
        truncation_reason=reason,
        clamp_events=clamp_events,
        meta={"steps": steps, "accepted": accepted},
    )


def write_trajectory_csv(traj: Trajectory, stream: TextIO) -> None:
    """Rows ``t,x1,x2,x3,x4,x5,mode``; log mode stores log-values."""
    stream.write("t,x1,x2,x3,x4,x5,mode\n")
    for t, row in zip(traj.times, traj.states):
        values = ",".join(fmt(v) for v in row)
        stream.write(f"{fmt(t)},{values},{traj.mode}\n")

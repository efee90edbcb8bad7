"""Local, global and composed return maps near the network.

States live on an incoming section near an equilibrium, parametrised by the
two expanding coordinates ``x_a`` (one-step direction) and ``x_b``
(three-step direction) plus an angle describing the contracted history.
After a one-step (A) arrival the natural angle variable is
``phi = pi/2 - theta``; after a three-step (B) arrival it is ``theta``
itself.  All iteration is carried out in log coordinates, where the
composed lowest-order maps are affine; states are materialised to linear
form only for reporting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TextIO

from ._util import fmt
from .errors import AmbiguousBranchError, NoExitError
from .model import Params

__all__ = [
    "MapParams",
    "LogState",
    "make_state",
    "time_of_flight",
    "local_map",
    "global_map",
    "phi",
    "phi_log",
    "Orbit",
    "iterate",
    "calibrate_theta_star",
    "write_orbit_csv",
]

_HALF_PI = math.pi / 2.0
# below this log-magnitude sin(x) = x and cos(x) = 1 hold to full precision
_SMALL_ANGLE_LOG = -18.0


@dataclass(frozen=True)
class MapParams:
    """Section radius and the order-one global-map constants.

    Stability conclusions do not depend on the constants, so they default
    to one; ``theta_star`` is the exit-angle threshold separating the two
    global branches and is a model parameter (see
    :func:`calibrate_theta_star` for an ODE-based estimate).
    """

    h: float = 0.1
    a3: float = 1.0
    a5: float = 1.0
    atheta: float = 1.0
    b2: float = 1.0
    b3: float = 1.0
    b5: float = 1.0
    ca: float = 1.0
    cb: float = 1.0
    ctheta: float = 1.0
    da: float = 1.0
    db: float = 1.0
    dtheta: float = 1.0
    theta_star: float = _HALF_PI / 2.0

    def __post_init__(self) -> None:
        if not 0.0 < self.h < 1.0:
            raise ValueError("section radius h must lie in (0, 1)")
        if not 0.0 < self.theta_star < _HALF_PI:
            raise ValueError("theta_star must lie in (0, pi/2)")
        for name in ("a3", "a5", "atheta", "b2", "b3", "b5", "ca", "cb", "ctheta", "da", "db", "dtheta"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"constant {name} must be positive")


@dataclass(frozen=True)
class LogState:
    """Section state in natural-log coordinates.

    ``l_ang`` stores log(phi) when ``ang_is_phi`` (previous transition of
    type A, angle measured from pi/2) and log(theta) otherwise.
    """

    lx_a: float
    lx_b: float
    l_ang: float
    ang_is_phi: bool


def make_state(x_a: float, x_b: float, angle: float, prev: str) -> LogState:
    """Build a log state from linear section coordinates after a ``prev`` move."""
    if x_a < 0.0 or x_b < 0.0 or angle < 0.0:
        raise ValueError("section coordinates must be nonnegative")
    if prev not in ("A", "B"):
        raise ValueError(f"prev must be A or B, got {prev!r}")
    log = lambda v: math.log(v) if v > 0.0 else -math.inf
    return LogState(log(x_a), log(x_b), log(angle), ang_is_phi=(prev == "A"))


def _log_sin(l_ang: float) -> float:
    """log(sin(exp(l_ang))) for an angle given in log form."""
    if l_ang < _SMALL_ANGLE_LOG:
        return l_ang
    return math.log(math.sin(math.exp(l_ang)))


def _log_cos(l_ang: float) -> float:
    """log(cos(exp(l_ang))) for an angle given in log form."""
    if l_ang < _SMALL_ANGLE_LOG:
        return 0.0
    return math.log(math.cos(math.exp(l_ang)))


def _time_of_flight_log(lx_a: float, lx_b: float, p: Params, lh: float) -> float:
    """Exit time from the local linear flow, solved on the log scale.

    Root of logaddexp(2(lx_a + e_a T), 2(lx_b + e_b T)) = 2 lh, which is
    strictly increasing in T; safeguarded Newton inside a bracket.
    """
    if lx_a == -math.inf and lx_b == -math.inf:
        raise NoExitError("both expanding coordinates vanish: no exit time")
    if lx_a == -math.inf:
        return (lh - lx_b) / p.e_b
    if lx_b == -math.inf:
        return (lh - lx_a) / p.e_a
    hi = min((lh - lx_a) / p.e_a, (lh - lx_b) / p.e_b)
    lo = 0.0
    if hi <= 0.0:
        raise ValueError("state lies outside the section disc")
    t = hi
    for _ in range(200):
        ea_term = 2.0 * (lx_a + p.e_a * t)
        eb_term = 2.0 * (lx_b + p.e_b * t)
        big, small = (ea_term, eb_term) if ea_term >= eb_term else (eb_term, ea_term)
        f = big + math.log1p(math.exp(small - big)) - 2.0 * lh
        if abs(f) < 1e-13:
            break
        if f > 0.0:
            hi = t
        else:
            lo = t
        w_a = 1.0 / (1.0 + math.exp(min(eb_term - ea_term, 700.0)))
        df = 2.0 * (p.e_a * w_a + p.e_b * (1.0 - w_a))
        t_new = t - f / df
        t = t_new if lo < t_new < hi else 0.5 * (lo + hi)
    return t


def time_of_flight(x_a: float, x_b: float, p: Params, h: float = 0.1) -> float:
    """Time for the local flow to reach the outgoing section radius ``h``."""
    if x_a < 0.0 or x_b < 0.0:
        raise ValueError("expanding coordinates must be nonnegative")
    if x_a >= h and x_b >= h:
        raise ValueError("state already outside the section")
    lh = math.log(h)
    la = math.log(x_a) if x_a > 0.0 else -math.inf
    lb = math.log(x_b) if x_b > 0.0 else -math.inf
    return _time_of_flight_log(la, lb, p, lh)


def _local_map_log(st: LogState, p: Params, mp: MapParams) -> tuple[float, float, float, float]:
    """Exact local map in log form.

    Returns (log x_a_out, log x_b_out, log tan(theta_e), T): the two
    contracted exit coordinates and the exit angle of the expanding pair.
    """
    t = _time_of_flight_log(st.lx_a, st.lx_b, p, math.log(mp.h))
    if st.ang_is_phi:
        l_sin_th = _log_cos(st.l_ang)
        l_cos_th = _log_sin(st.l_ang)
    else:
        l_sin_th = _log_sin(st.l_ang)
        l_cos_th = _log_cos(st.l_ang)
    l_xb_out = math.log(mp.h) + l_cos_th - p.c_b * t
    l_xa_out = math.log(mp.h) + l_sin_th - p.c_a * t
    l_tan_e = st.lx_a - st.lx_b + (p.e_a - p.e_b) * t
    return l_xa_out, l_xb_out, l_tan_e, t


def local_map(state: tuple[float, float, float], p: Params, mp: MapParams) -> tuple[float, float, float]:
    """Linear-coordinate local map: (x_a, x_b, theta) -> (x_a_out, x_b_out, theta_e)."""
    x_a, x_b, theta = state
    if not 0.0 <= theta <= _HALF_PI:
        raise ValueError("theta must lie in [0, pi/2]")
    t = time_of_flight(x_a, x_b, p, mp.h)
    x_b_out = mp.h * math.cos(theta) * math.exp(-p.c_b * t)
    x_a_out = mp.h * math.sin(theta) * math.exp(-p.c_a * t)
    theta_e = math.atan2(x_a * math.exp((p.e_a - p.e_b) * t), x_b)
    return x_a_out, x_b_out, theta_e


def global_map(
    branch: str, state: tuple[float, float, float], mp: MapParams
) -> tuple[float, float, float]:
    """Linearised connection map from the outgoing to the next incoming section.

    ``state`` is (x_a_out, x_b_out, theta_e).  Branch "A" (one-step move)
    requires theta_e > theta_star and returns (x_a, x_b, theta); branch "B"
    (three-step move) requires theta_e < theta_star.
    """
    x_a_out, x_b_out, theta_e = state
    if abs(theta_e - mp.theta_star) <= 1e-12:
        raise AmbiguousBranchError(f"exit angle {theta_e} sits on the branch threshold")
    if branch == "A":
        if theta_e < mp.theta_star:
            raise ValueError("branch A needs theta_e above theta_star")
        theta_c = _HALF_PI - mp.atheta * (_HALF_PI - theta_e)
        return mp.a3 * x_b_out, mp.a5 * x_a_out, theta_c
    if branch == "B":
        if theta_e > mp.theta_star:
            raise ValueError("branch B needs theta_e below theta_star")
        return mp.b5 * x_a_out, mp.b2 * theta_e, mp.b3 * x_b_out
    raise ValueError(f"branch must be 'A' or 'B', got {branch!r}")


def phi_log(prev: str, cur: str, u: tuple[float, float, float], p: Params, mp: MapParams) -> tuple[float, float, float]:
    """Composed lowest-order return map on log coordinates (affine).

    ``u`` is (log x_a, log x_b, log angle) with the angle of ``prev`` type;
    the result carries the angle of ``cur`` type.
    """
    ua, ub, uang = u
    ca, cb, ea, eb = p.c_a, p.c_b, p.e_a, p.e_b
    key = prev + cur
    if key == "AA":
        return (
            math.log(mp.da) + uang + (cb / ea) * ua,
            math.log(mp.db) + (ca / ea) * ua,
            math.log(mp.dtheta) + ub - (eb / ea) * ua,
        )
    if key == "AB":
        return (
            math.log(mp.ca) + (ca / eb) * ub,
            math.log(mp.cb) + ua - (ea / eb) * ub,
            math.log(mp.ctheta) + uang + (cb / eb) * ub,
        )
    if key == "BB":
        return (
            math.log(mp.ca) + uang + (ca / eb) * ub,
            math.log(mp.cb) + ua - (ea / eb) * ub,
            math.log(mp.ctheta) + (cb / eb) * ub,
        )
    if key == "BA":
        return (
            math.log(mp.da) + (cb / ea) * ua,
            math.log(mp.db) + uang + (ca / ea) * ua,
            math.log(mp.dtheta) + ub - (eb / ea) * ua,
        )
    raise ValueError(f"transition letters must be A or B, got {prev!r}->{cur!r}")


def phi(prev: str, cur: str, state: tuple[float, float, float], p: Params, mp: MapParams | None = None) -> tuple[float, float, float]:
    """Composed return map on linear coordinates.

    The angle slot holds phi when ``prev`` is A and theta when ``prev`` is
    B; same convention for the output with respect to ``cur``.  Zero
    components have no lowest-order image and are rejected.
    """
    mp = mp or MapParams()
    if any(v <= 0.0 for v in state):
        raise ValueError("composed map needs strictly positive components")
    u = tuple(math.log(v) for v in state)
    out = phi_log(prev, cur, u, p, mp)
    return tuple(math.exp(v) for v in out)  # type: ignore[return-value]


@dataclass
class Orbit:
    """Iterated section states (log form) with the executed letters."""

    rows: list[tuple[int, str, str, float, float, float]] = field(default_factory=list)
    letters: str = ""
    escaped: bool = False
    circuits: int = 0


def _escaped(st: LogState, mp: MapParams) -> bool:
    lh = math.log(mp.h)
    return st.lx_a >= lh or st.lx_b >= lh or st.l_ang >= math.log(_HALF_PI)


def iterate(
    p: Params,
    state0: LogState,
    n_circuits: int,
    word: str | None = None,
    mode: str = "forced",
    mp: MapParams | None = None,
) -> Orbit:
    """Iterate the return map for ``n_circuits`` passes.

    Forced mode applies the letters of ``word`` cyclically through the
    composed monomial maps.  Free mode solves the exact local map each step
    and picks the branch from the exit angle against ``theta_star``; one
    circuit is one step.  The orbit truncates with ``escaped`` set when a
    component leaves the section.
    """
    mp = mp or MapParams()
    orbit = Orbit()
    if mode == "forced":
        if not word or set(word) - {"A", "B"}:
            raise ValueError("forced mode needs a nonempty word over A/B")
        if state0.ang_is_phi != (word[-1] == "A"):
            raise ValueError(
                "state angle type must match the transition preceding the word "
                f"(last letter {word[-1]!r})"
            )
        prev = word[-1]
        u = (state0.lx_a, state0.lx_b, state0.l_ang)
        step = 0
        for circuit in range(n_circuits):
            for cur in word:
                u = phi_log(prev, cur, u, p, mp)
                st = LogState(u[0], u[1], u[2], ang_is_phi=(cur == "A"))
                orbit.rows.append((step, prev, cur, u[0], u[1], u[2]))
                orbit.letters += cur
                prev = cur
                step += 1
                if _escaped(st, mp):
                    orbit.escaped = True
                    orbit.circuits = circuit
                    return orbit
            orbit.circuits = circuit + 1
        return orbit
    if mode == "free":
        st = state0
        prev = "A" if st.ang_is_phi else "B"
        for step in range(n_circuits):
            l_xa_out, l_xb_out, l_tan_e, _ = _local_map_log(st, p, mp)
            if l_tan_e > 30.0:
                cur = "A"
                l_phi_e = -l_tan_e
            elif l_tan_e < -30.0:
                cur = "B"
                l_th_e = l_tan_e
            else:
                theta_e = math.atan(math.exp(l_tan_e))
                if abs(theta_e - mp.theta_star) <= 1e-12:
                    raise AmbiguousBranchError(
                        f"exit angle {theta_e} sits on the branch threshold"
                    )
                cur = "A" if theta_e > mp.theta_star else "B"
                if cur == "A":
                    l_phi_e = math.log(_HALF_PI - theta_e)
                else:
                    l_th_e = math.log(theta_e)
            if cur == "A":
                st = LogState(
                    math.log(mp.a3) + l_xb_out,
                    math.log(mp.a5) + l_xa_out,
                    math.log(mp.atheta) + l_phi_e,
                    ang_is_phi=True,
                )
            else:
                st = LogState(
                    math.log(mp.b5) + l_xa_out,
                    math.log(mp.b2) + l_th_e,
                    math.log(mp.b3) + l_xb_out,
                    ang_is_phi=False,
                )
            orbit.rows.append((step, prev, cur, st.lx_a, st.lx_b, st.l_ang))
            orbit.letters += cur
            prev = cur
            orbit.circuits = step + 1
            if _escaped(st, mp):
                orbit.escaped = True
                break
        return orbit
    raise ValueError(f"mode must be 'forced' or 'free', got {mode!r}")


def calibrate_theta_star(p: Params, h: float = 0.1, tol: float = 1e-4) -> float:
    """Estimate the branch threshold from direct integrations.

    Launches trajectories from the outgoing section near the first
    equilibrium inside the subspace where only species 1, 2 and 4 are
    present, and bisects on the launch angle between reaching species 2
    (one-step) and species 4 (three-step) first.
    """
    from .integrate import IntegratorOptions, integrate
    from .itinerary import classify_point

    def destination(theta: float) -> int:
        x0 = [0.0] * 5
        x0[1] = h * math.sin(theta)
        x0[3] = h * math.cos(theta)
        x0[0] = 1.0 - x0[1] - x0[3]
        opts = IntegratorOptions(
            rel_tol=1e-10, abs_tol=1e-12, t_max=200.0, coords="linear", record_stride=1
        )
        traj = integrate(p, x0, opts)
        for row in traj.states:
            k = classify_point(row, 0.3)
            if k in (2, 4):
                return k
        raise RuntimeError("trajectory reached neither destination equilibrium")

    lo, hi = 1e-3, _HALF_PI - 1e-3
    if destination(lo) != 4 or destination(hi) != 2:
        raise RuntimeError("branch structure not bracketed; adjust the section radius")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if destination(mid) == 4:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def write_orbit_csv(orbit: Orbit, stream: TextIO) -> None:
    """Rows ``k,prev,cur,log_xA,log_xB,log_angle``."""
    stream.write("k,prev,cur,log_xA,log_xB,log_angle\n")
    for k, prev, cur, lxa, lxb, lang in orbit.rows:
        stream.write(f"{k},{prev},{cur},{fmt(lxa)},{fmt(lxb)},{fmt(lang)}\n")

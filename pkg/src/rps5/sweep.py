"""Parameter-plane exploration: grids, boundary tracing and classification.

The stability scalar of a root sequence is a continuous function of the two
competition rates, positive exactly on the stable side.  Grid sweeps map
out the sign, a derivative-free predictor-corrector traces the zero set,
and direct simulation classifies the observed behaviour for comparison.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from ._util import fmt
from .integrate import IntegratorOptions, default_start, integrate, to_log
from .itinerary import (
    ItineraryRecord,
    canonical_rotation,
    detect_root,
    extract_itinerary,
    word_of,
)
from .model import Params
from .stability import StabilityReport, sequence_stability

__all__ = [
    "GridSpec",
    "grid_sweep",
    "BoundaryPolyline",
    "trace_boundary",
    "TongueFamily",
    "TongueEntry",
    "enumerate_tongues",
    "Classification",
    "classify_by_simulation",
    "CrossValidation",
    "cross_validate",
    "write_grid_csv",
    "write_boundary_csv",
    "write_classification_csv",
]

BLOCKS = {"D": "BB", "T": "AAB", "Q": "ABBB"}


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid over the two competition rates at fixed expansion rates."""

    ca_range: tuple[float, float]
    cb_range: tuple[float, float]
    n_ca: int
    n_cb: int
    e_a: float = 1.0
    e_b: float = 0.8
    sequences: tuple[str, ...] = ("A", "B", "AAB")

    def __post_init__(self) -> None:
        if self.n_ca < 2 or self.n_cb < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if min(*self.ca_range, *self.cb_range) <= 0.0:
            raise ValueError("rate ranges must be positive")

    def ca_values(self) -> np.ndarray:
        return np.linspace(self.ca_range[0], self.ca_range[1], self.n_ca)

    def cb_values(self) -> np.ndarray:
        return np.linspace(self.cb_range[0], self.cb_range[1], self.n_cb)


def grid_sweep(spec: GridSpec, threads: int = 1) -> list[StabilityReport]:
    """Stability reports in deterministic order: sequence-major, then row-major.

    Rows (fixed first rate) are independent work items; with ``threads > 1``
    they are evaluated in a pool and merged back by index.
    """
    cas = spec.ca_values()
    cbs = spec.cb_values()

    def row(args: tuple[str, float]) -> list[StabilityReport]:
        seq, ca = args
        return [
            sequence_stability(seq, Params(ca, cb, spec.e_a, spec.e_b)) for cb in cbs
        ]

    tasks = [(seq, ca) for seq in spec.sequences for ca in cas]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, tasks))
    else:
        rows = [row(t) for t in tasks]
    return [report for chunk in rows for report in chunk]


@dataclass
class BoundaryPolyline:
    """Ordered points on the zero set of the stability scalar."""

    sequence: str
    points: np.ndarray
    s_values: np.ndarray
    closed: bool = False
    truncated: bool = False
    diagnostic: str | None = None


def _bisect_zero(f, p_neg: np.ndarray, p_pos: np.ndarray, param_tol: float) -> np.ndarray:
    """Bisect between points of opposite scalar sign down to ``param_tol``."""
    a, b = p_neg.copy(), p_pos.copy()
    while float(np.hypot(*(b - a))) > param_tol:
        mid = 0.5 * (a + b)
        if f(mid) > 0.0:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


def trace_boundary(
    seq: str,
    start: tuple[float, float],
    step: float = 0.005,
    e_a: float = 1.0,
    e_b: float = 0.8,
    domain: tuple[tuple[float, float], tuple[float, float]] = ((0.05, 3.0), (0.05, 3.0)),
    max_points: int = 2000,
    param_tol: float = 1e-12,
) -> BoundaryPolyline:
    """Trace the stability boundary of ``seq`` through ``start``.

    Secant predictor along the running tangent, bisection corrector
    transverse to it.  The sign of the scalar flips exactly on the
    boundary, so the corrector bisects on sign down to ``param_tol`` in
    parameter units rather than on a smallness threshold (the scalar can
    vanish quadratically from the stable side).  Stops at the domain edge,
    on closure, or with a diagnostic when the corrector cannot bracket.
    """

    def fval(pt: np.ndarray) -> float:
        return sequence_stability(seq, Params(float(pt[0]), float(pt[1]), e_a, e_b)).s

    def in_domain(pt: np.ndarray) -> bool:
        return (
            domain[0][0] <= pt[0] <= domain[0][1] and domain[1][0] <= pt[1] <= domain[1][1]
        )

    p0 = np.asarray(start, dtype=float)
    if not in_domain(p0):
        raise ValueError(f"start {start} outside the tracing domain")

    # seed: probe the four axis directions for a sign change within one step
    f0 = fval(p0)
    seed = None
    for d in (np.array([0.0, 1.0]), np.array([0.0, -1.0]), np.array([1.0, 0.0]), np.array([-1.0, 0.0])):
        for r in (step, 2.0 * step, 4.0 * step):
            q = p0 + r * d
            if not in_domain(q):
                continue
            fq = fval(q)
            if fq == 0.0 or (fq > 0.0) != (f0 > 0.0):
                lo, hi = (p0, q) if f0 <= 0.0 else (q, p0)
                seed = _bisect_zero(fval, lo, hi, param_tol)
                break
        if seed is not None:
            break
    if seed is None:
        return BoundaryPolyline(
            sequence=seq,
            points=np.empty((0, 2)),
            s_values=np.empty(0),
            truncated=True,
            diagnostic="no sign change within reach of the start point",
        )

    def advance(first: np.ndarray, tangent: np.ndarray) -> tuple[list[np.ndarray], bool, str | None]:
        pts = []
        cur = first
        tan = tangent
        for _ in range(max_points):
            pred = cur + step * tan
            if not in_domain(pred):
                return pts, False, None
            normal = np.array([-tan[1], tan[0]])
            bracket = None
            f_pred = fval(pred)
            for r in (0.5 * step, step, 2.0 * step, 4.0 * step):
                for sgn in (1.0, -1.0):
                    q = pred + sgn * r * normal
                    if not in_domain(q):
                        continue
                    fq = fval(q)
                    if fq == 0.0 or (fq > 0.0) != (f_pred > 0.0):
                        bracket = (pred, f_pred, q, fq)
                        break
                if bracket is not None:
                    break
            if bracket is None:
                return pts, False, "corrector failed to bracket a sign change"
            a, fa, b, fb = bracket
            lo, hi = (a, b) if fa <= 0.0 else (b, a)
            nxt = _bisect_zero(fval, lo, hi, param_tol)
            pts.append(nxt)
            new_tan = nxt - cur
            norm = float(np.hypot(*new_tan))
            if norm == 0.0:
                return pts, False, "tracer stalled"
            tan = new_tan / norm
            cur = nxt
            if len(pts) > 3 and float(np.hypot(*(cur - seed))) < 0.6 * step:
                return pts, True, None
        return pts, False, "max_points exhausted"

    # initial tangent: probe compass directions for one that admits a correction
    closed = False
    diagnostic = None
    forward: list[np.ndarray] = []
    backward: list[np.ndarray] = []
    init_tan = None
    for ang in np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False):
        tan = np.array([math.cos(ang), math.sin(ang)])
        pts, cl, diag = advance(seed, tan)
        if pts:
            init_tan = tan
            forward, closed = pts, cl
            diagnostic = diag
            break
    if init_tan is None:
        return BoundaryPolyline(
            sequence=seq,
            points=np.array([seed]),
            s_values=np.array([fval(seed)]),
            truncated=True,
            diagnostic="no continuation direction found",
        )
    if not closed:
        backward, _, diag_b = advance(seed, -init_tan)
        diagnostic = diagnostic or diag_b

    chain = list(reversed(backward)) + [seed] + forward
    points = np.array(chain)
    s_values = np.array([fval(pt) for pt in chain])
    return BoundaryPolyline(
        sequence=seq,
        points=points,
        s_values=s_values,
        closed=closed,
        truncated=diagnostic is not None,
        diagnostic=diagnostic,
    )


@dataclass(frozen=True)
class TongueFamily:
    """Alphabet of building blocks for candidate root sequences."""

    components: tuple[str, ...] = ("T", "D", "Q")
    max_length: int = 9

    def __post_init__(self) -> None:
        unknown = set(self.components) - set(BLOCKS)
        if unknown:
            raise ValueError(f"unknown components {sorted(unknown)}; choose from {sorted(BLOCKS)}")
        if self.max_length < 3:
            raise ValueError("max_length must be at least 3")


@dataclass(frozen=True)
class TongueEntry:
    label: str
    letters: str


def _parse_blocks(letters: str) -> tuple[str, ...]:
    """Recover the block reading of a block-aligned word.

    The canonical rotation of any block concatenation is block aligned, and
    the first two letters decide the block: AA -> T, AB -> Q, BB -> D.
    """
    blocks = []
    i = 0
    while i < len(letters):
        pair = letters[i : i + 2]
        if pair == "AA":
            block = "T"
        elif pair == "AB":
            block = "Q"
        elif pair == "BB":
            block = "D"
        else:
            raise ValueError(f"{letters!r} is not block aligned at position {i}")
        if letters[i : i + len(BLOCKS[block])] != BLOCKS[block]:
            raise ValueError(f"{letters!r} is not a block word at position {i}")
        blocks.append(block)
        i += len(BLOCKS[block])
    return tuple(blocks)


def _compress_label(blocks: tuple[str, ...]) -> str:
    out = []
    i = 0
    while i < len(blocks):
        j = i
        while j < len(blocks) and blocks[j] == blocks[i]:
            j += 1
        run = j - i
        out.append(blocks[i] if run == 1 else f"{blocks[i]}{run}")
        i = j
    return "".join(out)


def _minimal_period(letters: str) -> bool:
    n = len(letters)
    for d in range(1, n):
        if n % d == 0 and letters == letters[:d] * (n // d):
            return False
    return True


def enumerate_tongues(family: TongueFamily) -> list[TongueEntry]:
    """All distinct block concatenations up to ``max_length`` letters.

    Rotations are identified (canonical form) and words that are a proper
    power of a shorter word are dropped; adjacent-tongue concatenations
    are included by construction.
    """
    found: set[str] = set()
    stack: list[tuple[tuple[str, ...], int]] = [((), 0)]
    while stack:
        blocks, length = stack.pop()
        for comp in family.components:
            new_len = length + len(BLOCKS[comp])
            if new_len > family.max_length:
                continue
            new_blocks = blocks + (comp,)
            letters = "".join(BLOCKS[b] for b in new_blocks)
            canon = canonical_rotation(letters)
            if _minimal_period(canon):
                found.add(canon)
            stack.append((new_blocks, new_len))
    entries = [
        TongueEntry(label=_compress_label(_parse_blocks(canon)), letters=canon)
        for canon in found
    ]
    entries.sort(key=lambda e: (len(e.letters), e.letters))
    return entries


@dataclass
class Classification:
    """Outcome of direct simulation at one parameter point.

    ``outcome`` is "root" (eventually periodic visiting pattern),
    "irregular" (sustained network visits, no period within budget) or
    "interior" (no visits to the single-species equilibria: an interior
    attractor such as an equilibrium, periodic/quasiperiodic orbit or the
    three-species cycle chain).
    """

    params: Params
    outcome: str
    root: str | None
    period: int
    letters: str
    defects: int
    seed: int
    budget: int
    t_end: float
    itinerary: ItineraryRecord | None = None
    depths: np.ndarray | None = None  # min log-coordinate at each epoch entry


def classify_by_simulation(
    p: Params,
    budget: int = 200,
    seed: int = 42,
    radius: float = 0.3,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    log_floor: float = -500.0,
    chunk_t: float = 5000.0,
    max_chunks: int = 40,
    discard: float = 0.5,
) -> Classification:
    """Classify the long-run behaviour at ``p`` by integration.

    Starts from the seeded perturbation of the interior equilibrium and
    accumulates itinerary letters in integration chunks until ``budget``
    letters are available (or the trajectory demonstrably settles away
    from the network).
    """
    if budget < 50:
        raise ValueError("letter budget must be at least 50")
    u = to_log(default_start(p, seed), log_floor)
    opts = IntegratorOptions(
        rel_tol=rel_tol,
        abs_tol=abs_tol,
        t_max=chunk_t,
        coords="log",
        log_floor=log_floor,
        record_stride=1,
        pin_floor_start=False,  # chunk restarts legitimately sit at the floor
    )
    epochs: list[tuple[int, float]] = []
    depths: list[float] = []
    t_offset = 0.0
    stalled_chunks = 0
    for _ in range(max_chunks):
        traj = integrate(p, u, opts)
        chunk_it = extract_itinerary(traj, radius)
        fresh = chunk_it.epochs
        # the chunk re-reports the equilibrium we were already closest to
        if fresh and epochs and fresh[0][0] == epochs[-1][0]:
            fresh = fresh[1:]
        if fresh:
            stalled_chunks = 0
            entry_times = [t for _, t in fresh]
            idx = np.searchsorted(traj.times, entry_times)
            idx = np.minimum(idx, len(traj.times) - 1)
            depths.extend(traj.states[idx].min(axis=1).tolist())
            epochs.extend((m, t_offset + t) for m, t in fresh)
        else:
            stalled_chunks += 1
        u = traj.final_state()
        t_offset += traj.times[-1]
        if len(epochs) - 1 >= budget:
            break
        if stalled_chunks >= 2:
            break

    itinerary = ItineraryRecord(epochs=epochs, radius=radius)
    depths_arr = np.array(depths)
    if len(epochs) < 2:
        return Classification(
            params=p,
            outcome="interior",
            root=None,
            period=0,
            letters="",
            defects=0,
            seed=seed,
            budget=budget,
            t_end=t_offset,
            itinerary=itinerary,
            depths=depths_arr,
        )
    word = word_of(itinerary)
    # once an epoch entry reaches the clamp floor the letters are produced by
    # the regularised dynamics, which can break or fake a pattern; detect the
    # root on the clean prefix whenever it is long enough
    saturated = depths_arr <= log_floor + 1.0
    n_clean = int(np.argmax(saturated)) if saturated.any() else len(epochs)
    clean_letters = word.letters[: max(n_clean - 1, 0)]
    detection = detect_root(
        clean_letters if len(clean_letters) >= 16 else word, discard=discard
    )
    if stalled_chunks >= 2 and len(word.letters) < budget and detection.status != "root":
        # visits stopped: the network episode was transient
        outcome, root, period = "interior", None, 0
    elif detection.status == "root":
        outcome, root, period = "root", detection.root, detection.period
    else:
        outcome, root, period = "irregular", None, 0
    return Classification(
        params=p,
        outcome=outcome,
        root=root,
        period=period,
        letters=word.letters,
        defects=len(word.defects),
        seed=seed,
        budget=budget,
        t_end=t_offset,
        itinerary=itinerary,
        depths=np.array(depths),
    )


@dataclass
class CrossValidation:
    """Simulation versus transition-matrix theory at one parameter point."""

    classification: Classification
    report: StabilityReport | None
    lambda_max: float | None
    ratios: np.ndarray
    max_rel_err: float | None
    consistent: bool
    message: str


def cross_validate(
    p: Params,
    budget: int = 120,
    seed: int = 42,
    n_ratios: int = 5,
    rel_err_tol: float = 0.05,
    depth_margin: float = 25.0,
    **classify_kwargs,
) -> CrossValidation:
    """Check that the simulated root is predicted stable and contracts at the
    predicted rate.

    Epoch-duration ratios spaced by the root period approach the dominant
    eigenvalue of the root's matrix product; epochs that have reached the
    integration log-floor are excluded (their durations saturate).
    """
    cls = classify_by_simulation(p, budget=budget, seed=seed, **classify_kwargs)
    if cls.outcome != "root":
        return CrossValidation(
            classification=cls,
            report=None,
            lambda_max=None,
            ratios=np.empty(0),
            max_rel_err=None,
            consistent=False,
            message=f"no periodic root detected (outcome {cls.outcome})",
        )
    root = cls.root or ""
    report = sequence_stability(root, p)
    lam = float(report.lambda_max.real)
    m = len(root)
    durations = cls.itinerary.durations() if cls.itinerary else np.empty(0)
    floor = classify_kwargs.get("log_floor", -500.0)
    depths = cls.depths if cls.depths is not None else np.empty(0)
    ratios = []
    for n in range(len(durations) - m):
        involved = depths[n : n + m + 2]
        if len(involved) and involved.min() <= floor + depth_margin:
            continue
        ratios.append(durations[n + m] / durations[n])
    ratios = np.array(ratios[-n_ratios:])
    ok_fas = report.verdict == "fas"
    if len(ratios) == 0:
        return CrossValidation(
            classification=cls,
            report=report,
            lambda_max=lam,
            ratios=ratios,
            max_rel_err=None,
            consistent=False,
            message="no usable pre-saturation epochs for ratio comparison",
        )
    max_rel_err = float(np.max(np.abs(ratios / lam - 1.0)))
    ok_rate = max_rel_err <= rel_err_tol
    message = (
        f"root {root}: verdict {report.verdict}, duration ratios within "
        f"{100 * max_rel_err:.2f}% of the dominant eigenvalue {lam:.6g}"
    )
    return CrossValidation(
        classification=cls,
        report=report,
        lambda_max=lam,
        ratios=ratios,
        max_rel_err=max_rel_err,
        consistent=ok_fas and ok_rate,
        message=message,
    )


def write_grid_csv(reports: list[StabilityReport], stream: TextIO) -> None:
    """Rows ``cA,cB,seq,s,verdict,fail_matrix,fail_component``."""
    stream.write("cA,cB,seq,s,verdict,fail_matrix,fail_component\n")
    for r in reports:
        fm = "" if r.failing_matrix is None else str(r.failing_matrix)
        fc = "" if r.failing_component is None else str(r.failing_component)
        stream.write(
            f"{fmt(r.params.c_a)},{fmt(r.params.c_b)},{r.sequence},"
            f"{fmt(r.s)},{r.verdict},{fm},{fc}\n"
        )


def write_boundary_csv(poly: BoundaryPolyline, stream: TextIO) -> None:
    """Rows ``seq,idx,cA,cB,s``."""
    stream.write("seq,idx,cA,cB,s\n")
    for i, (pt, s) in enumerate(zip(poly.points, poly.s_values)):
        stream.write(f"{poly.sequence},{i},{fmt(pt[0])},{fmt(pt[1])},{fmt(s)}\n")


def write_classification_csv(cls: Classification, stream: TextIO) -> None:
    """Row ``cA,cB,outcome,root,period,lambda_max``."""
    stream.write("cA,cB,outcome,root,period,lambda_max\n")
    lam = ""
    if cls.outcome == "root" and cls.root:
        lam = fmt(sequence_stability(cls.root, cls.params).lambda_max.real)
    stream.write(
        f"{fmt(cls.params.c_a)},{fmt(cls.params.c_b)},{cls.outcome},"
        f"{cls.root or ''},{cls.period},{lam}\n"
    )

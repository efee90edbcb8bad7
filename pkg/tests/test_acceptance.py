"""Acceptance suite: one test per criterion, each printing a PASS line with
its runtime.  Run with ``pytest tests/test_acceptance.py -v -s``.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from rps5 import (
    BETA,
    GridSpec,
    IntegratorOptions,
    LogState,
    Params,
    basic_matrix,
    classify_by_simulation,
    closed_form,
    collection,
    cross_validate,
    default_start,
    eigen3,
    grid_sweep,
    integrate,
    iterate,
    jacobian,
    rotate,
    sequence_stability,
    to_log,
    trace_boundary,
    xi_q,
    xi_q_eigenvalues,
    xi_t,
)

E_A, E_B = 1.0, 0.8

TD = "AABBB"
T2D = "AABAABBB"
T2DTD = "AABAABBBAABBB"


def report(number: int, started: float, limit: float, detail: str) -> None:
    elapsed = time.perf_counter() - started
    print(f"ACCEPTANCE {number} PASS ({elapsed:.2f}s < {limit:.0f}s): {detail}")
    assert elapsed < limit


def test_criterion_1_circulant_spectrum_matches_dense():
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    checked = 0
    worst = 0.0
    while checked < 100:
        ca, cb, ea, eb = rng.uniform(0.1, 3.0, size=4)
        if 5.0 + ca + cb - ea - eb <= 0.0:
            continue  # no interior equilibrium for this draw
        p = Params(ca, cb, ea, eb)
        mu = xi_q_eigenvalues(p).mu
        dense = list(np.linalg.eigvals(jacobian(p, xi_q(p).coords)))
        for value in mu:
            gaps = [abs(d - value) for d in dense]
            k = int(np.argmin(gaps))
            worst = max(worst, gaps[k])
            dense.pop(k)
        checked += 1
    assert worst < 1e-9
    report(1, started, 1.0, f"spectrum agreement on 100 draws, worst gap {worst:.2e}")


def test_criterion_2_hopf_boundary_bisection():
    started = time.perf_counter()
    ca = 0.89

    def growth(cb):
        return max(m.real for m in xi_q_eigenvalues(Params(ca, cb, E_A, E_B)).mu)

    lo, hi = 0.4, 0.6
    assert growth(lo) > 0.0 > growth(hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if growth(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    located = 0.5 * (lo + hi)
    closed = E_B - BETA * (E_A - ca)  # second stability condition tied
    assert located == pytest.approx(closed, abs=1e-8)
    # the periodic-solution point sits on the unstable side
    assert growth(0.5) > 0.0
    report(2, started, 1.0, f"Hopf boundary at c_B = {located:.10f} matches {closed:.10f}")


def test_criterion_3_scalar_sign_agrees_with_closed_forms():
    started = time.perf_counter()
    spec = GridSpec(
        ca_range=(0.25, 2.5),
        cb_range=(0.25, 2.5),
        n_ca=100,
        n_cb=100,
        sequences=("A", "B", "AAB"),
    )
    reports = grid_sweep(spec)
    compared = 0
    for r in reports:
        if abs(r.s) < 1e-6:
            continue
        verdict = closed_form(r.sequence, r.params).verdict
        assert (r.s > 0.0) == (verdict == "fas"), (r.sequence, r.params)
        compared += 1
    assert compared > 25000
    report(3, started, 30.0, f"sign agreement on {compared} grid cells")


def test_criterion_4_boundary_traces_match_closed_forms():
    started = time.perf_counter()

    poly = trace_boundary(
        "A", (1.0, 1.26), step=0.005, domain=((0.895, 1.605), (1.0, 2.2))
    )
    pts = poly.points
    dev = np.max(np.abs(pts[:, 1] - (E_A / E_B) * pts[:, 0]))
    assert dev < 1e-6
    assert pts[:, 0].min() < 0.905 and pts[:, 0].max() > 1.595
    assert np.max(np.abs(poly.s_values)) < 1e-8

    # the three-step cycle's curve is a stability boundary only where its
    # other two conditions hold, i.e. for c_A above the corner at 1.25
    poly = trace_boundary(
        "B", (1.45, E_B * 1.45**3), step=0.005, domain=((1.3, 1.605), (1.7, 3.4))
    )
    pts = poly.points
    dev_b = np.max(np.abs(pts[:, 1] - E_B * pts[:, 0] ** 3))
    assert dev_b < 1e-6
    assert pts[:, 0].min() < 1.31 and pts[:, 0].max() > 1.595
    assert np.max(np.abs(poly.s_values)) < 1e-8

    poly = trace_boundary(
        "AAB", (1.0, 2.26), step=0.005, domain=((0.895, 1.605), (1.5, 4.8))
    )
    pts = poly.points
    dev_t = np.max(np.abs(pts[:, 1] - (pts[:, 0] ** 2 / E_A + pts[:, 0] * E_A / E_B)))
    assert dev_t < 1e-6
    assert pts[:, 0].min() < 0.905 and pts[:, 0].max() > 1.595
    assert np.max(np.abs(poly.s_values)) < 1e-8

    report(
        4,
        started,
        60.0,
        f"traced deviations A {dev:.1e}, B {dev_b:.1e}, AAB {dev_t:.1e}",
    )


def test_criterion_5_simulation_theory_cross_validation():
    started = time.perf_counter()

    cv = cross_validate(Params(1.2, 1.0, E_A, E_B), budget=120)
    assert cv.classification.root == "A"
    assert cv.lambda_max == pytest.approx(1.1820469771, abs=1e-9)
    assert cv.max_rel_err is not None and cv.max_rel_err < 0.05
    assert cv.consistent

    cls = classify_by_simulation(Params(1.2, 0.7, E_A, E_B), budget=200)
    assert cls.outcome == "irregular"

    p_tq = Params(0.8, 0.9, E_A, E_B)
    cls = classify_by_simulation(p_tq, budget=200)
    assert cls.outcome == "interior"
    assert len(cls.itinerary.epochs) == 0
    # the trajectory must settle onto the chain of three-species equilibria
    opts = IntegratorOptions(
        rel_tol=1e-8, abs_tol=1e-10, t_max=8000.0, coords="log", log_floor=-400.0
    )
    traj = integrate(p_tq, to_log(default_start(p_tq, 42)), opts)
    xs = np.exp(traj.states[traj.times > 2000.0])
    base = xi_t(p_tq).coords
    dists = np.stack(
        [np.linalg.norm(xs - rotate(base, r)[None, :], axis=1) for r in range(5)]
    )
    visited = {int(r) for r in np.argmin(dists, axis=0)[dists.min(axis=0) < 0.05]}
    assert len(visited) >= 3
    report(
        5,
        started,
        120.0,
        f"root A at 1.182 within {100 * cv.max_rel_err:.1f}%, irregular and "
        f"three-species-chain points as expected",
    )


def _forced_contraction_ok(report_row, n_circuits=30, fit_tail=10, tol=0.05):
    """Re-verify a stable cell: forced iteration contracts at log(lambda_max).

    The start sits on the dominant eigenray, scaled so that every
    intermediate state of the first circuit (the rotated eigenvectors)
    stays well inside the section.
    """
    seq = report_row.sequence
    p = report_row.params
    mats = collection(seq, p).matrices
    eig = eigen3(mats[0])
    lam = eig.lambda_max.real
    w = eig.w_max
    if w is None or not np.all(w > 0.0):
        return False
    intermediates = [w]
    v = w.copy()
    for i in range(len(seq) - 1):
        v = basic_matrix(seq[i - 1], seq[i], p) @ v
        intermediates.append(v)
    v_min = min(float(vec.min()) for vec in intermediates)
    if v_min <= 0.0:
        return False
    scale = (abs(math.log(0.1)) + 10.0) / v_min
    u0 = -scale * w
    state = LogState(u0[0], u0[1], u0[2], ang_is_phi=(seq[-1] == "A"))
    orbit = iterate(p, state, n_circuits, word=seq, mode="forced")
    if orbit.escaped:
        return False
    m = len(seq)
    norms = np.array([np.linalg.norm(r[3:6]) for r in orbit.rows[m - 1 :: m]])
    slope = float(np.mean(np.diff(np.log(norms))[-fit_tail:]))
    return abs(slope / math.log(lam) - 1.0) <= tol


def test_criterion_6_tongue_structure():
    started = time.perf_counter()
    sequences = (TD, T2D, T2DTD)
    spec = GridSpec(
        ca_range=(0.8, 1.6), cb_range=(0.8, 1.6), n_ca=200, n_cb=200, sequences=sequences
    )
    rows = grid_sweep(spec)
    fas_cells = {seq: [] for seq in sequences}
    for r in rows:
        if r.verdict == "fas":
            fas_cells[r.sequence].append(r)
    for seq in sequences:
        assert fas_cells[seq], f"no stable cells found for {seq}"

    # left-to-right order along a scan just below the tied-product line
    scan = np.linspace(0.85, 1.05, 600)
    intervals = {}
    for seq in sequences:
        hits = [
            ca
            for ca in scan
            if sequence_stability(seq, Params(ca, (ca + 0.02) / E_B, E_A, E_B)).s > 0.0
        ]
        assert hits, f"scan found no stable interval for {seq}"
        intervals[seq] = (min(hits), max(hits))
    assert intervals[T2D][1] < intervals[T2DTD][0] < intervals[T2DTD][1] < intervals[TD][0]

    verified = 0
    for seq in sequences:
        for r in fas_cells[seq]:
            assert _forced_contraction_ok(r), (seq, r.params)
            verified += 1
    report(
        6,
        started,
        300.0,
        f"tongues ordered {intervals[T2D]} < {intervals[T2DTD]} < {intervals[TD]}; "
        f"{verified} stable cells re-verified by forced iteration",
    )


def test_criterion_7_stability_loss_diagnosis():
    started = time.perf_counter()

    def scan_cb(ca):
        return (ca + 0.02) / E_B

    # right boundary of the eight-letter tongue, located by the tracer
    poly = trace_boundary(
        T2D,
        (0.9106, scan_cb(0.9106)),
        step=0.002,
        domain=((0.905, 0.915), (1.15, 1.175)),
    )
    assert len(poly.points) > 3
    assert np.max(np.abs(poly.s_values)) < 1e-8

    # crossing of the traced edge with the scan line, then a sign bisection
    # along the scan to pin the exit point
    gaps = poly.points[:, 1] - scan_cb(poly.points[:, 0])
    k = int(np.argmax(gaps[:-1] * gaps[1:] <= 0.0))
    frac = gaps[k] / (gaps[k] - gaps[k + 1])
    ca_cross = float(poly.points[k, 0] + frac * (poly.points[k + 1, 0] - poly.points[k, 0]))

    def s_scan(ca):
        return sequence_stability(T2D, Params(ca, scan_cb(ca), E_A, E_B)).s

    lo, hi = ca_cross - 2e-3, ca_cross + 2e-3
    assert s_scan(lo) > 0.0 > s_scan(hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if s_scan(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    edge = np.array([hi, scan_cb(hi)])

    outside = Params(edge[0] + 1e-5, scan_cb(edge[0] + 1e-5), E_A, E_B)
    rep = sequence_stability(T2D, outside)
    assert rep.verdict == "not_fas"
    assert rep.failing_component == 2  # third component of the eigenvector

    # the failing product must be the one executing the letters in the order
    # that ends the cycle at the diagnosed position
    factors = [
        basic_matrix("B", "A", outside),
        basic_matrix("A", "B", outside),
        basic_matrix("A", "A", outside),
        basic_matrix("B", "A", outside),
        basic_matrix("B", "B", outside),
        basic_matrix("B", "B", outside),
        basic_matrix("A", "B", outside),
        basic_matrix("A", "A", outside),
    ]
    product = factors[0]
    for m in factors[1:]:
        product = product @ m
    failing = collection(T2D, outside).matrices[rep.failing_matrix]
    assert np.allclose(failing, product, rtol=1e-12, atol=1e-12)
    report(
        7,
        started,
        10.0,
        f"right-edge loss at c_A = {edge[0]:.6f}: matrix {rep.failing_matrix}, "
        f"third eigenvector component",
    )


def test_criterion_8_composition_law():
    started = time.perf_counter()
    rng = np.random.default_rng(808)
    for _ in range(1000):
        m1 = rng.uniform(-1.5, 2.5, size=(3, 3))
        m2 = rng.uniform(-1.5, 2.5, size=(3, 3))
        c1 = rng.uniform(0.2, 3.0, size=3)
        c2 = rng.uniform(0.2, 3.0, size=3)
        x = rng.uniform(0.05, 0.9, size=3)
        inner = c1 * np.prod(x[None, :] ** m1, axis=1)
        outer = c2 * np.prod(inner[None, :] ** m2, axis=1)
        expected = (m2 @ m1) @ np.log(x) + m2 @ np.log(c1) + np.log(c2)
        assert np.max(np.abs(np.log(outer) - expected)) < 1e-12
    report(8, started, 1.0, "1000 monomial compositions match matrix products")


def test_criterion_9_integrator_invariant_suite():
    started = time.perf_counter()
    rng = np.random.default_rng(909)
    p = Params(1.2, 1.0, E_A, E_B)
    checked = 0
    for k in range(50):
        kind = k % 4
        if kind == 0:  # positivity in linear mode
            x0 = rng.uniform(0.0, 1.2, size=5)
            traj = integrate(
                p, x0, IntegratorOptions(t_max=80.0, coords="linear", rel_tol=1e-8, abs_tol=1e-10)
            )
            assert np.min(traj.states) >= 0.0
        elif kind == 1:  # boundedness of the total density after the transient
            x0 = rng.uniform(0.05, 1.2, size=5)
            traj = integrate(
                p, to_log(x0), IntegratorOptions(t_max=120.0, coords="log", rel_tol=1e-8, abs_tol=1e-10)
            )
            totals = np.exp(traj.states[traj.times > 50.0]).sum(axis=1)
            assert np.max(totals) < 5.0
        elif kind == 2:  # boundary subspaces stay invariant
            x0 = np.concatenate([rng.uniform(0.1, 0.8, size=3), [0.0, 0.0]])
            traj = integrate(p, x0, IntegratorOptions(t_max=80.0, coords="linear"))
            assert np.all(traj.states[:, 3:] == 0.0)
            floor = -300.0
            u0 = np.concatenate([np.log(x0[:3]), [floor, floor]])
            traj = integrate(
                p, u0, IntegratorOptions(t_max=80.0, coords="log", log_floor=floor, rel_tol=1e-8, abs_tol=1e-10)
            )
            assert np.all(traj.states[:, 3:] == floor)
        else:  # cyclic-permutation equivariance
            x0 = rng.uniform(0.05, 1.0, size=5)
            opts = IntegratorOptions(t_max=30.0, coords="linear", rel_tol=1e-11, abs_tol=1e-13)
            base = integrate(p, x0, opts)
            rotated = integrate(p, rotate(x0), opts)
            assert np.max(np.abs(rotated.states[-1] - rotate(base.states[-1]))) < 1e-7
        checked += 1
    assert checked == 50
    report(9, started, 60.0, "positivity, boundedness, invariance and equivariance on 50 runs")

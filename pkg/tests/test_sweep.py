from __future__ import annotations

import io

import numpy as np
import pytest

from rps5 import (
    GridSpec,
    Params,
    TongueFamily,
    classify_by_simulation,
    closed_form,
    cross_validate,
    enumerate_tongues,
    grid_sweep,
    trace_boundary,
)
from rps5.sweep import write_boundary_csv, write_classification_csv, write_grid_csv


def test_grid_sweep_reference_cells():
    spec = GridSpec(
        ca_range=(0.8, 1.2), cb_range=(1.0, 1.8), n_ca=2, n_cb=3, sequences=("A", "AAB")
    )
    reports = grid_sweep(spec)
    assert len(reports) == 12
    by_key = {(r.sequence, r.params.c_a, r.params.c_b): r for r in reports}
    assert by_key[("A", 1.2, 1.0)].verdict == "fas"
    assert by_key[("AAB", 0.8, 1.8)].verdict == "fas"
    assert by_key[("A", 0.8, 1.8)].verdict == "not_fas"


def test_grid_sweep_on_boundary_cells():
    # cells sitting exactly on the tied-rate-product line carry |s| < 1e-8
    spec = GridSpec(
        ca_range=(1.0, 1.2), cb_range=(1.25, 1.5), n_ca=2, n_cb=2, sequences=("A",)
    )
    reports = grid_sweep(spec)
    on_line = [
        r
        for r in reports
        if abs(r.params.c_a * 1.0 - r.params.c_b * 0.8) < 1e-12
    ]
    assert len(on_line) == 2
    for r in on_line:
        assert abs(r.s) < 1e-8


def test_grid_sweep_thread_merge_deterministic():
    spec = GridSpec(
        ca_range=(0.5, 1.5), cb_range=(0.5, 1.5), n_ca=5, n_cb=5, sequences=("A", "B")
    )
    serial = grid_sweep(spec, threads=1)
    pooled = grid_sweep(spec, threads=4)
    assert [(r.sequence, r.params.c_a, r.params.c_b, r.s) for r in serial] == [
        (r.sequence, r.params.c_a, r.params.c_b, r.s) for r in pooled
    ]


def test_trace_boundary_one_step_line():
    poly = trace_boundary("A", (1.1, 1.38), step=0.01, domain=((1.0, 1.3), (1.1, 1.8)))
    assert len(poly.points) > 10
    assert np.max(np.abs(poly.points[:, 1] - 1.25 * poly.points[:, 0])) < 1e-6
    assert np.max(np.abs(poly.s_values)) < 1e-8


def test_trace_boundary_three_step_cubic():
    start = (1.45, 0.8 * 1.45**3)
    poly = trace_boundary("B", start, step=0.01, domain=((1.3, 1.6), (1.5, 3.4)))
    assert len(poly.points) > 10
    assert np.max(np.abs(poly.points[:, 1] - 0.8 * poly.points[:, 0] ** 3)) < 1e-6


def test_trace_boundary_needs_nearby_sign_change():
    poly = trace_boundary("A", (0.6, 0.6), step=0.005, domain=((0.5, 0.7), (0.5, 0.7)))
    assert poly.truncated
    assert len(poly.points) == 0


def test_enumerate_tongues_components_td():
    entries = enumerate_tongues(TongueFamily(components=("T", "D"), max_length=8))
    letters = {e.letters for e in entries}
    labels = {e.label for e in entries}
    assert "AABBB" in letters  # TD
    assert "AABBBBB" in letters  # TD2
    assert "AABAABBB" in letters  # T2D
    assert "AAB" in letters  # T alone
    # thirteen letters exceed the budget
    assert all(len(e.letters) <= 8 for e in entries)
    assert "T2D" in labels and "TD2" in labels and "TD" in labels


def test_enumerate_tongues_dedupes_rotations():
    entries = enumerate_tongues(TongueFamily(components=("T", "D"), max_length=5))
    td_like = [e for e in entries if sorted(e.letters) == sorted("AABBB")]
    assert len(td_like) == 1  # TD and DT collapse


def test_enumerate_tongues_drops_proper_powers():
    entries = enumerate_tongues(TongueFamily(components=("T", "D"), max_length=6))
    letters = {e.letters for e in entries}
    assert "AABAAB" not in letters  # square of a shorter root
    assert "BB" not in letters
    assert "BBBB" not in letters


def test_enumerate_tongues_with_q():
    entries = enumerate_tongues(TongueFamily(components=("Q", "T", "D"), max_length=9))
    letters = {e.letters for e in entries}
    assert "AABBB" in letters
    from rps5 import canonical_rotation

    assert canonical_rotation("ABBB" + "AAB" + "BB") in letters  # QTD


def test_classify_root_at_reference_point():
    cls = classify_by_simulation(Params(1.2, 1.0, 1.0, 0.8), budget=60)
    assert cls.outcome == "root"
    assert cls.root == "A"
    assert cls.period == 1
    assert cls.defects == 0


def test_classify_three_cycle_point():
    cls = classify_by_simulation(Params(0.8, 1.8, 1.0, 0.8), budget=60)
    assert cls.outcome == "root"
    assert cls.root == "AAB"


def test_classify_interior_when_symmetric_point_is_stable():
    cls = classify_by_simulation(Params(0.8, 0.55, 1.0, 0.8), budget=60)
    assert cls.outcome == "interior"
    assert len(cls.itinerary.epochs) == 0


def test_classify_deterministic_given_seed():
    a = classify_by_simulation(Params(1.2, 1.0, 1.0, 0.8), budget=55, seed=11)
    b = classify_by_simulation(Params(1.2, 1.0, 1.0, 0.8), budget=55, seed=11)
    assert a.letters == b.letters
    assert a.t_end == b.t_end


def test_classify_budget_validation():
    with pytest.raises(ValueError):
        classify_by_simulation(Params(1.2, 1.0, 1.0, 0.8), budget=10)


def test_cross_validate_reference_point():
    cv = cross_validate(Params(1.2, 1.0, 1.0, 0.8), budget=80)
    assert cv.consistent
    assert cv.classification.root == "A"
    assert cv.lambda_max == pytest.approx(1.1820469771, abs=1e-9)
    assert cv.max_rel_err is not None and cv.max_rel_err < 0.05


def test_cross_validate_three_cycle():
    cv = cross_validate(Params(0.8, 1.8, 1.0, 0.8), budget=80)
    assert cv.consistent
    assert cv.classification.root == "AAB"
    assert cv.report.verdict == "fas"
    assert closed_form("AAB", Params(0.8, 1.8, 1.0, 0.8)).verdict == "fas"


def test_cross_validate_without_root():
    cv = cross_validate(Params(0.8, 0.9, 1.0, 0.8), budget=60)
    assert not cv.consistent
    assert cv.report is None
    assert "no periodic root" in cv.message


def test_grid_csv():
    spec = GridSpec(ca_range=(1.0, 1.2), cb_range=(1.0, 1.2), n_ca=2, n_cb=2, sequences=("A",))
    buf = io.StringIO()
    write_grid_csv(grid_sweep(spec), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "cA,cB,seq,s,verdict,fail_matrix,fail_component"
    assert len(lines) == 5


def test_boundary_csv():
    poly = trace_boundary("A", (1.1, 1.38), step=0.02, domain=((1.05, 1.2), (1.2, 1.6)))
    buf = io.StringIO()
    write_boundary_csv(poly, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "seq,idx,cA,cB,s"
    assert len(lines) == len(poly.points) + 1


def test_classification_csv():
    cls = classify_by_simulation(Params(1.2, 1.0, 1.0, 0.8), budget=55)
    buf = io.StringIO()
    write_classification_csv(cls, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "cA,cB,outcome,root,period,lambda_max"
    assert lines[1].startswith("1.2,1.0,root,A,1,1.18204")

from __future__ import annotations

import io
import math

import numpy as np
import pytest

from rps5 import (
    IntegratorOptions,
    Params,
    default_start,
    integrate,
    rotate,
    to_linear,
    to_log,
    xi_q,
)
from rps5.errors import BoundarySubspaceError
from rps5.integrate import write_trajectory_csv

P_REF = Params(1.2, 1.0, 1.0, 0.8)


def test_to_log_roundtrip():
    rng = np.random.default_rng(1)
    x = rng.uniform(0.01, 2.0, size=5)
    assert np.max(np.abs(to_linear(to_log(x)) - x)) < 1e-15 * np.max(x)


def test_to_log_of_ones_is_zero():
    assert np.all(to_log(np.ones(5)) == 0.0)


def test_to_log_rejects_boundary():
    with pytest.raises(BoundarySubspaceError):
        to_log([0.5, 0.0, 0.1, 0.2, 0.3])


def test_to_log_clamps_tiny_components():
    u = to_log([1e-320, 1.0, 1.0, 1.0, 1.0], log_floor=-700.0)
    assert u[0] == -700.0


def test_equilibrium_stays_put():
    q = xi_q(P_REF).coords
    opts = IntegratorOptions(t_max=100.0, coords="linear")
    traj = integrate(P_REF, q, opts)
    assert not traj.truncated
    assert np.max(np.abs(traj.states - q)) < 1e-10


def test_self_convergence_is_fifth_order():
    # halving the tolerance must shrink the error consistently with an
    # order-5 method under standard step-size control (error ~ tol)
    opts_ref = IntegratorOptions(rel_tol=1e-13, abs_tol=1e-13, t_max=20.0, coords="linear")
    x0 = default_start(P_REF, seed=0)
    ref = integrate(P_REF, x0, opts_ref).states[-1]
    errors = []
    for tol in (1e-5, 1e-7, 1e-9):
        opts = IntegratorOptions(rel_tol=tol, abs_tol=tol, t_max=20.0, coords="linear")
        end = integrate(P_REF, x0, opts).states[-1]
        errors.append(np.max(np.abs(end - ref)))
    assert errors[0] > errors[1] > errors[2]
    # two decades of tolerance should buy at least a decade of accuracy each
    assert errors[0] / errors[1] > 10.0
    assert errors[1] / errors[2] > 10.0


def test_log_and_linear_agree_on_moderate_horizon():
    x0 = default_start(P_REF, seed=3)
    lin = integrate(P_REF, x0, IntegratorOptions(t_max=50.0, coords="linear"))
    log = integrate(P_REF, to_log(x0), IntegratorOptions(t_max=50.0, coords="log"))
    assert np.max(np.abs(lin.states[-1] - np.exp(log.states[-1]))) < 1e-7


def test_positivity_in_linear_mode():
    rng = np.random.default_rng(5)
    for seed in range(10):
        x0 = np.abs(default_start(P_REF, seed=seed))
        traj = integrate(P_REF, x0, IntegratorOptions(t_max=200.0, coords="linear", rel_tol=1e-8, abs_tol=1e-10))
        assert np.min(traj.states) >= 0.0


def test_boundedness_after_transient():
    for seed in (0, 1, 2):
        x0 = default_start(P_REF, seed=seed)
        traj = integrate(P_REF, to_log(x0), IntegratorOptions(t_max=200.0, coords="log", rel_tol=1e-8, abs_tol=1e-10))
        late = traj.times > 50.0
        totals = np.exp(traj.states[late]).sum(axis=1)
        assert np.max(totals) < 5.0


def test_invariant_subspace_linear_mode_exact():
    x0 = np.array([0.3, 0.4, 0.2, 0.0, 0.0])
    traj = integrate(P_REF, x0, IntegratorOptions(t_max=100.0, coords="linear"))
    assert np.all(traj.states[:, 3] == 0.0)
    assert np.all(traj.states[:, 4] == 0.0)


def test_invariant_subspace_log_mode_pinned():
    floor = -400.0
    u0 = np.array([math.log(0.3), math.log(0.4), math.log(0.2), floor, floor])
    opts = IntegratorOptions(t_max=200.0, coords="log", log_floor=floor, rel_tol=1e-8, abs_tol=1e-10)
    traj = integrate(P_REF, u0, opts)
    assert np.all(traj.states[:, 3] == floor)
    assert np.all(traj.states[:, 4] == floor)
    # the retained three components follow the restricted dynamics: totals bounded
    assert np.isfinite(traj.states[:, :3]).all()


def test_floor_recovery_without_pinning():
    # a component clamped at the floor mid-run must be able to grow back
    floor = -200.0
    u0 = np.array([-1.0, floor, -50.0, floor, floor])
    opts = IntegratorOptions(
        t_max=500.0, coords="log", log_floor=floor, rel_tol=1e-8, abs_tol=1e-10, pin_floor_start=False
    )
    traj = integrate(P_REF, u0, opts)
    assert traj.states[:, 1].max() > floor + 100.0


def test_trajectory_equivariance():
    x0 = default_start(P_REF, seed=9)
    opts = IntegratorOptions(t_max=40.0, coords="linear", rel_tol=1e-11, abs_tol=1e-13)
    base = integrate(P_REF, x0, opts)
    rotated = integrate(P_REF, rotate(x0), opts)
    assert np.max(np.abs(rotated.states[-1] - rotate(base.states[-1]))) < 1e-8


def test_max_steps_truncation_flagged():
    opts = IntegratorOptions(t_max=1000.0, coords="linear", max_steps=10)
    traj = integrate(P_REF, default_start(P_REF, seed=1), opts)
    assert traj.truncated
    assert traj.truncation_reason == "max_steps exceeded"
    assert traj.times[-1] < 1000.0


def test_record_stride_thins_output():
    x0 = default_start(P_REF, seed=2)
    dense = integrate(P_REF, x0, IntegratorOptions(t_max=20.0, coords="linear"))
    thin = integrate(P_REF, x0, IntegratorOptions(t_max=20.0, coords="linear", record_stride=10))
    assert len(thin.times) < len(dense.times)
    assert thin.times[-1] == pytest.approx(20.0)


def test_csv_format():
    traj = integrate(P_REF, default_start(P_REF, seed=1), IntegratorOptions(t_max=1.0, coords="linear"))
    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,x1,x2,x3,x4,x5,mode"
    assert lines[1].endswith(",linear")
    assert len(lines) == len(traj.times) + 1


def test_options_validation():
    with pytest.raises(ValueError):
        IntegratorOptions(rel_tol=0.0)
    with pytest.raises(ValueError):
        IntegratorOptions(t_max=-1.0)
    with pytest.raises(ValueError):
        IntegratorOptions(coords="polar")
    with pytest.raises(ValueError):
        IntegratorOptions(log_floor=1.0)
    with pytest.raises(ValueError):
        IntegratorOptions(record_stride=0)

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from advsynth import (
    BarrierFunction,
    BoxSpace,
    ClassKappaFn,
    ContinuousDynamics,
    FiniteSpace,
    MappedSpace,
    Polytope,
    ReachAvoidSpec,
    blocks_all_inputs,
    feasibility_filter,
    feasible_input_polytope,
    lie_derivatives,
    monitor_trajectory,
    phase_one_feasible,
)

finite_floats = st.floats(allow_nan=False, allow_infinity=False, width=32)


def test_lie_derivatives_unicycle_row(unicycle):
    x = np.array([0.0, 0.0, 0.0])
    d = np.array([0.9, 0.9])
    drift, row = lie_derivatives(unicycle.spec.reach, unicycle.dynamics, x, d)
    assert drift == 0.0
    assert np.allclose(row, [1.0, 0.0], atol=1e-12)


def test_lie_derivatives_zero_gradient():
    h = BarrierFunction(value=lambda x, d: 1.0, gradient=lambda x, d: np.zeros(3))
    dyn = ContinuousDynamics(
        f=lambda x, d: np.array([1.0, 2.0, 3.0]),
        g=lambda x, d: np.ones((3, 2)),
    )
    drift, row = lie_derivatives(h, dyn, np.zeros(3), np.zeros(1))
    assert drift == 0.0
    assert np.array_equal(row, np.zeros(2))


def test_lie_derivatives_additive_coupling():
    h = BarrierFunction(value=lambda x, d: x[0], gradient=lambda x, d: np.array([1.0, 0.0]))
    dyn = ContinuousDynamics(
        f=lambda x, d: np.zeros(2),
        g=lambda x, d: np.zeros((2, 2)),
        C=np.eye(2),
    )
    drift, row = lie_derivatives(h, dyn, np.zeros(2), np.array([1.0, 1.0]))
    assert drift == 1.0
    assert np.array_equal(row, np.zeros(2))


def test_lie_derivatives_dimension_mismatch():
    h = BarrierFunction(value=lambda x, d: 0.0, gradient=lambda x, d: np.zeros(3))
    dyn = ContinuousDynamics(f=lambda x, d: np.zeros(2), g=lambda x, d: np.zeros((2, 2)))
    with pytest.raises(ValueError):
        lie_derivatives(h, dyn, np.zeros(3), np.zeros(1))


def test_filter_branches():
    u = np.array([0.1, 0.2])
    box = Polytope.box([-1, -1], [1, 1])
    assert feasibility_filter(3.2, u, box, -5.0) == 3.2
    assert feasibility_filter(3.2, 0.5, set(), -5.0) == -5.0
    assert feasibility_filter(0.0, u, box, -5.0) == 0.0


@given(
    value=finite_floats,
    fallback=finite_floats,
    inside=st.booleans(),
)
def test_filter_is_a_two_branch_select(value, fallback, inside):
    got = feasibility_filter(value, object(), lambda _: inside, fallback)
    assert got == (value if inside else fallback)
    assert got in (value, fallback)


def test_feasible_polytope_far_obstacle_contains_rest(unicycle):
    x = np.array([0.0, 0.0, 0.0])
    d = np.array([0.9, 0.9])
    poly = feasible_input_polytope(unicycle.spec, unicycle.dynamics, x, d, unicycle.input_polytope)
    assert poly.contains(np.zeros(2))
    assert phase_one_feasible(poly)


def test_feasible_polytope_obstacle_on_agent_empty(unicycle):
    x = np.array([-0.5, 0.5, np.pi / 4])
    d = np.array([-0.5, 0.5])  # obstacle exactly on the agent
    poly = feasible_input_polytope(unicycle.spec, unicycle.dynamics, x, d, unicycle.input_polytope)
    assert blocks_all_inputs(poly)


def test_feasible_polytope_no_avoid_rows_is_input_polytope(unicycle):
    spec = ReachAvoidSpec(reach=unicycle.spec.reach, avoid=(), gains=())
    poly = feasible_input_polytope(spec, unicycle.dynamics, np.zeros(3), np.zeros(2), unicycle.input_polytope)
    assert poly is unicycle.input_polytope


def test_feasible_polytope_row_layout(unicycle):
    x = np.array([0.2, -0.1, 1.0])
    d = np.array([0.4, 0.4])
    poly = feasible_input_polytope(unicycle.spec, unicycle.dynamics, x, d, unicycle.input_polytope)
    n_avoid = len(unicycle.spec.avoid)
    assert poly.rows == n_avoid + unicycle.input_polytope.rows
    # dropping the avoid rows recovers the actuator polytope exactly
    assert np.array_equal(poly.A[n_avoid:], unicycle.input_polytope.A)
    assert np.array_equal(poly.b[n_avoid:], unicycle.input_polytope.b)


def _unicycle_traj_spec(unicycle):
    return unicycle.spec


def test_monitor_single_sample_at_goal(unicycle):
    d = np.array([-0.9, -0.9])
    out = monitor_trajectory(unicycle.spec, [(0.0, np.array([0.5, 0.5, 0.0]))], [(0.0, d)])
    assert out.satisfied
    assert out.reach_time == 0.0
    assert out.min_avoid_value > 0.0


def test_monitor_obstacle_touch_fails(unicycle):
    d = np.array([0.0, 0.0])
    traj = [(0.0, np.array([0.5, 0.5, 0.0])), (1.0, np.array([0.05, 0.0, 0.0]))]
    out = monitor_trajectory(unicycle.spec, traj, [(0.0, d)])
    assert not out.satisfied
    assert out.min_avoid_value < 0.0


def test_monitor_circling_outside_goal_misses_deadline():
    from advsynth import build_unicycle

    scn = build_unicycle(goal=(0.0, 0.0), t_max=10.0)
    d = np.array([0.9, 0.9])
    # circle of radius 0.5 around the goal: reach barrier stays negative
    traj = [
        (t, np.array([0.5 * math.cos(w), 0.5 * math.sin(w), 0.0]))
        for t, w in ((0.5 * k, 0.3 * k) for k in range(40))
    ]
    out = monitor_trajectory(scn.spec, traj, [(0.0, d)])
    assert not out.satisfied
    assert out.reach_time is None
    assert out.min_avoid_value > 0.0


def test_monitor_rejects_empty_and_unsorted(unicycle):
    with pytest.raises(ValueError):
        monitor_trajectory(unicycle.spec, [], [(0.0, np.zeros(2))])
    traj = [(1.0, np.zeros(3)), (0.5, np.zeros(3))]
    with pytest.raises(ValueError):
        monitor_trajectory(unicycle.spec, traj, [(0.0, np.zeros(2))])


def test_monitor_min_avoid_matches_brute_force(unicycle):
    rng = np.random.default_rng(3)
    traj = [(float(k), rng.uniform(-1, 1, size=3)) for k in range(30)]
    d_seq = [(float(k), rng.uniform(-1, 1, size=2)) for k in range(0, 30, 5)]
    out = monitor_trajectory(unicycle.spec, traj, d_seq)

    # zero-order hold recomputation, written independently
    best = math.inf
    for t, x in traj:
        d = d_seq[0][1]
        for td, dv in d_seq:
            if td <= t:
                d = dv
        for h in unicycle.spec.avoid:
            best = min(best, h.value(x, d))
    assert out.min_avoid_value == best


def test_monitor_no_avoid_barriers(unicycle):
    spec = ReachAvoidSpec(reach=unicycle.spec.reach, avoid=(), gains=())
    out = monitor_trajectory(spec, [(0.0, np.array([0.5, 0.5, 0.0]))], [(0.0, np.zeros(2))])
    assert out.satisfied and out.min_avoid_value == math.inf


def test_class_kappa_validation():
    with pytest.raises(ValueError):
        ClassKappaFn(0.0)
    k = ClassKappaFn(10.0)
    assert k(0.0) == 0.0
    assert k(-0.030625) == pytest.approx(-0.30625)
    cubic = ClassKappaFn(1.0, form=lambda r: r ** 3)
    assert cubic(2.0) == 8.0


def test_test_space_invariants():
    with pytest.raises(ValueError):
        BoxSpace([1.0], [0.0])
    with pytest.raises(ValueError):
        FiniteSpace(())
    box = BoxSpace([-1, -1], [1, 1])
    assert box.contains([0.5, -0.5]) and not box.contains([1.5, 0.0])
    fin = FiniteSpace(((0, 1), (2, 3)))
    assert fin.contains((0, 1)) and not fin.contains((1, 0))
    mapped = MappedSpace(lambda x, t: box)
    assert mapped.at(np.zeros(2), 0.0) is box
    bad = MappedSpace(lambda x, t: [1, 2])
    with pytest.raises(ValueError):
        bad.at(np.zeros(2), 0.0)


def test_reach_avoid_spec_validation(unicycle):
    with pytest.raises(ValueError):
        ReachAvoidSpec(reach=unicycle.spec.reach, avoid=unicycle.spec.avoid, gains=())
    with pytest.raises(ValueError):
        ReachAvoidSpec(reach=unicycle.spec.reach, avoid=(), gains=(), t_max=0.0)
    with pytest.raises(ValueError):
        ReachAvoidSpec(reach=unicycle.spec.reach, avoid=(), gains=(), margin=-1.0)

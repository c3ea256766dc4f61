"""Acceptance gate: every criterion below runs at its stated tolerance and
prints one pass/fail line.  Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import itertools
import time
import warnings
from contextlib import contextmanager

import numpy as np
import pytest

from advsynth import (
    LpProblem,
    Polytope,
    build_gridworld,
    build_quadgrid,
    build_unicycle,
    difficulty,
    feasibility_filter,
    greedy_safe_controller,
    grid_step,
    monitor_trajectory,
    one_step_difficulty,
    phase_one_feasible,
    simulate_adversarial,
    solve_lp,
    solve_reward,
    synthesize,
    synthesize_constrained,
    synthesize_discrete,
    synthesize_perturbed,
    synthesize_predictive,
    unit_cell_corners,
)
from conftest import assert_gradient_consistent


@contextmanager
def criterion(number, description):
    try:
        yield
    except Exception:
        print(f"[FAIL] criterion {number}: {description}")
        raise
    print(f"[PASS] criterion {number}: {description}")


def test_criterion_1_unicycle_floor_attainment():
    with criterion(1, "unicycle reaches the -5 floor on 200 seeded random states"):
        scn = build_unicycle()
        rng = np.random.default_rng(2024)
        start = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for _ in range(200):
                x = rng.uniform(scn.state_lower, scn.state_upper)
                res = synthesize(scn, x)
                assert res.difficulty == -5.0
                assert res.in_gamma
        elapsed = time.perf_counter() - start
        print(f"  200/200 at difficulty -5.0 in {elapsed:.1f} s")
        assert elapsed < 60.0


def test_criterion_2_gamma_membership():
    with criterion(2, "both reference states land in the blocking set"):
        scn = build_unicycle()
        start = time.perf_counter()
        for state in (
            np.array([-0.5, 0.5, np.pi / 4]),
            np.array([0.5, -0.5, np.pi / 2]),
        ):
            res = synthesize(scn, state)
            assert res.in_gamma
            assert res.inner_maximizer is None
            # Phase-I really is infeasible at the returned test
            from advsynth import blocks_all_inputs, feasible_input_polytope

            poly = feasible_input_polytope(
                scn.spec, scn.dynamics, state, np.asarray(res.d_star), scn.input_polytope
            )
            assert blocks_all_inputs(poly)
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0


def test_criterion_3_grid_obstacle_on_goal():
    with criterion(3, "1000 grid trials place the obstacle on the goal at value 0"):
        rng = np.random.default_rng(808)
        start = time.perf_counter()
        for _ in range(1000):
            while True:
                x = tuple(int(v) for v in rng.integers(0, 10, 2))
                g = tuple(int(v) for v in rng.integers(0, 10, 2))
                if x != g:
                    break
            res = synthesize_discrete(build_gridworld(g), x)
            assert res.d_star == g
            assert res.difficulty == 0.0
        elapsed = time.perf_counter() - start
        print(f"  1000/1000 obstacle-on-goal in {elapsed:.1f} s")
        assert elapsed < 600.0


def _oracle_vertices(poly):
    m = poly.A.shape[1]
    out = []
    for idx in itertools.combinations(range(poly.A.shape[0]), m):
        sub = poly.A[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        v = np.linalg.solve(sub, poly.b[list(idx)])
        if np.all(poly.A @ v <= poly.b + 1e-9):
            out.append(v)
    return out


def test_criterion_4_lp_oracle_equivalence():
    with criterion(4, "100 random LPs match vertex enumeration within 1e-6"):
        rng = np.random.default_rng(404)
        feasible_count = 0
        for _ in range(100):
            m = int(rng.integers(2, 5))
            rows = [np.eye(m), -np.eye(m)]
            rhs = [np.ones(m), np.ones(m)]
            for _ in range(int(rng.integers(0, 4))):
                rows.append(rng.uniform(-1, 1, size=(1, m)))
                rhs.append(np.array([rng.uniform(-0.5, 1.0)]))
            poly = Polytope(np.vstack(rows), np.concatenate(rhs))
            c = rng.uniform(-1, 1, size=m)
            out = solve_lp(LpProblem(c, poly))
            feasible = phase_one_feasible(poly)
            assert (out.status == "optimal") == feasible
            verts = _oracle_vertices(poly)
            if not feasible:
                assert not verts
                continue
            feasible_count += 1
            oracle = max(float(c @ v) for v in verts)
            assert abs(out.value - oracle) <= 1e-6
        assert feasible_count >= 50


def test_criterion_5_reward_grid_fidelity():
    with criterion(5, "20 reward grids satisfy the recursion to 1e-9"):
        rng = np.random.default_rng(505)
        for _ in range(20):
            while True:
                g = tuple(int(v) for v in rng.integers(0, 10, 2))
                o = tuple(int(v) for v in rng.integers(0, 10, 2))
                if g != o:
                    break
            grid = solve_reward(g, o)
            v = grid.base
            assert v[g] == 10.0
            assert v[o] == -10.0
            for i in range(10):
                for j in range(10):
                    if (i, j) in (g, o):
                        continue
                    acc = sum(0.2 * v[grid_step((i, j), u)] for u in
                              ("left", "right", "up", "down", "stay"))
                    assert abs(v[i, j] - acc) <= 1e-9
                    assert -10.0 < v[i, j] < 10.0


def test_criterion_6_predictive_collapse():
    with criterion(6, "predictive N=1 collapses to one-step; N=2 matches brute force"):
        rng = np.random.default_rng(606)
        for _ in range(50):
            while True:
                x = tuple(int(v) for v in rng.integers(0, 10, 2))
                g = tuple(int(v) for v in rng.integers(0, 10, 2))
                if x != g:
                    break
            scn = build_gridworld(g)
            one = synthesize_discrete(scn, x)
            pred = synthesize_predictive(scn, x, n_steps=1)
            assert one.d_star == pred.d_star
            assert one.difficulty == pred.difficulty

        # N=2 value against an independent triple loop, exact equality
        scn = build_gridworld((7, 9))
        for x in [(3, 5), (0, 0), (9, 2)]:
            res = synthesize_predictive(scn, x, n_steps=2)
            best = None
            for d in scn.test_space.points:
                vals = []
                for seq in itertools.product(scn.dynamics.alphabet, repeat=2):
                    term = scn.dynamics.step(scn.dynamics.step(x, seq[0]), seq[1])
                    if scn.spec.avoid[0].value(term, d) >= 0:
                        vals.append(
                            scn.spec.reach.value(term, d) - scn.spec.reach.value(x, d)
                        )
                val = max(vals) if vals else -15.0
                best = val if best is None else min(best, val)
            assert res.difficulty == best


def test_criterion_7_constrained_membership():
    with criterion(7, "commanded tests stay inside the corner map; worked value checks"):
        corners = set(unit_cell_corners([0.3, 1.7]))
        assert corners == {(0.0, 1.0), (0.0, 2.0), (1.0, 1.0), (1.0, 2.0)}

        scn = build_quadgrid()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            log = simulate_adversarial(
                scn,
                np.array([0.3, 1.7]),
                greedy_safe_controller,
                synth_period=0.5,
                dt=0.01,
                horizon=10.0,
            )
        assert not log.aborted
        assert len(log.commands) == 20
        for t, x, d in log.commands:
            realized = scn.test_space.at(x, t)
            assert realized.contains(d)


def test_criterion_8_property_suites():
    with criterion(8, "module property suites (gradients, filter, floor, tau, reductions, monitor)"):
        uni = build_unicycle()
        quad = build_quadgrid()
        rng = np.random.default_rng(888)

        # gradient versus central differences, 1e-5 relative
        for _ in range(100):
            x = rng.uniform(uni.state_lower, uni.state_upper)
            d = rng.uniform(-1, 1, size=2)
            assert_gradient_consistent(uni.spec.reach, x, d)
            assert_gradient_consistent(uni.spec.avoid[0], x, d)

        # the filter is a two-branch select
        box = Polytope.box([-1.0], [1.0])
        for val, point, fallback in [(3.2, np.array([0.5]), -5.0), (0.0, np.array([2.0]), -5.0)]:
            got = feasibility_filter(val, point, box, fallback)
            assert got in (val, fallback)
            assert got == (val if box.contains(point) else fallback)

        # floor property over random evaluations
        for _ in range(100):
            x = rng.uniform(uni.state_lower, uni.state_upper)
            d = rng.uniform(-1, 1, size=2)
            value, maximizer = difficulty(uni, x, d, floor=-5.0)
            assert value >= -5.0
            if maximizer is None:
                assert value == -5.0

        # tau shift moves non-floor values and never the chosen test
        x = np.array([0.8, -0.6, 0.4])
        for d in (np.array([0.9, 0.9]), np.array([-0.7, 0.2])):
            base, _ = difficulty(uni, x, d, floor=-5.0, tau=0.0)
            shifted, _ = difficulty(uni, x, d, floor=-5.0, tau=0.4)
            assert shifted == base - 0.4

        # reductions: perturbed and constant-map constrained match nominal
        a = synthesize(uni, x)
        b = synthesize_perturbed(uni, x)
        assert a.difficulty == b.difficulty
        assert np.array_equal(np.asarray(a.d_star), np.asarray(b.d_star))
        import dataclasses

        from advsynth import MappedSpace

        mapped = dataclasses.replace(uni, test_space=MappedSpace(lambda s, t: uni.test_space))
        c = synthesize_constrained(mapped, x, 0.0)
        assert a.difficulty == c.difficulty
        assert np.array_equal(np.asarray(a.d_star), np.asarray(c.d_star))

        # monitor agrees with a pointwise recomputation
        traj = [(float(k), rng.uniform(-1, 1, size=3)) for k in range(20)]
        d_seq = [(0.0, np.array([0.5, 0.5]))]
        verdict = monitor_trajectory(uni.spec, traj, d_seq)
        brute = min(uni.spec.avoid[0].value(s, d_seq[0][1]) for _, s in traj)
        assert verdict.min_avoid_value == brute

        # quadgrid gradients too (skipping the non-smooth centers)
        for _ in range(50):
            x2 = rng.uniform(quad.state_lower, quad.state_upper)
            d2 = rng.uniform(-1, 4, size=4)
            if np.linalg.norm(x2 - np.array([3.5, 2.5])) < 1e-2:
                continue
            assert_gradient_consistent(quad.spec.reach, x2, d2)

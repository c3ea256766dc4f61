"""Adversarial test synthesis for continuous-time control-affine systems.

The adversary picks the test vector minimizing the best achievable
reach-barrier rate among inputs that keep every avoid barrier enforceable.
A test whose safe-input polytope is empty is maximally difficult and
short-circuits the search; otherwise the inner maximization is a small LP.

The outer minimization is a deterministic coarse grid over the test box
followed by compass refinement, so repeated runs reproduce bit for bit.
Finite test sets are enumerated exhaustively instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import (
    BoxSpace,
    ContinuousDynamics,
    FiniteSpace,
    MappedSpace,
    Polytope,
    ReachAvoidSpec,
    ScenarioError,
    SynthesisResult,
    TestSpace,
    as_vector,
    feasible_input_polytope,
    lie_derivatives,
)
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, polytope_vertices, solve_lp

__all__ = [
    "SearchConfig",
    "ContinuousScenario",
    "SatisfactionFloor",
    "compute_floor",
    "difficulty",
    "synthesize",
    "synthesize_perturbed",
    "synthesize_constrained",
]


@dataclass(frozen=True)
class SearchConfig:
    """Deterministic outer-search settings.

    ``grid_points`` per test dimension (a single point lands on the box
    midpoint), then compass refinement from the best grid point with step
    halving.  Refinement stops after ``refine_iterations`` rounds or once
    the largest step falls below ``step_tolerance`` times the box diameter.
    """

    grid_points: int = 25
    refine_iterations: int = 40
    step_tolerance: float = 1e-4


@dataclass(frozen=True, eq=False)
class ContinuousScenario:
    """A complete continuous test setting.

    The state box and test space must be compact and the input polytope
    bounded (checked at construction with one LP per axis direction), which
    is what guarantees the synthesizer always returns a test.
    """

    dynamics: ContinuousDynamics
    spec: ReachAvoidSpec
    input_polytope: Polytope
    test_space: TestSpace
    state_lower: np.ndarray
    state_upper: np.ndarray
    floor: Optional[float] = None
    name: str = "continuous"
    normalize_state: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        lo = as_vector(self.state_lower, "state lower bound")
        hi = as_vector(self.state_upper, "state upper bound")
        if lo.size != hi.size or np.any(lo > hi):
            raise ValueError("state box needs lower <= upper elementwise")
        object.__setattr__(self, "state_lower", lo)
        object.__setattr__(self, "state_upper", hi)
        for i in range(self.input_polytope.dim):
            for sign in (1.0, -1.0):
                e = np.zeros(self.input_polytope.dim)
                e[i] = sign
                out = solve_lp(LpProblem(e, self.input_polytope))
                if out.status != OPTIMAL:
                    raise ValueError(
                        f"input polytope must be nonempty and bounded "
                        f"(axis {i} direction {sign:+.0f} came back {out.status})"
                    )


@dataclass(frozen=True)
class SatisfactionFloor:
    """Lower bound on the reach-barrier rate, used as the sentinel value for
    tests that admit no safe input."""

    value: float
    provenance: str  # "user" or "grid-estimate"
    resolution: Optional[tuple] = None
    margin: float = 0.0
    raw_min: Optional[float] = None


def _per_dim(points, ndim: int, what: str) -> tuple:
    if isinstance(points, int):
        counts = (points,) * ndim
    else:
        counts = tuple(int(k) for k in points)
        if len(counts) != ndim:
            raise ValueError(f"{what} needs one entry per dimension ({ndim})")
    if any(k < 1 for k in counts):
        raise ValueError(f"{what} entries must be >= 1")
    return counts


def _axis(lo: float, hi: float, k: int) -> np.ndarray:
    if k == 1:
        return np.array([0.5 * (lo + hi)])
    return np.linspace(lo, hi, k)


def _box_grid(lower: np.ndarray, upper: np.ndarray, counts: tuple):
    axes = [_axis(lower[i], upper[i], counts[i]) for i in range(lower.size)]
    for idx in np.ndindex(*(len(a) for a in axes)):
        yield np.array([axes[i][idx[i]] for i in range(len(axes))])


def compute_floor(scn: ContinuousScenario, state_points=9, test_points=5) -> SatisfactionFloor:
    """Satisfaction floor for the scenario.

    A pinned scenario floor wins.  Otherwise the reach-barrier rate is
    minimized over a deterministic grid of states and test vectors crossed
    with the input polytope's vertices (exact in u by linearity), and the
    result is lowered by a 10% absolute margin to absorb grid slack.
    """
    if scn.floor is not None:
        return SatisfactionFloor(float(scn.floor), "user")

    s_counts = _per_dim(state_points, scn.state_lower.size, "state grid")
    verts = polytope_vertices(scn.input_polytope)
    if verts.shape[0] == 0:
        raise ValueError("input polytope has no vertices; cannot estimate a floor")

    space = scn.test_space
    fixed_tests = None
    if isinstance(space, BoxSpace):
        t_counts = _per_dim(test_points, space.dim, "test grid")
        fixed_tests = list(_box_grid(space.lower, space.upper, t_counts))
    elif isinstance(space, FiniteSpace):
        t_counts = (len(space),)
        fixed_tests = list(space.points)
    else:
        t_counts = None  # mapped: realized per state below

    vmin = np.inf
    for x in _box_grid(scn.state_lower, scn.state_upper, s_counts):
        if fixed_tests is not None:
            tests = fixed_tests
        else:
            realized = space.at(x, 0.0)
            tests = (
                list(realized.points)
                if isinstance(realized, FiniteSpace)
                else list(_box_grid(realized.lower, realized.upper,
                                    _per_dim(test_points, realized.dim, "test grid")))
            )
        for d in tests:
            drift_rate, input_row = lie_derivatives(scn.spec.reach, scn.dynamics, x, d)
            vmin = min(vmin, float(drift_rate + (verts @ input_row).min()))
    value = vmin - 0.1 * abs(vmin)
    return SatisfactionFloor(value, "grid-estimate", (s_counts, t_counts), 0.1, vmin)


def difficulty(scn: ContinuousScenario, x, d, floor: float, tau: float = 0.0):
    """Best achievable reach-barrier rate at (x, d), or the floor when no
    safe input exists.

    Returns ``(value, maximizer)``; the maximizer is None exactly on the
    floor branch.  ``tau`` shifts the non-floor objective down by a progress
    margin; since it is a constant shift it can never change which test
    minimizes the measure.
    """
    d = np.asarray(d, dtype=float)
    poly = feasible_input_polytope(scn.spec, scn.dynamics, x, d, scn.input_polytope)
    drift_rate, input_row = lie_derivatives(scn.spec.reach, scn.dynamics, x, d)
    out = solve_lp(LpProblem(input_row, poly))
    if out.status == INFEASIBLE:
        return float(floor), None
    if out.status == UNBOUNDED:
        raise ScenarioError(
            "inner maximization unbounded; the input polytope is not compact"
        )
    return drift_rate + out.value - tau, out.point


def _resolve_floor(scn: ContinuousScenario, floor) -> float:
    if floor is not None:
        return float(floor)
    return compute_floor(scn).value


def _refine(scn, x, space, d0, val0, u0, floor, search, tau, evals):
    lower, upper = space.lower, space.upper
    diam = float(np.linalg.norm(upper - lower))
    span = upper - lower
    step = np.where(span > 0, span / max(search.grid_points - 1, 1), 0.0)
    d_cur = np.asarray(d0, dtype=float).copy()
    val_cur, u_cur = val0, u0
    for _ in range(search.refine_iterations):
        if step.size == 0 or step.max() <= search.step_tolerance * diam:
            break
        best_cand = best_u = None
        best_val = np.inf
        for i in range(d_cur.size):
            if step[i] == 0.0:
                continue
            for sign in (-1.0, 1.0):
                cand = d_cur.copy()
                cand[i] = float(np.clip(cand[i] + sign * step[i], lower[i], upper[i]))
                if cand[i] == d_cur[i]:
                    continue
                val, u = difficulty(scn, x, cand, floor, tau)
                evals += 1
                if u is None:
                    return SynthesisResult(cand, float(floor), True, None, evals, True)
                if val < best_val:
                    best_val, best_cand, best_u = val, cand, u
        if best_cand is not None and best_val < val_cur:
            d_cur, val_cur, u_cur = best_cand, best_val, best_u
        else:
            step = step * 0.5
    return SynthesisResult(d_cur, val_cur, False, u_cur, evals)


def _synthesize_over(scn, x, space, floor, search, tau):
    if isinstance(space, FiniteSpace):
        candidates = list(space.points)
        box = None
    elif isinstance(space, BoxSpace):
        counts = _per_dim(search.grid_points, space.dim, "search grid")
        candidates = _box_grid(space.lower, space.upper, counts)
        box = space
    else:
        raise ValueError("mapped test spaces need synthesize_constrained")

    evals = 0
    best_d = best_u = None
    best_val = np.inf
    first = True
    for d in candidates:
        if first:
            first = False
            # the avoid sets move with d, so only the goal-side start
            # condition is meaningful to check; the probe uses this d
            if float(scn.spec.reach.value(x, d)) >= 0.0:
                warnings.warn(
                    "start state already satisfies the reach predicate; "
                    "the synthesized test is uninteresting but still valid",
                    stacklevel=3,
                )
        val, u = difficulty(scn, x, d, floor, tau)
        evals += 1
        if u is None:
            return SynthesisResult(d, float(floor), True, None, evals, True)
        if val < best_val:
            best_val, best_d, best_u = val, d, u
    if box is not None:
        return _refine(scn, x, box, best_d, best_val, best_u, floor, search, tau, evals)
    return SynthesisResult(best_d, best_val, False, best_u, evals)


def synthesize(
    scn: ContinuousScenario,
    x,
    floor: Optional[float] = None,
    search: SearchConfig = SearchConfig(),
    tau: float = 0.0,
) -> SynthesisResult:
    """Hardest admissible test at state x.

    Candidates are scanned in deterministic order; the first one that blocks
    every safe input ends the search immediately (it is globally optimal).
    Ties between equal difficulties keep the earliest candidate.  The floor
    defaults to the scenario's pinned value, else a fresh grid estimate.
    """
    x = as_vector(x, "state")
    space = scn.test_space
    if isinstance(space, MappedSpace):
        raise ValueError("scenario has a mapped test space; use synthesize_constrained")
    return _synthesize_over(scn, x, space, _resolve_floor(scn, floor), search, tau)


def synthesize_perturbed(
    scn: ContinuousScenario,
    x,
    floor: Optional[float] = None,
    search: SearchConfig = SearchConfig(),
    tau: float = 0.0,
) -> SynthesisResult:
    """Synthesis against test-perturbed dynamics.

    Dynamics callbacks always receive the candidate test vector, so this is
    the same search as :func:`synthesize`; with a zero coupling matrix and
    d-independent f, g it reduces to the nominal synthesizer exactly.
    """
    return synthesize(scn, x, floor, search, tau)


def synthesize_constrained(
    scn: ContinuousScenario,
    x,
    t: float,
    floor: Optional[float] = None,
    search: SearchConfig = SearchConfig(),
    tau: float = 0.0,
) -> SynthesisResult:
    """Synthesis over the admissible test set realized at (x, t).

    With a constant map this coincides with :func:`synthesize`; the result
    is always a member of the realized set.
    """
    x = as_vector(x, "state")
    space = scn.test_space
    if isinstance(space, MappedSpace):
        space = space.at(x, t)
    return _synthesize_over(scn, x, space, _resolve_floor(scn, floor), search, tau)

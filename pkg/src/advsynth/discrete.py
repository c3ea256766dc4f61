"""Adversarial test synthesis for finite-alphabet discrete-time systems.

Everything here is exact enumeration: the finite action alphabet and finite
test set make the minimax solvable by exhaustive search, one-step or over an
N-step prediction horizon.  A test whose safe action set is empty ends the
outer loop immediately (it is already optimal).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Union

from .core import (
    BarrierFunction,
    DiscreteDynamics,
    FiniteSpace,
    MappedSpace,
    ReachAvoidSpec,
    SynthesisResult,
)

__all__ = [
    "DiscreteScenario",
    "barrier_increment",
    "feasible_inputs",
    "rollout",
    "one_step_difficulty",
    "synthesize_discrete",
    "feasible_sequences",
    "predictive_difficulty",
    "synthesize_predictive",
    "synthesize_discrete_constrained",
]

DEFAULT_BUDGET = 10_000_000


@dataclass(frozen=True, eq=False)
class DiscreteScenario:
    dynamics: DiscreteDynamics
    spec: ReachAvoidSpec
    test_space: Union[FiniteSpace, MappedSpace]
    horizon: int = 1
    floor: Optional[float] = None
    name: str = "discrete"

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("prediction horizon must be >= 1")
        if not isinstance(self.test_space, (FiniteSpace, MappedSpace)):
            raise ValueError("discrete scenarios need a finite or mapped test space")


def barrier_increment(h: BarrierFunction, dyn: DiscreteDynamics, x, u, d) -> float:
    """Barrier value after one step minus the value now."""
    return float(h.value(dyn.step(x, u), d)) - float(h.value(x, d))


def feasible_inputs(spec: ReachAvoidSpec, dyn: DiscreteDynamics, x, d) -> tuple:
    """Actions whose successor keeps every avoid barrier nonnegative, in
    alphabet order."""
    out = []
    for u in dyn.alphabet:
        nxt = dyn.step(x, u)
        if all(float(h.value(nxt, d)) >= 0.0 for h in spec.avoid):
            out.append(u)
    return tuple(out)


def rollout(dyn: DiscreteDynamics, x, inputs):
    """Terminal state after applying the input sequence in order."""
    for u in inputs:
        x = dyn.step(x, u)
    return x


def one_step_difficulty(scn: DiscreteScenario, x, d, floor: float):
    """Max one-step reach increment over the safe actions, or ``(floor,
    None)`` when none are safe.  Equal increments resolve to the action
    listed last in the alphabet."""
    feas = feasible_inputs(scn.spec, scn.dynamics, x, d)
    if not feas:
        return float(floor), None
    best_val = -float("inf")
    best = None
    for u in feas:
        v = barrier_increment(scn.spec.reach, scn.dynamics, x, u, d)
        if v >= best_val:
            best_val, best = v, u
    return best_val, best


def feasible_sequences(
    spec: ReachAvoidSpec,
    dyn: DiscreteDynamics,
    x,
    d,
    n_steps: int,
    check_path: bool = False,
) -> tuple:
    """Action sequences of length ``n_steps`` whose terminal state keeps
    every avoid barrier nonnegative, in product order.

    Only the terminal state is constrained, so sequences may pass through
    violating states on the way; ``check_path=True`` opts into the stricter
    variant that also screens every intermediate state.
    """
    if n_steps < 1:
        raise ValueError("sequence length must be >= 1")
    out = []
    for seq in itertools.product(dyn.alphabet, repeat=n_steps):
        if _sequence_ok(spec, dyn, x, d, seq, check_path):
            out.append(seq)
    return tuple(out)


def _sequence_ok(spec, dyn, x, d, seq, check_path):
    if check_path:
        s = x
        for u in seq:
            s = dyn.step(s, u)
            if any(float(h.value(s, d)) < 0.0 for h in spec.avoid):
                return False
        return True
    terminal = rollout(dyn, x, seq)
    return all(float(h.value(terminal, d)) >= 0.0 for h in spec.avoid)


def predictive_difficulty(
    scn: DiscreteScenario,
    x,
    d,
    floor: float,
    n_steps: int,
    check_path: bool = False,
):
    """Max N-step reach increment over safe sequences, or ``(floor, None)``
    when none exist.  Ties resolve to the last sequence in product order."""
    base = float(scn.spec.reach.value(x, d))
    best_val = -float("inf")
    best = None
    for seq in itertools.product(scn.dynamics.alphabet, repeat=n_steps):
        if not _sequence_ok(scn.spec, scn.dynamics, x, d, seq, check_path):
            continue
        v = float(scn.spec.reach.value(rollout(scn.dynamics, x, seq), d)) - base
        if v >= best_val:
            best_val, best = v, seq
    if best is None:
        return float(floor), None
    return best_val, best


def _scenario_floor(scn: DiscreteScenario, floor) -> float:
    if floor is not None:
        return float(floor)
    if scn.floor is None:
        raise ValueError("no satisfaction floor: pass one or pin it on the scenario")
    return float(scn.floor)


def synthesize_discrete(scn: DiscreteScenario, x, floor: Optional[float] = None) -> SynthesisResult:
    """Exact one-step minimax over the finite test set.

    Tests are scanned in canonical order; ties keep the earliest minimizer,
    and the first test with no safe action ends the scan (flagged via
    ``early_exit``)."""
    fl = _scenario_floor(scn, floor)
    space = scn.test_space
    if isinstance(space, MappedSpace):
        raise ValueError("scenario has a mapped test space; use synthesize_discrete_constrained")
    evals = 0
    best_d = best_u = None
    best_val = float("inf")
    for d in space.points:
        val, u = one_step_difficulty(scn, x, d, fl)
        evals += 1
        if u is None:
            return SynthesisResult(d, fl, True, None, evals, True)
        if val < best_val:
            best_val, best_d, best_u = val, d, u
    return SynthesisResult(best_d, best_val, False, best_u, evals)


def _minimize_over_points(scn, x, points, fl, n_steps, check_path, budget):
    cost = len(scn.dynamics.alphabet) ** n_steps * len(points)
    if cost > budget:
        raise ValueError(
            f"enumeration needs {cost} sequence evaluations but the budget is "
            f"{budget}; raise the budget or shrink the horizon"
        )
    evals = 0
    best_d = best_u = None
    best_val = float("inf")
    for d in points:
        val, u = predictive_difficulty(scn, x, d, fl, n_steps, check_path)
        evals += 1
        if u is None:
            return SynthesisResult(d, fl, True, None, evals, True)
        if val < best_val:
            best_val, best_d, best_u = val, d, u
    return SynthesisResult(best_d, best_val, False, best_u, evals)


def synthesize_predictive(
    scn: DiscreteScenario,
    x,
    floor: Optional[float] = None,
    n_steps: Optional[int] = None,
    check_path: bool = False,
    budget: int = DEFAULT_BUDGET,
) -> SynthesisResult:
    """Exact N-step minimax by enumeration; with N = 1 it coincides with
    :func:`synthesize_discrete` in both value and chosen test."""
    n = scn.horizon if n_steps is None else int(n_steps)
    if n < 1:
        raise ValueError("prediction horizon must be >= 1")
    space = scn.test_space
    if isinstance(space, MappedSpace):
        raise ValueError("scenario has a mapped test space; use synthesize_discrete_constrained")
    return _minimize_over_points(scn, x, space.points, _scenario_floor(scn, floor), n, check_path, budget)


def synthesize_discrete_constrained(
    scn: DiscreteScenario,
    x,
    t: float,
    floor: Optional[float] = None,
    n_steps: Optional[int] = None,
    check_path: bool = False,
    budget: int = DEFAULT_BUDGET,
) -> SynthesisResult:
    """Predictive synthesis over the admissible test set realized at (x, t);
    the result is always drawn from that set."""
    n = scn.horizon if n_steps is None else int(n_steps)
    if n < 1:
        raise ValueError("prediction horizon must be >= 1")
    space = scn.test_space
    if isinstance(space, MappedSpace):
        space = space.at(x, t)
    if not isinstance(space, FiniteSpace):
        raise ValueError("discrete synthesis needs a finite realized test set")
    return _minimize_over_points(scn, x, space.points, _scenario_floor(scn, floor), n, check_path, budget)

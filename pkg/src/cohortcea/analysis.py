"""Strategy-level evaluation: traces, flows, and discounted totals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cea import StrategyOutcome
from .core import (
    CohortTrace,
    StateVector,
    TransitionDynamicsArray,
    TransitionModel,
    simulate_cohort,
    transition_dynamics,
)
from .errors import StructureError
from .rewards import (
    DiscountSpec,
    HalfCycleSpec,
    TransitionIncrement,
    build_reward_matrices,
    cycle_rewards_state,
    cycle_rewards_transition,
    discount_vector,
    total_discounted,
)


@dataclass(frozen=True, eq=False)
class StrategySpec:
    """One strategy: transition model plus reward definitions.

    Strategies that share dynamics (e.g. differ only in rewards) may
    share the same :class:`TransitionModel` object; evaluation reuses the
    simulated trace in that case.
    """

    label: str
    model: TransitionModel
    utilities: np.ndarray
    costs: np.ndarray
    utility_increments: tuple[TransitionIncrement, ...] = ()
    cost_increments: tuple[TransitionIncrement, ...] = ()

    def __init__(
        self,
        label: str,
        model: TransitionModel,
        utilities,
        costs,
        utility_increments: Sequence[TransitionIncrement] = (),
        cost_increments: Sequence[TransitionIncrement] = (),
    ):
        n = model.space.n_states
        utilities = np.asarray(utilities, dtype=np.float64)
        costs = np.asarray(costs, dtype=np.float64)
        for name, vec in (("utilities", utilities), ("costs", costs)):
            if vec.shape != (n,):
                raise StructureError(f"{label}: {name} must have shape ({n},), got {vec.shape}")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"{label}: {name} must be finite")
        utilities.flags.writeable = False
        costs.flags.writeable = False
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "utilities", utilities)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "utility_increments", tuple(utility_increments))
        object.__setattr__(self, "cost_increments", tuple(cost_increments))


@dataclass(frozen=True, eq=False)
class StrategyResult:
    """Everything computed for one strategy in a deterministic run."""

    label: str
    trace: CohortTrace
    dynamics: TransitionDynamicsArray
    state_cost: float
    state_qaly: float
    transition_cost: float
    transition_qaly: float

    def state_outcome(self) -> StrategyOutcome:
        return StrategyOutcome(self.label, self.state_cost, self.state_qaly)

    def transition_outcome(self) -> StrategyOutcome:
        return StrategyOutcome(self.label, self.transition_cost, self.transition_qaly)


def evaluate_strategies(
    specs: Sequence[StrategySpec],
    init: StateVector,
    discount_cost: DiscountSpec,
    discount_effect: DiscountSpec,
    half_cycle: HalfCycleSpec | None = None,
) -> list[StrategyResult]:
    """Simulate each strategy and compute both reward pipelines.

    ``state_*`` totals use state rewards only (trace times reward
    vector); ``transition_*`` totals run the flow-array pipeline with the
    strategy's transition increments included. Both are discounted and,
    by default, half-cycle corrected.
    """
    if not specs:
        raise ValueError("at least one strategy is required")
    horizon = specs[0].model.horizon
    if any(s.model.horizon != horizon for s in specs):
        raise StructureError("all strategies must share the same horizon")
    if half_cycle is None:
        half_cycle = HalfCycleSpec.standard(horizon)
    dw_cost = discount_vector(discount_cost)
    dw_effect = discount_vector(discount_effect)

    simulated: dict[int, tuple[CohortTrace, TransitionDynamicsArray]] = {}
    results = []
    for spec in specs:
        key = id(spec.model)
        if key not in simulated:
            trace = simulate_cohort(init, spec.model)
            simulated[key] = (trace, transition_dynamics(trace, spec.model))
        trace, dynamics = simulated[key]
        n_t = trace.n_cycles

        state_qaly = total_discounted(
            cycle_rewards_state(trace, spec.utilities), dw_effect, half_cycle
        )
        state_cost = total_discounted(
            cycle_rewards_state(trace, spec.costs), dw_cost, half_cycle
        )
        r_u = build_reward_matrices(trace.space, n_t, spec.utilities, spec.utility_increments)
        r_c = build_reward_matrices(trace.space, n_t, spec.costs, spec.cost_increments)
        transition_qaly = total_discounted(
            cycle_rewards_transition(dynamics, r_u), dw_effect, half_cycle
        )
        transition_cost = total_discounted(
            cycle_rewards_transition(dynamics, r_c), dw_cost, half_cycle
        )
        results.append(
            StrategyResult(
                spec.label,
                trace,
                dynamics,
                state_cost,
                state_qaly,
                transition_cost,
                transition_qaly,
            )
        )
    return results

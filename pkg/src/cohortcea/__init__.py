"""Discrete-time cohort state-transition modeling and cost-effectiveness analysis."""

__version__ = "0.1.0"

from .analysis import StrategyResult, StrategySpec, evaluate_strategies
from .cea import CeaRow, CeaTable, StrategyOutcome, calculate_icers, net_monetary_benefit
from .core import (
    CohortTrace,
    StateSpace,
    StateVector,
    TransitionDynamicsArray,
    TransitionModel,
    Violation,
    simulate_cohort,
    transition_dynamics,
    validate_transition_model,
)
from .epi import EpiSeries, life_expectancy, prevalence, proportion_among, survival
from .errors import (
    CohortModelError,
    ConfigError,
    LifeTableError,
    NumericError,
    PsaEvaluationError,
    StructureError,
    ValidationError,
)
from .psa import (
    CeacResult,
    ParameterDistribution,
    PsaOutcomes,
    PsaSampleSet,
    ceac,
    default_wtp_grid,
    evaluate_psa,
    expected_loss_and_evpi,
    generate_psa_params,
)
from .rewards import (
    DiscountSpec,
    HalfCycleSpec,
    RewardMatrixSequence,
    TransitionIncrement,
    build_reward_matrices,
    cycle_rewards_state,
    cycle_rewards_transition,
    discount_vector,
    total_discounted,
)
from .transforms import (
    LifeTable,
    apply_hazard_ratio,
    apply_odds_ratio,
    mortality_vector,
    prob_to_rate,
    rate_to_prob,
)
from .tunnels import (
    TunnelSpec,
    WeibullProgression,
    aggregate_trace,
    expand_tunnels,
    expanded_state_space,
    weibull_progression,
)

__all__ = [name for name in dir() if not name.startswith("_")]

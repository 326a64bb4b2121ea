"""The bundled four-strategy Sick-Sicker example model.

A cohort of 25-year-olds is followed to age 100 across Healthy (H), Sick
(S1), Sicker (S2), and Dead (D). Standard of care is compared against
treatment A (better quality of life while sick, no effect on dynamics),
treatment B (lower odds of progressing from S1 to S2), and their
combination. The model ships in three variants: constant transition
probabilities, age-dependent background mortality from the bundled life
table, and the age-dependent model with S1 expanded into residence-time
tunnels driving Weibull-shaped progression.

The bundled life table is a reconstruction: annual all-cause mortality
hazards calibrated so the age-dependent variant reproduces the published
totals for this model (see the README for provenance notes). Published
values that depend on it are therefore fixture-conditional.
"""

from __future__ import annotations

from copy import deepcopy
from dataclasses import asdict, dataclass, replace
from importlib import resources
from pathlib import Path

from .analysis import StrategyResult, StrategySpec, evaluate_strategies
from .cea import CeaTable, StrategyOutcome, calculate_icers
from .config import ConfigEvaluator, ModelConfig, resolve_config
from .core import CohortTrace
from .epi import EpiSeries, life_expectancy, prevalence, proportion_among, survival
from .errors import ConfigError
from .rewards import DiscountSpec
from .transforms import LifeTable
from .tunnels import TunnelSpec, aggregate_trace

STATES = ("H", "S1", "S2", "D")
STRATEGY_LABELS = ("Standard of care", "Strategy A", "Strategy B", "Strategy AB")
VARIANTS = ("time-independent", "age-dependent", "tunnels")

LIFE_TABLE_FILE = "sick_sicker_lifetable.csv"
CONFIG_FILE = "sick_sicker.yaml"


@dataclass(frozen=True)
class SickSickerParams:
    """All scalar inputs of the Sick-Sicker model, at published base values."""

    age_init: int = 25
    age_max: int = 100
    # per-cycle transition probabilities and ratios
    p_HD: float = 0.002
    p_HS1: float = 0.15
    p_S1H: float = 0.5
    p_S1S2: float = 0.105
    hr_death_S1: float = 3.0
    hr_death_S2: float = 10.0
    or_S1S2_trt_b: float = 0.6
    # state costs per cycle
    c_H: float = 2000.0
    c_S1: float = 4000.0
    c_S2: float = 15000.0
    c_D: float = 0.0
    c_trt_a: float = 12000.0
    c_trt_b: float = 13000.0
    # state utilities per cycle
    u_H: float = 1.0
    u_S1: float = 0.75
    u_S2: float = 0.5
    u_D: float = 0.0
    u_trt_a: float = 0.95
    # one-time transition rewards
    disutility_HS1: float = 0.01
    transition_cost_HS1: float = 1000.0
    transition_cost_death: float = 2000.0
    # discounting
    discount_cost: float = 0.03
    discount_effect: float = 0.03
    # residence-time progression (tunnels variant)
    weibull_scale: float = 0.08
    weibull_shape: float = 1.1

    @property
    def horizon(self) -> int:
        return self.age_max - self.age_init

    def to_config_dict(self, life_table_file: str = LIFE_TABLE_FILE) -> dict:
        """The model as a configuration document (YAML/JSON encodable)."""
        p = {
            k: v
            for k, v in asdict(self).items()
            if k not in ("age_init", "age_max", "discount_cost", "discount_effect",
                         "weibull_scale", "weibull_shape")
        }
        state_costs = {"H": "c_H", "S1": "c_S1", "S2": "c_S2", "D": "c_D"}
        death_increments = [
            {"from": ["H", "S1", "S2"], "to": "D", "delta": "transition_cost_death"}
        ]
        onset_cost = [{"from": ["H"], "to": "S1", "delta": "transition_cost_HS1"}]
        onset_disutility = [{"from": ["H"], "to": "S1", "delta": "-disutility_HS1"}]

        def strategy(name, utilities, costs, modifiers=None):
            # fresh copies per strategy keep the YAML dump free of anchors
            out = {
                "name": name,
                "utilities": dict(utilities),
                "costs": deepcopy(costs),
                "utility_increments": deepcopy(onset_disutility),
                "cost_increments": deepcopy(onset_cost) + deepcopy(death_increments),
            }
            if modifiers:
                out["transition_modifiers"] = deepcopy(modifiers)
            return out

        soc_utilities = {"H": "u_H", "S1": "u_S1", "S2": "u_S2", "D": "u_D"}
        trt_a_utilities = {"H": "u_H", "S1": "u_trt_a", "S2": "u_S2", "D": "u_D"}
        b_modifier = [{"from": "S1", "to": "S2", "odds_ratio": "or_S1S2_trt_b"}]

        doc = {
            "name": "sick-sicker",
            "states": {"names": list(STATES), "absorbing": ["D"]},
            "cohort": {
                "initial": {"H": 1.0},
                "horizon": self.horizon,
                "start_age": self.age_init,
            },
            "discount": {"cost": self.discount_cost, "effect": self.discount_effect},
            "parameters": p,
            "life_table": {"file": life_table_file, "kind": "hazard"},
            "transitions": {
                "conditional_on_survival": True,
                "rows": [
                    {
                        "from": "H",
                        "death": {"to": "D", "prob": "p_HD"},
                        "exits": [{"to": "S1", "prob": "p_HS1"}],
                    },
                    {
                        "from": "S1",
                        "death": {"to": "D", "prob": "p_HD", "hazard_ratio": "hr_death_S1"},
                        "exits": [
                            {"to": "H", "prob": "p_S1H"},
                            {"to": "S2", "prob": "p_S1S2"},
                        ],
                    },
                    {
                        "from": "S2",
                        "death": {"to": "D", "prob": "p_HD", "hazard_ratio": "hr_death_S2"},
                        "exits": [],
                    },
                ],
            },
            "tunnel": {
                "state": "S1",
                "progression_to": "S2",
                "weibull": {"scale": self.weibull_scale, "shape": self.weibull_shape},
            },
            "strategies": [
                strategy("Standard of care", soc_utilities, state_costs),
                strategy(
                    "Strategy A",
                    trt_a_utilities,
                    {"H": "c_H", "S1": ["c_S1", "c_trt_a"], "S2": ["c_S2", "c_trt_a"], "D": "c_D"},
                ),
                strategy(
                    "Strategy B",
                    soc_utilities,
                    {"H": "c_H", "S1": ["c_S1", "c_trt_b"], "S2": ["c_S2", "c_trt_b"], "D": "c_D"},
                    b_modifier,
                ),
                strategy(
                    "Strategy AB",
                    trt_a_utilities,
                    {
                        "H": "c_H",
                        "S1": ["c_S1", "c_trt_a", "c_trt_b"],
                        "S2": ["c_S2", "c_trt_a", "c_trt_b"],
                        "D": "c_D",
                    },
                    b_modifier,
                ),
            ],
            "psa": {"distributions": psa_distribution_doc(self)},
        }
        return doc

    @classmethod
    def from_config(cls, config: ModelConfig) -> "SickSickerParams":
        """Recover the parameter set from a resolved configuration."""
        p = config.parameters
        base = cls()
        kwargs = {
            name: p[name]
            for name in p
            if name in cls.__dataclass_fields__
        }
        if config.start_age is not None:
            kwargs["age_init"] = config.start_age
            kwargs["age_max"] = config.start_age + config.horizon
        kwargs["discount_cost"] = config.discount_cost
        kwargs["discount_effect"] = config.discount_effect
        if config.tunnel is not None and config.tunnel.weibull_scale is not None:
            kwargs["weibull_scale"] = float(config.tunnel.weibull_scale)
            kwargs["weibull_shape"] = float(config.tunnel.weibull_shape)
        out = replace(base, **kwargs)
        return out


def psa_distribution_doc(params: SickSickerParams) -> dict:
    """PSA distribution block for the example model.

    Families follow standard practice: beta for probabilities and
    utilities, gamma for costs, lognormal for hazard/odds ratios, each
    centered on the base value with the coefficient of variation given
    here. Parameters not listed (background mortality, the dead state's
    zero rewards, and u_H, whose base value 1.0 has no beta
    representation) stay fixed.
    """
    return {
        "p_HS1": {"family": "beta", "alpha": 30, "beta": 170},
        "p_S1H": {"family": "beta", "alpha": 60, "beta": 60},
        "p_S1S2": {"family": "beta", "alpha": 84, "beta": 716},
        "hr_death_S1": {"family": "lognormal", "cv": 0.05},
        "hr_death_S2": {"family": "lognormal", "cv": 0.05},
        "or_S1S2_trt_b": {"family": "lognormal", "cv": 0.10},
        "c_H": {"family": "gamma", "cv": 0.10},
        "c_S1": {"family": "gamma", "cv": 0.075},
        "c_S2": {"family": "gamma", "cv": 0.0667},
        "c_trt_a": {"family": "gamma", "cv": 0.1166},
        "c_trt_b": {"family": "gamma", "cv": 0.1078},
        "u_S1": {"family": "beta", "cv": 0.05, "support": [0, 1]},
        "u_S2": {"family": "beta", "cv": 0.05, "support": [0, 1]},
        "u_trt_a": {"family": "beta", "cv": 0.02, "support": [0, 1]},
        "disutility_HS1": {"family": "beta", "cv": 0.30},
        "transition_cost_HS1": {"family": "gamma", "cv": 0.20},
        "transition_cost_death": {"family": "gamma", "cv": 0.10},
    }


def data_path(name: str) -> Path:
    return Path(resources.files("cohortcea").joinpath("data", name))


def bundled_life_table() -> LifeTable:
    return LifeTable.from_csv(data_path(LIFE_TABLE_FILE))


def bundled_config_path() -> Path:
    return data_path(CONFIG_FILE)


def build_config(
    params: SickSickerParams | None = None,
    life_table: LifeTable | None = None,
) -> ModelConfig:
    """Resolve the example model into a :class:`ModelConfig`."""
    params = params or SickSickerParams()
    life_table = life_table or bundled_life_table()
    return resolve_config(
        params.to_config_dict(),
        base_dir=data_path("."),
        source="sick-sicker",
        life_table_override=life_table,
    )


def build_strategy_models(
    params: SickSickerParams,
    life_table: LifeTable | None,
    variant: str,
) -> tuple[list[StrategySpec], TunnelSpec | None]:
    """Per-strategy transition models and reward definitions.

    Standard of care and strategy A share one transition model, as do B
    and AB (treatment B alone alters dynamics). Variants needing the life
    table raise :class:`~cohortcea.errors.ConfigError` when none is
    available.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if variant in ("age-dependent", "tunnels") and life_table is None:
        raise ConfigError(f"variant {variant!r} requires a life table")
    config = build_config(params, life_table or bundled_life_table())
    return config.build_strategies(variant)


@dataclass(frozen=True, eq=False)
class FullAnalysis:
    """Deterministic end-to-end results for one variant.

    ``expected_outcomes`` carries the state-rewards-only totals;
    ``cea_table`` is built from the transition-reward totals (the
    pipeline that prices the one-time onset and death rewards). Traces
    for the tunnels variant are aggregated back to the compact four-state
    space.
    """

    variant: str
    results: tuple[StrategyResult, ...]
    traces: dict[str, CohortTrace]
    survival_curve: EpiSeries
    prevalence_sick: EpiSeries
    prevalence_sicker: EpiSeries
    prevalence_any: EpiSeries
    proportion_sicker: EpiSeries
    life_expectancy: float
    expected_outcomes: tuple[StrategyOutcome, ...]
    cea_table: CeaTable


def run_full_analysis(
    params: SickSickerParams | None = None,
    life_table: LifeTable | None = None,
    variant: str = "age-dependent",
) -> FullAnalysis:
    """Simulate all four strategies and derive every deterministic output."""
    params = params or SickSickerParams()
    if variant != "time-independent":
        life_table = life_table or bundled_life_table()
    config = build_config(params, life_table)
    specs, tunnel_spec = config.build_strategies(variant)
    init = config.initial_vector(specs[0].model.space, tunnel_spec)
    results = evaluate_strategies(
        specs,
        init,
        DiscountSpec(params.discount_cost, params.horizon),
        DiscountSpec(params.discount_effect, params.horizon),
    )

    traces = {}
    for res in results:
        trace = res.trace
        if tunnel_spec is not None:
            trace = aggregate_trace(trace, tunnel_spec)
        traces[res.label] = trace

    soc_trace = traces[STRATEGY_LABELS[0]]
    surv = survival(soc_trace, ["D"])
    analysis = FullAnalysis(
        variant=variant,
        results=tuple(results),
        traces=traces,
        survival_curve=surv,
        prevalence_sick=prevalence(soc_trace, ["S1"], ["D"]),
        prevalence_sicker=prevalence(soc_trace, ["S2"], ["D"]),
        prevalence_any=prevalence(soc_trace, ["S1", "S2"], ["D"]),
        proportion_sicker=proportion_among(soc_trace, ["S2"], ["S1", "S2"]),
        life_expectancy=life_expectancy(surv),
        expected_outcomes=tuple(r.state_outcome() for r in results),
        cea_table=calculate_icers([r.transition_outcome() for r in results]),
    )
    return analysis


class SickSickerEvaluator(ConfigEvaluator):
    """PSA evaluator for the example model.

    Totals come from the transition-reward pipeline of the requested
    variant (age-dependent by default, matching the deterministic CEA
    table).
    """

    def __init__(
        self,
        params: SickSickerParams | None = None,
        life_table: LifeTable | None = None,
        variant: str = "age-dependent",
    ):
        params = params or SickSickerParams()
        life_table = life_table or (
            bundled_life_table() if variant != "time-independent" else None
        )
        super().__init__(build_config(params, life_table), variant)
        self.params = params

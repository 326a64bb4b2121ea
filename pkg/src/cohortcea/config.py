"""Model configuration files: schema, loading, and model building.

A configuration is one YAML (or JSON) document describing a cohort
model: state space, initial distribution, horizon, transition rules
(parameterized probabilities with hazard/odds-ratio modifiers and
life-table references, or explicit matrices), optional tunnel expansion,
per-strategy rewards with transition increments, discount rates, and a
PSA distribution block. Loading resolves every reference and reports all
problems at once rather than stopping at the first.

Scalar values almost anywhere may be written as a number, the name of an
entry in the ``parameters`` table, ``-name`` for its negation, or a list
of such values meaning their sum (e.g. a state cost plus a treatment
cost).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .analysis import StrategySpec
from .core import StateSpace, StateVector, TransitionModel
from .errors import ConfigError, StructureError
from .psa import ParameterDistribution
from .rewards import DiscountSpec, TransitionIncrement
from .transforms import LifeTable, apply_hazard_ratio, apply_odds_ratio, rate_to_prob
from .tunnels import TunnelSpec, WeibullProgression, expand_tunnels

VARIANTS = ("time-independent", "age-dependent", "tunnels")


class _Problems:
    """Collects field-path-tagged resolution errors."""

    def __init__(self):
        self.items: list[str] = []

    def add(self, path: str, message: str):
        self.items.append(f"{path}: {message}")

    def raise_if_any(self, source: str):
        if self.items:
            raise ConfigError(
                f"{source}: {len(self.items)} configuration problem(s)", self.items
            )


@dataclass(frozen=True)
class DeathRule:
    """Mortality leg of a transition row.

    ``base_prob`` feeds the time-independent variant; age-dependent
    variants take the hazard from the model's life table instead. The
    hazard ratio applies on the rate scale in both cases. Values may be
    parameter references, resolved when strategies are built so sampled
    overrides take effect.
    """

    destination: str
    base_prob: float | str | None
    hazard_ratio: float | str


@dataclass(frozen=True)
class ExitRule:
    destination: str
    prob: float | str


@dataclass(frozen=True)
class TransitionRow:
    origin: str
    death: DeathRule | None
    exits: tuple[ExitRule, ...]


@dataclass(frozen=True)
class StrategyModifier:
    """Strategy-specific change to one transition's intensity."""

    origin: str
    destination: str
    odds_ratio: float | str | None = None
    hazard_ratio: float | str | None = None


@dataclass(frozen=True)
class RewardIncrementRule:
    origins: tuple[str, ...]
    destination: str
    delta: float | str


@dataclass(frozen=True, eq=False)
class StrategyConfig:
    name: str
    utilities: tuple  # per-state values aligned with the space, possibly references
    costs: tuple
    utility_increments: tuple[RewardIncrementRule, ...]
    cost_increments: tuple[RewardIncrementRule, ...]
    modifiers: tuple[StrategyModifier, ...]


@dataclass(frozen=True)
class TunnelConfig:
    state: str
    progression_to: str
    length: int | None  # defaults to the horizon
    weibull_scale: float | str | None
    weibull_shape: float | str | None
    probabilities: tuple | None


@dataclass(frozen=True)
class PsaParameterConfig:
    name: str
    family: str
    params: Mapping[str, float] | None  # explicit family parameters
    cv: float | None  # moment-matched alternative
    mean: float | None
    support: tuple[float, float] | None


@dataclass(frozen=True, eq=False)
class ModelConfig:
    """A validated model description.

    Every reference has been checked against the parameter table and the
    state space, but references stay symbolic until
    :meth:`build_strategies` resolves them, so per-sample parameter
    overrides reach transition probabilities and rewards alike.
    """

    name: str
    space: StateSpace
    initial: StateVector
    horizon: int
    start_age: int | None
    discount_cost: float
    discount_effect: float
    conditional_on_survival: bool
    rows: tuple[TransitionRow, ...] | None
    explicit_matrices: np.ndarray | None  # (n_t or 1, n, n)
    life_table: LifeTable | None
    tunnel: TunnelConfig | None
    strategies: tuple[StrategyConfig, ...]
    psa_parameters: tuple[PsaParameterConfig, ...]
    parameters: Mapping[str, float]

    # -- model building ------------------------------------------------

    def variants(self) -> tuple[str, ...]:
        if self.explicit_matrices is not None:
            return ("explicit",)
        out = ["time-independent"]
        if self.life_table is not None and self.start_age is not None:
            out.append("age-dependent")
            if self.tunnel is not None:
                out.append("tunnels")
        return tuple(out)

    def _death_probs(
        self, rule: DeathRule, hr: float, variant: str, params: Mapping[str, float],
        life_table: LifeTable,
    ) -> np.ndarray:
        if variant == "time-independent":
            base = _maybe_param(rule.base_prob, params)
            if base is None:
                raise ConfigError(
                    f"transition row {rule.destination}: time-independent variant needs a "
                    f"base probability"
                )
            p = apply_hazard_ratio(base, hr) if hr != 1.0 else base
            return np.full(self.horizon, p)
        hazards = life_table.hazards(self.start_age, self.horizon)
        return rate_to_prob(hazards * hr)

    def _build_matrices(
        self, variant: str, params: Mapping[str, float], modifiers, life_table
    ) -> np.ndarray:
        n = self.space.n_states
        mats = np.zeros((self.horizon, n, n))
        for i in self.space.absorbing_indices:
            mats[:, i, i] = 1.0
        modmap = {(m.origin, m.destination): m for m in modifiers}
        for row in self.rows:
            i = self.space.index(row.origin)
            if row.origin in self.space.absorbing:
                continue
            death = np.zeros(self.horizon)
            if row.death is not None:
                rule = row.death
                hr = _maybe_param(rule.hazard_ratio, params)
                mod = modmap.get((row.origin, rule.destination))
                if mod is not None and mod.hazard_ratio is not None:
                    extra = _maybe_param(mod.hazard_ratio, params)
                    if extra != 1.0:
                        hr = hr * extra
                death = self._death_probs(rule, hr, variant, params, life_table)
                mats[:, i, self.space.index(rule.destination)] += death
            exit_total = np.zeros(self.horizon)
            for exit_rule in row.exits:
                q = np.full(self.horizon, _maybe_param(exit_rule.prob, params))
                mod = modmap.get((row.origin, exit_rule.destination))
                if mod is not None and mod.odds_ratio is not None:
                    ratio = _maybe_param(mod.odds_ratio, params)
                    if ratio != 1.0:
                        q = apply_odds_ratio(q, ratio)
                scaled = (1.0 - death) * q if self.conditional_on_survival else q
                mats[:, i, self.space.index(exit_rule.destination)] += scaled
                exit_total += q
            if self.conditional_on_survival:
                stay = (1.0 - death) * (1.0 - exit_total)
            else:
                stay = 1.0 - death - exit_total
            mats[:, i, i] += np.where(np.abs(stay) < 1e-15, 0.0, stay)
        return mats

    def _tunnel_spec(self, params: Mapping[str, float], modifiers) -> TunnelSpec:
        cfg = self.tunnel
        length = cfg.length or self.horizon
        if cfg.probabilities is not None:
            probs = np.asarray([_maybe_param(p, params) for p in cfg.probabilities])
        else:
            probs = WeibullProgression(
                _maybe_param(cfg.weibull_scale, params),
                _maybe_param(cfg.weibull_shape, params),
            ).probabilities(length)
        modmap = {(m.origin, m.destination): m for m in modifiers}
        mod = modmap.get((cfg.state, cfg.progression_to))
        if mod is not None and mod.odds_ratio is not None:
            ratio = _maybe_param(mod.odds_ratio, params)
            if ratio != 1.0:
                probs = apply_odds_ratio(probs, ratio)
        return TunnelSpec(cfg.state, length, cfg.progression_to, probs)

    def build_strategies(
        self,
        variant: str,
        parameters: Mapping[str, float] | None = None,
        life_table: LifeTable | None = None,
    ) -> tuple[list[StrategySpec], TunnelSpec | None]:
        """Instantiate every strategy's transition model and rewards.

        ``parameters`` overrides entries of the config's parameter table
        (the PSA hook); ``life_table`` overrides the bundled one.
        Strategies with identical dynamics share one model object, so
        downstream evaluation reuses their traces.
        """
        params = dict(self.parameters)
        if parameters:
            unknown = set(parameters) - set(params)
            if unknown:
                raise ConfigError(f"unknown parameter override(s): {sorted(unknown)}")
            params.update(parameters)
        life_table = life_table or self.life_table

        if self.explicit_matrices is not None:
            if variant != "explicit":
                raise ConfigError(
                    f"model {self.name!r} uses explicit matrices; variant {variant!r} "
                    f"does not apply"
                )
        elif variant not in VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        elif variant in ("age-dependent", "tunnels"):
            if life_table is None:
                raise ConfigError(f"variant {variant!r} requires a life table")
            if self.start_age is None:
                raise ConfigError(f"variant {variant!r} requires cohort.start_age")
            if variant == "tunnels" and self.tunnel is None:
                raise ConfigError("variant 'tunnels' requires a tunnel block")

        def resolve_vector(raw):
            return np.array([_maybe_param(v, params) for v in raw], dtype=np.float64)

        def resolve_increments(rules):
            return tuple(
                TransitionIncrement(r.origins, r.destination, _maybe_param(r.delta, params))
                for r in rules
            )

        models: dict[tuple, tuple[TransitionModel, TunnelSpec | None]] = {}
        specs: list[StrategySpec] = []
        tunnel_spec_out: TunnelSpec | None = None
        for strat in self.strategies:
            key = tuple(sorted(
                (
                    m.origin,
                    m.destination,
                    None if m.odds_ratio is None else _maybe_param(m.odds_ratio, params),
                    None if m.hazard_ratio is None else _maybe_param(m.hazard_ratio, params),
                )
                for m in strat.modifiers
            ))
            if key not in models:
                if self.explicit_matrices is not None:
                    arr = self.explicit_matrices
                    if arr.shape[0] == 1:
                        model = TransitionModel.constant(self.space, arr[0], self.horizon)
                    else:
                        model = TransitionModel.time_varying(self.space, arr)
                    tunnel_spec = None
                else:
                    mats = self._build_matrices(variant, params, strat.modifiers, life_table)
                    if variant == "time-independent":
                        model = TransitionModel.constant(self.space, mats[0], self.horizon)
                    else:
                        model = TransitionModel.time_varying(self.space, mats)
                    tunnel_spec = None
                    if variant == "tunnels":
                        tunnel_spec = self._tunnel_spec(params, strat.modifiers)
                        _, model = expand_tunnels(model, tunnel_spec)
                models[key] = (model, tunnel_spec)
            model, tunnel_spec = models[key]
            if tunnel_spec is not None:
                tunnel_spec_out = tunnel_spec
            space = model.space
            utilities = _expand_state_vector(
                resolve_vector(strat.utilities), self.space, space, self.tunnel
            )
            costs = _expand_state_vector(
                resolve_vector(strat.costs), self.space, space, self.tunnel
            )
            specs.append(
                StrategySpec(
                    strat.name,
                    model,
                    utilities,
                    costs,
                    _expand_increments(
                        resolve_increments(strat.utility_increments), self.space, space, self.tunnel
                    ),
                    _expand_increments(
                        resolve_increments(strat.cost_increments), self.space, space, self.tunnel
                    ),
                )
            )
        return specs, tunnel_spec_out

    def initial_vector(self, space: StateSpace, tunnel: TunnelSpec | None) -> StateVector:
        """Initial distribution mapped onto a possibly expanded space."""
        if tunnel is None:
            return self.initial
        values = np.zeros(space.n_states)
        for j, name in enumerate(self.space.names):
            mass = self.initial.values[j]
            if mass == 0:
                continue
            target = f"{name}_1" if name == tunnel.state else name
            values[space.index(target)] = mass
        return StateVector(space, values)

    def psa_distributions(self) -> list[ParameterDistribution]:
        """Distributions for the PSA block; unlisted parameters stay fixed."""
        out = []
        for cfg in self.psa_parameters:
            base = self.parameters.get(cfg.name)
            if cfg.family == "fixed":
                value = cfg.mean if cfg.mean is not None else base
                out.append(ParameterDistribution.fixed(cfg.name, value))
            elif cfg.params is not None:
                out.append(
                    ParameterDistribution(cfg.name, cfg.family, cfg.params, cfg.support)
                )
            else:
                mean = cfg.mean if cfg.mean is not None else base
                out.append(
                    ParameterDistribution.moment_matched(
                        cfg.name, cfg.family, mean, cfg.cv, cfg.support
                    )
                )
        return out


def _maybe_param(value, params: Mapping[str, float]):
    if isinstance(value, str):
        negate = value.startswith("-")
        name = value[1:] if negate else value
        resolved = params[name]
        return -resolved if negate else resolved
    if isinstance(value, (list, tuple)):
        return sum(_maybe_param(v, params) for v in value)
    return value


def _expand_state_vector(vec, compact: StateSpace, space: StateSpace, tunnel) -> np.ndarray:
    if space == compact:
        return vec
    out = np.empty(space.n_states)
    for j, name in enumerate(compact.names):
        if tunnel is not None and name == tunnel.state:
            for tau in range(1, space.n_states - compact.n_states + 2):
                out[space.index(f"{name}_{tau}")] = vec[j]
        else:
            out[space.index(name)] = vec[j]
    return out


def _expand_increments(
    increments, compact: StateSpace, space: StateSpace, tunnel
) -> tuple[TransitionIncrement, ...]:
    if space == compact:
        return tuple(increments)
    t_len = space.n_states - compact.n_states + 1

    def expand(names):
        out = []
        for name in names:
            if tunnel is not None and name == tunnel.state:
                out.extend(f"{name}_{tau}" for tau in range(1, t_len + 1))
            else:
                out.append(name)
        return out

    out = []
    for inc in increments:
        dests = expand([inc.destination])
        # Entry into a tunneled state lands in tunnel 1 only.
        dest = f"{inc.destination}_1" if len(dests) > 1 else dests[0]
        out.append(TransitionIncrement(expand(inc.origins), dest, inc.delta))
    return tuple(out)


# -- document parsing --------------------------------------------------------

def load_config(path, life_table_override=None) -> ModelConfig:
    """Read and fully resolve a model configuration file.

    YAML and JSON encodings are accepted (by extension, with YAML as the
    default). Parse errors carry the document position; semantic errors
    carry the offending field path, and all of them are reported
    together.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}:{exc.lineno}:{exc.colno}: JSON parse error: {exc.msg}"
            ) from exc
    else:
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
            raise ConfigError(f"{where}: YAML parse error: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: configuration must be a mapping, got {type(doc).__name__}")
    return resolve_config(doc, base_dir=path.parent, source=str(path),
                          life_table_override=life_table_override)


def resolve_config(
    doc: Mapping[str, Any],
    base_dir: Path | None = None,
    source: str = "<config>",
    life_table_override: LifeTable | None = None,
) -> ModelConfig:
    """Resolve a parsed configuration mapping into a :class:`ModelConfig`."""
    problems = _Problems()
    base_dir = Path(base_dir) if base_dir is not None else Path(".")

    name = doc.get("name", "model")
    params = doc.get("parameters", {}) or {}
    if not isinstance(params, dict):
        problems.add("parameters", "must be a mapping of name to number")
        params = {}
    bad = [k for k, v in params.items() if not isinstance(v, (int, float)) or isinstance(v, bool)]
    for k in bad:
        problems.add(f"parameters.{k}", f"must be a number, got {params[k]!r}")
    params = {k: float(v) for k, v in params.items() if k not in bad}

    def resolve_value(value, where, allow_negative=False):
        try:
            out = _maybe_param(value, params)
        except KeyError:
            problems.add(where, f"unknown parameter reference {value!r}")
            return None
        if not isinstance(out, (int, float)) or isinstance(out, bool):
            problems.add(where, f"must be a number or parameter name, got {value!r}")
            return None
        if not allow_negative and out < 0:
            problems.add(where, f"must be nonnegative, resolved to {out!r}")
            return None
        return float(out)

    def checked(value, where, allow_negative=False):
        """Validate a scalar-or-reference and keep it in reference form."""
        if resolve_value(value, where, allow_negative) is None:
            return None
        return value

    # states ---------------------------------------------------------------
    space = None
    states_doc = doc.get("states")
    if not isinstance(states_doc, dict) or "names" not in states_doc:
        problems.add("states", "required mapping with a 'names' list")
    else:
        try:
            space = StateSpace(states_doc["names"], states_doc.get("absorbing", ()))
        except (StructureError, TypeError) as exc:
            problems.add("states", str(exc))
    if space is None:
        problems.raise_if_any(source)

    def known_state(label, where) -> bool:
        if label not in space.names:
            problems.add(where, f"unknown state {label!r}")
            return False
        return True

    # cohort ---------------------------------------------------------------
    cohort = doc.get("cohort", {}) or {}
    horizon = cohort.get("horizon")
    if not isinstance(horizon, int) or horizon < 1:
        problems.add("cohort.horizon", "required positive integer")
        horizon = 1
    start_age = cohort.get("start_age")
    if start_age is not None and not isinstance(start_age, int):
        problems.add("cohort.start_age", "must be an integer age")
        start_age = None
    initial = None
    init_doc = cohort.get("initial")
    if not isinstance(init_doc, dict):
        problems.add("cohort.initial", "required mapping of state to share")
    else:
        occ = {}
        for k, v in init_doc.items():
            if known_state(k, f"cohort.initial.{k}"):
                value = resolve_value(v, f"cohort.initial.{k}")
                if value is not None:
                    occ[k] = value
        try:
            initial = StateVector.from_mapping(space, occ)
        except (ValueError, StructureError) as exc:
            problems.add("cohort.initial", str(exc))

    # discount ---------------------------------------------------------------
    discount = doc.get("discount", {}) or {}
    d_cost = resolve_value(discount.get("cost", 0.0), "discount.cost")
    d_effect = resolve_value(discount.get("effect", 0.0), "discount.effect")

    # life table -------------------------------------------------------------
    life_table = life_table_override
    lt_doc = doc.get("life_table")
    if life_table is None and lt_doc is not None:
        if not isinstance(lt_doc, dict) or "file" not in lt_doc:
            problems.add("life_table", "must be a mapping with a 'file' entry")
        else:
            lt_path = Path(lt_doc["file"])
            if not lt_path.is_absolute():
                lt_path = base_dir / lt_path
            try:
                life_table = LifeTable.from_csv(lt_path, lt_doc.get("kind", "hazard"))
            except Exception as exc:
                problems.add("life_table.file", str(exc))

    # transitions -------------------------------------------------------------
    transitions = doc.get("transitions", {}) or {}
    conditional = bool(transitions.get("conditional_on_survival", True))
    rows = None
    explicit = None
    if "matrix" in transitions:
        arr = np.asarray(transitions["matrix"], dtype=np.float64)
        if arr.shape != (space.n_states, space.n_states):
            problems.add("transitions.matrix", f"expected a square matrix, got shape {arr.shape}")
        else:
            explicit = arr[None, :, :]
    elif "matrices" in transitions:
        arr = np.asarray(transitions["matrices"], dtype=np.float64)
        if arr.ndim != 3 or arr.shape[1:] != (space.n_states, space.n_states):
            problems.add("transitions.matrices", f"expected a stack of square matrices, got shape {arr.shape}")
        elif arr.shape[0] != horizon:
            problems.add("transitions.matrices", f"expected {horizon} matrices, got {arr.shape[0]}")
        else:
            explicit = arr
    else:
        rows_doc = transitions.get("rows")
        if not isinstance(rows_doc, list) or not rows_doc:
            problems.add("transitions.rows", "required list of per-state transition rules")
            rows_doc = []
        parsed_rows = []
        seen = set()
        for k, row_doc in enumerate(rows_doc):
            where = f"transitions.rows[{k}]"
            origin = row_doc.get("from")
            if origin is None or not known_state(origin, f"{where}.from"):
                continue
            if origin in seen:
                problems.add(f"{where}.from", f"duplicate rules for state {origin!r}")
                continue
            seen.add(origin)
            death = None
            death_doc = row_doc.get("death")
            if death_doc is not None:
                dest = death_doc.get("to")
                if dest is not None and known_state(dest, f"{where}.death.to"):
                    base = death_doc.get("prob")
                    base_raw = checked(base, f"{where}.death.prob") if base is not None else None
                    hr_raw = checked(death_doc.get("hazard_ratio", 1.0), f"{where}.death.hazard_ratio")
                    death = DeathRule(dest, base_raw, hr_raw if hr_raw is not None else 1.0)
            exits = []
            for j, exit_doc in enumerate(row_doc.get("exits", []) or []):
                dest = exit_doc.get("to")
                if dest is None or not known_state(dest, f"{where}.exits[{j}].to"):
                    continue
                prob = checked(exit_doc.get("prob"), f"{where}.exits[{j}].prob")
                if prob is not None:
                    exits.append(ExitRule(dest, prob))
            parsed_rows.append(TransitionRow(origin, death, tuple(exits)))
        rows = tuple(parsed_rows)
        for name_ in space.names:
            if name_ not in seen and name_ not in space.absorbing:
                problems.add("transitions.rows", f"no rule for non-absorbing state {name_!r}")

    # tunnel -------------------------------------------------------------------
    tunnel = None
    tunnel_doc = doc.get("tunnel")
    if tunnel_doc is not None:
        state = tunnel_doc.get("state")
        progression = tunnel_doc.get("progression_to")
        ok = True
        for label, where in ((state, "tunnel.state"), (progression, "tunnel.progression_to")):
            if label is None:
                problems.add(where, "required state label")
                ok = False
            elif not known_state(label, where):
                ok = False
        scale = shape = None
        probs = None
        if "weibull" in tunnel_doc:
            wdoc = tunnel_doc["weibull"]
            scale = checked(wdoc.get("scale"), "tunnel.weibull.scale")
            shape = checked(wdoc.get("shape"), "tunnel.weibull.shape")
            if scale is not None and shape is not None:
                try:
                    WeibullProgression(
                        _maybe_param(scale, params), _maybe_param(shape, params)
                    )
                except ValueError as exc:
                    problems.add("tunnel.weibull", str(exc))
                    scale = shape = None
        elif "probabilities" in tunnel_doc:
            raw = tunnel_doc["probabilities"]
            if not isinstance(raw, list) or not raw:
                problems.add("tunnel.probabilities", "must be a nonempty list")
            else:
                items = [checked(v, f"tunnel.probabilities[{j}]") for j, v in enumerate(raw)]
                if all(v is not None for v in items):
                    probs = tuple(items)
        else:
            problems.add("tunnel", "needs either a 'weibull' block or explicit 'probabilities'")
        if ok and (scale is not None or probs is not None):
            tunnel = TunnelConfig(state, progression, tunnel_doc.get("length"), scale, shape, probs)

    # strategies -----------------------------------------------------------------
    strategies = []
    strat_docs = doc.get("strategies")
    if not isinstance(strat_docs, list) or not strat_docs:
        problems.add("strategies", "required list with at least one strategy")
        strat_docs = []

    def state_vector(mapping, where):
        values = [0.0] * space.n_states
        if not isinstance(mapping, dict):
            problems.add(where, "must be a mapping of state to value")
            return tuple(values)
        for k, v in mapping.items():
            if known_state(k, f"{where}.{k}"):
                raw = checked(v, f"{where}.{k}", allow_negative=True)
                if raw is not None:
                    values[space.index(k)] = raw
        missing = set(space.names) - set(mapping)
        if missing:
            problems.add(where, f"missing entries for states {sorted(missing)}")
        return tuple(values)

    def increments(docs, where):
        out = []
        for j, inc in enumerate(docs or []):
            here = f"{where}[{j}]"
            origins = inc.get("from")
            dest = inc.get("to")
            if not isinstance(origins, list) or not origins:
                problems.add(f"{here}.from", "required list of origin states")
                continue
            if not all(known_state(o, f"{here}.from") for o in origins):
                continue
            if dest is None or not known_state(dest, f"{here}.to"):
                continue
            delta = checked(inc.get("delta"), f"{here}.delta", allow_negative=True)
            if delta is None:
                continue
            out.append(RewardIncrementRule(tuple(origins), dest, delta))
        return tuple(out)

    seen_names = set()
    for k, sdoc in enumerate(strat_docs):
        where = f"strategies[{k}]"
        sname = sdoc.get("name", f"strategy-{k}")
        if sname in seen_names:
            problems.add(f"{where}.name", f"duplicate strategy name {sname!r}")
        seen_names.add(sname)
        utilities = state_vector(sdoc.get("utilities"), f"{where}.utilities")
        costs = state_vector(sdoc.get("costs"), f"{where}.costs")
        modifiers = []
        for j, mdoc in enumerate(sdoc.get("transition_modifiers", []) or []):
            here = f"{where}.transition_modifiers[{j}]"
            origin, dest = mdoc.get("from"), mdoc.get("to")
            if origin is None or dest is None:
                problems.add(here, "needs 'from' and 'to' states")
                continue
            if not (known_state(origin, f"{here}.from") and known_state(dest, f"{here}.to")):
                continue
            odds = mdoc.get("odds_ratio")
            hazard = mdoc.get("hazard_ratio")
            if odds is None and hazard is None:
                problems.add(here, "needs an 'odds_ratio' or 'hazard_ratio'")
                continue
            odds_raw = checked(odds, f"{here}.odds_ratio") if odds is not None else None
            hazard_raw = checked(hazard, f"{here}.hazard_ratio") if hazard is not None else None
            modifiers.append(StrategyModifier(origin, dest, odds_raw, hazard_raw))
        strategies.append(
            StrategyConfig(
                sname,
                utilities,
                costs,
                increments(sdoc.get("utility_increments"), f"{where}.utility_increments"),
                increments(sdoc.get("cost_increments"), f"{where}.cost_increments"),
                tuple(modifiers),
            )
        )

    # psa ---------------------------------------------------------------------
    psa_params = []
    psa_doc = doc.get("psa", {}) or {}
    for pname, pdoc in (psa_doc.get("distributions", {}) or {}).items():
        where = f"psa.distributions.{pname}"
        if pname not in params:
            problems.add(where, f"no such parameter {pname!r}")
            continue
        if not isinstance(pdoc, dict) or "family" not in pdoc:
            problems.add(where, "must be a mapping with a 'family'")
            continue
        family = pdoc["family"]
        support = tuple(pdoc["support"]) if "support" in pdoc else None
        explicit_keys = set(pdoc) - {"family", "mean", "cv", "support"}
        explicit_params = {k: pdoc[k] for k in explicit_keys} if explicit_keys else None
        cv = pdoc.get("cv")
        mean = pdoc.get("mean")
        if family != "fixed" and explicit_params is None and cv is None:
            problems.add(where, "needs explicit family parameters or a 'cv'")
            continue
        try:
            cfg = PsaParameterConfig(pname, family, explicit_params, cv, mean, support)
            # instantiate eagerly so bad family parameters surface at load time
            if family == "fixed":
                ParameterDistribution.fixed(pname, mean if mean is not None else params[pname])
            elif explicit_params is not None:
                ParameterDistribution(pname, family, explicit_params, support)
            else:
                ParameterDistribution.moment_matched(
                    pname, family, mean if mean is not None else params[pname], cv, support
                )
        except (ValueError, TypeError) as exc:
            problems.add(where, str(exc))
            continue
        psa_params.append(cfg)

    problems.raise_if_any(source)

    config = ModelConfig(
        name=name,
        space=space,
        initial=initial,
        horizon=horizon,
        start_age=start_age,
        discount_cost=d_cost,
        discount_effect=d_effect,
        conditional_on_survival=conditional,
        rows=rows,
        explicit_matrices=explicit,
        life_table=life_table,
        tunnel=tunnel,
        strategies=tuple(strategies),
        psa_parameters=tuple(psa_params),
        parameters=params,
    )
    return config


def discount_specs(config: ModelConfig) -> tuple[DiscountSpec, DiscountSpec]:
    return (
        DiscountSpec(config.discount_cost, config.horizon),
        DiscountSpec(config.discount_effect, config.horizon),
    )


class ConfigEvaluator:
    """Strategy-parameterized model evaluator for PSA runs.

    Rebuilds every strategy from a configuration with one sampled
    parameter row substituted, then returns the transition-reward totals
    (cost, effect) per strategy. Instances are picklable for process
    pools.
    """

    def __init__(self, config: ModelConfig, variant: str):
        self.config = config
        self.variant = variant

    def __call__(self, row) -> dict[str, tuple[float, float]]:
        from .analysis import evaluate_strategies

        specs, tunnel_spec = self.config.build_strategies(self.variant, parameters=dict(row))
        init = self.config.initial_vector(specs[0].model.space, tunnel_spec)
        d_cost, d_effect = discount_specs(self.config)
        results = evaluate_strategies(specs, init, d_cost, d_effect)
        return {r.label: (r.transition_cost, r.transition_qaly) for r in results}

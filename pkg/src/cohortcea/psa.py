"""Probabilistic sensitivity analysis.

Parameter sets are sampled from named distributions with one independent
substream per sample (seeded from the PSA seed and the row index), so
results do not depend on evaluation order or parallelism. Per-sample
model outcomes feed cost-effectiveness acceptability curves (CEAC), the
acceptability frontier (CEAF), expected loss curves (ELC), and the
expected value of perfect information (EVPI).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import PsaEvaluationError, StructureError

FAMILIES = ("beta", "gamma", "lognormal", "normal", "uniform", "fixed")

_FAMILY_PARAMS = {
    "beta": ("alpha", "beta"),
    "gamma": ("shape", "scale"),
    "lognormal": ("meanlog", "sdlog"),
    "normal": ("mean", "sd"),
    "uniform": ("low", "high"),
    "fixed": ("value",),
}


@dataclass(frozen=True)
class ParameterDistribution:
    """Sampling distribution for one model parameter.

    ``support``, when given, is an inclusive ``(low, high)`` pair checked
    against every draw; violations abort sampling rather than being
    silently clamped.
    """

    name: str
    family: str
    params: tuple[tuple[str, float], ...]
    support: tuple[float, float] | None = None

    def __init__(self, name, family, params: Mapping[str, float], support=None):
        if family not in FAMILIES:
            raise ValueError(f"{name}: unknown distribution family {family!r}")
        expected = _FAMILY_PARAMS[family]
        if set(params) != set(expected):
            raise ValueError(
                f"{name}: family {family!r} needs parameters {expected}, got {sorted(params)}"
            )
        values = {k: float(v) for k, v in params.items()}
        if family == "beta" and (values["alpha"] <= 0 or values["beta"] <= 0):
            raise ValueError(f"{name}: beta shapes must be > 0")
        if family == "gamma" and (values["shape"] <= 0 or values["scale"] <= 0):
            raise ValueError(f"{name}: gamma shape and scale must be > 0")
        if family == "lognormal" and values["sdlog"] < 0:
            raise ValueError(f"{name}: lognormal sdlog must be >= 0")
        if family == "normal" and values["sd"] < 0:
            raise ValueError(f"{name}: normal sd must be >= 0")
        if family == "uniform" and values["low"] > values["high"]:
            raise ValueError(f"{name}: uniform low must be <= high")
        if support is not None:
            support = (float(support[0]), float(support[1]))
            if support[0] > support[1]:
                raise ValueError(f"{name}: support low must be <= high")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", tuple(sorted(values.items())))
        object.__setattr__(self, "support", support)

    @property
    def param_dict(self) -> dict[str, float]:
        return dict(self.params)

    @classmethod
    def fixed(cls, name: str, value: float) -> "ParameterDistribution":
        return cls(name, "fixed", {"value": value})

    @classmethod
    def moment_matched(
        cls, name: str, family: str, mean: float, cv: float, support=None
    ) -> "ParameterDistribution":
        """Build a distribution from a mean and coefficient of variation.

        ``cv = 0`` degenerates to the fixed family regardless of the
        requested one.
        """
        if cv < 0:
            raise ValueError(f"{name}: coefficient of variation must be >= 0")
        if cv == 0:
            return cls.fixed(name, mean)
        sd = abs(mean) * cv
        if family == "beta":
            if not 0 < mean < 1:
                raise ValueError(f"{name}: beta mean must lie in (0, 1)")
            nu = mean * (1 - mean) / sd**2 - 1
            if nu <= 0:
                raise ValueError(f"{name}: cv too large for a beta distribution")
            return cls(name, "beta", {"alpha": mean * nu, "beta": (1 - mean) * nu}, support)
        if family == "gamma":
            if mean <= 0:
                raise ValueError(f"{name}: gamma mean must be > 0")
            return cls(name, "gamma", {"shape": 1 / cv**2, "scale": mean * cv**2}, support)
        if family == "lognormal":
            if mean <= 0:
                raise ValueError(f"{name}: lognormal mean must be > 0")
            sdlog2 = np.log1p(cv**2)
            return cls(
                name,
                "lognormal",
                {"meanlog": np.log(mean) - sdlog2 / 2, "sdlog": float(np.sqrt(sdlog2))},
                support,
            )
        if family == "normal":
            return cls(name, "normal", {"mean": mean, "sd": sd}, support)
        if family == "uniform":
            half = np.sqrt(3.0) * sd
            return cls(name, "uniform", {"low": mean - half, "high": mean + half}, support)
        raise ValueError(f"{name}: cannot moment-match family {family!r}")

    def mean(self) -> float:
        p = self.param_dict
        if self.family == "beta":
            return p["alpha"] / (p["alpha"] + p["beta"])
        if self.family == "gamma":
            return p["shape"] * p["scale"]
        if self.family == "lognormal":
            return float(np.exp(p["meanlog"] + p["sdlog"] ** 2 / 2))
        if self.family == "normal":
            return p["mean"]
        if self.family == "uniform":
            return (p["low"] + p["high"]) / 2
        return p["value"]

    def sample(self, rng: np.random.Generator) -> float:
        p = self.param_dict
        if self.family == "beta":
            value = rng.beta(p["alpha"], p["beta"])
        elif self.family == "gamma":
            value = rng.gamma(p["shape"], p["scale"])
        elif self.family == "lognormal":
            value = rng.lognormal(p["meanlog"], p["sdlog"])
        elif self.family == "normal":
            value = rng.normal(p["mean"], p["sd"])
        elif self.family == "uniform":
            value = rng.uniform(p["low"], p["high"])
        else:
            value = p["value"]
        if self.support is not None and not self.support[0] <= value <= self.support[1]:
            raise ValueError(
                f"{self.name}: draw {value!r} violates support {self.support}"
            )
        return float(value)


@dataclass(frozen=True, eq=False)
class PsaSampleSet:
    """Named parameter draws, one row per simulation."""

    names: tuple[str, ...]
    values: NDArray[np.float64]
    seed: int

    def __init__(self, names: Sequence[str], values, seed: int):
        names = tuple(names)
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != len(names):
            raise StructureError(
                f"sample values have shape {arr.shape}, expected (n_sim, {len(names)})"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "seed", int(seed))

    @property
    def n_sim(self) -> int:
        return self.values.shape[0]

    def row(self, i: int) -> dict[str, float]:
        return dict(zip(self.names, map(float, self.values[i])))

    def column(self, name: str) -> NDArray[np.float64]:
        return self.values[:, self.names.index(name)]


def generate_psa_params(
    dists: Sequence[ParameterDistribution], n_sim: int, seed: int
) -> PsaSampleSet:
    """Draw ``n_sim`` parameter rows, one independent substream per row.

    Row ``i`` is generated from a child of ``SeedSequence(seed)`` at
    index ``i``, so a given row's values do not depend on ``n_sim`` or on
    the order rows are consumed in.
    """
    if n_sim < 1:
        raise ValueError("n_sim must be >= 1")
    names = [d.name for d in dists]
    if len(set(names)) != len(names):
        raise ValueError("distribution names must be unique")
    children = np.random.SeedSequence(seed).spawn(n_sim)
    values = np.empty((n_sim, len(dists)))
    for i, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        values[i] = [d.sample(rng) for d in dists]
    return PsaSampleSet(names, values, seed)


@dataclass(frozen=True, eq=False)
class PsaOutcomes:
    """Per-sample total discounted cost and effect for each strategy."""

    strategies: tuple[str, ...]
    costs: NDArray[np.float64]
    effects: NDArray[np.float64]

    def __init__(self, strategies: Sequence[str], costs, effects):
        strategies = tuple(strategies)
        costs = np.asarray(costs, dtype=np.float64)
        effects = np.asarray(effects, dtype=np.float64)
        shape = (costs.shape[0], len(strategies))
        if costs.shape != shape or effects.shape != shape:
            raise StructureError(
                f"outcome matrices must have shape {shape}, got {costs.shape} and {effects.shape}"
            )
        if not (np.all(np.isfinite(costs)) and np.all(np.isfinite(effects))):
            raise ValueError("PSA outcomes must be finite")
        costs = costs.copy()
        effects = effects.copy()
        costs.flags.writeable = False
        effects.flags.writeable = False
        object.__setattr__(self, "strategies", strategies)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "effects", effects)

    @property
    def n_sim(self) -> int:
        return self.costs.shape[0]

    def mean_outcomes(self) -> list[tuple[str, float, float]]:
        return [
            (s, float(self.costs[:, k].mean()), float(self.effects[:, k].mean()))
            for k, s in enumerate(self.strategies)
        ]


Evaluator = Callable[[Mapping[str, float]], Mapping[str, tuple[float, float]]]


def _evaluate_row(evaluator: Evaluator, row: Mapping[str, float], i: int):
    try:
        return evaluator(row)
    except Exception as exc:
        raise PsaEvaluationError(f"model evaluation failed on sample {i}: {exc}", row=i) from exc


def evaluate_psa(
    samples: PsaSampleSet,
    evaluator: Evaluator,
    workers: int = 1,
) -> PsaOutcomes:
    """Run the model on every sampled parameter row.

    ``evaluator`` maps one parameter mapping to per-strategy
    ``(cost, effect)`` pairs keyed by strategy label; labels must agree
    across rows. A failing row aborts the run with its index surfaced.
    With ``workers > 1`` rows are evaluated in a process pool (the
    evaluator must be picklable); results are identical to the serial
    path because each row's parameters are fixed ahead of time.
    """
    rows = [samples.row(i) for i in range(samples.n_sim)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(_evaluate_row, [evaluator] * len(rows), rows, range(len(rows)),
                         chunksize=max(1, len(rows) // (8 * workers)))
            )
    else:
        results = [_evaluate_row(evaluator, row, i) for i, row in enumerate(rows)]

    strategies = tuple(results[0])
    costs = np.empty((samples.n_sim, len(strategies)))
    effects = np.empty((samples.n_sim, len(strategies)))
    for i, res in enumerate(results):
        if tuple(res) != strategies:
            raise PsaEvaluationError(
                f"sample {i} produced strategies {tuple(res)}, expected {strategies}",
                row=i,
            )
        for k, label in enumerate(strategies):
            costs[i, k], effects[i, k] = res[label]
    return PsaOutcomes(strategies, costs, effects)


def nmb_matrix(outcomes: PsaOutcomes, wtp: float) -> NDArray[np.float64]:
    """Per-sample net monetary benefit of every strategy at one threshold."""
    if wtp < 0:
        raise ValueError("willingness-to-pay must be >= 0")
    return outcomes.effects * wtp - outcomes.costs


@dataclass(frozen=True, eq=False)
class CeacResult:
    """CEAC probabilities and the acceptability frontier over a WTP grid."""

    wtp: NDArray[np.float64]
    strategies: tuple[str, ...]
    probabilities: NDArray[np.float64]  # (n_wtp, n_strategies)
    frontier: tuple[str, ...]  # argmax of mean NMB at each threshold

    def __init__(self, wtp, strategies, probabilities, frontier):
        object.__setattr__(self, "wtp", np.asarray(wtp, dtype=np.float64))
        object.__setattr__(self, "strategies", tuple(strategies))
        object.__setattr__(self, "probabilities", np.asarray(probabilities, dtype=np.float64))
        object.__setattr__(self, "frontier", tuple(frontier))


def default_wtp_grid(wtp_max: float = 200_000.0, step: float = 5_000.0) -> NDArray[np.float64]:
    """Thresholds 0..wtp_max inclusive in ``step`` increments."""
    if wtp_max < 0 or step <= 0:
        raise ValueError("wtp_max must be >= 0 and step > 0")
    return np.arange(0.0, wtp_max + step / 2, step)


def ceac(outcomes: PsaOutcomes, wtp_grid) -> CeacResult:
    """Probability each strategy maximizes NMB, plus the CEAF marking.

    Per-sample ties split probability equally among the tied strategies;
    the frontier entry at each threshold is the strategy with the highest
    mean NMB.
    """
    wtp_grid = np.asarray(wtp_grid, dtype=np.float64)
    if wtp_grid.size == 0:
        raise ValueError("wtp grid must be nonempty")
    probs = np.empty((wtp_grid.size, len(outcomes.strategies)))
    frontier = []
    for k, wtp in enumerate(wtp_grid):
        nmb = nmb_matrix(outcomes, float(wtp))
        best = nmb.max(axis=1, keepdims=True)
        ties = nmb == best
        probs[k] = (ties / ties.sum(axis=1, keepdims=True)).mean(axis=0)
        frontier.append(outcomes.strategies[int(np.argmax(nmb.mean(axis=0)))])
    return CeacResult(wtp_grid, outcomes.strategies, probs, frontier)


def expected_loss_and_evpi(
    outcomes: PsaOutcomes, wtp_grid
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Expected loss curves and the EVPI over a WTP grid.

    The loss of a strategy at a threshold is the mean shortfall of its
    NMB against the per-sample best strategy; the EVPI is the lower
    envelope of the loss curves, identically ``mean(max NMB) - max(mean
    NMB)``.
    """
    wtp_grid = np.asarray(wtp_grid, dtype=np.float64)
    if wtp_grid.size == 0:
        raise ValueError("wtp grid must be nonempty")
    loss = np.empty((wtp_grid.size, len(outcomes.strategies)))
    for k, wtp in enumerate(wtp_grid):
        nmb = nmb_matrix(outcomes, float(wtp))
        best = nmb.max(axis=1)
        loss[k] = best.mean() - nmb.mean(axis=0)
    evpi = loss.min(axis=1)
    return loss, evpi

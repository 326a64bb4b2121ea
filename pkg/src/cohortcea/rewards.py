"""State and transition rewards, discounting, half-cycle correction.

Rewards accrue at the beginning of each cycle. With state rewards only,
the per-cycle expected reward is the trace row times the reward vector;
with transition rewards, the reward matrix (state reward replicated
across rows, indexed by destination, plus signed transition increments)
is multiplied element-wise against the per-cycle flow matrices and
summed. Totals weight the per-cycle sequence by discount factors and,
optionally, half-cycle correction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from .core import CohortTrace, StateSpace, TransitionDynamicsArray
from .errors import StructureError


@dataclass(frozen=True)
class DiscountSpec:
    """Per-cycle discount rate and horizon."""

    rate: float
    horizon: int

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"discount rate must be >= 0, got {self.rate!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")


def discount_vector(spec: DiscountSpec) -> NDArray[np.float64]:
    """Weights ``(1 + d)^-t`` for ``t = 0 .. horizon``; element 0 is 1."""
    return (1.0 + spec.rate) ** -np.arange(spec.horizon + 1, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class HalfCycleSpec:
    """Weight sequence approximating mid-cycle transitions.

    The standard form halves the first and last cycle weights and leaves
    interior cycles at 1.
    """

    weights: NDArray[np.float64]

    def __init__(self, weights):
        arr = np.asarray(weights, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("half-cycle weights must be a vector of length >= 2")
        if np.any(arr <= 0) or np.any(arr > 1):
            raise ValueError("half-cycle weights must lie in (0, 1]")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "weights", arr)

    @classmethod
    def standard(cls, n_t: int) -> "HalfCycleSpec":
        w = np.ones(n_t + 1)
        w[0] = w[-1] = 0.5
        return cls(w)


@dataclass(frozen=True)
class TransitionIncrement:
    """A signed reward delta attached to specific transitions.

    Applied to every cell ``(origin, destination)`` for ``origin`` in
    ``origins``. Costs enter with positive sign, disutilities negative.
    """

    origins: tuple[str, ...]
    destination: str
    delta: float

    def __init__(self, origins: Iterable[str], destination: str, delta: float):
        object.__setattr__(self, "origins", tuple(origins))
        object.__setattr__(self, "destination", destination)
        object.__setattr__(self, "delta", float(delta))


@dataclass(frozen=True, eq=False)
class RewardMatrixSequence:
    """One reward matrix per cycle, aligned with a dynamics array."""

    space: StateSpace
    values: NDArray[np.float64]

    def __init__(self, space: StateSpace, values):
        arr = np.asarray(values, dtype=np.float64)
        n = space.n_states
        if arr.ndim != 3 or arr.shape[1:] != (n, n):
            raise StructureError(
                f"reward matrices have shape {arr.shape}, expected (n_cycles + 1, {n}, {n})"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("reward matrices must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "values", arr)


def build_reward_matrices(
    space: StateSpace,
    n_t: int,
    state_rewards,
    increments: Sequence[TransitionIncrement] = (),
) -> RewardMatrixSequence:
    """Assemble per-cycle reward matrices from state rewards and increments.

    The base matrix replicates the state-reward vector across rows, so
    each column is constant at the destination state's reward; the reward
    for a transition then defaults to the reward of the state being
    entered. Each increment is added on top at its cited cells. A
    cycle-indexed ``state_rewards`` of shape ``(n_t + 1, n_states)`` is
    accepted in place of a single vector.
    """
    rewards = np.asarray(state_rewards, dtype=np.float64)
    n = space.n_states
    if rewards.shape == (n,):
        base = np.broadcast_to(rewards, (n_t + 1, n, n)).copy()
    elif rewards.shape == (n_t + 1, n):
        base = np.repeat(rewards[:, None, :], n, axis=1)
    else:
        raise StructureError(
            f"state rewards have shape {rewards.shape}, expected ({n},) or ({n_t + 1}, {n})"
        )
    for inc in increments:
        j = space.index(inc.destination)
        for origin in inc.origins:
            base[:, space.index(origin), j] += inc.delta
    return RewardMatrixSequence(space, base)


def cycle_rewards_state(trace: CohortTrace, state_rewards) -> NDArray[np.float64]:
    """Per-cycle expected reward: trace row dotted with the reward vector.

    ``state_rewards`` is either one vector or a cycle-indexed
    ``(n_cycles + 1, n_states)`` array.
    """
    rewards = np.asarray(state_rewards, dtype=np.float64)
    n_rows, n = trace.values.shape
    if rewards.shape == (n,):
        return trace.values @ rewards
    if rewards.shape == (n_rows, n):
        return np.einsum("ts,ts->t", trace.values, rewards)
    raise StructureError(
        f"state rewards have shape {rewards.shape}, expected ({n},) or ({n_rows}, {n})"
    )


def cycle_rewards_transition(
    dynamics: TransitionDynamicsArray, rewards: RewardMatrixSequence
) -> NDArray[np.float64]:
    """Per-cycle expected reward from flows: total of ``A[t] * R[t]``."""
    if dynamics.space != rewards.space:
        raise StructureError("dynamics array and reward matrices use different state spaces")
    if dynamics.values.shape != rewards.values.shape:
        raise StructureError(
            f"dynamics array spans {dynamics.values.shape[0]} slices but rewards span "
            f"{rewards.values.shape[0]}"
        )
    return np.einsum("tij,tij->t", dynamics.values, rewards.values)


def total_discounted(
    cycle_rewards,
    discount,
    half_cycle: HalfCycleSpec | None = None,
) -> float:
    """Sum a per-cycle reward sequence under discounting and optional HCC.

    ``discount`` may be a :class:`DiscountSpec` or a precomputed weight
    vector. Passing ``half_cycle=None`` applies no correction.
    """
    y = np.asarray(cycle_rewards, dtype=np.float64)
    weights = discount_vector(discount) if isinstance(discount, DiscountSpec) else np.asarray(discount, dtype=np.float64)
    if weights.shape != y.shape:
        raise StructureError(
            f"reward sequence has length {y.shape} but discount weights {weights.shape}"
        )
    if half_cycle is not None:
        if half_cycle.weights.shape != y.shape:
            raise StructureError(
                f"reward sequence has length {y.shape} but half-cycle weights "
                f"{half_cycle.weights.shape}"
            )
        weights = weights * half_cycle.weights
    return float(y @ weights)

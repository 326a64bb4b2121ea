"""Tunnel-state expansion for state-residence-dependent transitions.

A compact state whose exit intensity depends on time spent in it is
expanded into a chain of tunnel states, one per residence cycle: entry
routes to tunnel 1, each tunnel either exits (inheriting the compact
recovery and death transitions) or advances to the next tunnel, and the
final tunnel self-loops under the residence-time-``T`` probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .core import CohortTrace, StateSpace, TransitionModel, validate_transition_model
from .errors import StructureError, ValidationError

_REMAINDER_SNAP = 1e-12


@dataclass(frozen=True)
class WeibullProgression:
    """Scale/shape parameters of a Weibull hazard over residence time."""

    scale: float
    shape: float

    def __post_init__(self):
        if self.scale <= 0 or self.shape <= 0:
            raise ValueError("Weibull scale and shape must be > 0")

    def probabilities(self, length: int) -> NDArray[np.float64]:
        return weibull_progression(self.scale, self.shape, length)


def weibull_progression(scale: float, shape: float, length: int) -> NDArray[np.float64]:
    """Per-residence-time progression probabilities ``scale*shape*tau**(shape-1)``.

    ``tau`` runs 1..length. Values outside [0, 1] are rejected rather than
    clamped, naming the first offending residence time.
    """
    if scale <= 0 or shape <= 0:
        raise ValueError("Weibull scale and shape must be > 0")
    if length < 1:
        raise ValueError("tunnel length must be >= 1")
    tau = np.arange(1, length + 1, dtype=np.float64)
    probs = scale * shape * tau ** (shape - 1.0)
    bad = np.flatnonzero((probs < 0) | (probs > 1))
    if bad.size:
        raise ValueError(
            f"Weibull progression probability {probs[bad[0]]!r} at residence time "
            f"{bad[0] + 1} lies outside [0, 1]"
        )
    return probs


@dataclass(frozen=True, eq=False)
class TunnelSpec:
    """How to expand one state into residence-time tunnels.

    ``exit_probabilities`` gives the per-residence-time probability of
    progressing to ``progression_state`` for tau = 1..length, conditional
    on not moving to an absorbing state that cycle; the expansion scales
    them by the compact model's per-cycle survival. Recovery and death
    transitions are inherited from the compact model's row for ``state``.
    """

    state: str
    length: int
    progression_state: str
    exit_probabilities: NDArray[np.float64]

    def __init__(
        self,
        state: str,
        length: int,
        progression_state: str,
        exit_probabilities,
    ):
        length = int(length)
        if length < 1:
            raise ValueError("tunnel length must be >= 1")
        probs = np.asarray(exit_probabilities, dtype=np.float64)
        if probs.shape != (length,):
            raise StructureError(
                f"need {length} exit probabilities, got shape {probs.shape}"
            )
        if np.any(probs < 0) or np.any(probs > 1) or not np.all(np.isfinite(probs)):
            raise ValueError("exit probabilities must lie in [0, 1]")
        probs = probs.copy()
        probs.flags.writeable = False
        object.__setattr__(self, "state", state)
        object.__setattr__(self, "length", length)
        object.__setattr__(self, "progression_state", progression_state)
        object.__setattr__(self, "exit_probabilities", probs)

    def tunnel_names(self) -> list[str]:
        return [f"{self.state}_{tau}" for tau in range(1, self.length + 1)]


def expanded_state_space(space: StateSpace, spec: TunnelSpec) -> StateSpace:
    """Compact space with the target state replaced by its tunnel chain."""
    if spec.state not in space.names:
        raise StructureError(f"tunnel target {spec.state!r} not in state space")
    if spec.progression_state not in space.names:
        raise StructureError(f"progression state {spec.progression_state!r} not in state space")
    if spec.state == spec.progression_state:
        raise StructureError("tunnel target cannot progress to itself")
    if spec.state in space.absorbing:
        raise StructureError("cannot expand an absorbing state into tunnels")
    tunnel_names = spec.tunnel_names()
    clash = set(tunnel_names) & set(space.names)
    if clash:
        raise StructureError(f"tunnel labels collide with existing states: {sorted(clash)}")
    names: list[str] = []
    for name in space.names:
        if name == spec.state:
            names.extend(tunnel_names)
        else:
            names.append(name)
    return StateSpace(names, space.absorbing)


def _expand_matrix(
    mat: NDArray[np.float64],
    space: StateSpace,
    expanded: StateSpace,
    spec: TunnelSpec,
) -> NDArray[np.float64]:
    n_new = expanded.n_states
    target = space.index(spec.state)
    dest = space.index(spec.progression_state)
    tunnel_idx = [expanded.index(name) for name in spec.tunnel_names()]
    new_index = {
        j: expanded.index(name) for j, name in enumerate(space.names) if j != target
    }
    absorbing = space.absorbing_indices

    out = np.zeros((n_new, n_new))
    # Rows of untouched states: copy, rerouting mass bound for the target
    # into the first tunnel.
    for i, name in enumerate(space.names):
        if i == target:
            continue
        row = out[expanded.index(name)]
        for j in range(space.n_states):
            if j == target:
                row[tunnel_idx[0]] += mat[i, j]
            else:
                row[new_index[j]] += mat[i, j]

    # Tunnel rows: inherit every non-target, non-progression entry from
    # the compact target row, overwrite progression with the residence-
    # time-specific probability, and send the remainder down the chain
    # (the last tunnel self-loops).
    compact_row = mat[target]
    survival = 1.0 - compact_row[absorbing].sum() if absorbing else 1.0
    inherited = [(j, compact_row[j]) for j in range(space.n_states) if j not in (target, dest)]
    for k, tau_row in enumerate(tunnel_idx):
        progression = survival * spec.exit_probabilities[k]
        row = out[tau_row]
        total = progression
        for j, p in inherited:
            row[new_index[j]] = p
            total += p
        row[new_index[dest]] = progression
        remainder = 1.0 - total
        if -_REMAINDER_SNAP < remainder < 0.0:
            remainder = 0.0
        next_idx = tunnel_idx[k + 1] if k + 1 < len(tunnel_idx) else tau_row
        row[next_idx] += remainder
    return out


def expand_tunnels(
    tm: TransitionModel, spec: TunnelSpec
) -> tuple[StateSpace, TransitionModel]:
    """Expand a transition model with tunnel states for one target state.

    Returns the expanded state space and model. Rows made invalid by the
    requested exit probabilities (e.g. exits plus inherited transitions
    exceeding 1) are reported through
    :class:`~cohortcea.errors.ValidationError`, whose violations name the
    offending tunnel row and cycle.
    """
    space = tm.space
    expanded = expanded_state_space(space, spec)
    if tm.kind == TransitionModel.CONSTANT:
        mat = _expand_matrix(tm.matrix_at(0), space, expanded, spec)
        out = TransitionModel.constant(expanded, mat, tm.horizon)
    else:
        mats = np.stack(
            [
                _expand_matrix(tm.matrix_at(t), space, expanded, spec)
                for t in range(tm.horizon)
            ]
        )
        out = TransitionModel.time_varying(expanded, mats)
    violations = validate_transition_model(out)
    if violations:
        raise ValidationError(
            f"tunnel expansion produced an invalid model; first violation: {violations[0]}",
            violations,
        )
    return expanded, out


def aggregate_trace(trace: CohortTrace, spec: TunnelSpec) -> CohortTrace:
    """Collapse tunnel columns of an expanded trace back to the compact space."""
    expanded = trace.space
    tunnel_names = spec.tunnel_names()
    missing = [n for n in tunnel_names if n not in expanded.names]
    if missing:
        raise StructureError(f"trace lacks tunnel states: {missing}")
    first = expanded.index(tunnel_names[0])
    idx = expanded.indices(tunnel_names)
    if idx != list(range(first, first + spec.length)):
        raise StructureError("tunnel states are not contiguous in the expanded space")
    compact_names = (
        list(expanded.names[:first]) + [spec.state] + list(expanded.names[first + spec.length :])
    )
    compact = StateSpace(compact_names, expanded.absorbing)
    values = np.concatenate(
        [
            trace.values[:, :first],
            trace.values[:, first : first + spec.length].sum(axis=1, keepdims=True),
            trace.values[:, first + spec.length :],
        ],
        axis=1,
    )
    return CohortTrace(compact, values)

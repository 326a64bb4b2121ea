"""Core cohort state-transition machinery.

A model is defined over an ordered set of health states. The cohort's
distribution across states is a row vector; advancing one cycle is a
right-multiplication by a row-stochastic transition matrix, which may be
constant or cycle-indexed. Stacking the per-cycle distributions gives the
cohort trace; replacing the vector-matrix product with ``diag(m) @ P``
yields per-cycle origin/destination flows used for transition rewards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import NumericError, StructureError, ValidationError

DEFAULT_ROW_SUM_TOL = 1e-12
TRACE_TOL = 1e-10


def _as_float_array(values, name: str) -> NDArray[np.float64]:
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class StateSpace:
    """Ordered health-state labels with absorbing-state flags.

    Parameters
    ----------
    names : sequence of str
        Unique, nonempty state labels; their order fixes all matrix
        dimensions and indices.
    absorbing : iterable of str, optional
        Labels of absorbing states. Must be a subset of ``names``.
    """

    names: tuple[str, ...]
    absorbing: frozenset[str] = field(default_factory=frozenset)

    def __init__(self, names: Sequence[str], absorbing: Iterable[str] = ()):
        names = tuple(names)
        absorbing = frozenset(absorbing)
        if len(names) < 2:
            raise StructureError("a state space needs at least two states")
        if len(set(names)) != len(names):
            raise StructureError("state labels must be unique")
        if any(not n for n in names):
            raise StructureError("state labels must be nonempty")
        unknown = absorbing - set(names)
        if unknown:
            raise StructureError(f"absorbing labels not in state space: {sorted(unknown)}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "absorbing", absorbing)

    @property
    def n_states(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise StructureError(f"unknown state {name!r}") from None

    def indices(self, names: Iterable[str]) -> list[int]:
        return [self.index(n) for n in names]

    @property
    def absorbing_indices(self) -> list[int]:
        return [i for i, n in enumerate(self.names) if n in self.absorbing]


@dataclass(frozen=True, eq=False)
class StateVector:
    """Occupancy fractions across the states of a :class:`StateSpace`."""

    space: StateSpace
    values: NDArray[np.float64]

    def __init__(self, space: StateSpace, values):
        arr = _as_float_array(values, "state vector")
        if arr.shape != (space.n_states,):
            raise StructureError(
                f"state vector has shape {arr.shape}, expected ({space.n_states},)"
            )
        if np.any(arr < 0) or np.any(arr > 1):
            raise ValueError("state vector entries must lie in [0, 1]")
        if abs(arr.sum() - 1.0) > DEFAULT_ROW_SUM_TOL:
            raise ValueError(f"state vector entries sum to {arr.sum()!r}, not 1")
        arr.flags.writeable = False
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_mapping(cls, space: StateSpace, occupancy: dict) -> "StateVector":
        vec = np.zeros(space.n_states)
        for name, value in occupancy.items():
            vec[space.index(name)] = value
        return cls(space, vec)


@dataclass(frozen=True)
class Violation:
    """One probability violation found by transition-model validation.

    ``column`` is ``None`` for row-sum violations; ``kind`` is one of
    ``"range"``, ``"row-sum"``, or ``"absorbing-row"``.
    """

    kind: str
    cycle: int
    row: str
    column: str | None
    value: float

    def __str__(self) -> str:
        where = f"cycle {self.cycle}, row {self.row!r}"
        if self.kind == "range":
            return f"entry out of [0, 1] at {where}, column {self.column!r}: {self.value!r}"
        if self.kind == "row-sum":
            return f"row sum at {where} is {self.value!r}, not 1"
        return f"absorbing state row at {where} is not a unit row (diagonal {self.value!r})"


class TransitionModel:
    """A constant or cycle-indexed sequence of transition matrices.

    Use :meth:`constant` or :meth:`time_varying` to construct. The model
    spans ``horizon`` cycles; a time-varying model holds exactly
    ``horizon`` matrices, the matrix at index ``t`` moving the cohort
    from cycle ``t`` to cycle ``t + 1``.
    """

    CONSTANT = "constant"
    TIME_VARYING = "time-varying"

    def __init__(self, space: StateSpace, matrices, horizon: int, kind: str):
        if kind not in (self.CONSTANT, self.TIME_VARYING):
            raise ValueError(f"unknown transition model kind {kind!r}")
        if horizon < 1:
            raise StructureError("horizon must be a positive number of cycles")
        n = space.n_states
        arr = _as_float_array(matrices, "transition matrices")
        if kind == self.CONSTANT:
            if arr.shape != (n, n):
                raise StructureError(
                    f"constant model needs one {n}x{n} matrix, got shape {arr.shape}"
                )
        else:
            if arr.shape != (horizon, n, n):
                raise StructureError(
                    f"time-varying model needs {horizon} matrices of {n}x{n}, "
                    f"got shape {arr.shape}"
                )
        arr.flags.writeable = False
        self.space = space
        self.horizon = int(horizon)
        self.kind = kind
        self._matrices = arr

    @classmethod
    def constant(cls, space: StateSpace, matrix, horizon: int) -> "TransitionModel":
        return cls(space, matrix, horizon, cls.CONSTANT)

    @classmethod
    def time_varying(cls, space: StateSpace, matrices) -> "TransitionModel":
        arr = np.asarray(matrices, dtype=np.float64)
        if arr.ndim != 3:
            raise StructureError("time-varying model expects a stack of matrices")
        return cls(space, arr, arr.shape[0], cls.TIME_VARYING)

    def matrix_at(self, t: int) -> NDArray[np.float64]:
        """Transition matrix applied between cycles ``t`` and ``t + 1``."""
        if not 0 <= t < self.horizon:
            raise StructureError(f"cycle {t} outside horizon 0..{self.horizon - 1}")
        if self.kind == self.CONSTANT:
            return self._matrices
        return self._matrices[t]

    def stack(self) -> NDArray[np.float64]:
        """All ``horizon`` matrices as one ``(horizon, n, n)`` array."""
        if self.kind == self.CONSTANT:
            return np.broadcast_to(
                self._matrices, (self.horizon, *self._matrices.shape)
            )
        return self._matrices

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TransitionModel)
            and self.space == other.space
            and self.horizon == other.horizon
            and np.array_equal(self.stack(), other.stack())
        )


def validate_transition_model(
    tm: TransitionModel, tol: float = DEFAULT_ROW_SUM_TOL
) -> list[Violation]:
    """Check entry ranges, row sums, and absorbing rows of a model.

    Returns an empty list iff every entry lies in ``[0, 1]``, every row of
    every cycle's matrix sums to 1 within ``tol``, and each absorbing
    state's row is a unit row (1 on the diagonal).
    """
    names = tm.space.names
    violations: list[Violation] = []
    cycles = [0] if tm.kind == TransitionModel.CONSTANT else range(tm.horizon)
    for t in cycles:
        mat = tm.matrix_at(t)
        bad = np.argwhere((mat < 0) | (mat > 1))
        for i, j in bad:
            violations.append(Violation("range", t, names[i], names[j], float(mat[i, j])))
        sums = mat.sum(axis=1)
        for i in np.flatnonzero(np.abs(sums - 1.0) > tol):
            violations.append(Violation("row-sum", t, names[i], None, float(sums[i])))
        for i in tm.space.absorbing_indices:
            if abs(mat[i, i] - 1.0) > tol:
                violations.append(
                    Violation("absorbing-row", t, names[i], names[i], float(mat[i, i]))
                )
    return violations


@dataclass(frozen=True, eq=False)
class CohortTrace:
    """Occupancy matrix: row ``t`` is the cohort distribution at cycle ``t``."""

    space: StateSpace
    values: NDArray[np.float64]

    def __init__(self, space: StateSpace, values):
        arr = _as_float_array(values, "cohort trace")
        if arr.ndim != 2 or arr.shape[1] != space.n_states:
            raise StructureError(
                f"trace has shape {arr.shape}, expected (n_cycles + 1, {space.n_states})"
            )
        sums = arr.sum(axis=1)
        off = np.flatnonzero(np.abs(sums - 1.0) > TRACE_TOL)
        if off.size:
            raise ValueError(
                f"trace row {off[0]} sums to {sums[off[0]]!r}, not 1 within {TRACE_TOL}"
            )
        for i in space.absorbing_indices:
            if np.any(np.diff(arr[:, i]) < -TRACE_TOL):
                raise ValueError(
                    f"occupancy of absorbing state {space.names[i]!r} decreases over time"
                )
        arr.flags.writeable = False
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "values", arr)

    @property
    def n_cycles(self) -> int:
        """Number of transitions simulated (rows minus one)."""
        return self.values.shape[0] - 1

    def row(self, t: int) -> NDArray[np.float64]:
        return self.values[t]

    def column(self, state: str) -> NDArray[np.float64]:
        return self.values[:, self.space.index(state)]


def simulate_cohort(
    init: StateVector,
    tm: TransitionModel,
    tol: float = DEFAULT_ROW_SUM_TOL,
) -> CohortTrace:
    """Iterate ``m[t + 1] = m[t] @ P[t]`` over the model's horizon.

    The model is validated first and rejected with
    :class:`~cohortcea.errors.ValidationError` if any probability
    violation is found (fail-closed). Non-finite products raise
    :class:`~cohortcea.errors.NumericError` with the offending cycle.
    """
    if init.space != tm.space:
        raise StructureError("initial vector and transition model use different state spaces")
    violations = validate_transition_model(tm, tol=tol)
    if violations:
        raise ValidationError(
            f"transition model failed validation with {len(violations)} violation(s); "
            f"first: {violations[0]}",
            violations,
        )
    n_t = tm.horizon
    trace = np.empty((n_t + 1, tm.space.n_states))
    trace[0] = init.values
    for t in range(n_t):
        trace[t + 1] = trace[t] @ tm.matrix_at(t)
        if not np.all(np.isfinite(trace[t + 1])):
            raise NumericError("non-finite state vector produced", cycle=t + 1)
    return CohortTrace(tm.space, trace)


@dataclass(frozen=True, eq=False)
class TransitionDynamicsArray:
    """Per-cycle origin/destination flows.

    Slice 0 carries the initial distribution on its diagonal; slice ``t``
    (``t >= 1``) equals ``diag(m[t - 1]) @ P[t - 1]``, so its row sums
    reproduce the cycle ``t - 1`` state vector and its column sums the
    cycle ``t`` one.
    """

    space: StateSpace
    values: NDArray[np.float64]

    def __init__(self, space: StateSpace, values):
        arr = _as_float_array(values, "transition dynamics array")
        n = space.n_states
        if arr.ndim != 3 or arr.shape[1:] != (n, n):
            raise StructureError(
                f"dynamics array has shape {arr.shape}, expected (n_cycles + 1, {n}, {n})"
            )
        if np.any(arr < -TRACE_TOL):
            raise ValueError("dynamics array entries must be nonnegative")
        slice_sums = arr.sum(axis=(1, 2))
        off = np.flatnonzero(np.abs(slice_sums - 1.0) > TRACE_TOL)
        if off.size:
            raise ValueError(
                f"dynamics slice {off[0]} sums to {slice_sums[off[0]]!r}, not 1"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "values", arr)

    @property
    def n_cycles(self) -> int:
        return self.values.shape[0] - 1

    def slice(self, t: int) -> NDArray[np.float64]:
        return self.values[t]

    def flow_consistency_errors(self, trace: CohortTrace, tol: float = TRACE_TOL) -> list[str]:
        """Cycles where row/column sums disagree with the trace beyond ``tol``."""
        problems = []
        for t in range(1, self.values.shape[0]):
            if np.max(np.abs(self.values[t].sum(axis=1) - trace.values[t - 1])) > tol:
                problems.append(f"row sums of slice {t} do not equal trace row {t - 1}")
            if np.max(np.abs(self.values[t].sum(axis=0) - trace.values[t])) > tol:
                problems.append(f"column sums of slice {t} do not equal trace row {t}")
        return problems


def transition_dynamics(trace: CohortTrace, tm: TransitionModel) -> TransitionDynamicsArray:
    """Expand a trace into per-cycle origin/destination flow matrices."""
    if trace.space != tm.space:
        raise StructureError("trace and transition model use different state spaces")
    if trace.n_cycles != tm.horizon:
        raise StructureError(
            f"trace spans {trace.n_cycles} cycles but model horizon is {tm.horizon}"
        )
    n = tm.space.n_states
    out = np.zeros((tm.horizon + 1, n, n))
    out[0] = np.diag(trace.values[0])
    for t in range(tm.horizon):
        out[t + 1] = trace.values[t][:, None] * tm.matrix_at(t)
    return TransitionDynamicsArray(tm.space, out)

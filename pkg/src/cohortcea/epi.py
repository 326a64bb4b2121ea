"""Epidemiological summaries derived from a cohort trace."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.typing import NDArray

from .core import CohortTrace
from .errors import StructureError

_ZERO_DENOMINATOR = 1e-15


@dataclass(frozen=True, eq=False)
class EpiSeries:
    """A per-cycle outcome series.

    ``values`` holds one entry per cycle 0..n_t; cycles where the series
    is undefined (zero denominator) are flagged missing rather than
    propagated as NaN arithmetic. ``valid_from`` is the first cycle with
    a defined value, or ``None`` if none is.
    """

    label: str
    values: NDArray[np.float64]
    missing: NDArray[np.bool_]

    def __init__(self, label: str, values, missing=None):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1:
            raise StructureError("series values must be one-dimensional")
        if missing is None:
            miss = ~np.isfinite(arr)
        else:
            miss = np.asarray(missing, dtype=bool)
            if miss.shape != arr.shape:
                raise StructureError("missing mask must match the series length")
        arr = arr.copy()
        arr[miss] = np.nan
        arr.flags.writeable = False
        miss = miss.copy()
        miss.flags.writeable = False
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "missing", miss)

    @property
    def valid_from(self) -> int | None:
        defined = np.flatnonzero(~self.missing)
        return int(defined[0]) if defined.size else None

    def defined(self) -> NDArray[np.float64]:
        return self.values[~self.missing]

    def __len__(self) -> int:
        return self.values.size


def _state_indices(trace: CohortTrace, states: Iterable[str]) -> list[int]:
    return trace.space.indices(states)


def survival(trace: CohortTrace, death_states: Iterable[str]) -> EpiSeries:
    """Probability of remaining alive by cycle: 1 minus death occupancy."""
    idx = _state_indices(trace, death_states)
    values = 1.0 - trace.values[:, idx].sum(axis=1)
    return EpiSeries("survival", values)


def prevalence(
    trace: CohortTrace,
    states: Iterable[str],
    death_states: Iterable[str],
) -> EpiSeries:
    """Occupancy of ``states`` among those alive at each cycle.

    Cycles with zero survival are flagged missing instead of raising.
    """
    states = list(states)
    death_states = list(death_states)
    overlap = set(states) & set(death_states)
    if overlap:
        raise StructureError(f"states overlap death states: {sorted(overlap)}")
    num = trace.values[:, _state_indices(trace, states)].sum(axis=1)
    alive = 1.0 - trace.values[:, _state_indices(trace, death_states)].sum(axis=1)
    missing = alive <= _ZERO_DENOMINATOR
    values = np.divide(num, alive, out=np.full_like(num, np.nan), where=~missing)
    return EpiSeries("prevalence(" + "+".join(states) + ")", values, missing)


def proportion_among(
    trace: CohortTrace,
    numerator_states: Iterable[str],
    denominator_states: Iterable[str],
) -> EpiSeries:
    """Share of ``numerator_states`` among ``denominator_states`` per cycle.

    The numerator must be a subset of the denominator; cycles with an
    empty denominator are flagged missing (the series typically does not
    start at cycle 0).
    """
    numerator_states = list(numerator_states)
    denominator_states = list(denominator_states)
    extra = set(numerator_states) - set(denominator_states)
    if extra:
        raise StructureError(f"numerator states not in denominator: {sorted(extra)}")
    num = trace.values[:, _state_indices(trace, numerator_states)].sum(axis=1)
    den = trace.values[:, _state_indices(trace, denominator_states)].sum(axis=1)
    missing = den <= _ZERO_DENOMINATOR
    values = np.divide(num, den, out=np.full_like(num, np.nan), where=~missing)
    label = "+".join(numerator_states) + " among " + "+".join(denominator_states)
    return EpiSeries(label, values, missing)


def life_expectancy(surv: EpiSeries) -> float:
    """Sum of the survival curve over all cycles, in cycle units."""
    if np.any(surv.missing):
        raise ValueError("survival series has missing values")
    return float(surv.values.sum())

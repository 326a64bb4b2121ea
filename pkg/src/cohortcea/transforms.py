"""Probability/rate conversions, ratio adjustments, and life tables.

Per-cycle probabilities and constant hazard rates are interchangeable
under the exponential assumption: ``r = -ln(1 - p)`` and
``p = 1 - exp(-r)``. Hazard ratios act multiplicatively on rates (never
directly on probabilities); odds ratios act additively on the log-odds
scale.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import LifeTableError


def _check_probability(p, upper_open: bool = True, lower_open: bool = False) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    lo_bad = np.any(arr <= 0) if lower_open else np.any(arr < 0)
    hi_bad = np.any(arr >= 1) if upper_open else np.any(arr > 1)
    if lo_bad or hi_bad or not np.all(np.isfinite(arr)):
        lo = "(0" if lower_open else "[0"
        hi = "1)" if upper_open else "1]"
        raise ValueError(f"probability must lie in {lo}, {hi}, got {p!r}")
    return arr


def _scalar_like(result: np.ndarray, template) -> float | NDArray[np.float64]:
    if np.isscalar(template) or getattr(template, "ndim", 1) == 0:
        return float(result)
    return result


def prob_to_rate(p):
    """Convert a per-cycle probability to a constant hazard rate.

    Accepts scalars or arrays; requires ``0 <= p < 1``.
    """
    arr = _check_probability(p)
    return _scalar_like(-np.log1p(-arr), p)


def rate_to_prob(r):
    """Convert a constant hazard rate to a per-cycle probability.

    Accepts scalars or arrays; requires ``r >= 0``. The result lies in
    ``[0, 1)`` and saturates toward 1 for large rates.
    """
    arr = np.asarray(r, dtype=np.float64)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"rate must be finite and >= 0, got {r!r}")
    return _scalar_like(-np.expm1(-arr), r)


def apply_hazard_ratio(p, hr):
    """Scale a probability by a hazard ratio on the rate scale.

    Computes ``1 - (1 - p) ** hr``, i.e. the probability whose underlying
    constant hazard is ``hr`` times that of ``p``.
    """
    arr = _check_probability(p)
    hr_arr = np.asarray(hr, dtype=np.float64)
    if np.any(hr_arr <= 0) or not np.all(np.isfinite(hr_arr)):
        raise ValueError(f"hazard ratio must be finite and > 0, got {hr!r}")
    out = -np.expm1(hr_arr * np.log1p(-arr))
    return _scalar_like(out, p)


def apply_odds_ratio(p, odds_ratio):
    """Scale a probability by an odds ratio on the log-odds scale.

    Computes ``logit^-1(logit(p) + ln(odds_ratio))``; requires
    ``0 < p < 1`` since the logit is undefined at the endpoints.
    """
    arr = _check_probability(p, lower_open=True)
    or_arr = np.asarray(odds_ratio, dtype=np.float64)
    if np.any(or_arr <= 0) or not np.all(np.isfinite(or_arr)):
        raise ValueError(f"odds ratio must be finite and > 0, got {odds_ratio!r}")
    odds = arr / (1.0 - arr) * or_arr
    return _scalar_like(odds / (1.0 + odds), p)


@dataclass(frozen=True, eq=False)
class LifeTable:
    """All-cause mortality hazard rates by single year of age.

    Ages are contiguous from ``start_age``; ``rates`` holds one
    nonnegative hazard per age, in per-year units.
    """

    start_age: int
    rates: NDArray[np.float64]

    def __init__(self, start_age: int, rates):
        arr = np.asarray(rates, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise LifeTableError("life table needs a one-dimensional, nonempty rate vector")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise LifeTableError("life-table rates must be finite and >= 0")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "start_age", int(start_age))
        object.__setattr__(self, "rates", arr)

    @property
    def end_age(self) -> int:
        """Last covered age, inclusive."""
        return self.start_age + self.rates.size - 1

    def rate_at(self, age: int) -> float:
        if not self.start_age <= age <= self.end_age:
            raise LifeTableError(
                f"age {age} not covered by life table ({self.start_age}..{self.end_age})"
            )
        return float(self.rates[age - self.start_age])

    def hazards(self, start_age: int, n: int) -> NDArray[np.float64]:
        """Hazard rates for ages ``start_age .. start_age + n - 1``."""
        if n < 1:
            raise LifeTableError("need at least one age")
        for bound in (start_age, start_age + n - 1):
            if not self.start_age <= bound <= self.end_age:
                raise LifeTableError(
                    f"age {bound} not covered by life table "
                    f"({self.start_age}..{self.end_age})"
                )
        lo = start_age - self.start_age
        return self.rates[lo : lo + n]

    @classmethod
    def from_mapping(cls, entries: dict) -> "LifeTable":
        ages = sorted(entries)
        if ages != list(range(ages[0], ages[-1] + 1)):
            raise LifeTableError("life-table ages must be contiguous")
        return cls(ages[0], [entries[a] for a in ages])

    @classmethod
    def from_csv(cls, path, kind: str = "hazard") -> "LifeTable":
        """Read a two-column delimited file with a header row.

        Column one is integer age, column two the annual mortality value.
        ``kind`` selects how the value column is interpreted: ``hazard``
        (the canonical content) or ``probability`` (converted through
        ``prob_to_rate``).
        """
        if kind not in ("hazard", "probability"):
            raise LifeTableError(f"unknown life-table kind {kind!r}")
        path = Path(path)
        entries: dict[int, float] = {}
        try:
            with path.open(newline="") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if header is None or len(header) < 2:
                    raise LifeTableError(f"{path}: expected a header row with two columns")
                try:
                    float(header[1])
                except ValueError:
                    pass
                else:
                    raise LifeTableError(f"{path}: header row is required")
                for lineno, rec in enumerate(reader, start=2):
                    if not rec or (len(rec) == 1 and not rec[0].strip()):
                        continue
                    try:
                        age = int(rec[0])
                        value = float(rec[1])
                    except (ValueError, IndexError):
                        raise LifeTableError(
                            f"{path}:{lineno}: cannot parse row {rec!r}"
                        ) from None
                    if age in entries:
                        raise LifeTableError(f"{path}:{lineno}: duplicate age {age}")
                    entries[age] = value
        except OSError as exc:
            raise LifeTableError(f"cannot read life table {path}: {exc}") from exc
        if not entries:
            raise LifeTableError(f"{path}: no data rows")
        if kind == "probability":
            entries = {a: float(prob_to_rate(v)) for a, v in entries.items()}
        return cls.from_mapping(entries)


def mortality_vector(lt: LifeTable, start_age: int, n_t: int) -> NDArray[np.float64]:
    """Per-cycle death probabilities for a cohort aging from ``start_age``.

    Element ``t`` is ``1 - exp(-mu(start_age + t))`` for
    ``t = 0 .. n_t - 1``; the table must cover all those ages.
    """
    return rate_to_prob(lt.hazards(start_age, n_t))

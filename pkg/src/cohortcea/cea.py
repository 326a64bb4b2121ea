"""Incremental cost-effectiveness analysis over strategy totals.

Strategies are compared on total discounted cost and effect. Strongly
dominated strategies (at least as costly and no more effective than some
alternative) are removed first; extended dominance then iteratively
removes strategies whose ICER exceeds that of a more effective
alternative. ICERs are computed between adjacent strategies along the
remaining frontier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

NOT_DOMINATED = "ND"
DOMINATED = "D"
EXTENDED_DOMINATED = "ED"


@dataclass(frozen=True)
class StrategyOutcome:
    """Total discounted cost and effect for one strategy."""

    label: str
    cost: float
    effect: float

    def __post_init__(self):
        for value in (self.cost, self.effect):
            if value != value or value in (float("inf"), float("-inf")):
                raise ValueError(f"{self.label}: cost and effect must be finite")


@dataclass(frozen=True)
class CeaRow:
    """One strategy's line in a cost-effectiveness table.

    Incremental values and the ICER are relative to the previous
    strategy on the frontier and absent (``None``) for dominated
    strategies and for the least-cost frontier strategy.
    """

    label: str
    cost: float
    effect: float
    inc_cost: float | None
    inc_effect: float | None
    icer: float | None
    status: str


@dataclass(frozen=True)
class CeaTable:
    rows: tuple[CeaRow, ...]

    @property
    def frontier(self) -> tuple[CeaRow, ...]:
        return tuple(r for r in self.rows if r.status == NOT_DOMINATED)

    def row(self, label: str) -> CeaRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)


def _strongly_dominated(s: StrategyOutcome, others: Sequence[StrategyOutcome]) -> bool:
    for o in others:
        if o.cost <= s.cost and o.effect >= s.effect:
            if o.cost < s.cost or o.effect > s.effect:
                return True
            # Exact cost-and-effect tie: keep the first by label order.
            if o.label < s.label:
                return True
    return False


def calculate_icers(outcomes: Sequence[StrategyOutcome]) -> CeaTable:
    """Build the cost-effectiveness table for a set of strategies.

    Frontier strategies appear first, sorted by ascending cost, with
    incremental cost, incremental effect, and ICER against the previous
    frontier strategy; dominated strategies follow in input order with
    their status. Equal ICERs along the frontier are permitted (collinear
    strategies are not extendedly dominated).
    """
    if not outcomes:
        raise ValueError("at least one strategy is required")
    labels = [s.label for s in outcomes]
    if len(set(labels)) != len(labels):
        raise ValueError("strategy labels must be unique")

    status: dict[str, str] = {}
    for s in outcomes:
        others = [o for o in outcomes if o.label != s.label]
        status[s.label] = DOMINATED if _strongly_dominated(s, others) else NOT_DOMINATED

    frontier = sorted(
        (s for s in outcomes if status[s.label] == NOT_DOMINATED),
        key=lambda s: (s.cost, s.effect),
    )

    def icers(chain: list[StrategyOutcome]) -> list[float]:
        return [
            (b.cost - a.cost) / (b.effect - a.effect)
            for a, b in zip(chain, chain[1:])
        ]

    # Extended dominance: drop any strategy whose ICER strictly exceeds
    # that of the next, more effective one; re-check until stable.
    while len(frontier) >= 3:
        ratios = icers(frontier)
        for k in range(len(ratios) - 1):
            if ratios[k] > ratios[k + 1]:
                status[frontier[k + 1].label] = EXTENDED_DOMINATED
                del frontier[k + 1]
                break
        else:
            break

    rows: list[CeaRow] = []
    for pos, s in enumerate(frontier):
        if pos == 0:
            rows.append(CeaRow(s.label, s.cost, s.effect, None, None, None, NOT_DOMINATED))
        else:
            prev = frontier[pos - 1]
            d_cost = s.cost - prev.cost
            d_eff = s.effect - prev.effect
            rows.append(
                CeaRow(s.label, s.cost, s.effect, d_cost, d_eff, d_cost / d_eff, NOT_DOMINATED)
            )
    for s in outcomes:
        if status[s.label] != NOT_DOMINATED:
            rows.append(
                CeaRow(s.label, s.cost, s.effect, None, None, None, status[s.label])
            )
    return CeaTable(tuple(rows))


def net_monetary_benefit(outcome: StrategyOutcome, wtp: float) -> float:
    """Effect valued at willingness-to-pay minus cost."""
    if wtp < 0:
        raise ValueError(f"willingness-to-pay must be >= 0, got {wtp!r}")
    return outcome.effect * wtp - outcome.cost

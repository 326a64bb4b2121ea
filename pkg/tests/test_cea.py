"""Dominance, ICERs, frontier structure, and net monetary benefit."""

import itertools

import numpy as np
import pytest

from cohortcea.cea import (
    DOMINATED,
    EXTENDED_DOMINATED,
    NOT_DOMINATED,
    StrategyOutcome,
    calculate_icers,
    net_monetary_benefit,
)


def oracle_frontier_labels(outcomes):
    """Independent frontier: weak-dominance filter plus threshold scan.

    A strategy is on the frontier iff it survives pairwise weak dominance
    and maximizes net benefit for some willingness-to-pay; scanning the
    midpoints between all pairwise slopes (plus the extremes) finds every
    positive-length optimality interval by enumeration.
    """
    survivors = []
    for s in outcomes:
        beaten = any(
            o.cost <= s.cost
            and o.effect >= s.effect
            and (o.cost < s.cost or o.effect > s.effect or o.label < s.label)
            for o in outcomes
            if o.label != s.label
        )
        if not beaten:
            survivors.append(s)
    slopes = []
    for a, b in itertools.combinations(survivors, 2):
        if a.effect != b.effect:
            slope = (b.cost - a.cost) / (b.effect - a.effect)
            if slope > 0:
                slopes.append(slope)
    points = sorted(set(slopes))
    candidates = [0.0]
    for lo, hi in zip(points, points[1:]):
        candidates.append((lo + hi) / 2)
    if points:
        candidates.extend([points[0] / 2, points[-1] * 2, points[-1] + 1.0])
    frontier = set()
    for wtp in candidates:
        nmb = [s.effect * wtp - s.cost for s in survivors]
        best = max(nmb)
        for s, value in zip(survivors, nmb):
            if value == best:
                frontier.add(s.label)
    return frontier


class TestCalculateIcers:
    def test_single_strategy(self):
        table = calculate_icers([StrategyOutcome("only", 100.0, 1.0)])
        row = table.rows[0]
        assert row.status == NOT_DOMINATED
        assert row.inc_cost is None and row.inc_effect is None and row.icer is None

    def test_collinear_strategies_all_kept(self):
        outcomes = [
            StrategyOutcome("a", 0.0, 0.0),
            StrategyOutcome("b", 10.0, 1.0),
            StrategyOutcome("c", 20.0, 2.0),
        ]
        table = calculate_icers(outcomes)
        assert [r.status for r in table.rows] == [NOT_DOMINATED] * 3
        assert table.rows[1].icer == pytest.approx(10.0)
        assert table.rows[2].icer == pytest.approx(10.0)

    def test_strong_dominance(self):
        outcomes = [
            StrategyOutcome("cheap", 0.0, 1.0),
            StrategyOutcome("worse", 10.0, 0.5),
        ]
        table = calculate_icers(outcomes)
        assert table.row("worse").status == DOMINATED

    def test_extended_dominance(self):
        # middle strategy's ICER (20) exceeds the next one's (6.67)
        outcomes = [
            StrategyOutcome("low", 0.0, 0.0),
            StrategyOutcome("mid", 20.0, 1.0),
            StrategyOutcome("high", 40.0, 4.0),
        ]
        table = calculate_icers(outcomes)
        assert table.row("mid").status == EXTENDED_DOMINATED
        assert table.row("high").icer == pytest.approx(10.0)

    def test_extended_dominance_iterates_to_fixed_point(self):
        outcomes = [
            StrategyOutcome("a", 0.0, 0.0),
            StrategyOutcome("b", 10.0, 1.0),   # ICER 10
            StrategyOutcome("c", 30.0, 1.5),   # ICER 40 -> ED once d arrives
            StrategyOutcome("d", 40.0, 3.0),
        ]
        table = calculate_icers(outcomes)
        assert table.row("c").status == EXTENDED_DOMINATED
        assert {r.label for r in table.frontier} == {"a", "b", "d"}

    def test_exact_ties_keep_first_label(self):
        outcomes = [
            StrategyOutcome("zeta", 10.0, 1.0),
            StrategyOutcome("alpha", 10.0, 1.0),
        ]
        table = calculate_icers(outcomes)
        assert table.row("alpha").status == NOT_DOMINATED
        assert table.row("zeta").status == DOMINATED

    def test_frontier_sorted_with_dominated_appended(self):
        outcomes = [
            StrategyOutcome("exp", 50.0, 5.0),
            StrategyOutcome("bad", 60.0, 1.0),
            StrategyOutcome("base", 0.0, 0.0),
        ]
        table = calculate_icers(outcomes)
        assert [r.label for r in table.rows] == ["base", "exp", "bad"]

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            calculate_icers([])

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            calculate_icers(
                [StrategyOutcome("x", 0.0, 0.0), StrategyOutcome("x", 1.0, 1.0)]
            )


class TestFrontierProperties:
    def test_icers_increase_along_frontier(self, rng=np.random.default_rng(7)):
        for _ in range(200):
            n = rng.integers(2, 7)
            outcomes = [
                StrategyOutcome(f"s{k}", float(rng.uniform(0, 1e5)), float(rng.uniform(0, 10)))
                for k in range(n)
            ]
            frontier = calculate_icers(outcomes).frontier
            icers = [r.icer for r in frontier if r.icer is not None]
            assert all(a <= b + 1e-9 for a, b in zip(icers, icers[1:]))
            effects = [r.effect for r in frontier]
            assert all(a < b for a, b in zip(effects, effects[1:]))

    def test_matches_enumeration_oracle_on_random_instances(self):
        rng = np.random.default_rng(20240101)
        for _ in range(1000):
            n = int(rng.integers(1, 7))
            outcomes = [
                StrategyOutcome(
                    f"s{k}", float(rng.uniform(0, 1e5)), float(rng.uniform(0, 10))
                )
                for k in range(n)
            ]
            ours = {r.label for r in calculate_icers(outcomes).frontier}
            assert ours == oracle_frontier_labels(outcomes)

    def test_status_invariant_to_cost_scale(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(2, 7))
            outcomes = [
                StrategyOutcome(f"s{k}", float(rng.uniform(1, 1e4)), float(rng.uniform(0, 5)))
                for k in range(n)
            ]
            statuses = {r.label: r.status for r in calculate_icers(outcomes).rows}
            scaled = [
                StrategyOutcome(s.label, s.cost * 37.5, s.effect) for s in outcomes
            ]
            scaled_statuses = {r.label: r.status for r in calculate_icers(scaled).rows}
            assert statuses == scaled_statuses

    def test_indifference_at_frontier_icer(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            n = int(rng.integers(2, 7))
            outcomes = [
                StrategyOutcome(f"s{k}", float(rng.uniform(0, 1e5)), float(rng.uniform(0, 10)))
                for k in range(n)
            ]
            frontier = calculate_icers(outcomes).frontier
            for prev, here in zip(frontier, frontier[1:]):
                wtp = here.icer
                nmb_prev = net_monetary_benefit(
                    StrategyOutcome(prev.label, prev.cost, prev.effect), wtp
                )
                nmb_here = net_monetary_benefit(
                    StrategyOutcome(here.label, here.cost, here.effect), wtp
                )
                scale = max(abs(nmb_prev), abs(nmb_here), 1.0)
                assert abs(nmb_prev - nmb_here) / scale < 1e-6


class TestNetMonetaryBenefit:
    def test_zero_everything(self):
        assert net_monetary_benefit(StrategyOutcome("z", 0.0, 0.0), 75_000) == 0.0

    def test_fixture_arithmetic(self):
        outcome = StrategyOutcome("SoC", 115_275.0, 19.468)
        assert net_monetary_benefit(outcome, 100_000) == pytest.approx(1_831_525.0)

    def test_zero_wtp_is_negative_cost(self):
        outcome = StrategyOutcome("s", 1234.0, 5.0)
        assert net_monetary_benefit(outcome, 0.0) == -1234.0

    def test_negative_wtp_rejected(self):
        with pytest.raises(ValueError):
            net_monetary_benefit(StrategyOutcome("s", 0.0, 0.0), -1.0)

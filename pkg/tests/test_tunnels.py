"""Tunnel expansion and aggregation back to the compact state space."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohortcea.core import StateSpace, StateVector, TransitionModel, simulate_cohort
from cohortcea.errors import StructureError, ValidationError
from cohortcea.tunnels import (
    TunnelSpec,
    WeibullProgression,
    aggregate_trace,
    expand_tunnels,
    expanded_state_space,
    weibull_progression,
)


def conditioned_sick_sicker_matrix(p_death=0.004, p_sicken=0.15, p_recover=0.5, p_progress=0.105):
    """A compact model in the survival-conditioned form used by the example."""
    death_sick = 1 - (1 - p_death) ** 3
    death_sicker = 1 - (1 - p_death) ** 10
    return np.array(
        [
            [(1 - p_death) * (1 - p_sicken), (1 - p_death) * p_sicken, 0, p_death],
            [
                (1 - death_sick) * p_recover,
                (1 - death_sick) * (1 - p_recover - p_progress),
                (1 - death_sick) * p_progress,
                death_sick,
            ],
            [0, 0, 1 - death_sicker, death_sicker],
            [0, 0, 0, 1],
        ]
    )


@pytest.fixture
def compact_model(sick_sicker_space):
    return TransitionModel.constant(sick_sicker_space, conditioned_sick_sicker_matrix(), 20)


class TestWeibullProgression:
    def test_first_residence_cycle(self):
        probs = weibull_progression(0.08, 1.1, 75)
        assert probs[0] == pytest.approx(0.08 * 1.1, abs=1e-15)

    def test_unit_shape_is_constant(self):
        probs = weibull_progression(0.07, 1.0, 40)
        assert np.all(probs == probs[0])
        assert probs[0] == pytest.approx(0.07, abs=1e-15)

    def test_last_residence_cycle_value(self):
        probs = weibull_progression(0.08, 1.1, 75)
        assert probs[74] == pytest.approx(0.08 * 1.1 * 75**0.1, rel=1e-14)

    def test_rejects_out_of_range_values(self):
        # 0.08 * 1.5 * sqrt(tau) first exceeds 1 at tau = 70
        with pytest.raises(ValueError, match="residence time 70"):
            weibull_progression(0.08, 1.5, 200)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            weibull_progression(-0.1, 1.0, 5)
        with pytest.raises(ValueError):
            WeibullProgression(0.1, 0.0)

    def test_dataclass_matches_function(self):
        assert np.array_equal(
            WeibullProgression(0.05, 1.3).probabilities(10), weibull_progression(0.05, 1.3, 10)
        )


class TestExpandedSpace:
    def test_sick_sicker_expansion_size(self, sick_sicker_space):
        spec = TunnelSpec("S1", 75, "S2", weibull_progression(0.08, 1.1, 75))
        expanded = expanded_state_space(sick_sicker_space, spec)
        assert expanded.n_states == 78
        assert expanded.names[1] == "S1_1"
        assert expanded.names[75] == "S1_75"
        assert expanded.names[-2:] == ("S2", "D")
        assert expanded.absorbing == frozenset({"D"})

    def test_label_collision_rejected(self):
        space = StateSpace(["A", "A_1", "B"])
        spec = TunnelSpec("A", 2, "B", [0.1, 0.1])
        with pytest.raises(StructureError, match="collide"):
            expanded_state_space(space, spec)

    def test_absorbing_target_rejected(self, sick_sicker_space):
        spec = TunnelSpec("D", 2, "S2", [0.1, 0.1])
        with pytest.raises(StructureError):
            expanded_state_space(sick_sicker_space, spec)


class TestExpandTunnels:
    def test_degenerate_single_tunnel_matches_compact(self, compact_model, all_healthy):
        # one tunnel with the compact exit probability is the compact model
        spec = TunnelSpec("S1", 1, "S2", [0.105])
        expanded_space, expanded = expand_tunnels(compact_model, spec)
        assert expanded_space.n_states == 4
        compact_trace = simulate_cohort(all_healthy, compact_model)
        init = StateVector(expanded_space, all_healthy.values)
        expanded_trace = simulate_cohort(init, expanded)
        assert np.max(np.abs(expanded_trace.values - compact_trace.values)) <= 1e-15

    def test_constant_exit_probability_reproduces_compact_model(
        self, compact_model, all_healthy
    ):
        spec = TunnelSpec("S1", 20, "S2", weibull_progression(0.105, 1.0, 20))
        expanded_space, expanded = expand_tunnels(compact_model, spec)
        init = StateVector(expanded_space, np.concatenate(([1.0], np.zeros(22))))
        aggregated = aggregate_trace(simulate_cohort(init, expanded), spec)
        compact_trace = simulate_cohort(all_healthy, compact_model)
        assert aggregated.space == compact_model.space
        assert np.max(np.abs(aggregated.values - compact_trace.values)) <= 1e-12

    def test_rows_are_stochastic_and_entry_routes_to_first_tunnel(self, compact_model):
        spec = TunnelSpec("S1", 6, "S2", weibull_progression(0.05, 1.2, 6))
        expanded_space, expanded = expand_tunnels(compact_model, spec)
        mat = expanded.matrix_at(0)
        assert np.allclose(mat.sum(axis=1), 1.0, atol=1e-12)
        h = expanded_space.index("H")
        compact = compact_model.matrix_at(0)
        assert mat[h, expanded_space.index("S1_1")] == pytest.approx(compact[0, 1])
        for tau in range(2, 7):
            assert mat[h, expanded_space.index(f"S1_{tau}")] == 0

    def test_tunnels_advance_one_per_cycle(self, compact_model):
        spec = TunnelSpec("S1", 4, "S2", [0.1, 0.1, 0.1, 0.1])
        expanded_space, expanded = expand_tunnels(compact_model, spec)
        mat = expanded.matrix_at(0)
        for tau in range(1, 4):
            row = expanded_space.index(f"S1_{tau}")
            successors = np.flatnonzero(mat[row])
            names = {expanded_space.names[j] for j in successors}
            assert names == {"H", f"S1_{tau + 1}", "S2", "D"}
        last = expanded_space.index("S1_4")
        assert mat[last, last] > 0  # final tunnel self-loops

    def test_exit_probabilities_are_conditional_on_survival(self, compact_model):
        spec = TunnelSpec("S1", 3, "S2", [0.2, 0.3, 0.4])
        expanded_space, expanded = expand_tunnels(compact_model, spec)
        mat = expanded.matrix_at(0)
        compact = compact_model.matrix_at(0)
        survival = 1 - compact[1, 3]
        for tau, q in enumerate([0.2, 0.3, 0.4], start=1):
            row = expanded_space.index(f"S1_{tau}")
            assert mat[row, expanded_space.index("S2")] == pytest.approx(survival * q)
            assert mat[row, expanded_space.index("D")] == pytest.approx(compact[1, 3])
            assert mat[row, expanded_space.index("H")] == pytest.approx(compact[1, 0])

    def test_infeasible_exits_raise_with_tunnel_row(self, compact_model):
        # exits plus inherited recovery exceed the surviving mass
        spec = TunnelSpec("S1", 2, "S2", [0.9, 0.9])
        with pytest.raises(ValidationError) as excinfo:
            expand_tunnels(compact_model, spec)
        assert any(v.row.startswith("S1_") for v in excinfo.value.violations)

    def test_time_varying_models_expand_per_cycle(self, sick_sicker_space):
        mats = np.stack(
            [conditioned_sick_sicker_matrix(p_death=0.004 + 0.002 * t) for t in range(5)]
        )
        tm = TransitionModel.time_varying(sick_sicker_space, mats)
        spec = TunnelSpec("S1", 3, "S2", [0.1, 0.2, 0.3])
        _, expanded = expand_tunnels(tm, spec)
        assert expanded.kind == TransitionModel.TIME_VARYING
        assert expanded.horizon == 5
        assert not np.array_equal(expanded.matrix_at(0), expanded.matrix_at(4))


class TestAggregateTrace:
    def test_mass_preserved_and_initial_vector(self, compact_model):
        spec = TunnelSpec("S1", 5, "S2", weibull_progression(0.06, 1.1, 5))
        expanded_space, expanded = expand_tunnels(compact_model, spec)
        init = StateVector.from_mapping(expanded_space, {"H": 1.0})
        aggregated = aggregate_trace(simulate_cohort(init, expanded), spec)
        assert np.allclose(aggregated.values.sum(axis=1), 1.0, atol=1e-12)
        assert aggregated.values[0].tolist() == [1.0, 0.0, 0.0, 0.0]

    def test_dimension_mismatch_rejected(self, compact_model, all_healthy):
        trace = simulate_cohort(all_healthy, compact_model)
        spec = TunnelSpec("S1", 5, "S2", [0.1] * 5)
        with pytest.raises(StructureError):
            aggregate_trace(trace, spec)

    def test_tunnel_occupancy_causality(self, compact_model):
        # tunnel tau cannot be occupied before cycle tau
        spec = TunnelSpec("S1", 8, "S2", weibull_progression(0.05, 1.1, 8))
        expanded_space, expanded = expand_tunnels(compact_model, spec)
        init = StateVector.from_mapping(expanded_space, {"H": 1.0})
        trace = simulate_cohort(init, expanded)
        for tau in range(1, 9):
            column = trace.values[:, expanded_space.index(f"S1_{tau}")]
            assert np.all(column[:tau] == 0)
            assert column[tau] > 0


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.001, 0.05),
    st.floats(0.05, 0.3),
    st.integers(2, 12),
)
def test_gamma_one_equivalence_property(p_death, exit_prob, length):
    """Residence-independent exits make expansion invisible after aggregation."""
    space = StateSpace(["H", "S1", "S2", "D"], absorbing=["D"])
    tm = TransitionModel.constant(
        space,
        conditioned_sick_sicker_matrix(p_death=p_death, p_progress=exit_prob),
        length + 4,
    )
    spec = TunnelSpec("S1", length, "S2", np.full(length, exit_prob))
    expanded_space, expanded = expand_tunnels(tm, spec)
    init = StateVector.from_mapping(expanded_space, {"H": 1.0})
    aggregated = aggregate_trace(simulate_cohort(init, expanded), spec)
    compact_trace = simulate_cohort(StateVector.from_mapping(space, {"H": 1.0}), tm)
    assert np.max(np.abs(aggregated.values - compact_trace.values)) <= 1e-12

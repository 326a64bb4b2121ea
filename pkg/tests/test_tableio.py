"""Serialization round-trips and formatting rules."""

import json

import numpy as np
import pytest

from cohortcea.cea import StrategyOutcome, calculate_icers
from cohortcea.core import TransitionModel, simulate_cohort
from cohortcea.epi import proportion_among, survival
from cohortcea.errors import StructureError
from cohortcea.tableio import (
    epi_series_rows,
    format_number,
    human_cea_rows,
    read_table,
    read_transition_model,
    write_cea_table,
    write_table,
    write_trace,
    write_transition_model,
)


class TestNumbers:
    def test_ten_significant_digits(self):
        assert format_number(1 / 3) == "0.3333333333"
        assert format_number(112443.8076923) == "112443.8077"

    def test_none_is_blank(self):
        assert format_number(None) == ""


class TestGenericTables:
    def test_csv_round_trip(self, tmp_path):
        header = ["name", "value", "note"]
        rows = [["a", 1.25, None], ["b", -3.0, "x"]]
        path = write_table(tmp_path / "t.csv", header, rows, "csv")
        header2, rows2 = read_table(path)
        assert header2 == header
        assert rows2 == [["a", 1.25, None], ["b", -3.0, "x"]]

    def test_json_round_trip(self, tmp_path):
        header = ["k", "v"]
        rows = [["a", 0.5], ["b", None]]
        path = write_table(tmp_path / "t.json", header, rows, "json")
        header2, rows2 = read_table(path)
        assert header2 == header and rows2 == rows

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_table(tmp_path / "t.tsv", ["a"], [], "tsv")


class TestTransitionModelIO:
    def test_constant_csv_round_trip(self, tmp_path, ti_soc_model):
        path = write_transition_model(tmp_path / "m.csv", ti_soc_model)
        loaded = read_transition_model(path, horizon=75, absorbing=["D"])
        assert loaded.kind == TransitionModel.CONSTANT
        assert np.allclose(loaded.matrix_at(0), ti_soc_model.matrix_at(0), atol=1e-9)

    def test_time_varying_csv_round_trip(self, tmp_path, ad_soc_model):
        path = write_transition_model(tmp_path / "m.csv", ad_soc_model)
        loaded = read_transition_model(path)
        assert loaded.kind == TransitionModel.TIME_VARYING
        assert loaded.horizon == 75
        for t in (0, 37, 74):
            assert np.allclose(loaded.matrix_at(t), ad_soc_model.matrix_at(t), atol=1e-9)

    def test_json_round_trip_is_exact(self, tmp_path, ad_soc_model):
        path = write_transition_model(tmp_path / "m.json", ad_soc_model, fmt="json")
        loaded = read_transition_model(path)
        assert loaded.space == ad_soc_model.space
        assert np.array_equal(loaded.stack(), ad_soc_model.stack())

    def test_json_preserves_labels_and_cycles(self, tmp_path, ti_soc_model):
        path = write_transition_model(tmp_path / "m.json", ti_soc_model, fmt="json")
        doc = json.loads(path.read_text())
        assert doc["states"] == ["H", "S1", "S2", "D"]
        assert doc["absorbing"] == ["D"]
        assert doc["matrices"][0]["cycle"] == 0

    def test_constant_csv_needs_horizon(self, tmp_path, ti_soc_model):
        path = write_transition_model(tmp_path / "m.csv", ti_soc_model)
        with pytest.raises(StructureError, match="horizon"):
            read_transition_model(path)

    def test_loaded_model_simulates_identically(self, tmp_path, ad_soc_model, all_healthy):
        from cohortcea.core import StateVector

        path = write_transition_model(tmp_path / "m.json", ad_soc_model, fmt="json")
        loaded = read_transition_model(path)
        init = StateVector(loaded.space, all_healthy.values)
        a = simulate_cohort(all_healthy, ad_soc_model)
        b = simulate_cohort(init, loaded)
        assert np.array_equal(a.values, b.values)


class TestTraceAndSeriesIO:
    def test_trace_header_and_rows(self, tmp_path, ti_soc_model, all_healthy):
        trace = simulate_cohort(all_healthy, ti_soc_model)
        path = write_trace(tmp_path / "trace.csv", trace)
        header, rows = read_table(path)
        assert header == ["cycle", "H", "S1", "S2", "D"]
        assert len(rows) == 76
        assert rows[0][1:] == [1.0, 0.0, 0.0, 0.0]

    def test_epi_long_format_with_missing_cells(self, ti_soc_model, all_healthy):
        trace = simulate_cohort(all_healthy, ti_soc_model)
        series = [survival(trace, ["D"]), proportion_among(trace, ["S2"], ["S1", "S2"])]
        header, rows = epi_series_rows(series)
        assert header == ["cycle", "series", "value"]
        assert len(rows) == 2 * 76
        by_key = {(int(r[0]), r[1]): r[2] for r in rows}
        assert by_key[(0, "survival")] == 1.0
        assert by_key[(0, "S2 among S1+S2")] is None  # undefined at cycle 0


class TestCeaIO:
    @pytest.fixture
    def table(self):
        return calculate_icers(
            [
                StrategyOutcome("base", 0.0, 0.0),
                StrategyOutcome("new", 50_000.0, 1.5),
                StrategyOutcome("bad", 90_000.0, 1.0),
            ]
        )

    def test_machine_round_trip(self, tmp_path, table):
        path = write_cea_table(tmp_path / "cea.csv", table)
        header, rows = read_table(path)
        assert header[0] == "strategy"
        base = rows[0]
        assert base[0] == "base" and base[3] is None and base[6] == "ND"
        new = rows[1]
        assert new[5] == pytest.approx(50_000 / 1.5, rel=1e-9)

    def test_human_rounding(self, table):
        rows = human_cea_rows(table)
        new = [r for r in rows if r[0] == "new"][0]
        assert new[1] == "50,000"
        assert new[2] == "1.500"
        assert new[5] == "33,333"
        bad = [r for r in rows if r[0] == "bad"][0]
        assert bad[3] == "NA" and bad[6] == "D"

"""Configuration loading, resolution errors, and generic model building."""

import json

import pytest
import yaml

from cohortcea.config import ConfigEvaluator, load_config, resolve_config
from cohortcea.core import simulate_cohort
from cohortcea.errors import ConfigError
from cohortcea.sicksicker import bundled_config_path


@pytest.fixture
def doc(params):
    return params.to_config_dict()


def write_yaml(tmp_path, doc, name="model.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return path


class TestLoading:
    def test_bundled_config_loads_and_validates(self):
        config = load_config(bundled_config_path())
        assert config.name == "sick-sicker"
        assert config.variants() == ("time-independent", "age-dependent", "tunnels")
        specs, _ = config.build_strategies("age-dependent")
        simulate_cohort(config.initial, specs[0].model)  # validation is implicit

    def test_empty_file_is_a_parse_error(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        with pytest.raises(ConfigError, match="mapping"):
            load_config(path)

    def test_yaml_syntax_error_has_position(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("states:\n  names: [H, S1\n")
        with pytest.raises(ConfigError) as excinfo:
            load_config(path)
        assert "broken.yaml" in str(excinfo.value)

    def test_json_alternate_encoding(self, tmp_path, doc):
        doc["life_table"]["file"] = str(bundled_config_path().parent / "sick_sicker_lifetable.csv")
        path = tmp_path / "model.json"
        path.write_text(json.dumps(doc))
        config = load_config(path)
        assert config.name == "sick-sicker"
        assert config.variants() == ("time-independent", "age-dependent", "tunnels")

    def test_json_parse_error_has_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"states": ')
        with pytest.raises(ConfigError, match="bad.json:1"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.yaml")


class TestResolutionErrors:
    def test_unknown_state_reference_names_field(self, doc, tmp_path):
        doc["strategies"][0]["costs"]["S3"] = 1.0
        with pytest.raises(ConfigError) as excinfo:
            load_config(write_yaml(tmp_path, doc))
        assert any("strategies[0].costs.S3" in p for p in excinfo.value.problems)

    def test_all_errors_reported_not_just_first(self, doc, tmp_path):
        doc["strategies"][0]["costs"]["S3"] = 1.0
        doc["parameters"]["p_HS1"] = "not-a-number"
        doc["transitions"]["rows"][0]["exits"][0]["prob"] = "no_such_param"
        with pytest.raises(ConfigError) as excinfo:
            load_config(write_yaml(tmp_path, doc))
        assert len(excinfo.value.problems) >= 3

    def test_unknown_parameter_reference(self, doc, tmp_path):
        doc["transitions"]["rows"][1]["death"]["hazard_ratio"] = "hr_missing"
        with pytest.raises(ConfigError) as excinfo:
            load_config(write_yaml(tmp_path, doc))
        assert any("hr_missing" in p for p in excinfo.value.problems)

    def test_missing_transition_rule_detected(self, doc, tmp_path):
        del doc["transitions"]["rows"][1]
        with pytest.raises(ConfigError) as excinfo:
            load_config(write_yaml(tmp_path, doc))
        assert any("no rule for non-absorbing state 'S1'" in p for p in excinfo.value.problems)

    def test_initial_vector_must_sum_to_one(self, doc, tmp_path):
        doc["cohort"]["initial"] = {"H": 0.5}
        with pytest.raises(ConfigError) as excinfo:
            load_config(write_yaml(tmp_path, doc))
        assert any("cohort.initial" in p for p in excinfo.value.problems)

    def test_bad_psa_family_reported_at_load(self, doc, tmp_path):
        doc["psa"]["distributions"]["p_HS1"] = {"family": "beta", "alpha": -3, "beta": 2}
        with pytest.raises(ConfigError) as excinfo:
            load_config(write_yaml(tmp_path, doc))
        assert any("psa.distributions.p_HS1" in p for p in excinfo.value.problems)


class TestValueGrammar:
    def test_negated_parameter_reference(self, doc):
        config = resolve_config(doc, base_dir=bundled_config_path().parent)
        assert config.strategies[0].utility_increments[0].delta == "-disutility_HS1"
        specs, _ = config.build_strategies("time-independent")
        assert specs[0].utility_increments[0].delta == -0.01

    def test_literal_numbers_allowed(self, doc):
        doc["transitions"]["rows"][0]["exits"][0]["prob"] = 0.2
        config = resolve_config(doc, base_dir=bundled_config_path().parent)
        specs, _ = config.build_strategies("time-independent")
        assert specs[0].model.matrix_at(0)[0, 1] == pytest.approx((1 - 0.002) * 0.2)


class TestExplicitMatrices:
    def test_constant_matrix_model(self, tmp_path):
        doc = {
            "name": "toy",
            "states": {"names": ["up", "down"], "absorbing": ["down"]},
            "cohort": {"initial": {"up": 1.0}, "horizon": 4},
            "transitions": {"matrix": [[0.9, 0.1], [0.0, 1.0]]},
            "strategies": [
                {
                    "name": "only",
                    "utilities": {"up": 1.0, "down": 0.0},
                    "costs": {"up": 100.0, "down": 0.0},
                }
            ],
        }
        config = load_config(write_yaml(tmp_path, doc))
        assert config.variants() == ("explicit",)
        specs, _ = config.build_strategies("explicit")
        trace = simulate_cohort(config.initial, specs[0].model)
        assert trace.values[1, 0] == pytest.approx(0.9)
        assert trace.values[4, 0] == pytest.approx(0.9**4)

    def test_wrong_shape_rejected(self, tmp_path):
        doc = {
            "name": "toy",
            "states": {"names": ["a", "b"]},
            "cohort": {"initial": {"a": 1.0}, "horizon": 2},
            "transitions": {"matrix": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]},
            "strategies": [
                {"name": "s", "utilities": {"a": 1, "b": 1}, "costs": {"a": 0, "b": 0}}
            ],
        }
        with pytest.raises(ConfigError) as excinfo:
            load_config(write_yaml(tmp_path, doc))
        assert any("transitions.matrix" in p for p in excinfo.value.problems)


class TestOverridesAndEvaluator:
    def test_parameter_override_changes_model(self, doc):
        config = resolve_config(doc, base_dir=bundled_config_path().parent)
        base, _ = config.build_strategies("time-independent")
        bumped, _ = config.build_strategies("time-independent", parameters={"p_HS1": 0.3})
        assert base[0].model.matrix_at(0)[0, 1] < bumped[0].model.matrix_at(0)[0, 1]

    def test_unknown_override_rejected(self, doc):
        config = resolve_config(doc, base_dir=bundled_config_path().parent)
        with pytest.raises(ConfigError, match="override"):
            config.build_strategies("time-independent", parameters={"nope": 1.0})

    def test_evaluator_reproduces_deterministic_totals(self, doc):
        from cohortcea.sicksicker import run_full_analysis

        config = resolve_config(doc, base_dir=bundled_config_path().parent)
        evaluator = ConfigEvaluator(config, "age-dependent")
        base_row = {}
        outcomes = evaluator(base_row)
        analysis = run_full_analysis(variant="age-dependent")
        for row in analysis.cea_table.rows:
            cost, effect = outcomes[row.label]
            assert cost == pytest.approx(row.cost, abs=1e-9)
            assert effect == pytest.approx(row.effect, abs=1e-12)

    def test_psa_distribution_means_match_base_values(self, doc):
        config = resolve_config(doc, base_dir=bundled_config_path().parent)
        dists = {d.name: d for d in config.psa_distributions()}
        for name, dist in dists.items():
            assert dist.mean() == pytest.approx(config.parameters[name], rel=1e-9), name

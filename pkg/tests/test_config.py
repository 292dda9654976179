import json

import pytest
import yaml

from holosched import config
from holosched.config import ConfigError


@pytest.fixture
def doc():
    return yaml.safe_load(config.default_template_path().read_text())


def test_default_template_is_clean(default_config):
    assert default_config.violations() == []
    t = default_config.template
    assert (t.n_servers, t.n_users, t.n_runs, t.rng_seed) == (3, 2, 100, 42)
    assert t.bw_uplink_range == (1e9, 4e9)
    assert default_config.l_ref_s == 3.0


def test_capacity_keys_cover_every_class_op_server(default_config):
    t = default_config.template
    keys = {(k.id, c, m) for k in t.classes for c in k.base_workload for m in range(t.n_servers)}
    assert set(t.capacity_range) == keys


def test_json_round_trip_matches_yaml(doc):
    a = config.from_dict(doc)
    b = config.parse_text(json.dumps(doc))
    assert a.template == b.template
    assert a.local_capacity == b.local_capacity


def test_numeric_strings_are_coerced(doc):
    doc["split_overhead"] = "0.1"
    assert config.from_dict(doc).template.split_overhead == 0.1


def test_negative_bandwidth_reports_field_path(doc):
    doc["bandwidth"]["uplink_bps"] = [-1e9, 4e9]
    problems = config.from_dict(doc).violations()
    assert any(p.startswith("bandwidth.uplink_bps:") for p in problems)


def test_missing_capacity_names_the_triple(doc):
    del doc["servers"][1]["capacity"]["uhd-point-cloud"]["render"]
    problems = config.from_dict(doc).violations()
    assert any("(class=0, op=render, server=1)" in p for p in problems)


def test_all_violations_are_listed_together(doc):
    doc["users"] = 0
    doc["bandwidth"]["interserver_bps"] = [2e10, 1e10]
    doc["metrics"]["l_ref_s"] = -1
    problems = config.from_dict(doc).violations()
    assert len(problems) >= 3


def test_bad_knots_are_violations(doc):
    doc["metrics"]["knots"] = [[0, 0], [0.5, 0.5], [0.8, 0.9], [1, 1]]
    assert any(p.startswith("metrics.knots:") for p in config.from_dict(doc).violations())


@pytest.mark.parametrize("mutate,match", [
    (lambda d: d.pop("ops"), "ops: missing"),
    (lambda d: d["classes"][0]["workload"].update({"paint": 1.0}), "unknown op 'paint'"),
    (lambda d: d.update(users="two"), "users: expected a number"),
    (lambda d: d.update(runs=2.5), "runs: expected an integer"),
    (lambda d: d["bandwidth"].update(uplink_bps=[1, 2, 3]), r"expected \[low, high\]"),
    (lambda d: d.update(user_classes=["nope", "nope"]), "unknown class"),
])
def test_structural_errors(doc, mutate, match):
    mutate(doc)
    with pytest.raises(ConfigError, match=match):
        config.from_dict(doc)


def test_yaml_error_has_line_and_column():
    with pytest.raises(ConfigError, match=r"t\.yaml:2:\d+:"):
        config.parse_text("seed: 1\n\tops: [a]\n", "t.yaml")


def test_json_error_has_line_and_column():
    with pytest.raises(ConfigError, match=r"t\.json:1:\d+:"):
        config.parse_text('{"seed": 1,,}', "t.json")


def test_non_mapping_document():
    with pytest.raises(ConfigError, match="mapping"):
        config.parse_text("- 1\n- 2\n")

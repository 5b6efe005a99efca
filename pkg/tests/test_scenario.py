"""Scenario config: parsing, validation paths, round-trip stability."""

import copy

import pytest
import yaml

from rrmsim.scenario import (
    ParseError,
    ValidationError,
    load_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

from conftest import SCENARIO_DIR


def minimal() -> dict:
    return {
        "name": "tiny",
        "network": {"cells": [{"id": "c1", "prbs_per_slot": 20}]},
        "ues": [{"id": "u1", "position": [30.0, 0.0]}],
        "traffic": {"flows": [{"id": "f1", "ue": "u1", "service": "eMBB"}]},
        "sim": {"horizon_slots": 50, "seed": 1},
    }


def failures_of(data) -> dict:
    with pytest.raises(ValidationError) as e:
        scenario_from_dict(data)
    return dict(e.value.failures)


def test_minimal_scenario_fills_defaults():
    cfg = scenario_from_dict(minimal())
    assert cfg.name == "tiny"
    assert cfg.cells[0].carrier_hz == 2.0e9
    assert cfg.cells[0].portions[0].key == "main"
    assert cfg.mac.epoch_slots == 10
    assert cfg.uts.enabled is True
    assert cfg.flows[0].generator_kind == "full_buffer"


def test_every_shipped_scenario_loads(scenarios):
    assert len(scenarios) >= 5
    for name, cfg in scenarios.items():
        assert cfg.cells, name
        assert cfg.sim.horizon_slots >= 1


def test_round_trip_is_identity(scenarios):
    for name, cfg in scenarios.items():
        again = scenario_from_dict(scenario_to_dict(cfg))
        assert again == cfg, name


def test_serialization_is_default_complete():
    """to_dict spells out every default, so a second round trip is a no-op."""
    cfg = scenario_from_dict(minimal())
    d1 = scenario_to_dict(cfg)
    d2 = scenario_to_dict(scenario_from_dict(copy.deepcopy(d1)))
    assert d1 == d2


def test_carrier_out_of_range_is_reported_with_path():
    data = minimal()
    data["network"]["cells"][0]["carrier_hz"] = 100e6
    fails = failures_of(data)
    assert any("network.cells[0]" in path for path in fails)
    assert any("carrier_hz" in reason for reason in fails.values())


def test_unknown_keys_are_rejected_everywhere():
    top = minimal()
    top["turbo_mode"] = True
    assert "turbo_mode" in failures_of(top)
    nested = minimal()
    nested["network"]["cells"][0]["antenna_count"] = 4
    assert "network.cells[0].antenna_count" in failures_of(nested)


def test_flow_must_reference_known_ue():
    data = minimal()
    data["traffic"]["flows"][0]["ue"] = "nobody"
    fails = failures_of(data)
    assert any("nobody" in reason for reason in fails.values())


def test_duplicate_ids_rejected():
    data = minimal()
    data["network"]["cells"].append({"id": "c1"})
    assert "network.cells" in failures_of(data)
    data = minimal()
    data["ues"].append({"id": "u1"})
    assert "ues" in failures_of(data)


def test_mixed_numerologies_rejected():
    data = minimal()
    data["network"]["cells"].append({"id": "c2", "numerology": 2, "carrier_hz": 3.5e9})
    assert "network.cells" in failures_of(data)


def test_urllc_flow_needs_a_deadline_shape():
    data = minimal()
    data["traffic"]["flows"][0]["service"] = "URLLC"
    fails = failures_of(data)
    assert any("URLLC" in r or "periodic" in r for r in fails.values())
    # either a periodic generator or an explicit reservation period satisfies it
    data["traffic"]["flows"][0]["generator"] = {"kind": "periodic_deadline"}
    scenario_from_dict(data)
    data2 = minimal()
    data2["traffic"]["flows"][0]["service"] = "URLLC"
    data2["traffic"]["flows"][0]["sps_period_slots"] = 8
    scenario_from_dict(data2)


def test_bad_generator_params_name_the_accepted_fields():
    data = minimal()
    data["traffic"]["flows"][0]["generator"] = {"kind": "full_buffer", "burstiness": 3}
    fails = failures_of(data)
    assert any("packet_bits" in r for r in fails.values())


def test_ue_with_no_eligible_cell_is_an_error():
    data = minimal()
    data["network"]["cells"][0]["portions"] = [{"key": "nr", "required_capability": "nr6g"}]
    fails = failures_of(data)
    assert any("eligible" in r for r in fails.values())


def test_multiple_failures_reported_together():
    data = minimal()
    data["sim"]["horizon_slots"] = 0
    data["network"]["cells"][0]["carrier_hz"] = 1.0
    data["traffic"]["flows"][0]["ue"] = "ghost"
    with pytest.raises(ValidationError) as e:
        scenario_from_dict(data)
    assert len(e.value.failures) >= 3


def test_parse_error_for_non_mapping_input(tmp_path):
    with pytest.raises(ParseError):
        scenario_from_dict(["not", "a", "mapping"])
    p = tmp_path / "broken.yaml"
    p.write_text("{{{ not yaml")
    with pytest.raises(ParseError):
        load_scenario(p)
    with pytest.raises(ParseError):
        load_scenario(tmp_path / "missing.yaml")


def test_shipped_scenarios_parse_as_plain_yaml():
    """The files on disk stay loadable with a vanilla YAML reader."""
    for path in sorted(SCENARIO_DIR.glob("*.yaml")):
        data = yaml.safe_load(path.read_text())
        assert isinstance(data, dict)
        assert "network" in data

import json

import pytest

from fronthaul.config import (ParseError, RunConfig, ValidationError, config_from_dict,
                              parse_config)
from fronthaul.topology import Scheme


def write(tmp_path, text):
    p = tmp_path / "cfg.json"
    p.write_text(text, encoding="utf-8")
    return p


def test_defaults_from_none_and_empty_file(tmp_path):
    assert parse_config(None) == RunConfig()
    assert parse_config(write(tmp_path, "  \n")) == RunConfig()


def test_sections_and_values_are_read(tmp_path):
    cfg = parse_config(write(tmp_path, json.dumps({
        "topology": {"L": 200, "region_side": 900},
        "costs": {"otn_capacity": 8},
        "sweep": {"W": [2, 3], "fs": ["8"], "p": [0.1]},
        "sla": 0.999, "master_seed": 12,
    })))
    assert cfg.topology.L == 200 and cfg.topology.region_side == 900.0
    assert cfg.costs.otn_capacity == 8
    assert cfg.sweep.W == (2, 3) and cfg.sweep.fs == ("8",)
    assert cfg.sla == 0.999 and cfg.master_seed == 12
    topo = cfg.topology.topology(3, 40, "hs")
    assert topo.scheme is Scheme.HS and topo.G_initial == 40 and topo.L == 200


def test_round_trip_through_dict():
    cfg = RunConfig()
    assert config_from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


@pytest.mark.parametrize("data, where", [
    ({"topology": {"bogus": 1}}, "topology.bogus"),
    ({"nope": 1}, "nope"),
    ({"costs": {"otn_capacity": 1.5}}, "costs.otn_capacity"),
    ({"sweep": {"W": [1, "2"]}}, "sweep.W[1]"),
    ({"fso": []}, "fso"),
    ({"include_du_pool": 1}, "include_du_pool"),
])
def test_parse_errors_name_the_field(data, where):
    with pytest.raises(ParseError) as e:
        config_from_dict(data)
    assert e.value.field == where


def test_malformed_json_reports_line(tmp_path):
    with pytest.raises(ParseError) as e:
        parse_config(write(tmp_path, '{\n  "sla": 0.9,\n  oops\n}'))
    assert e.value.line == 3


def test_validation_lists_every_problem():
    with pytest.raises(ValidationError) as e:
        config_from_dict({"topology": {"g_m": 20}, "sla": 1.5, "sweep": {"fs": ["7"], "W": [0]},
                          "costs": {"du_fiber": 1.0}})
    text = "\n".join(e.value.problems)
    for needle in ("g_m", "sla", "sweep.fs", "sweep.W", "du_fiber"):
        assert needle in text


def test_traffic_mode_needs_cap_below_fiber_rate():
    with pytest.raises(ValidationError):
        config_from_dict({"demand_mode": "traffic", "traffic": {"cap": 2e10}})
    assert config_from_dict({"demand_mode": "traffic"}).demand_mode == "traffic"


def test_photon_energy_consistency_checked():
    with pytest.raises(ValidationError) as e:
        config_from_dict({"fso": {"wavelength_nm": 850}})
    assert any("photon_energy" in p for p in e.value.problems)

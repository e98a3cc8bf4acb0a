import json
from dataclasses import replace

import numpy as np
import pytest

from firesim.scenario import (ConfigError, PRESETS, build_from_seed,
                              config_from_dict, default_config,
                              defaults_table, dumps_config, expand_preset,
                              load_config, loads_config, validate_config)


def test_empty_text_means_defaults():
    assert loads_config("") == default_config()
    assert loads_config("{}") == default_config()


def test_dumps_loads_roundtrip():
    cfg = expand_preset("permanent_few_accounts")
    assert loads_config(dumps_config(cfg)) == cfg


def test_config_from_dict_roundtrip_every_preset():
    for name in PRESETS:
        cfg = expand_preset(name)
        assert config_from_dict(cfg.to_dict()) == cfg


def test_load_config_reads_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(dumps_config(default_config()))
    assert load_config(path) == default_config()


def test_invalid_json_is_a_config_error():
    with pytest.raises(ConfigError, match="not valid JSON"):
        loads_config("{nope")


def test_unknown_keys_name_their_path():
    with pytest.raises(ConfigError, match="config: unknown key 'grph'"):
        config_from_dict({"grph": {}})
    with pytest.raises(ConfigError, match="graph: unknown key 'nnn'"):
        config_from_dict({"graph": {"nnn": 5}})


def test_partial_override_keeps_other_defaults():
    cfg = config_from_dict({"graph": {"n": 50, "m": 2}})
    assert cfg.graph.n == 50 and cfg.graph.m == 2
    assert cfg.attack == default_config().attack


def test_type_errors_are_strict():
    with pytest.raises(ConfigError, match="graph.n: expected an integer"):
        config_from_dict({"graph": {"n": 12.5}})
    with pytest.raises(ConfigError, match="expected an integer"):
        config_from_dict({"graph": {"n": True}})  # bools are not counts
    with pytest.raises(ConfigError, match="attack.enabled: expected true/false"):
        config_from_dict({"attack": {"enabled": 1}})
    with pytest.raises(ConfigError, match="agents.beta: expected a number"):
        config_from_dict({"agents": {"beta": "ten"}})


def test_cross_field_rule_names_both_fields():
    with pytest.raises(ConfigError, match="gamma_direct.*gamma_ambient"):
        config_from_dict({"agents": {"gamma_direct": 0.01, "gamma_ambient": 0.5}})


def test_fire_threshold_must_cover_extinguish_eps():
    with pytest.raises(ConfigError, match="fire_threshold.*extinguish_eps"):
        config_from_dict({"contagion": {"fire_threshold": 1.0, "extinguish_eps": 2.0}})


def test_roster_cannot_exceed_population():
    with pytest.raises(ConfigError, match="roster of 40 exceeds graph.n"):
        config_from_dict({"graph": {"n": 30, "m": 3},
                          "roster": {"employees": 36, "managers": 4}})


def test_playbook_trigger_exclusivity():
    with pytest.raises(ConfigError, match="not both"):
        config_from_dict({"defense": {"playbook": [
            {"kind": "scapegoat", "trigger_tick": 5, "trigger_stage": "peak"}]}})
    with pytest.raises(ConfigError, match="trigger_stage"):
        config_from_dict({"defense": {"playbook": [
            {"kind": "scapegoat", "trigger_stage": "armageddon"}]}})


def test_topic_ids_must_be_unique():
    topic = {"topic_id": "dup", "failure_class": "social", "severity": 0.5,
             "appeal": [0.5, 0.5, 0.5, 0.5, 0.5]}
    with pytest.raises(ConfigError, match="unique"):
        config_from_dict({"topics": [topic, dict(topic)]})


def test_every_preset_validates():
    for name in PRESETS:
        validate_config(expand_preset(name))
    with pytest.raises(ConfigError, match="unknown preset"):
        expand_preset("maximum_overdrive")


def test_preset_bot_scales():
    assert expand_preset("rapid_massive").attack.bots == 200
    assert expand_preset("permanent_few_accounts").attack.bots == 15
    assert expand_preset("organic_only").attack.enabled is False


def test_seed_override_via_replace():
    cfg = default_config()
    assert replace(cfg, run=replace(cfg.run, seed=99)).run.seed == 99


def test_defaults_table_lists_every_field():
    table = defaults_table()
    cfg = default_config()
    for section, payload in cfg.to_dict().items():
        if isinstance(payload, dict):
            for field_name in payload:
                assert f"| {section} | {field_name} |" in table


def test_same_seed_world_is_invariant_to_bot_count():
    """Changing the attack cohort must not disturb the organic world."""
    cfg_small = config_from_dict({"attack": {"bots": 20}})
    cfg_big = config_from_dict({"attack": {"bots": 200}})
    small = build_from_seed(cfg_small, 42)
    big = build_from_seed(cfg_big, 42)
    n = cfg_small.graph.n
    np.testing.assert_array_equal(small.accounts.ocean[:n], big.accounts.ocean[:n])
    np.testing.assert_array_equal(small.accounts.creation_tick[:n],
                                  big.accounts.creation_tick[:n])
    assert small.company.roster.members == big.company.roster.members
    assert small._seed_posters == big._seed_posters
    edges_small = {(u, v) for u, v in small.graph.edges() if u < n and v < n}
    edges_big = {(u, v) for u, v in big.graph.edges() if u < n and v < n}
    assert edges_small == edges_big


def test_run_seed_field_feeds_build():
    cfg = config_from_dict({"run": {"seed": 7}})
    sim = build_from_seed(cfg, cfg.run.seed)
    assert sim.cfg.run.seed == 7


def test_dict_valued_fields_merge_with_defaults():
    cfg = config_from_dict({"agents": {"class_multipliers": {"social": 2.0}}})
    defaults = default_config().agents.class_multipliers
    assert cfg.agents.class_multipliers["social"] == 2.0
    assert cfg.agents.class_multipliers["communication"] == defaults["communication"]


def test_config_json_is_stable():
    text = dumps_config(default_config())
    assert json.loads(text)  # valid JSON
    assert text == dumps_config(loads_config(text))  # fixpoint

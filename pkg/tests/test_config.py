"""YAML configuration parsing, validation, overrides and sweeps."""
import dataclasses
import math

import pytest

from dpssim import (ConfigError, RunConfig, apply_overrides, config_sha256,
                    default_config_yaml, expand_sweep, load_config,
                    parse_config)


def test_default_template_round_trips_to_defaults():
    cfg = parse_config(default_config_yaml())
    assert cfg == RunConfig()


def test_empty_document_gives_defaults():
    assert parse_config("") == RunConfig()


def test_partial_sections_fill_in_defaults():
    cfg = parse_config("run:\n  n_pulses: 500\nspad:\n  eta: 0.5\n")
    assert cfg.run.n_pulses == 500
    assert cfg.run.rep_rate == 1.0e9
    assert cfg.spad.eta == 0.5
    assert cfg.fiber == RunConfig().fiber


def test_unknown_section_and_key_are_named():
    with pytest.raises(ConfigError, match="laserr"):
        parse_config("laserr:\n  linewidth: 1.0\n")
    with pytest.raises(ConfigError, match="im.v_pixel"):
        parse_config("im:\n  v_pixel: 3.0\n")


def test_validation_errors_name_the_field():
    with pytest.raises(ConfigError, match="im.v_pi"):
        parse_config("im:\n  v_pi: -1.0\n")
    with pytest.raises(ConfigError, match="spad.eta"):
        parse_config("spad:\n  eta: 1.5\n")


def test_exponent_without_sign_parses_as_number():
    # YAML 1.1 resolvers hand "1.0e9" over as a string.
    cfg = parse_config("run:\n  rep_rate: 1.0e9\n")
    assert cfg.run.rep_rate == 1.0e9


def test_booleans_are_not_numbers():
    with pytest.raises(ConfigError, match="boolean"):
        parse_config("spad:\n  eta: true\n")


def test_integer_fields_reject_fractions():
    with pytest.raises(ConfigError, match="run.n_pulses"):
        parse_config("run:\n  n_pulses: 10.5\n")
    cfg = parse_config("run:\n  n_pulses: 1.0e4\n")
    assert cfg.run.n_pulses == 10_000


def test_null_only_where_optional():
    cfg = parse_config("voa:\n  attenuation: 10.0\n  target_mpn: null\n")
    assert cfg.voa.attenuation == 10.0
    assert cfg.voa.target_mpn is None
    with pytest.raises(ConfigError, match="null"):
        parse_config("spad:\n  eta: null\n")


def test_negative_infinity_disables_rin():
    cfg = parse_config("laser:\n  rin: -.inf\n")
    assert cfg.laser.rin == float("-inf")


def test_malformed_yaml_reports_config_error():
    with pytest.raises(ConfigError, match="YAML"):
        parse_config("run: [unclosed\n")
    with pytest.raises(ConfigError, match="mapping"):
        parse_config("- just\n- a list\n")


def test_cross_validation_ties_im_and_dli_to_the_grid():
    with pytest.raises(ConfigError, match="im.rep_rate"):
        parse_config("run:\n  rep_rate: 2.0e9\n")
    with pytest.raises(ConfigError, match="dli.delay"):
        parse_config("im:\n  rep_rate: 2.0e9\nrun:\n  rep_rate: 2.0e9\n")


def test_apply_overrides_dotted_keys():
    cfg = apply_overrides(RunConfig(), {"spad.eta": 0.7,
                                        "run.n_pulses": "2000",
                                        "voa.target_mpn": "null",
                                        "voa.attenuation": "12.5"})
    assert cfg.spad.eta == 0.7
    assert cfg.run.n_pulses == 2000
    assert cfg.voa.attenuation == 12.5
    assert cfg.voa.target_mpn is None


def test_apply_overrides_rejects_unknown_and_invalid():
    with pytest.raises(ConfigError, match="unknown key"):
        apply_overrides(RunConfig(), {"spad.qe": 0.5})
    with pytest.raises(ConfigError, match="section.key"):
        apply_overrides(RunConfig(), {"eta": 0.5})
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), {"spad.eta": -1.0})


def test_sweep_parses_and_expands():
    cfg = parse_config(
        "sweep:\n  parameter: fiber.length\n  values: [0.0, 10.0, 25.0, 50.0]\n")
    assert cfg.sweep.parameter == "fiber.length"
    points = expand_sweep(cfg)
    assert [v for v, _ in points] == [0.0, 10.0, 25.0, 50.0]
    assert all(p.sweep is None for _, p in points)
    assert points[2][1].fiber.length == 25.0
    assert points[0][1].fiber.length == 0.0


def test_sweep_validation():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("sweep:\n  parameter: fiber.lengths\n  values: [1.0]\n")
    with pytest.raises(ConfigError, match="values"):
        parse_config("sweep:\n  parameter: fiber.length\n  values: []\n")
    with pytest.raises(ConfigError, match="sweep.extra"):
        parse_config("sweep:\n  parameter: fiber.length\n  values: [1.0]\n"
                     "  extra: 2\n")
    with pytest.raises(ConfigError, match="no sweep"):
        expand_sweep(RunConfig())


def test_load_config_reads_files(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("run:\n  seed: 42\n")
    assert load_config(path).run.seed == 42


def test_config_sha256_stable_and_text_sensitive():
    a = config_sha256("run:\n  seed: 1\n")
    b = config_sha256("run:\n  seed: 1\n")
    c = config_sha256("run:\n  seed: 2\n")
    assert a == b != c
    assert len(a) == 64
    assert a == config_sha256(b"run:\n  seed: 1\n")


def test_out_dir_must_be_string():
    with pytest.raises(ConfigError, match="out_dir"):
        parse_config("run:\n  out_dir: 3\n")

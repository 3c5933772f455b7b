import pytest

from megc.config import (ConfigError, ExperimentConfig, dump_config, parse_config, parse_config_text,
                         preset_text)
from megc.system import ValidationError


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.ini"
    path.write_text("")
    assert parse_config(path) == ExperimentConfig()
    assert parse_config(None) == ExperimentConfig()


def test_preset_carries_the_published_setup():
    cfg = parse_config("paper_defaults")
    s = cfg.system
    assert s.p_comp == s.p_ve == 15.0 and s.p_es == 15.0
    assert s.b_off == s.b_back == 400e6
    assert s.n0 == 1e-13
    assert (s.dist_comp, s.dist_aigc, s.dist_ve) == (100.0, 120.0, 80.0)
    assert s.xi == 9.97e-14 and s.zeta == 5.73
    assert cfg == ExperimentConfig()


def test_invalid_fra_shares_name_the_field():
    with pytest.raises(ValidationError) as err:
        parse_config_text("[fra]\nomega_comp = 0.5\nomega_aigc = 0.5\nomega_ve = 0.5\n")
    assert err.value.field == "fra.omega"


def test_invalid_system_value_names_the_field():
    with pytest.raises(ValidationError) as err:
        parse_config_text("[system]\nb_off = -1\n")
    assert err.value.field.startswith("system.")


def test_unknown_key_reports_its_line():
    with pytest.raises(ConfigError) as err:
        parse_config_text("# header\n[agent]\ngamma = 0.3\n\nbogus = 1\n")
    assert err.value.line == 5 and err.value.field == "agent.bogus"
    assert "line 5" in str(err.value)


def test_unknown_section_reports_its_line():
    with pytest.raises(ConfigError) as err:
        parse_config_text("[run]\nepisodes = 3\n[network]\nx = 1\n")
    assert err.value.line == 3


def test_malformed_text_reports_its_line():
    with pytest.raises(ConfigError) as err:
        parse_config_text("[run]\nepisodes = 3\nthis line has no separator\n")
    assert err.value.line == 3
    with pytest.raises(ConfigError) as err:
        parse_config_text("episodes = 3\n")
    assert err.value.line == 1


def test_bad_value_type():
    with pytest.raises(ConfigError) as err:
        parse_config_text("[run]\nepisodes = 2.5\n")
    assert err.value.line == 2


def test_overrides_and_types():
    cfg = parse_config_text("[run]\nseeds = 4, 5\nepisodes = 10\n[env]\nfading = yes\n[agent]\nhidden = 32, 16\n")
    assert cfg.run.seeds == (4, 5) and cfg.run.episodes == 10
    assert cfg.env.fading is True
    assert cfg.agent.hidden == (32, 16)


def test_dump_round_trip():
    cfg = ExperimentConfig().replace("agent", actor_lr=1e-5).replace("run", seeds=(7,))
    assert parse_config_text(dump_config(cfg)) == cfg


def test_unknown_preset():
    with pytest.raises(ConfigError):
        preset_text("nope")

import pytest

from veriblock.config import Config, default_config_text, load_config, parse_config
from veriblock.errors import ConfigError


def test_defaults():
    config = parse_config("", environ={})
    assert config == Config()
    assert config.verification.radius == 200 and config.verification.heading_tolerance == 45
    assert config.dedup.radius == 200 and config.dedup.time_window == 900
    assert config.weights == (0.7, 0.3)
    assert config.p_good == (0.5, 0.6, 0.7, 0.8)
    assert config.block_interval_s == 12 and config.block_capacity == 200


def test_default_text_parses_to_defaults():
    assert parse_config(default_config_text(), environ={}) == Config()


def test_values_and_env_override():
    text = "[trust]\nthreshold = 0.6\n[ledger]\nblock_interval_s = none\n"
    config = parse_config(text, environ={"VERIBLOCK_TRUST_W_FILTERED": "0.3",
                                         "VERIBLOCK_TRUST_W_UNFILTERED": "0.7",
                                         "VERIBLOCK_EXPERIMENT_SEEDS": "1, 2"})
    assert config.threshold == 0.6
    assert config.block_interval_s is None
    assert config.weights == (0.3, 0.7)
    assert config.seeds == (1, 2)
    assert config.make_network().ledger.block_interval is None


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[trust]\nthreshhold = 0.5\n", "trust.threshhold"),
        ("[gossip]\nfanout = 3\n", "gossip"),
        ("[experiment]\np_good =\n", "p_good"),
        ("[experiment]\nstep = 7\n", "step"),
        ("[trust]\nw_filtered = 0.6\nw_unfiltered = 0.6\n", "sum to 1"),
        ("[verification]\nheading_tol_deg = 270\n", "heading_tolerance"),
        ("[trust]\nalgorithms = simple, oracle\n", "oracle"),
        ("[ledger]\nblock_capacity = many\n", "ledger.block_capacity"),
        ("not an ini file", "malformed"),
    ],
)
def test_rejections(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text, environ={})


def test_unknown_env_key():
    with pytest.raises(ConfigError, match="VERIBLOCK_TRUST_COLOUR"):
        parse_config("", environ={"VERIBLOCK_TRUST_COLOUR": "red"})


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "absent.ini", environ={})

"""Tests for configuration schemas."""

from pathlib import Path

import pytest
import voluptuous as vol

from ring_mpc.config import (
    SessionConfig,
    address,
    input_assignment,
    load_key_value_file,
    parse_key_value_text,
)
from ring_mpc.const import (
    DEFAULT_LANE_COUNT,
    DEFAULT_SESSION_ID,
    DEFAULT_TIMEOUT_SECONDS,
)
from ring_mpc.exceptions import ConfigError


@pytest.fixture
def base_config(full_adder_path):
    return {
        "party_id": "2",
        "listen_address": "0.0.0.0:9002",
        "successor_address": "10.0.0.3:9003",
        "circuit_path": str(full_adder_path),
    }


def test_session_config_defaults(base_config):
    config = SessionConfig.from_mapping(base_config)
    assert config.party_id == 2
    assert config.listen_address == ("0.0.0.0", 9002)
    assert config.successor_address == ("10.0.0.3", 9003)
    assert config.circuit_path == Path(base_config["circuit_path"])
    assert config.lane_count == DEFAULT_LANE_COUNT
    assert config.timeout_seconds == DEFAULT_TIMEOUT_SECONDS
    assert config.session_id == DEFAULT_SESSION_ID
    assert config.input_source == "dealer-file"
    assert config.seed is None


def test_session_config_overrides(base_config):
    config = SessionConfig.from_mapping(
        {
            **base_config,
            "lane_count": "64",
            "seed": "5",
            "input_source": "party-file",
            "input_assignment": "1:1,2:2,3:3",
            "output_party": 3,
        }
    )
    assert config.lane_count == 64
    assert config.seed == 5
    assert config.input_assignment == {1: 1, 2: 2, 3: 3}
    assert config.output_party == 3


@pytest.mark.parametrize(
    "key, value",
    [
        ("party_id", "4"),
        ("listen_address", "nohost"),
        ("successor_address", "host:99999"),
        ("lane_count", "0"),
        ("timeout_seconds", "0"),
        ("input_source", "carrier-pigeon"),
        ("circuit_path", "/definitely/not/here.txt"),
        ("input_assignment", "1:7"),
    ],
)
def test_session_config_rejects(base_config, key, value):
    with pytest.raises(ConfigError) as info:
        SessionConfig.from_mapping({**base_config, key: value})
    assert info.value.key == key


def test_session_config_requires_party(base_config):
    del base_config["party_id"]
    with pytest.raises(ConfigError):
        SessionConfig.from_mapping(base_config)


def test_address_forms():
    assert address("localhost:80") == ("localhost", 80)
    assert address(("h", "81")) == ("h", 81)
    assert address("::1:9000") == ("::1", 9000)
    with pytest.raises(vol.Invalid):
        address(":80")


def test_input_assignment_forms():
    assert input_assignment("1:2, 2:3,") == {1: 2, 2: 3}
    assert input_assignment({1: 1}) == {1: 1}
    with pytest.raises(vol.Invalid):
        input_assignment("1-2")
    with pytest.raises(vol.Invalid):
        input_assignment("a:1")


def test_key_value_text():
    values = parse_key_value_text("# comment\n\nparty_id = 1\nseed=3\n")
    assert values == {"party_id": "1", "seed": "3"}
    with pytest.raises(ConfigError):
        parse_key_value_text("just words")


def test_key_value_file(tmp_path):
    path = tmp_path / "party.conf"
    path.write_text("party_id = 3\nlane_count = 16\n")
    assert load_key_value_file(path) == {"party_id": "3", "lane_count": "16"}
    with pytest.raises(ConfigError):
        load_key_value_file(tmp_path / "absent.conf")

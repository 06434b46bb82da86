"""Configuration schemas and loaders for ring-mpc."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import voluptuous as vol

from .const import (
    BIT_ORDER_LSB_FIRST,
    BIT_ORDER_MSB_FIRST,
    CONF_CIRCUIT_PATH,
    CONF_INPUT_ASSIGNMENT,
    CONF_INPUT_FILE,
    CONF_INPUT_SOURCE,
    CONF_LANE_COUNT,
    CONF_LISTEN_ADDRESS,
    CONF_OUTPUT_PARTY,
    CONF_PARTY_ID,
    CONF_SEED,
    CONF_SESSION_ID,
    CONF_SUCCESSOR_ADDRESS,
    CONF_TIMEOUT_SECONDS,
    DEFAULT_INPUT_SOURCE,
    DEFAULT_LANE_COUNT,
    DEFAULT_OUTPUT_PARTY,
    DEFAULT_SESSION_ID,
    DEFAULT_TIMEOUT_SECONDS,
    INPUT_SOURCES,
    META_BIT_ORDER,
    META_DESCRIPTION,
    META_INPUT_GROUP_ROLES,
    META_KNOWN_ANSWER_VECTORS,
    PARTY_IDS,
)
from .exceptions import ConfigError

_LOGGER = logging.getLogger(__name__)


def address(value: Any) -> tuple[str, int]:
    """Validate a host:port string."""
    if isinstance(value, tuple) and len(value) == 2:
        host, port = value
    else:
        host, sep, port = str(value).rpartition(":")
        if not sep or not host:
            raise vol.Invalid(f"expected host:port, got {value!r}")
    try:
        port = int(port)
    except ValueError as err:
        raise vol.Invalid(f"port must be an integer in {value!r}") from err
    if not 0 <= port <= 65535:
        raise vol.Invalid(f"port {port} out of range")
    return str(host), port


def input_assignment(value: Any) -> dict[int, int]:
    """Parse `group:party` pairs, e.g. "1:1,2:2" (groups are 1-based)."""
    if isinstance(value, Mapping):
        pairs = value.items()
    else:
        pairs = []
        for item in str(value).split(","):
            if not item.strip():
                continue
            group, sep, party = item.partition(":")
            if not sep:
                raise vol.Invalid(f"expected group:party, got {item!r}")
            pairs.append((group, party))
    result: dict[int, int] = {}
    for group, party in pairs:
        try:
            group_id, party_id = int(group), int(party)
        except ValueError as err:
            raise vol.Invalid(f"non-integer entry {group}:{party}") from err
        if party_id not in PARTY_IDS:
            raise vol.Invalid(f"party {party_id} is not one of {PARTY_IDS}")
        result[group_id] = party_id
    return result


PARTY_ID = vol.All(vol.Coerce(int), vol.In(PARTY_IDS))

SESSION_CONFIG_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_PARTY_ID): PARTY_ID,
        vol.Required(CONF_LISTEN_ADDRESS): address,
        vol.Required(CONF_SUCCESSOR_ADDRESS): address,
        vol.Required(CONF_CIRCUIT_PATH): vol.IsFile(),
        vol.Optional(CONF_LANE_COUNT, default=DEFAULT_LANE_COUNT): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_SEED, default=None): vol.Any(None, vol.Coerce(int)),
        vol.Optional(CONF_TIMEOUT_SECONDS, default=DEFAULT_TIMEOUT_SECONDS): vol.All(
            vol.Coerce(float), vol.Range(min=0, min_included=False)
        ),
        vol.Optional(CONF_OUTPUT_PARTY, default=DEFAULT_OUTPUT_PARTY): PARTY_ID,
        vol.Optional(CONF_INPUT_SOURCE, default=DEFAULT_INPUT_SOURCE): vol.In(
            INPUT_SOURCES
        ),
        vol.Optional(CONF_INPUT_FILE, default=None): vol.Any(None, vol.IsFile()),
        vol.Optional(CONF_INPUT_ASSIGNMENT, default=None): vol.Any(
            None, input_assignment
        ),
        vol.Optional(CONF_SESSION_ID, default=DEFAULT_SESSION_ID): vol.All(
            str, vol.Length(min=1, max=255)
        ),
    }
)


def _role_list(value: Any) -> tuple[str, ...]:
    return tuple(r.strip() for r in str(value).split(",") if r.strip())


METADATA_SCHEMA = vol.Schema(
    {
        vol.Optional(META_INPUT_GROUP_ROLES, default=()): _role_list,
        vol.Optional(META_BIT_ORDER, default=BIT_ORDER_LSB_FIRST): vol.In(
            [BIT_ORDER_LSB_FIRST, BIT_ORDER_MSB_FIRST]
        ),
        vol.Optional(META_KNOWN_ANSWER_VECTORS, default=""): str,
        vol.Optional(META_DESCRIPTION, default=""): str,
    }
)


def parse_key_value_text(text: str, source: str = "<text>") -> dict[str, str]:
    """Parse flat `key = value` text; `#` starts a comment line."""
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{source}:{number}: expected key = value")
        values[key.strip()] = value.strip()
    return values


def load_key_value_file(path: str | Path) -> dict[str, str]:
    """Read a flat key-value config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
    return parse_key_value_text(text, str(path))


def validate(schema: vol.Schema, data: Mapping[str, Any]) -> dict[str, Any]:
    """Run a schema and turn voluptuous errors into ConfigError."""
    try:
        return schema(dict(data))
    except vol.MultipleInvalid as err:
        first = err.errors[0]
        key = str(first.path[0]) if first.path else None
        raise ConfigError(f"invalid configuration: {err}", key) from err
    except vol.Invalid as err:
        key = str(err.path[0]) if err.path else None
        raise ConfigError(f"invalid configuration: {err}", key) from err


@dataclass(frozen=True)
class SessionConfig:
    """Everything one party process needs to join a session."""

    party_id: int
    listen_address: tuple[str, int]
    successor_address: tuple[str, int]
    circuit_path: Path
    lane_count: int = DEFAULT_LANE_COUNT
    seed: int | None = None
    timeout_seconds: float = DEFAULT_TIMEOUT_SECONDS
    output_party: int = DEFAULT_OUTPUT_PARTY
    input_source: str = DEFAULT_INPUT_SOURCE
    input_file: Path | None = None
    input_assignment: dict[int, int] | None = None
    session_id: str = DEFAULT_SESSION_ID

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "SessionConfig":
        """Validate raw values (strings allowed) and build a SessionConfig."""
        cleaned = {k: v for k, v in data.items() if v is not None}
        values = validate(SESSION_CONFIG_SCHEMA, cleaned)
        _LOGGER.debug("Session config validated for party %s", values[CONF_PARTY_ID])
        return cls(
            party_id=values[CONF_PARTY_ID],
            listen_address=values[CONF_LISTEN_ADDRESS],
            successor_address=values[CONF_SUCCESSOR_ADDRESS],
            circuit_path=Path(values[CONF_CIRCUIT_PATH]),
            lane_count=values[CONF_LANE_COUNT],
            seed=values[CONF_SEED],
            timeout_seconds=values[CONF_TIMEOUT_SECONDS],
            output_party=values[CONF_OUTPUT_PARTY],
            input_source=values[CONF_INPUT_SOURCE],
            input_file=(
                Path(values[CONF_INPUT_FILE]) if values[CONF_INPUT_FILE] else None
            ),
            input_assignment=values[CONF_INPUT_ASSIGNMENT],
            session_id=values[CONF_SESSION_ID],
        )

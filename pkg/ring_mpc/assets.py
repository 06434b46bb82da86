"""Circuit assets that are too large to ship and are downloaded on demand.

A fetched file is only written once it parses, validates and reproduces every
known-answer vector in the sidecar that sits next to the destination path.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

import httpx

from .circuit import known_answer_results, load_metadata, parse_bristol, validate
from .const import ANDS_PER_AES, ASSET_FETCH_TIMEOUT_SECONDS
from .exceptions import AssetError, CircuitError

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class FetchedCircuit:
    path: Path
    sha256: str
    and_count: int
    known_answers: int


def fetch_circuit(
    url: str,
    destination: str | Path,
    expected_sha256: str | None = None,
    client: httpx.Client | None = None,
    timeout: float = ASSET_FETCH_TIMEOUT_SECONDS,
) -> FetchedCircuit:
    """Download a Bristol-fashion circuit to `destination` after checking it."""
    destination = Path(destination)
    owned = client is None
    http = client or httpx.Client(timeout=timeout, follow_redirects=True)
    try:
        response = http.get(url)
        response.raise_for_status()
    except httpx.HTTPError as err:
        raise AssetError(f"cannot download {url}: {err}") from err
    finally:
        if owned:
            http.close()

    body = response.content
    digest = hashlib.sha256(body).hexdigest()
    if expected_sha256 and digest != expected_sha256.strip().lower():
        raise AssetError(f"{url} has sha256 {digest}, expected {expected_sha256}")

    try:
        text = body.decode("ascii")
    except UnicodeDecodeError as err:
        raise CircuitError(f"{url} is not a text circuit file") from err
    c = parse_bristol(text)
    report = validate(c)
    if not report.passed:
        raise CircuitError(f"{url} failed validation: {report.errors[0]}")
    results = known_answer_results(c, load_metadata(destination))
    if not all(results):
        raise CircuitError(
            f"{url} fails {results.count(False)} of {len(results)} known answers"
        )
    if c.and_count != ANDS_PER_AES:
        _LOGGER.warning(
            "%s has %d AND gates; the throughput model assumes %d",
            url,
            c.and_count,
            ANDS_PER_AES,
        )

    destination.parent.mkdir(parents=True, exist_ok=True)
    destination.write_bytes(body)
    _LOGGER.info("📥 Stored %s (%d AND gates) at %s", url, c.and_count, destination)
    return FetchedCircuit(destination, digest, c.and_count, len(results))

"""Ring-topology message transport.

Every party sends only to its successor and receives only from its predecessor.
Frames are a 5-byte header (type byte, little-endian uint32 payload length)
followed by the payload.

Two interchangeable endpoints share one base class: an in-memory ring built on
asyncio queues for single-process sessions, and a TCP ring built on asyncio
streams.
"""

from __future__ import annotations

import asyncio
import contextlib
import logging
import socket
import struct
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .const import (
    DEFAULT_MAX_FRAME_BYTES,
    DEFAULT_SESSION_ID,
    DEFAULT_TIMEOUT_SECONDS,
    FRAME_HEADER_SIZE,
    MESSAGE_TYPES,
    MSG_CONTROL,
    PARTY_IDS,
    PROTOCOL_VERSION,
)
from .exceptions import (
    FrameDecodeError,
    FrameTooLargeError,
    HandshakeError,
    ProtocolDesyncError,
    RingMpcError,
    TransportConnectionError,
    TransportTimeoutError,
)
from .sharing import ring_index

if TYPE_CHECKING:
    from .config import SessionConfig

_LOGGER = logging.getLogger(__name__)

_HEADER = struct.Struct("<BI")
_HELLO = struct.Struct("<BB")
CONNECT_RETRY_SECONDS = 0.05


@dataclass(frozen=True)
class Message:
    msg_type: int
    payload: bytes

    @property
    def length(self) -> int:
        return len(self.payload)

    @property
    def type_name(self) -> str:
        return MESSAGE_TYPES.get(self.msg_type, f"0x{self.msg_type:02x}")


def encode_frame(msg_type: int, payload: bytes) -> bytes:
    """Header plus payload, ready for the wire."""
    if msg_type not in MESSAGE_TYPES:
        raise FrameDecodeError(f"unknown message type 0x{msg_type:02x}")
    return _HEADER.pack(msg_type, len(payload)) + bytes(payload)


def decode_header(header: bytes) -> tuple[int, int]:
    try:
        msg_type, length = _HEADER.unpack(header)
    except struct.error as err:
        raise FrameDecodeError(f"invalid frame header: {err}") from err
    if msg_type not in MESSAGE_TYPES:
        raise FrameDecodeError(f"unknown message type 0x{msg_type:02x}")
    return msg_type, length


def decode_frame(data: bytes) -> tuple[Message, bytes]:
    """Decode one frame from the front of `data`; returns the message and the rest."""
    msg_type, length = decode_header(data[:FRAME_HEADER_SIZE])
    end = FRAME_HEADER_SIZE + length
    if len(data) < end:
        have = len(data) - FRAME_HEADER_SIZE
        raise FrameDecodeError(
            f"truncated frame: need {length} payload bytes, have {have}"
        )
    return Message(msg_type, bytes(data[FRAME_HEADER_SIZE:end])), bytes(data[end:])


@dataclass
class DirectionCounts:
    messages: int = 0
    payload_bytes: int = 0
    framed_bytes: int = 0

    def add(self, payload_length: int) -> None:
        self.messages += 1
        self.payload_bytes += payload_length
        self.framed_bytes += payload_length + FRAME_HEADER_SIZE


def _zeroed() -> dict[int, DirectionCounts]:
    return {msg_type: DirectionCounts() for msg_type in MESSAGE_TYPES}


@dataclass
class TrafficCounters:
    """Per message type: messages, payload bytes and framed bytes, each direction."""

    sent: dict[int, DirectionCounts] = field(default_factory=_zeroed)
    received: dict[int, DirectionCounts] = field(default_factory=_zeroed)

    def record_sent(self, msg_type: int, payload_length: int) -> None:
        self.sent[msg_type].add(payload_length)

    def record_received(self, msg_type: int, payload_length: int) -> None:
        self.received[msg_type].add(payload_length)

    def snapshot(self) -> "TrafficCounters":
        return TrafficCounters(
            sent={k: DirectionCounts(**vars(v)) for k, v in self.sent.items()},
            received={k: DirectionCounts(**vars(v)) for k, v in self.received.items()},
        )

    def __add__(self, other: "TrafficCounters") -> "TrafficCounters":
        total = self.snapshot()
        pairs = ((total.sent, other.sent), (total.received, other.received))
        for mine, theirs in pairs:
            for msg_type, counts in theirs.items():
                mine[msg_type].messages += counts.messages
                mine[msg_type].payload_bytes += counts.payload_bytes
                mine[msg_type].framed_bytes += counts.framed_bytes
        return total

    def payload_bits_sent(self, msg_type: int) -> int:
        return self.sent[msg_type].payload_bytes * 8

    def as_dict(self) -> dict[str, dict[str, dict[str, int]]]:
        return {
            direction: {
                MESSAGE_TYPES[msg_type]: dict(vars(counts))
                for msg_type, counts in table.items()
            }
            for direction, table in (("sent", self.sent), ("received", self.received))
        }


class RingEndpoint:
    """One party's view of the ring: a link to the successor, one from the predecessor.

    Subclasses provide `_write_frame` and `_read_frame`; this class does framing,
    size caps, timeouts, accounting and optional transcript recording.
    """

    def __init__(
        self,
        party_id: int,
        session_id: str = DEFAULT_SESSION_ID,
        timeout: float = DEFAULT_TIMEOUT_SECONDS,
        max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES,
        record_transcript: bool = False,
    ) -> None:
        if party_id not in PARTY_IDS:
            raise ValueError(f"party_id must be one of {PARTY_IDS}")
        self.party_id = party_id
        self.session_id = session_id
        self.protocol_version = PROTOCOL_VERSION
        self.timeout = timeout
        self.max_frame_bytes = max_frame_bytes
        self.keys_exchanged = False
        self.traffic = TrafficCounters()
        self.transcript: list[tuple[str, bytes]] | None = (
            [] if record_transcript else None
        )

    @property
    def successor(self) -> int:
        return ring_index(self.party_id + 1)

    @property
    def predecessor(self) -> int:
        return ring_index(self.party_id - 1)

    async def _write_frame(self, frame: bytes) -> None:
        raise NotImplementedError

    async def _read_frame(self) -> bytes:
        raise NotImplementedError

    async def send_to_next(self, msg_type: int, payload: bytes) -> None:
        """Frame `payload` and flush it to the successor."""
        if len(payload) > self.max_frame_bytes:
            raise FrameTooLargeError(
                f"payload of {len(payload)} bytes exceeds the "
                f"{self.max_frame_bytes} byte cap"
            )
        frame = encode_frame(msg_type, payload)
        try:
            await asyncio.wait_for(self._write_frame(frame), self.timeout)
        except asyncio.TimeoutError as err:
            raise TransportTimeoutError(
                f"party {self.party_id}: send to party {self.successor} timed out"
            ) from err
        self.traffic.record_sent(msg_type, len(payload))
        if self.transcript is not None:
            self.transcript.append(("sent", frame))
        _LOGGER.debug(
            "Party %s -> %s: %s (%d bytes)",
            self.party_id,
            self.successor,
            MESSAGE_TYPES[msg_type],
            len(payload),
        )

    async def recv_from_prev(self) -> Message:
        """Wait for the next frame from the predecessor."""
        try:
            frame = await asyncio.wait_for(self._read_frame(), self.timeout)
        except asyncio.TimeoutError as err:
            raise TransportTimeoutError(
                f"party {self.party_id}: no message from party {self.predecessor} "
                f"within {self.timeout}s"
            ) from err
        _, length = decode_header(frame[:FRAME_HEADER_SIZE])
        if length > self.max_frame_bytes:
            raise FrameTooLargeError(
                f"incoming frame of {length} bytes exceeds the "
                f"{self.max_frame_bytes} byte cap"
            )
        message, rest = decode_frame(frame)
        if rest:
            raise FrameDecodeError(f"{len(rest)} trailing bytes after frame")
        self.traffic.record_received(message.msg_type, message.length)
        if self.transcript is not None:
            self.transcript.append(("received", frame))
        return message

    async def expect(self, msg_type: int) -> Message:
        """Receive and insist on a message type."""
        message = await self.recv_from_prev()
        if message.msg_type != msg_type:
            raise ProtocolDesyncError(
                f"party {self.party_id} expected {MESSAGE_TYPES[msg_type]}, "
                f"got {message.type_name}"
            )
        return message

    def counters(self) -> TrafficCounters:
        """Consistent snapshot of the traffic counters."""
        return self.traffic.snapshot()

    def transcript_bytes(self) -> bytes:
        if self.transcript is None:
            return b""
        return b"".join(
            direction[0].encode() + frame for direction, frame in self.transcript
        )

    async def close(self) -> None:
        """Release the links."""


class InMemoryEndpoint(RingEndpoint):
    """Endpoint whose links are unbounded asyncio queues of frames."""

    def __init__(
        self,
        party_id: int,
        outbound: asyncio.Queue,
        inbound: asyncio.Queue,
        **kwargs,
    ) -> None:
        super().__init__(party_id, **kwargs)
        self._outbound = outbound
        self._inbound = inbound

    async def _write_frame(self, frame: bytes) -> None:
        self._outbound.put_nowait(frame)

    async def _read_frame(self) -> bytes:
        frame = await self._inbound.get()
        if frame is None:
            self._inbound.put_nowait(None)
            raise TransportConnectionError(
                f"party {self.party_id}: link from party {self.predecessor} closed"
            )
        return frame

    async def close(self) -> None:
        self._outbound.put_nowait(None)


def in_memory_ring(
    session_id: str = DEFAULT_SESSION_ID,
    timeout: float = DEFAULT_TIMEOUT_SECONDS,
    max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES,
    record_transcript: bool = False,
) -> tuple[InMemoryEndpoint, InMemoryEndpoint, InMemoryEndpoint]:
    """Three endpoints wired 1 -> 2 -> 3 -> 1."""
    links = {party: asyncio.Queue() for party in PARTY_IDS}
    endpoints = tuple(
        InMemoryEndpoint(
            party,
            outbound=links[party],
            inbound=links[ring_index(party - 1)],
            session_id=session_id,
            timeout=timeout,
            max_frame_bytes=max_frame_bytes,
            record_transcript=record_transcript,
        )
        for party in PARTY_IDS
    )
    return endpoints  # type: ignore[return-value]


def _set_nodelay(writer: asyncio.StreamWriter) -> None:
    sock = writer.get_extra_info("socket")
    if sock is not None:
        with contextlib.suppress(OSError):
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)


class TcpRingEndpoint(RingEndpoint):
    """Endpoint over two TCP connections: one accepted from the predecessor, one dialed.

    A background task keeps draining the predecessor's stream into a queue, so a party
    blocked on a send never stalls its predecessor.
    """

    def __init__(
        self,
        party_id: int,
        listen_address: tuple[str, int],
        successor_address: tuple[str, int] | None = None,
        **kwargs,
    ) -> None:
        super().__init__(party_id, **kwargs)
        self.listen_address = listen_address
        self.successor_address = successor_address
        self._server: asyncio.AbstractServer | None = None
        self._writer: asyncio.StreamWriter | None = None
        self._pred_writer: asyncio.StreamWriter | None = None
        self._pred_connected = asyncio.Event()
        self._inbox: asyncio.Queue = asyncio.Queue()
        self._reader_task: asyncio.Task | None = None

    @property
    def listen_port(self) -> int:
        if self._server is None or not self._server.sockets:
            return self.listen_address[1]
        return self._server.sockets[0].getsockname()[1]

    async def listen(self) -> int:
        """Start accepting the predecessor; returns the bound port."""
        host, port = self.listen_address
        try:
            self._server = await asyncio.start_server(self._on_connection, host, port)
        except OSError as err:
            raise TransportConnectionError(
                f"party {self.party_id}: cannot listen on {host}:{port}: {err}"
            ) from err
        _LOGGER.debug(
            "Party %s listening on %s:%s", self.party_id, host, self.listen_port
        )
        return self.listen_port

    async def _on_connection(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        if self._pred_connected.is_set():
            _LOGGER.warning(
                "Party %s: dropping extra inbound connection from %s",
                self.party_id,
                writer.get_extra_info("peername"),
            )
            writer.close()
            return
        _set_nodelay(writer)
        self._pred_writer = writer
        self._pred_connected.set()
        self._reader_task = asyncio.create_task(self._read_loop(reader))

    async def _read_loop(self, reader: asyncio.StreamReader) -> None:
        try:
            while True:
                header = await reader.readexactly(FRAME_HEADER_SIZE)
                _, length = decode_header(header)
                if length > self.max_frame_bytes:
                    raise FrameTooLargeError(
                        f"incoming frame of {length} bytes exceeds the "
                        f"{self.max_frame_bytes} byte cap"
                    )
                payload = await reader.readexactly(length)
                self._inbox.put_nowait(header + payload)
        except asyncio.IncompleteReadError:
            self._inbox.put_nowait(
                TransportConnectionError(
                    f"party {self.party_id}: party {self.predecessor} closed the link"
                )
            )
        except RingMpcError as err:
            self._inbox.put_nowait(err)
        except OSError as err:
            self._inbox.put_nowait(
                TransportConnectionError(f"party {self.party_id}: read failed: {err}")
            )

    async def connect(self, deadline: float | None = None) -> None:
        """Dial the successor, retrying until it listens or the timeout expires."""
        if self.successor_address is None:
            raise TransportConnectionError(
                f"party {self.party_id}: no successor address"
            )
        host, port = self.successor_address
        loop = asyncio.get_running_loop()
        deadline = deadline or loop.time() + self.timeout
        while True:
            try:
                _, self._writer = await asyncio.open_connection(host, port)
                break
            except OSError as err:
                if loop.time() >= deadline:
                    raise TransportTimeoutError(
                        f"party {self.party_id}: cannot reach {host}:{port}: {err}"
                    ) from err
                await asyncio.sleep(CONNECT_RETRY_SECONDS)
        _set_nodelay(self._writer)

    async def handshake(self) -> None:
        """Exchange CONTROL hellos and check the predecessor's identity."""
        hello = _HELLO.pack(self.protocol_version, self.party_id)
        hello += self.session_id.encode()
        await self.send_to_next(MSG_CONTROL, hello)
        try:
            await asyncio.wait_for(self._pred_connected.wait(), self.timeout)
        except asyncio.TimeoutError as err:
            raise TransportTimeoutError(
                f"party {self.party_id}: predecessor never connected"
            ) from err
        message = await self.recv_from_prev()
        if message.msg_type != MSG_CONTROL or len(message.payload) < _HELLO.size:
            raise HandshakeError(f"party {self.party_id}: malformed hello")
        version, peer_id = _HELLO.unpack(message.payload[: _HELLO.size])
        peer_session = message.payload[_HELLO.size :].decode("utf-8", "replace")
        if version != self.protocol_version:
            raise HandshakeError(
                f"protocol version mismatch: local {self.protocol_version}, "
                f"peer {version}"
            )
        if peer_id != self.predecessor:
            raise HandshakeError(
                f"party {self.party_id} expected predecessor {self.predecessor}, "
                f"got party {peer_id}"
            )
        if peer_session != self.session_id:
            raise HandshakeError(
                f"session mismatch: local {self.session_id!r}, peer {peer_session!r}"
            )
        _LOGGER.info("🤝 Party %s: ring handshake complete", self.party_id)

    async def _write_frame(self, frame: bytes) -> None:
        if self._writer is None:
            raise TransportConnectionError(f"party {self.party_id}: not connected")
        try:
            self._writer.write(frame)
            await self._writer.drain()
        except (ConnectionError, OSError) as err:
            raise TransportConnectionError(
                f"party {self.party_id}: send failed: {err}"
            ) from err

    async def _read_frame(self) -> bytes:
        item = await self._inbox.get()
        if isinstance(item, Exception):
            self._inbox.put_nowait(item)
            raise item
        return item

    async def close(self) -> None:
        if self._reader_task is not None:
            self._reader_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self._reader_task
        for writer in (self._writer, self._pred_writer):
            if writer is not None:
                writer.close()
                with contextlib.suppress(Exception):
                    await writer.wait_closed()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        self._writer = self._pred_writer = self._server = None


async def connect_ring(
    config: "SessionConfig", record_transcript: bool = False
) -> TcpRingEndpoint:
    """Join a TCP ring as configured: listen, dial the successor, shake hands."""
    endpoint = TcpRingEndpoint(
        config.party_id,
        listen_address=config.listen_address,
        successor_address=config.successor_address,
        session_id=config.session_id,
        timeout=config.timeout_seconds,
        record_transcript=record_transcript,
    )
    try:
        await endpoint.listen()
        await endpoint.connect()
        await endpoint.handshake()
    except BaseException:
        await endpoint.close()
        raise
    return endpoint


async def open_local_tcp_ring(
    session_id: str = DEFAULT_SESSION_ID,
    timeout: float = DEFAULT_TIMEOUT_SECONDS,
    record_transcript: bool = False,
    host: str = "127.0.0.1",
) -> tuple[TcpRingEndpoint, TcpRingEndpoint, TcpRingEndpoint]:
    """Three TCP endpoints on loopback in this process, on ephemeral ports."""
    endpoints = [
        TcpRingEndpoint(
            party,
            listen_address=(host, 0),
            session_id=session_id,
            timeout=timeout,
            record_transcript=record_transcript,
        )
        for party in PARTY_IDS
    ]
    try:
        ports = [await endpoint.listen() for endpoint in endpoints]
        for index, endpoint in enumerate(endpoints):
            endpoint.successor_address = (host, ports[(index + 1) % len(endpoints)])
        await asyncio.gather(*(endpoint.connect() for endpoint in endpoints))
        await asyncio.gather(*(endpoint.handshake() for endpoint in endpoints))
    except BaseException:
        await asyncio.gather(*(endpoint.close() for endpoint in endpoints))
        raise
    return tuple(endpoints)  # type: ignore[return-value]

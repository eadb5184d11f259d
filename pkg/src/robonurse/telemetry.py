"""Cloud-layer stand-in: newline-delimited frame encoding (wire protocol v1),
batched publishing with a seeded latency model, command ingestion, and
append-only persistence with replay.

The frame schema is documented in PROTOCOL.md and treated as a compatibility
contract for the browser console.
"""

from __future__ import annotations

import logging
import math
import re
import urllib.parse
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

PROTOCOL_VERSION = "v1"
FRAME_TYPES = ("vitals", "med", "mode", "alert", "pose", "ack", "cmd")
DEFAULT_PORT = 7071
OUTBOUND_BUFFER_LIMIT = 10_000

_TOKEN_SAFE = re.compile(r"^[A-Za-z0-9_.:+\-%]*$")
_INT_RE = re.compile(r"^-?\d+$")
_FLOAT_RE = re.compile(r"^-?(\d+\.\d*|\.\d+|\d+)([eE][-+]?\d+)?$")


class DecodeError(ValueError):
    """Malformed wire bytes; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int = 0):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


@dataclass(frozen=True)
class TelemetryFrame:
    type: str
    seq: int
    sim_time: float
    patient: str | None = None
    payload: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.type not in FRAME_TYPES:
            raise ValueError(f"unknown frame type {self.type!r}")
        if self.seq < 0:
            raise ValueError("sequence number must be non-negative")
        if not math.isfinite(self.sim_time):
            raise ValueError("sim_time must be finite")


@dataclass(frozen=True)
class LatencyModel:
    """Uniform cloud-link latency over the observed range, seeded."""

    min_ms: float = 500.0
    max_ms: float = 1200.0
    seed: int = 0

    def __post_init__(self):
        if self.min_ms > self.max_ms:
            raise ValueError("latency bounds inverted")

    def sampler(self) -> "_LatencySampler":
        return _LatencySampler(self)


class _LatencySampler:
    def __init__(self, model: LatencyModel):
        self.model = model
        self._rng = np.random.default_rng(model.seed)

    def sample_ms(self) -> float:
        return float(self._rng.uniform(self.model.min_ms, self.model.max_ms))


@dataclass(frozen=True)
class PublisherConfig:
    update_period_ms: float = 1100.0
    serial_delay_ms: float = 36.0
    batch: bool = True

    def __post_init__(self):
        if self.update_period_ms <= 0:
            raise ValueError("update period must be positive")


def _encode_value(value) -> str:
    if isinstance(value, bool):
        value = int(value)
    if isinstance(value, float):
        text = repr(value)
    else:
        text = str(value)
    if _TOKEN_SAFE.match(text) and "%" not in text:
        return text
    return urllib.parse.quote(text, safe="")


def _decode_value(text: str):
    raw = urllib.parse.unquote(text)
    if _INT_RE.match(raw):
        return int(raw)
    if _FLOAT_RE.match(raw) or raw in ("inf", "-inf"):
        try:
            return float(raw)
        except ValueError:
            return raw
    return raw


def encode_frame(frame: TelemetryFrame) -> str:
    """One frame per line: 'v1 type=<t> seq=<n> t=<s> [patient=<id>] k=v ...'.

    Payload keys are emitted sorted so encoding is canonical.
    """
    parts = [
        PROTOCOL_VERSION,
        f"type={frame.type}",
        f"seq={frame.seq}",
        f"t={_encode_value(float(frame.sim_time))}",
    ]
    if frame.patient is not None:
        parts.append(f"patient={_encode_value(frame.patient)}")
    for key in sorted(frame.payload):
        if not _TOKEN_SAFE.match(key) or "=" in key or "%" in key:
            raise ValueError(f"payload key {key!r} not token-safe")
        parts.append(f"{key}={_encode_value(frame.payload[key])}")
    return " ".join(parts)


def decode_frame(line: str) -> TelemetryFrame:
    """Inverse of encode_frame; raises DecodeError with the byte offset."""
    stripped = line.rstrip("\n")
    if not stripped.strip():
        raise DecodeError("empty line", 0)
    tokens = stripped.split(" ")
    if tokens[0] != PROTOCOL_VERSION:
        raise DecodeError(f"unsupported version {tokens[0]!r}", 0)
    fields: dict[str, str] = {}
    order: list[str] = []
    offset = len(tokens[0]) + 1
    for token in tokens[1:]:
        if not token:
            raise DecodeError("empty token", offset)
        if "=" not in token:
            raise DecodeError(f"token {token!r} missing '='", offset)
        key, _, value = token.partition("=")
        if key in fields:
            raise DecodeError(f"duplicate key {key!r}", offset)
        fields[key] = value
        order.append(key)
        offset += len(token) + 1
    for required in ("type", "seq", "t"):
        if required not in fields:
            raise DecodeError(f"missing required key {required!r}", 0)
    ftype = fields.pop("type")
    if ftype not in FRAME_TYPES:
        raise DecodeError(f"unknown frame type {ftype!r}", 0)
    try:
        seq = int(fields.pop("seq"))
        sim_time = float(fields.pop("t"))
    except ValueError as exc:
        raise DecodeError(f"bad header value: {exc}", 0) from None
    patient = None
    if "patient" in fields:
        patient = str(_decode_value(fields.pop("patient")))
    payload = {key: _decode_value(fields[key]) for key in order if key in fields}
    try:
        return TelemetryFrame(
            type=ftype, seq=seq, sim_time=sim_time, patient=patient, payload=payload
        )
    except ValueError as exc:
        raise DecodeError(str(exc), 0) from None


@dataclass(frozen=True)
class Delivery:
    deliver_time: float
    frames: tuple[TelemetryFrame, ...]


SENSOR_FRAME_TYPES = ("vitals", "pose")


def publish(
    frames: Sequence[TelemetryFrame],
    cfg: PublisherConfig = PublisherConfig(),
    latency: LatencyModel = LatencyModel(),
    start_time: float = 0.0,
) -> list[Delivery]:
    """Compute the delivery schedule for a frame stream.

    Sensor frames (vitals/pose) are batched at the update period; event
    frames go out individually. Every delivery is delayed by the serial link
    plus a seeded uniform latency sample, and delivery times are made
    monotone so per-stream ordering survives the jitter.
    """
    sampler = latency.sampler()
    period_s = cfg.update_period_ms / 1000.0
    serial_s = cfg.serial_delay_ms / 1000.0

    sends: list[tuple[float, list[TelemetryFrame]]] = []
    batches: dict[int, list[TelemetryFrame]] = {}
    for frame in frames:
        if cfg.batch and frame.type in SENSOR_FRAME_TYPES:
            # Boundary-inclusive: a frame at k*period rides the k-th flush.
            ratio = round((frame.sim_time - start_time) / period_s, 9)
            window = max(1, int(math.ceil(ratio)))
            batches.setdefault(window, []).append(frame)
        else:
            sends.append((frame.sim_time, [frame]))
    for window, batch in batches.items():
        sends.append((start_time + window * period_s, batch))
    sends.sort(key=lambda item: (item[0], item[1][0].seq))

    deliveries: list[Delivery] = []
    last_delivery = -math.inf
    for send_time, batch in sends:
        delay = serial_s + sampler.sample_ms() / 1000.0
        deliver_time = max(send_time + delay, last_delivery)
        last_delivery = deliver_time
        deliveries.append(Delivery(deliver_time=deliver_time, frames=tuple(batch)))
    return deliveries


class FrameStream:
    """Monotone frame factory: assigns sequence numbers and validates times."""

    def __init__(self):
        self.seq = 0
        self.last_time = -math.inf

    def make(
        self, type: str, sim_time: float, patient: str | None = None, **payload
    ) -> TelemetryFrame:
        sim_time = max(sim_time, self.last_time)
        frame = TelemetryFrame(
            type=type,
            seq=self.seq,
            sim_time=sim_time,
            patient=patient,
            payload=payload,
        )
        self.seq += 1
        self.last_time = sim_time
        return frame


class OutboundQueue:
    """Bounded per-connection buffer; overflow drops oldest and raises an
    aggregated drop-count alert on the next drain."""

    def __init__(self, limit: int = OUTBOUND_BUFFER_LIMIT):
        self.limit = limit
        self._frames: list[TelemetryFrame] = []
        self.dropped = 0

    def push(self, frame: TelemetryFrame):
        self._frames.append(frame)
        while len(self._frames) > self.limit:
            self._frames.pop(0)
            self.dropped += 1

    def drain(self) -> tuple[list[TelemetryFrame], int]:
        """Returns buffered frames plus the drop count since the last drain."""
        frames, self._frames = self._frames, []
        dropped, self.dropped = self.dropped, 0
        return frames, dropped


class CommandIngestError(ValueError):
    """Inbound command rejected; the reason goes into the reject ack."""


VALID_COMMAND_KINDS = (
    "priority_checkup",
    "manual_dispense",
    "fluid_supply",
    "camera_pan",
    "return_to_dock",
    "set_schedule",
)


def parse_command_frame(line: str) -> TelemetryFrame:
    """Decode and structurally validate an inbound command frame."""
    try:
        frame = decode_frame(line)
    except DecodeError as exc:
        raise CommandIngestError(f"undecodable command: {exc}") from None
    if frame.type != "cmd":
        raise CommandIngestError(f"expected cmd frame, got {frame.type!r}")
    kind = frame.payload.get("kind")
    if kind not in VALID_COMMAND_KINDS:
        raise CommandIngestError(f"unknown command kind {kind!r}")
    return frame


def persist(frames: Iterable[TelemetryFrame], path) -> int:
    """Append frames to a log file (same wire encoding); returns line count."""
    count = 0
    with open(path, "a", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(encode_frame(frame) + "\n")
            count += 1
    return count


def read_log(path) -> tuple[list[TelemetryFrame], int]:
    """Read a persisted log; corrupt lines are skipped with a warning count."""
    frames: list[TelemetryFrame] = []
    skipped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                frames.append(decode_frame(line))
            except DecodeError as exc:
                skipped += 1
                log.warning("skipping corrupt line %d of %s: %s", lineno, path, exc)
    return frames, skipped


def iter_replay(
    frames: Sequence[TelemetryFrame], speed: float = 0.0
) -> Iterator[tuple[float, TelemetryFrame]]:
    """Yield (wall_delay_s, frame) pairs reproducing the recorded pacing.

    speed 0 replays as fast as possible (zero delays); speed 1 is real time;
    larger is faster.
    """
    if speed < 0:
        raise ValueError("speed must be non-negative")
    previous = None
    for frame in frames:
        if speed == 0 or previous is None:
            delay = 0.0
        else:
            delay = max(0.0, (frame.sim_time - previous) / speed)
        previous = frame.sim_time
        yield delay, frame

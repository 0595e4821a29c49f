"""Parsing and validation of raw sensor logs and session metadata.

A sensor log is a CSV stream from the 9-channel room collector (two samples
per second, nominally 1000 per session). Session metadata is a flat
``key = value`` text document with room geometry, door/desk compass
directions, ambient noise and optional heart rate.

Values are unit-agnostic reals: the CSV header may carry unit labels in
parentheses (``temperature (C)``) but they are never interpreted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

# Canonical channel order of the sensor CSV. This is the toolkit's wire
# contract; the firmware's own column order is not standardized anywhere.
CHANNELS = (
    "temperature",
    "humidity",
    "air_pressure",
    "light_intensity",
    "toxic_chemical",
    "tvoc",
    "eco2",
    "h2",
    "ethanol",
)

CSV_HEADER = ("timestamp_ms",) + CHANNELS

#: Protocol target for a complete session; shorter logs warn, never fail.
DEFAULT_MIN_SAMPLES = 1000

#: Masking threshold for the opt-in despike pass, in population-z units.
DEFAULT_Z_THRESHOLD = 4.0


class IngestError(ValueError):
    """Base class for sensor-log / metadata parsing failures."""


class MalformedRow(IngestError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NonMonotonicTimestamp(IngestError):
    def __init__(self, line: int, previous: int, current: int):
        super().__init__(
            f"line {line}: timestamp {current} ms is earlier than previous sample ({previous} ms)"
        )
        self.line = line


class EmptyLog(IngestError):
    pass


class MissingField(IngestError):
    def __init__(self, name: str):
        super().__init__(f"missing required field: {name}")
        self.field = name


class UnknownField(IngestError):
    def __init__(self, name: str):
        super().__init__(f"unknown field: {name}")
        self.field = name


class OutOfRange(IngestError):
    def __init__(self, name: str, message: str):
        super().__init__(f"{name}: {message}")
        self.field = name


@dataclass(frozen=True, slots=True)
class SensorSample:
    """One 9-channel reading, timestamped in ms since session start."""

    timestamp_ms: int
    temperature: float
    humidity: float
    air_pressure: float
    light_intensity: float
    toxic_chemical: float
    tvoc: float
    eco2: float
    h2: float
    ethanol: float

    def channel(self, name: str) -> float:
        return getattr(self, name)


@dataclass(frozen=True)
class SensorLog:
    """Ordered samples for one session, plus optional per-channel spike masks.

    ``channel_masks`` maps a channel name to the set of sample indices whose
    value is excluded from that channel's aggregation. Samples are never
    deleted wholesale; a sample masked on one channel still contributes its
    other channels.
    """

    session_id: str
    samples: tuple[SensorSample, ...]
    channel_masks: dict[str, frozenset[int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    def duration_ms(self) -> int:
        return self.samples[-1].timestamp_ms - self.samples[0].timestamp_ms

    def is_complete(self, min_samples: int = DEFAULT_MIN_SAMPLES) -> bool:
        return len(self.samples) >= min_samples

    def channel_values(self, name: str) -> np.ndarray:
        """All values of one channel, in sample order, mask ignored."""
        if name not in CHANNELS:
            raise KeyError(name)
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    def channel_matrix(self) -> np.ndarray:
        """(n_samples, 9) array in canonical channel order, mask ignored."""
        return np.array(
            [[getattr(s, c) for c in CHANNELS] for s in self.samples], dtype=float
        )

    def unmasked_values(self, name: str) -> np.ndarray:
        values = self.channel_values(name)
        masked = self.channel_masks.get(name)
        if not masked:
            return values
        keep = np.ones(len(values), dtype=bool)
        keep[list(masked)] = False
        return values[keep]


@dataclass(frozen=True)
class SessionMeta:
    """Room geometry and per-session context.

    ``height_ft`` is the second floor dimension (the room's other side, not
    the ceiling). Direction angles are stored normalized to [0, 360).
    Heart rate is passthrough metadata; it never enters the feature set.
    """

    session_id: str
    width_ft: float
    height_ft: float
    is_rectangle: bool
    door_direction_deg: float
    desk_direction_deg: float
    noise_db: float
    heart_rate_bpm: float | None = None


def _strip_unit_label(cell: str) -> str:
    # "temperature (C)" -> "temperature"; the unit text is metadata only
    return cell.split("(", 1)[0].strip()


def parse_sensor_log(raw_csv_text: str, session_id: str) -> SensorLog:
    """Parse a sensor CSV (header + rows) into a SensorLog.

    Raises MalformedRow (naming the 1-based line), NonMonotonicTimestamp for
    a strictly decreasing timestamp (equal timestamps are allowed: sensor
    bursts), or EmptyLog when no data rows are present.
    """
    lines = raw_csv_text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise EmptyLog(f"session {session_id}: no content")

    header = tuple(_strip_unit_label(c) for c in lines[0].split(","))
    if header != CSV_HEADER:
        raise MalformedRow(1, f"header {header!r} does not match {CSV_HEADER!r}")

    samples: list[SensorSample] = []
    previous_ts: int | None = None
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise MalformedRow(line_no, "blank line inside data section")
        cells = line.split(",")
        if len(cells) != len(CSV_HEADER):
            raise MalformedRow(
                line_no, f"expected {len(CSV_HEADER)} columns, got {len(cells)}"
            )
        try:
            ts = int(cells[0].strip())
        except ValueError:
            raise MalformedRow(line_no, f"timestamp_ms {cells[0]!r} is not an integer")
        if ts < 0:
            raise MalformedRow(line_no, f"timestamp_ms {ts} is negative")
        values = []
        for name, cell in zip(CHANNELS, cells[1:]):
            try:
                v = float(cell.strip())
            except ValueError:
                raise MalformedRow(line_no, f"{name} value {cell!r} is not numeric")
            if not math.isfinite(v):
                raise MalformedRow(line_no, f"{name} value {cell!r} is not finite")
            values.append(v)
        if previous_ts is not None and ts < previous_ts:
            raise NonMonotonicTimestamp(line_no, previous_ts, ts)
        previous_ts = ts
        samples.append(SensorSample(ts, *values))

    if not samples:
        raise EmptyLog(f"session {session_id}: header only, no samples")
    return SensorLog(session_id=session_id, samples=tuple(samples))


def serialize_sensor_log(log: SensorLog) -> str:
    """Inverse of parse_sensor_log; float repr round-trips bit-exactly."""
    out = [",".join(CSV_HEADER)]
    for s in log.samples:
        out.append(
            ",".join([str(s.timestamp_ms)] + [repr(getattr(s, c)) for c in CHANNELS])
        )
    return "\n".join(out) + "\n"


_META_FLOAT_FIELDS = (
    "width_ft",
    "height_ft",
    "door_direction_deg",
    "desk_direction_deg",
    "noise_db",
)


def parse_session_meta(raw_text: str) -> SessionMeta:
    """Parse a flat ``key = value`` document into SessionMeta.

    Blank lines and ``#`` comments are skipped. Angles are normalized into
    [0, 360); non-positive dimensions raise OutOfRange; unrecognized keys
    raise UnknownField so typos never vanish silently.
    """
    pairs: dict[str, str] = {}
    for line_no, line in enumerate(raw_text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise MalformedRow(line_no, f"expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        known = {"session_id", "is_rectangle", "heart_rate_bpm", *_META_FLOAT_FIELDS}
        if key not in known:
            raise UnknownField(key)
        pairs[key] = value.strip()

    for required in ("session_id", *_META_FLOAT_FIELDS, "is_rectangle"):
        if required not in pairs:
            raise MissingField(required)

    floats: dict[str, float] = {}
    for name in _META_FLOAT_FIELDS:
        try:
            floats[name] = float(pairs[name])
        except ValueError:
            raise OutOfRange(name, f"value {pairs[name]!r} is not numeric")

    rect_raw = pairs["is_rectangle"].lower()
    if rect_raw in ("true", "1", "yes"):
        is_rect = True
    elif rect_raw in ("false", "0", "no"):
        is_rect = False
    else:
        raise OutOfRange("is_rectangle", f"expected true/false, got {pairs['is_rectangle']!r}")

    heart_rate = None
    if "heart_rate_bpm" in pairs and pairs["heart_rate_bpm"]:
        try:
            heart_rate = float(pairs["heart_rate_bpm"])
        except ValueError:
            raise OutOfRange("heart_rate_bpm", f"value {pairs['heart_rate_bpm']!r} is not numeric")

    return build_session_meta(
        session_id=pairs["session_id"],
        width_ft=floats["width_ft"],
        height_ft=floats["height_ft"],
        is_rectangle=is_rect,
        door_direction_deg=floats["door_direction_deg"],
        desk_direction_deg=floats["desk_direction_deg"],
        noise_db=floats["noise_db"],
        heart_rate_bpm=heart_rate,
    )


def build_session_meta(
    session_id: str,
    width_ft: float,
    height_ft: float,
    is_rectangle: bool,
    door_direction_deg: float,
    desk_direction_deg: float,
    noise_db: float,
    heart_rate_bpm: float | None = None,
) -> SessionMeta:
    """Range-check raw field values and normalize angles into [0, 360)."""
    if not session_id:
        raise MissingField("session_id")
    named = {
        "width_ft": width_ft,
        "height_ft": height_ft,
        "door_direction_deg": door_direction_deg,
        "desk_direction_deg": desk_direction_deg,
        "noise_db": noise_db,
    }
    for name, value in named.items():
        if not math.isfinite(value):
            raise OutOfRange(name, f"value {value!r} is not finite")
    for name in ("width_ft", "height_ft"):
        if named[name] <= 0:
            raise OutOfRange(name, f"must be > 0, got {named[name]}")
    if noise_db < 0:
        raise OutOfRange("noise_db", f"must be >= 0, got {noise_db}")
    if heart_rate_bpm is not None and not (
        math.isfinite(heart_rate_bpm) and heart_rate_bpm > 0
    ):
        raise OutOfRange("heart_rate_bpm", f"must be > 0, got {heart_rate_bpm}")
    return SessionMeta(
        session_id=session_id,
        width_ft=float(width_ft),
        height_ft=float(height_ft),
        is_rectangle=bool(is_rectangle),
        door_direction_deg=float(door_direction_deg) % 360.0,
        desk_direction_deg=float(desk_direction_deg) % 360.0,
        noise_db=float(noise_db),
        heart_rate_bpm=None if heart_rate_bpm is None else float(heart_rate_bpm),
    )


def serialize_session_meta(meta: SessionMeta) -> str:
    lines = [
        f"session_id = {meta.session_id}",
        f"width_ft = {meta.width_ft!r}",
        f"height_ft = {meta.height_ft!r}",
        f"is_rectangle = {'true' if meta.is_rectangle else 'false'}",
        f"door_direction_deg = {meta.door_direction_deg!r}",
        f"desk_direction_deg = {meta.desk_direction_deg!r}",
        f"noise_db = {meta.noise_db!r}",
    ]
    if meta.heart_rate_bpm is not None:
        lines.append(f"heart_rate_bpm = {meta.heart_rate_bpm!r}")
    return "\n".join(lines) + "\n"


def despike(log: SensorLog, z_threshold: float = DEFAULT_Z_THRESHOLD) -> SensorLog:
    """Mask per-channel outliers beyond z_threshold population-z units.

    Statistics are always computed over the full, unmasked channel, so the
    operation is idempotent; a channel with zero spread is left untouched.
    The default pipeline runs without despiking (the protocol relies on
    sample volume); this is the opt-in robust mode.
    """
    if len(log.samples) == 0:
        raise EmptyLog(f"session {log.session_id}: cannot despike an empty log")
    if not z_threshold > 0:
        raise ValueError(f"z_threshold must be > 0, got {z_threshold}")

    masks: dict[str, frozenset[int]] = {}
    for name in CHANNELS:
        values = log.channel_values(name)
        mean = values.mean()
        std = values.std()  # population form, matching aggregation
        if std == 0.0:
            continue
        outliers = np.nonzero(np.abs(values - mean) > z_threshold * std)[0]
        if outliers.size:
            masks[name] = frozenset(int(i) for i in outliers)
    return replace(log, channel_masks=masks)

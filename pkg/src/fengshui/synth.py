"""Synthetic session generator with planted feature-score structure.

Sensor channels are random walks, not i.i.d. noise, so aggregation and
despiking face realistic serial correlation. The score is linked to
post-aggregation features: standardize the chosen features across rooms,
take a weighted sum, add gaussian noise, clamp to the survey scale. That
makes planted correlations exact targets for the screening step.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .evaluation import LabeledDataset, ScoredRow, label_by_mean
from .features import FEATURE_NAMES, build_feature_vector
from .ingest import (
    CHANNELS,
    SensorLog,
    SensorSample,
    SessionMeta,
    serialize_sensor_log,
    serialize_session_meta,
)
from .seeding import derive_generator
from .survey import WellbeingScore

SAMPLES_PER_ROOM = 1000
SAMPLE_PERIOD_MS = 1000

# (base level, per-step walk scale) for each channel; bases sit near typical
# indoor readings, steps are small enough that a clean walk stays well inside
# a z=4 despike band while injected spikes land far outside it
WALK_PARAMS = {
    "temperature": (22.0, 0.02),
    "humidity": (45.0, 0.05),
    "air_pressure": (1013.0, 0.02),
    "light_intensity": (300.0, 2.0),
    "toxic_chemical": (120.0, 0.5),
    "tvoc": (150.0, 0.8),
    "eco2": (600.0, 1.0),
    "h2": (12000.0, 3.0),
    "ethanol": (17000.0, 3.0),
}

SPIKE_SCALE = 12.0  # spike offset = ±SPIKE_SCALE * step * sqrt(n_samples)

WIDTH_RANGE_FT = (8.0, 20.0)
NOISE_DB_RANGE = (30.0, 70.0)

SCORE_STREAM = 1  # spawn-key tag separating score noise from sensor draws


class SynthError(ValueError):
    pass


class UnknownFeatureName(SynthError):
    pass


@dataclass(frozen=True)
class SynthSpec:
    n_rooms: int
    informative_features: tuple[tuple[str, float], ...] = ()
    noise_std: float = 0.0
    sensor_spike_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_rooms < 2:
            raise SynthError(f"need at least 2 rooms, got {self.n_rooms}")
        object.__setattr__(
            self,
            "informative_features",
            tuple((str(n), float(w)) for n, w in self.informative_features),
        )
        for name, weight in self.informative_features:
            if name not in FEATURE_NAMES:
                raise UnknownFeatureName(name)
            if not math.isfinite(weight):
                raise SynthError(f"non-finite weight for {name}")
        if self.noise_std < 0:
            raise SynthError(f"noise_std must be >= 0, got {self.noise_std}")
        if not 0.0 <= self.sensor_spike_rate <= 1.0:
            raise SynthError(
                f"sensor_spike_rate must be in [0, 1], got {self.sensor_spike_rate}"
            )


def _session_id(index: int) -> str:
    return f"synth-{index:04d}"


def _room_meta(rng: np.random.Generator, session_id: str) -> SessionMeta:
    # draw order is part of the reproducibility contract:
    # width, height, door, desk, is_rectangle, noise_db
    lo, hi = WIDTH_RANGE_FT
    width = float(rng.uniform(lo, hi))
    height = float(rng.uniform(lo, hi))
    door = float(rng.uniform(0.0, 360.0))
    desk = float(rng.uniform(0.0, 360.0))
    is_rect = bool(rng.random() < 0.5)
    noise = float(rng.uniform(*NOISE_DB_RANGE))
    return SessionMeta(
        session_id=session_id,
        width_ft=width,
        height_ft=height,
        is_rectangle=is_rect,
        door_direction_deg=door,
        desk_direction_deg=desk,
        noise_db=noise,
    )


def _room_log(
    rng: np.random.Generator, session_id: str, spike_rate: float
) -> SensorLog:
    n = SAMPLES_PER_ROOM
    columns = []
    for channel in CHANNELS:
        base, step = WALK_PARAMS[channel]
        values = base + np.cumsum(rng.normal(0.0, step, size=n))
        # mask and signs are drawn even at spike_rate 0 so the underlying
        # walk is identical across spike settings for a given seed
        spiked = rng.random(n) < spike_rate
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        offset = SPIKE_SCALE * step * math.sqrt(n)
        values = values + spiked * signs * offset
        columns.append(values)
    matrix = np.column_stack(columns)
    samples = tuple(
        SensorSample(i * SAMPLE_PERIOD_MS, *(float(v) for v in matrix[i]))
        for i in range(n)
    )
    return SensorLog(session_id=session_id, samples=samples)


def generate(
    spec: SynthSpec,
) -> tuple[list[SessionMeta], list[SensorLog], list[WellbeingScore]]:
    """Rooms, sensor logs and linked scores. Deterministic given spec.seed."""
    metas = []
    logs = []
    for i in range(spec.n_rooms):
        rng = derive_generator(spec.seed, i)
        sid = _session_id(i)
        metas.append(_room_meta(rng, sid))
        logs.append(_room_log(rng, sid, spec.sensor_spike_rate))

    vectors = [build_feature_vector(m, log) for m, log in zip(metas, logs)]
    linked = np.zeros(spec.n_rooms)
    for name, weight in spec.informative_features:
        column = np.array([v[name] for v in vectors])
        std = float(column.std())
        if std > 0.0:
            linked += weight * (column - column.mean()) / std

    scores = []
    for i in range(spec.n_rooms):
        noise_rng = derive_generator(spec.seed, i, SCORE_STREAM)
        raw = 3.0 + float(linked[i]) + float(noise_rng.normal(0.0, spec.noise_std))
        scores.append(WellbeingScore(min(5.0, max(1.0, raw))))
    return metas, logs, scores


def generate_dataset(spec: SynthSpec) -> LabeledDataset:
    """generate -> feature vectors -> mean-split labels."""
    metas, logs, scores = generate(spec)
    rows = [
        ScoredRow(session_id=m.session_id,
                  features=build_feature_vector(m, log),
                  score=score)
        for m, log, score in zip(metas, logs, scores)
    ]
    return label_by_mean(rows)


def write_session_files(
    metas: list[SessionMeta], logs: list[SensorLog], directory: str
) -> list[tuple[str, str]]:
    """Write one CSV log and one meta file per room, in ingest's formats."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for meta, log in zip(metas, logs):
        csv_path = os.path.join(directory, f"{log.session_id}.csv")
        meta_path = os.path.join(directory, f"{log.session_id}.meta")
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(serialize_sensor_log(log))
        with open(meta_path, "w", encoding="utf-8") as fh:
            fh.write(serialize_session_meta(meta))
        paths.append((csv_path, meta_path))
    return paths

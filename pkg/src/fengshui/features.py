"""Per-session feature engineering: 25 named features per room.

Six come straight from session metadata (width, height, door/desk direction,
rectangularity, noise), eighteen are per-channel mean/std aggregates of the
sensor log, and the last is the width-height ratio score, a piecewise sine
that peaks when the room's side ratio hits the configured best ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import CHANNELS, SensorLog, SessionMeta

# Display labels for the sensor channels as they appear in feature names.
CHANNEL_LABELS = {
    "temperature": "Temperature",
    "humidity": "Humidity",
    "air_pressure": "Air_Pressure",
    "light_intensity": "Light_Intensity",
    "toxic_chemical": "Toxic_Chemical_Level",
    "tvoc": "TVOC_Level",
    "eco2": "eCO2_Level",
    "h2": "H2_Level",
    "ethanol": "Ethanol_Level",
}

FEATURE_NAMES: tuple[str, ...] = (
    "width",
    "height",
    "door_direction",
    "desk_direction",
    "is_rect",
    "noise_db",
    *(f"{CHANNEL_LABELS[c]}_mean" for c in CHANNELS),
    *(f"{CHANNEL_LABELS[c]}_std" for c in CHANNELS),
    "wh_ratio_score",
)

#: Conventional "best" side proportion (golden section). The originally
#: intended value is not recorded anywhere public, so treat correlation
#: results involving wh_ratio_score as configuration-dependent.
DEFAULT_BEST_RATIO = 0.618


class FeatureError(ValueError):
    pass


class EmptyChannel(FeatureError):
    def __init__(self, channel: str):
        super().__init__(f"channel {channel}: no unmasked samples left to aggregate")
        self.channel = channel


class NonPositiveDimension(FeatureError):
    pass


@dataclass(frozen=True)
class RatioConfig:
    best_ratio: float = DEFAULT_BEST_RATIO

    def __post_init__(self):
        if not (0.0 < self.best_ratio <= 1.0):
            raise FeatureError(f"best_ratio must be in (0, 1], got {self.best_ratio}")


@dataclass(frozen=True)
class FeatureVector:
    """Exactly the 25 named features for one room, all finite."""

    values: dict[str, float]

    def __post_init__(self):
        names = tuple(self.values.keys())
        if names != FEATURE_NAMES:
            missing = set(FEATURE_NAMES) - set(names)
            extra = set(names) - set(FEATURE_NAMES)
            raise FeatureError(
                f"feature names must be exactly the canonical 25 in order; "
                f"missing={sorted(missing)} extra={sorted(extra)}"
            )
        for name, value in self.values.items():
            if not math.isfinite(value):
                raise FeatureError(f"feature {name} is not finite: {value}")
        if self.values["is_rect"] not in (0.0, 1.0):
            raise FeatureError(f"is_rect must be 0 or 1, got {self.values['is_rect']}")

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def as_array(self, names: tuple[str, ...] = FEATURE_NAMES) -> np.ndarray:
        return np.array([self.values[n] for n in names], dtype=float)


def aggregate_channels(log: SensorLog, sample_std: bool = False) -> dict[str, float]:
    """Mean and std of each channel over its unmasked samples.

    Population std (divide by N) by default; ``sample_std`` switches to the
    N-1 form. A channel whose samples are all masked raises EmptyChannel.
    """
    out: dict[str, float] = {}
    ddof = 1 if sample_std else 0
    for channel in CHANNELS:
        values = log.unmasked_values(channel)
        if values.size == 0:
            raise EmptyChannel(channel)
        label = CHANNEL_LABELS[channel]
        out[f"{label}_mean"] = float(values.mean())
        if values.size == 1:
            out[f"{label}_std"] = 0.0
        else:
            out[f"{label}_std"] = float(values.std(ddof=ddof))
    return out


def wh_ratio_score(width: float, length: float, cfg: RatioConfig = RatioConfig()) -> float:
    """Room-shape score, maximal when the side ratio equals cfg.best_ratio.

    The side ratio is normalized to r = min/max in (0, 1] so the score is
    unimodal: sin(r*pi/2) rising up to the best ratio, then mirrored and
    falling (2*sin(best*pi/2) - sin(r*pi/2)) beyond it. Both branches agree
    at r = best_ratio, and the score is symmetric in its two arguments.
    """
    if not (width > 0) or not (length > 0):
        raise NonPositiveDimension(
            f"room dimensions must be positive, got width={width}, length={length}"
        )
    r = min(width, length) / max(width, length)
    peak = math.sin(cfg.best_ratio * math.pi / 2.0)
    if r <= cfg.best_ratio:
        return math.sin(r * math.pi / 2.0)
    return 2.0 * peak - math.sin(r * math.pi / 2.0)


def build_feature_vector(
    meta: SessionMeta,
    log: SensorLog,
    cfg: RatioConfig = RatioConfig(),
    sample_std: bool = False,
) -> FeatureVector:
    """Assemble the 25 features for one session.

    The height dimension plays the "length" role in the ratio score.
    Deterministic: identical inputs give bit-identical outputs.
    """
    aggregates = aggregate_channels(log, sample_std=sample_std)
    values: dict[str, float] = {
        "width": meta.width_ft,
        "height": meta.height_ft,
        "door_direction": meta.door_direction_deg,
        "desk_direction": meta.desk_direction_deg,
        "is_rect": 1.0 if meta.is_rectangle else 0.0,
        "noise_db": meta.noise_db,
    }
    for name in FEATURE_NAMES[6:24]:
        values[name] = aggregates[name]
    values["wh_ratio_score"] = wh_ratio_score(meta.width_ft, meta.height_ft, cfg)
    return FeatureVector(values=values)

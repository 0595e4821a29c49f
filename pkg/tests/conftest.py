"""Shared builders for small hand-checkable test inputs."""

import numpy as np
import pytest

from fengshui.features import FEATURE_NAMES, FeatureVector
from fengshui.ingest import CHANNELS, SensorLog, SensorSample, SessionMeta


def make_log(columns=None, session_id="t1", timestamps=None, n=None):
    """Build a log from per-channel value lists; unlisted channels are 1.0.

    ``columns`` maps channel name -> list of values. All listed channels
    must share one length; ``n`` sets the length when no columns are given.
    """
    columns = dict(columns or {})
    lengths = {len(v) for v in columns.values()}
    if lengths:
        assert len(lengths) == 1, "all channel columns need the same length"
        count = lengths.pop()
    else:
        count = n if n is not None else 4
    if timestamps is None:
        timestamps = [i * 500 for i in range(count)]
    samples = []
    for i in range(count):
        values = {c: float(columns[c][i]) if c in columns else 1.0 for c in CHANNELS}
        samples.append(SensorSample(timestamps[i], **values))
    return SensorLog(session_id=session_id, samples=tuple(samples))


def make_meta(session_id="t1", **overrides):
    fields = dict(
        session_id=session_id,
        width_ft=10.0,
        height_ft=12.0,
        is_rectangle=True,
        door_direction_deg=90.0,
        desk_direction_deg=180.0,
        noise_db=40.0,
    )
    fields.update(overrides)
    return SessionMeta(**fields)


def make_vector(**overrides):
    values = {name: 1.0 for name in FEATURE_NAMES}
    values["is_rect"] = 1.0
    values.update(overrides)
    return FeatureVector(values=values)


@pytest.fixture
def rng():
    return np.random.default_rng(20230817)

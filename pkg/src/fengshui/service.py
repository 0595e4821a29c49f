"""HTTP session-capture API.

Coordinates live sensor ingestion with survey administration so the survey
is answered in the same environment the sensors measured. Each session
walks created -> collecting -> survey_done -> finalized; abort is allowed
from any non-finalized state, and idle sessions expire to aborted after a
TTL. Confirmed samples are persisted to a per-session raw CSV before the
push is acknowledged, so a crash loses nothing that was acknowledged.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from . import ingest, store, survey
from .features import DEFAULT_BEST_RATIO, RatioConfig, build_feature_vector
from .ingest import SensorLog, SensorSample, SessionMeta

SESSION_ID_MAX_LEN = 64

_STATES = ("created", "collecting", "survey_done", "finalized", "aborted")


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: str
    min_samples: int = ingest.DEFAULT_MIN_SAMPLES
    despike_enabled: bool = False
    despike_z_threshold: float = ingest.DEFAULT_Z_THRESHOLD
    best_ratio: float = DEFAULT_BEST_RATIO
    session_ttl_s: float = 4 * 3600.0
    # injectable for TTL tests; must be monotone
    clock: object = field(default=time.monotonic, compare=False)


class LiveSession:
    """Mutable per-session state; all access under self.lock."""

    def __init__(self, meta: SessionMeta, created_at: float, wal_path: str,
                 meta_path: str):
        self.meta = meta
        self.state = "created"
        self.samples: list[SensorSample] = []
        self.survey_record: survey.SurveyRecord | None = None
        self.score: survey.WellbeingScore | None = None
        self.created_at = created_at
        self.last_activity = created_at
        self.summary: dict | None = None
        self.wal_path = wal_path
        self.meta_path = meta_path
        self.survey_path: str | None = None
        self.lock = threading.Lock()


class SampleBody(BaseModel):
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


class PushBody(BaseModel):
    samples: list[SampleBody]


class CreateBody(BaseModel):
    session_id: str | None = None
    width_ft: float
    height_ft: float
    is_rectangle: bool
    door_direction_deg: float
    desk_direction_deg: float
    noise_db: float
    heart_rate_bpm: float | None = None


class ImageResponseBody(BaseModel):
    word: str
    rating: int


class SurveyBody(BaseModel):
    masq_answers: list[int]
    image_responses: list[ImageResponseBody]
    demographics: dict[str, str] = {}
    feng_shui_belief: int | None = None


def _iso_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _valid_session_id(session_id: str) -> bool:
    # ids become file names; keep them path-safe
    return (
        0 < len(session_id) <= SESSION_ID_MAX_LEN
        and all(c.isalnum() or c in "-_" for c in session_id)
    )


def create_app(config: ServiceConfig) -> FastAPI:
    os.makedirs(config.data_dir, exist_ok=True)
    raw_dir = os.path.join(config.data_dir, "raw")
    os.makedirs(raw_dir, exist_ok=True)
    dataset = store.DatasetStore(os.path.join(config.data_dir, "dataset.jsonl"))
    definition = survey.default_definition()

    app = FastAPI(title="fengshui session capture")
    sessions: dict[str, LiveSession] = {}
    registry_lock = threading.Lock()

    def now() -> float:
        return float(config.clock())

    def get_session(session_id: str) -> LiveSession:
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        with session.lock:
            if (
                session.state not in ("finalized", "aborted")
                and now() - session.last_activity > config.session_ttl_s
            ):
                session.state = "aborted"
        return session

    def wal_append(session: LiveSession, batch: list[SensorSample]) -> None:
        with open(session.wal_path, "a", encoding="utf-8") as fh:
            for s in batch:
                values = ",".join(repr(s.channel(c)) for c in ingest.CHANNELS)
                fh.write(f"{s.timestamp_ms},{values}\n")
            fh.flush()
            os.fsync(fh.fileno())

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateBody):
        session_id = body.session_id or uuid.uuid4().hex
        if not _valid_session_id(session_id):
            raise HTTPException(
                422,
                "session_id must be 1-64 characters from [A-Za-z0-9_-]",
            )
        try:
            meta = ingest.build_session_meta(
                session_id=session_id,
                width_ft=body.width_ft,
                height_ft=body.height_ft,
                is_rectangle=body.is_rectangle,
                door_direction_deg=body.door_direction_deg,
                desk_direction_deg=body.desk_direction_deg,
                noise_db=body.noise_db,
                heart_rate_bpm=body.heart_rate_bpm,
            )
        except ingest.IngestError as exc:
            raise HTTPException(422, str(exc))
        with registry_lock:
            if session_id in sessions or dataset.has(session_id):
                raise HTTPException(409, f"session {session_id!r} already exists")
            wal_path = os.path.join(raw_dir, f"{session_id}.csv")
            meta_path = os.path.join(raw_dir, f"{session_id}.meta")
            session = LiveSession(meta, now(), wal_path, meta_path)
            sessions[session_id] = session
        with open(meta_path, "w", encoding="utf-8") as fh:
            fh.write(ingest.serialize_session_meta(meta))
        with open(wal_path, "w", encoding="utf-8") as fh:
            fh.write(",".join(ingest.CSV_HEADER) + "\n")
        return {"session_id": session_id, "state": "created"}

    @app.post("/sessions/{session_id}/samples")
    def push_samples(session_id: str, body: PushBody):
        session = get_session(session_id)
        with session.lock:
            if session.state not in ("created", "collecting"):
                raise HTTPException(
                    409, f"cannot push samples in state {session.state}"
                )
            if not body.samples:
                raise HTTPException(422, "empty batch")
            batch = []
            previous = (
                session.samples[-1].timestamp_ms if session.samples else None
            )
            for i, item in enumerate(body.samples):
                values = [
                    item.temperature, item.humidity, item.air_pressure,
                    item.light_intensity, item.toxic_chemical, item.tvoc,
                    item.eco2, item.h2, item.ethanol,
                ]
                if item.timestamp_ms < 0 or not all(
                    math.isfinite(v) for v in values
                ):
                    raise HTTPException(
                        422, f"malformed sample at batch index {i}"
                    )
                if previous is not None and item.timestamp_ms < previous:
                    raise HTTPException(
                        422,
                        f"batch index {i}: timestamp {item.timestamp_ms} ms is "
                        f"earlier than previous sample ({previous} ms); "
                        "batch rejected",
                    )
                previous = item.timestamp_ms
                batch.append(SensorSample(item.timestamp_ms, *values))
            # persist before acknowledging; the whole batch or nothing
            wal_append(session, batch)
            session.samples.extend(batch)
            session.state = "collecting"
            session.last_activity = now()
            return {
                "state": session.state,
                "accepted": len(batch),
                "sample_count": len(session.samples),
            }

    @app.get("/sessions/{session_id}/progress")
    def get_progress(session_id: str):
        session = get_session(session_id)
        with session.lock:
            latest = None
            if session.samples:
                s = session.samples[-1]
                latest = {"timestamp_ms": s.timestamp_ms}
                latest.update({c: s.channel(c) for c in ingest.CHANNELS})
            return {
                "state": session.state,
                "sample_count": len(session.samples),
                "elapsed_ms": int((now() - session.created_at) * 1000),
                "latest": latest,
            }

    @app.post("/sessions/{session_id}/survey")
    def submit_survey(session_id: str, body: SurveyBody):
        session = get_session(session_id)
        with session.lock:
            if session.state != "collecting":
                raise HTTPException(
                    409, f"cannot submit survey in state {session.state}"
                )
            record = survey.SurveyRecord(
                session_id=session_id,
                masq_answers=tuple(body.masq_answers),
                image_responses=tuple(
                    survey.ImageResponse(r.word, r.rating)
                    for r in body.image_responses
                ),
                demographics=dict(body.demographics),
                feng_shui_belief=body.feng_shui_belief,
            )
            violations = survey.validate_record(record, definition)
            if violations:
                raise HTTPException(
                    422,
                    detail={
                        "violations": [
                            {"code": v.code, "message": v.message}
                            for v in violations
                        ]
                    },
                )
            score = survey.wellbeing_score(record, definition)
            survey_path = os.path.join(raw_dir, f"{session_id}.survey.json")
            with open(survey_path, "w", encoding="utf-8") as fh:
                json.dump(survey.record_to_dict(record), fh, indent=2)
                fh.write("\n")
            session.survey_record = record
            session.score = score
            session.survey_path = survey_path
            session.state = "survey_done"
            session.last_activity = now()
            return {"state": session.state, "score": score.value}

    @app.post("/sessions/{session_id}/finalize")
    def finalize_session(session_id: str):
        session = get_session(session_id)
        with session.lock:
            if session.state == "finalized":
                return session.summary
            if session.state != "survey_done":
                raise HTTPException(
                    409, f"cannot finalize in state {session.state}"
                )
            log = SensorLog(
                session_id=session_id, samples=tuple(session.samples)
            )
            try:
                if config.despike_enabled:
                    log = ingest.despike(log, config.despike_z_threshold)
                vector = build_feature_vector(
                    session.meta,
                    log,
                    cfg=RatioConfig(best_ratio=config.best_ratio),
                )
            except ValueError as exc:
                raise HTTPException(422, f"feature pipeline failed: {exc}")
            refs = {
                "sensor_log": os.path.relpath(session.wal_path, config.data_dir),
                "meta": os.path.relpath(session.meta_path, config.data_dir),
            }
            if session.survey_path:
                refs["survey"] = os.path.relpath(
                    session.survey_path, config.data_dir
                )
            row = store.DatasetRow(
                session_id=session_id,
                timestamp=_iso_now(),
                features=vector,
                score=session.score,
                refs=refs,
            )
            try:
                dataset.append(row)
            except store.DuplicateSession:
                raise HTTPException(
                    409, f"session {session_id!r} already stored"
                )
            warnings = []
            if len(session.samples) < config.min_samples:
                warnings.append(
                    f"UnderSampled: {len(session.samples)} samples, "
                    f"target {config.min_samples}"
                )
            session.state = "finalized"
            session.last_activity = now()
            session.summary = {
                "session_id": session_id,
                "state": "finalized",
                "sample_count": len(session.samples),
                "score": session.score.value,
                "wh_ratio_score": vector["wh_ratio_score"],
                "refs": refs,
                "warnings": warnings,
            }
            return session.summary

    @app.post("/sessions/{session_id}/abort")
    def abort_session(session_id: str):
        session = get_session(session_id)
        with session.lock:
            if session.state == "finalized":
                raise HTTPException(409, "cannot abort a finalized session")
            session.state = "aborted"
            return {"session_id": session_id, "state": "aborted"}

    @app.get("/dataset/export.csv", response_class=PlainTextResponse)
    def export_dataset():
        return store.export_csv(dataset.rows())

    @app.get("/survey/definition")
    def survey_definition():
        return json.loads(survey.definition_to_json(definition))

    return app

"""Durable dataset of finalized sessions.

One JSON record per line behind a one-line header, append-only. A crash
mid-append leaves a torn final line; loading detects it, drops that line
with a warning, and the next append truncates it before writing. Floats
survive the round trip bit-exactly because JSON emits shortest-repr.
"""

from __future__ import annotations

import json
import os
import threading
import warnings
from dataclasses import dataclass, field

from .evaluation import TooFewRows, label_by_mean
from .features import FEATURE_NAMES, FeatureVector
from .survey import WellbeingScore

DATASET_FORMAT = "fengshui-dataset"
DATASET_VERSION = 1


class StoreError(ValueError):
    pass


class DuplicateSession(StoreError):
    pass


class VersionMismatch(StoreError):
    pass


class CorruptRow(StoreError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class IoFailure(StoreError):
    pass


class TornTailWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DatasetRow:
    session_id: str
    timestamp: str  # ISO-8601, set by whoever finalized the session
    features: FeatureVector
    score: WellbeingScore
    refs: dict[str, str] = field(default_factory=dict)


def row_to_json(row: DatasetRow) -> str:
    return json.dumps(
        {
            "session_id": row.session_id,
            "timestamp": row.timestamp,
            "features": {name: row.features[name] for name in FEATURE_NAMES},
            "score": row.score.value,
            "refs": dict(row.refs),
        },
        separators=(",", ":"),
    )


def row_from_json(text: str) -> DatasetRow:
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("row is not an object")
    missing = {"session_id", "timestamp", "features", "score"} - doc.keys()
    if missing:
        raise ValueError(f"missing fields {sorted(missing)}")
    features = FeatureVector(
        {str(k): float(v) for k, v in dict(doc["features"]).items()}
    )
    return DatasetRow(
        session_id=str(doc["session_id"]),
        timestamp=str(doc["timestamp"]),
        features=features,
        score=WellbeingScore(float(doc["score"])),
        refs={str(k): str(v) for k, v in dict(doc.get("refs", {})).items()},
    )


def _header_line() -> str:
    return json.dumps(
        {"format": DATASET_FORMAT, "format_version": DATASET_VERSION},
        separators=(",", ":"),
    )


def _check_header(line: str, path: str):
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise VersionMismatch(f"{path}: unreadable header") from exc
    if not isinstance(doc, dict) or doc.get("format") != DATASET_FORMAT:
        raise VersionMismatch(f"{path}: not a {DATASET_FORMAT} file")
    if doc.get("format_version") != DATASET_VERSION:
        raise VersionMismatch(
            f"{path}: version {doc.get('format_version')!r}, "
            f"expected {DATASET_VERSION}"
        )


def _read_raw(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def _scan(path: str) -> tuple[list[DatasetRow], int, str | None]:
    """Parse the file; return (rows, bytes-of-intact-prefix, tail complaint).

    Only the final line gets crash leniency: if it is unterminated or
    unreadable it is quarantined (excluded from the intact prefix) and
    reported. Bad lines anywhere else are real corruption.
    """
    raw = _read_raw(path)
    if raw == b"":
        return [], 0, None
    blines = raw.split(b"\n")
    torn = blines[-1] != b""  # no trailing newline: tail write was cut off
    if not torn:
        blines = blines[:-1]
    _check_header(blines[0].decode("utf-8", errors="replace"), path)
    keep = len(blines[0]) + 1
    rows: list[DatasetRow] = []
    seen = set()
    tail_note = None
    body = blines[1:]
    for i, bline in enumerate(body):
        is_last = i == len(body) - 1
        if is_last and torn:
            tail_note = "torn final line (no trailing newline)"
            break
        try:
            row = row_from_json(bline.decode("utf-8"))
            if row.session_id in seen:
                raise ValueError(f"duplicate session_id {row.session_id!r}")
        except ValueError as exc:
            if is_last:
                tail_note = f"unreadable final line ({exc})"
                break
            raise CorruptRow(i + 2, str(exc)) from exc
        rows.append(row)
        seen.add(row.session_id)
        keep += len(bline) + 1
    return rows, keep, tail_note


def load_dataset(path: str) -> list[DatasetRow]:
    """All intact rows in append order. A torn final line warns, not raises."""
    rows, _, tail_note = _scan(path)
    if tail_note is not None:
        warnings.warn(f"{path}: dropping {tail_note}", TornTailWarning)
    return rows


def append_row(path: str, row: DatasetRow) -> None:
    """Durable single-row append; truncates a torn tail left by a crash."""
    line = (row_to_json(row) + "\n").encode("utf-8")
    header = (_header_line() + "\n").encode("utf-8")
    try:
        if not os.path.exists(path):
            with open(path, "wb") as fh:
                fh.write(header + line)
                fh.flush()
                os.fsync(fh.fileno())
            return
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    rows, keep, _ = _scan(path)
    if any(r.session_id == row.session_id for r in rows):
        raise DuplicateSession(row.session_id)
    try:
        with open(path, "r+b") as fh:
            fh.truncate(keep)
            fh.seek(keep)
            fh.write(header + line if keep == 0 else line)
            fh.flush()
            os.fsync(fh.fileno())
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def export_csv(rows: list[DatasetRow]) -> str:
    """25 feature columns plus score and mean-split label, for external tools."""
    header = "session_id," + ",".join(FEATURE_NAMES) + ",score,label"
    out = [header]
    try:
        labels = {r.session_id: r.label for r in label_by_mean(rows).rows}
    except TooFewRows:
        # a single score is never strictly above its own mean
        labels = {r.session_id: 0 for r in rows}
    for row in rows:
        values = ",".join(repr(row.features[name]) for name in FEATURE_NAMES)
        out.append(
            f"{row.session_id},{values},{repr(row.score.value)},"
            f"{labels[row.session_id]}"
        )
    return "\n".join(out) + "\n"


class DatasetStore:
    """Single-writer store handle used by the capture service.

    Appends are serialized through one lock; readers reload from disk and
    see a prefix of the appended rows.
    """

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._ids = {r.session_id for r in self.rows()}

    def rows(self) -> list[DatasetRow]:
        if not os.path.exists(self.path):
            return []
        return load_dataset(self.path)

    def has(self, session_id: str) -> bool:
        with self._lock:
            return session_id in self._ids

    def append(self, row: DatasetRow) -> None:
        with self._lock:
            if row.session_id in self._ids:
                raise DuplicateSession(row.session_id)
            append_row(self.path, row)
            self._ids.add(row.session_id)

"""Three-part in-room survey: demographics, image responses, mood items.

The 26-item mood/anxiety questionnaire yields the self-reported well-being
ground truth: reverse-flagged items are recoded ``6 - raw`` on the 1-5 scale
and the score is the plain mean of the 26 coded answers. Image ratings
(0-5, one per neutral picture) are recorded and averaged but never used as
ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

MASQ_ITEM_COUNT = 26
MASQ_REVERSE_COUNT = 15
IMAGE_COUNT = 10
MASQ_SCALE = (1, 5)
IMAGE_SCALE = (0, 5)

DEFINITION_FORMAT = "fengshui-survey-definition"
DEFINITION_VERSION = 1


class SurveyError(ValueError):
    pass


class OutOfScale(SurveyError):
    pass


class DefinitionMismatch(SurveyError):
    pass


@dataclass(frozen=True)
class MasqItem:
    text: str
    reverse_coded: bool


@dataclass(frozen=True)
class SurveyDefinition:
    """Item bank: 26 mood items (15 reverse-coded) and 10 image ids.

    Which 15 items are reverse-coded is a property of the licensed item bank,
    so the flags live in this document, not in code. The shipped default
    flags items 1-15 as a placeholder that operators must replace with the
    real key.
    """

    masq_items: tuple[MasqItem, ...]
    image_ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.masq_items) != MASQ_ITEM_COUNT:
            raise DefinitionMismatch(
                f"expected {MASQ_ITEM_COUNT} mood items, got {len(self.masq_items)}"
            )
        n_reverse = sum(1 for item in self.masq_items if item.reverse_coded)
        if n_reverse != MASQ_REVERSE_COUNT:
            raise DefinitionMismatch(
                f"expected {MASQ_REVERSE_COUNT} reverse-coded items, got {n_reverse}"
            )
        if len(self.image_ids) != IMAGE_COUNT:
            raise DefinitionMismatch(
                f"expected {IMAGE_COUNT} image ids, got {len(self.image_ids)}"
            )


@dataclass(frozen=True)
class ImageResponse:
    word: str
    rating: int


@dataclass(frozen=True)
class SurveyRecord:
    session_id: str
    masq_answers: tuple[int, ...]
    image_responses: tuple[ImageResponse, ...]
    demographics: dict[str, str] = field(default_factory=dict)
    feng_shui_belief: int | None = None


@dataclass(frozen=True)
class WellbeingScore:
    """Self-reported well-being, a continuous value in [1, 5]."""

    value: float

    def __post_init__(self):
        if not (1.0 <= self.value <= 5.0):
            raise OutOfScale(f"well-being score {self.value} outside [1, 5]")


@dataclass(frozen=True)
class Violation:
    """One validation finding; violations are data, not exceptions."""

    code: str
    message: str


def default_definition() -> SurveyDefinition:
    """Shipped placeholder definition (reverse key: items 1-15).

    Replace via a definition file before running a real study; item texts
    here are stand-ins for the licensed questionnaire wording.
    """
    items = tuple(
        MasqItem(text=f"Mood item {i + 1} (replace with licensed wording)",
                 reverse_coded=i < MASQ_REVERSE_COUNT)
        for i in range(MASQ_ITEM_COUNT)
    )
    image_ids = tuple(f"img{i + 1:02d}" for i in range(IMAGE_COUNT))
    return SurveyDefinition(masq_items=items, image_ids=image_ids)


def code_masq_answer(raw: int, reverse: bool) -> int:
    """Recode one 1-5 answer; reverse items map to ``6 - raw``."""
    if not (MASQ_SCALE[0] <= raw <= MASQ_SCALE[1]):
        raise OutOfScale(f"answer {raw} outside {MASQ_SCALE[0]}..{MASQ_SCALE[1]}")
    return 6 - raw if reverse else raw


def validate_record(record: SurveyRecord, definition: SurveyDefinition) -> list[Violation]:
    """Empty list iff the record conforms to the definition's counts and scales."""
    violations: list[Violation] = []
    if len(record.masq_answers) != len(definition.masq_items):
        violations.append(
            Violation(
                "AnswerCountMismatch",
                f"expected {len(definition.masq_items)} mood answers, "
                f"got {len(record.masq_answers)}",
            )
        )
    else:
        for i, answer in enumerate(record.masq_answers):
            if not (MASQ_SCALE[0] <= answer <= MASQ_SCALE[1]):
                violations.append(
                    Violation("OutOfScale", f"mood answer {i + 1} = {answer} outside 1..5")
                )
    if len(record.image_responses) != len(definition.image_ids):
        violations.append(
            Violation(
                "ImageCountMismatch",
                f"expected {len(definition.image_ids)} image responses, "
                f"got {len(record.image_responses)}",
            )
        )
    else:
        for i, resp in enumerate(record.image_responses):
            if not (IMAGE_SCALE[0] <= resp.rating <= IMAGE_SCALE[1]):
                violations.append(
                    Violation(
                        "OutOfScale",
                        f"image rating {i + 1} = {resp.rating} outside 0..5",
                    )
                )
    return violations


def wellbeing_score(record: SurveyRecord, definition: SurveyDefinition) -> WellbeingScore:
    """Mean of the 26 coded answers. Raises DefinitionMismatch on bad records."""
    violations = validate_record(record, definition)
    if violations:
        raise DefinitionMismatch("; ".join(v.message for v in violations))
    total = 0
    for answer, item in zip(record.masq_answers, definition.masq_items):
        total += 6 - answer if item.reverse_coded else answer
    return WellbeingScore(total / len(definition.masq_items))


def mean_image_rating(record: SurveyRecord) -> float:
    """Auxiliary mean of the 0-5 image ratings; stored, never ground truth."""
    if not record.image_responses:
        raise DefinitionMismatch("record has no image responses")
    return sum(r.rating for r in record.image_responses) / len(record.image_responses)


# --- serialization (same JSON family as the dataset store) ---

def definition_to_json(definition: SurveyDefinition) -> str:
    doc = {
        "format": DEFINITION_FORMAT,
        "version": DEFINITION_VERSION,
        "masq_items": [
            {"text": item.text, "reverse_coded": item.reverse_coded}
            for item in definition.masq_items
        ],
        "image_ids": list(definition.image_ids),
        "masq_scale": list(MASQ_SCALE),
        "image_scale": list(IMAGE_SCALE),
    }
    return json.dumps(doc, indent=2) + "\n"


def definition_from_json(text: str) -> SurveyDefinition:
    doc = json.loads(text)
    if doc.get("format") != DEFINITION_FORMAT:
        raise DefinitionMismatch(f"unrecognized definition format {doc.get('format')!r}")
    if doc.get("version") != DEFINITION_VERSION:
        raise DefinitionMismatch(f"unsupported definition version {doc.get('version')!r}")
    items = tuple(
        MasqItem(text=item["text"], reverse_coded=bool(item["reverse_coded"]))
        for item in doc["masq_items"]
    )
    return SurveyDefinition(masq_items=items, image_ids=tuple(doc["image_ids"]))


def record_to_dict(record: SurveyRecord) -> dict:
    doc = {
        "session_id": record.session_id,
        "demographics": dict(record.demographics),
        "image_responses": [
            {"word": r.word, "rating": r.rating} for r in record.image_responses
        ],
        "masq_answers": list(record.masq_answers),
    }
    if record.feng_shui_belief is not None:
        doc["feng_shui_belief"] = record.feng_shui_belief
    return doc


def record_from_dict(doc: dict) -> SurveyRecord:
    try:
        return SurveyRecord(
            session_id=str(doc["session_id"]),
            demographics={str(k): str(v) for k, v in doc.get("demographics", {}).items()},
            image_responses=tuple(
                ImageResponse(word=str(r["word"]), rating=int(r["rating"]))
                for r in doc["image_responses"]
            ),
            masq_answers=tuple(int(a) for a in doc["masq_answers"]),
            feng_shui_belief=(
                int(doc["feng_shui_belief"]) if doc.get("feng_shui_belief") is not None else None
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SurveyError(f"malformed survey record: {exc}") from exc

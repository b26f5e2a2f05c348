"""Daily health screening: temperature bands, breath test, escalation.

Temperature bands: [32, 38) is normal, [38, 43] is high, anything else is
an invalid reading to re-ask. 38.0 sits in the high band on purpose —
conventional fever onset, so the safer class wins. Escalation fires on a
high reading or self-reported shortness of breath; the counted number is
recorded for trends but never escalates by itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ValidationError
from .nlu import FALLBACK_INTENT, IntentFrame, Utterance
from .numbers import parse_all_numbers

HEALTH_COLLECTION = "health"

NORMAL_LOW = 32.0
FEVER_ONSET = 38.0
HIGH_TOP = 43.0


class TemperatureClass(str, Enum):
    NORMAL = "normal"
    HIGH = "high"
    INVALID = "invalid"


@dataclass(frozen=True)
class TemperatureReading:
    celsius: float
    day: int

    def __post_init__(self):
        if not math.isfinite(self.celsius):
            raise ValidationError("temperature must be finite")
        if self.day < 1:
            raise ValidationError("day must be >= 1")


@dataclass(frozen=True)
class BreathTestResult:
    max_count: int
    self_report_short: bool
    unclear: bool = False  # follow-up was a fallback: treated as deny, flagged for re-ask

    def __post_init__(self):
        if self.max_count < 0:
            raise ValidationError("max_count must be >= 0")


@dataclass(frozen=True)
class HealthRecord:
    day: int
    temperature: float | None
    temp_class: TemperatureClass | None
    breath: BreathTestResult | None
    escalated: bool

    def __post_init__(self):
        if self.day < 1:
            raise ValidationError("day must be >= 1")
        if self.temperature is None and self.temp_class is None and self.breath is None:
            expected = False
        else:
            expected = _escalation_rule(self.temp_class, self.breath)
        if self.escalated != expected:
            raise ValidationError("escalated flag contradicts the escalation rule")

    @classmethod
    def build(
        cls,
        day: int,
        temperature: float | None,
        temp_class: TemperatureClass | None,
        breath: BreathTestResult | None,
    ) -> "HealthRecord":
        populated = temperature is not None or temp_class is not None or breath is not None
        escalated = _escalation_rule(temp_class, breath) if populated else False
        return cls(day, temperature, temp_class, breath, escalated)

    def to_doc(self, user: str) -> dict:
        return {
            "user": user,
            "day": self.day,
            "temperature": self.temperature,
            "temp_class": self.temp_class.value if self.temp_class else None,
            "breath": None if self.breath is None else {
                "max_count": self.breath.max_count,
                "self_report_short": self.breath.self_report_short,
                "unclear": self.breath.unclear,
            },
            "escalated": self.escalated,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "HealthRecord":
        breath = doc.get("breath")
        return cls(
            day=doc["day"],
            temperature=doc.get("temperature"),
            temp_class=TemperatureClass(doc["temp_class"]) if doc.get("temp_class") else None,
            breath=None if breath is None else BreathTestResult(**breath),
            escalated=doc["escalated"],
        )


def classify_temperature(celsius: float) -> TemperatureClass:
    if not math.isfinite(celsius):
        raise ValidationError("temperature reading must be a finite number")
    if NORMAL_LOW <= celsius < FEVER_ONSET:
        return TemperatureClass.NORMAL
    if FEVER_ONSET <= celsius <= HIGH_TOP:
        return TemperatureClass.HIGH
    return TemperatureClass.INVALID


def evaluate_breath(count_utterance: Utterance | str, follow_up: IntentFrame) -> BreathTestResult:
    """Highest number reached while counting, plus the self-report.

    The count may arrive as digits, spelled-out English words, or Mandarin
    numerals; an unparseable readout records 0. A fallback answer to "do you
    feel out of breath?" is treated as deny but flagged unclear.
    """
    if follow_up.intent not in ("affirm", "deny", FALLBACK_INTENT):
        raise ValidationError(f"unexpected follow-up intent: {follow_up.intent!r}")
    if isinstance(count_utterance, Utterance):
        text, language = count_utterance.text, count_utterance.language
    else:
        text, language = count_utterance, "en"
    numbers = parse_all_numbers(text, language)
    max_count = int(max(numbers)) if numbers else 0
    if max_count < 0:
        max_count = 0
    return BreathTestResult(
        max_count=max_count,
        self_report_short=follow_up.intent == "affirm",
        unclear=follow_up.intent == FALLBACK_INTENT,
    )


def _escalation_rule(temp_class: TemperatureClass | None, breath: BreathTestResult | None) -> bool:
    fever = temp_class == TemperatureClass.HIGH
    short = breath is not None and breath.self_report_short
    return fever or short


def needs_escalation(record: HealthRecord) -> bool:
    """Fever or self-reported shortness of breath."""
    if record.temperature is None and record.temp_class is None and record.breath is None:
        raise ValidationError("record has neither a temperature nor a breath result")
    return _escalation_rule(record.temp_class, record.breath)


def record_day(store, user: str, record: HealthRecord, program_length: int) -> HealthRecord:
    """Upsert the (user, day) record; one document per day of the program."""
    if not 1 <= record.day <= program_length:
        raise ValidationError(
            f"day {record.day} is outside the {program_length}-day program"
        )
    store.put(HEALTH_COLLECTION, f"{user}:{record.day:04d}", record.to_doc(user))
    return record


def history(store, user: str) -> list[HealthRecord]:
    """All recorded days for a user, sorted by day."""
    docs = store.query(HEALTH_COLLECTION, user=user)
    records = [HealthRecord.from_doc(d.body) for d in docs]
    records.sort(key=lambda r: r.day)
    return records

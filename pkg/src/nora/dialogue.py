"""Agent-initiative daily session state machine.

Phases run Intro (day 1) or FuturePlans (later days), then Mood,
Temperature, Breath, Gratitude, ActivityOffer, ActivityRunning, Feedback,
End. The bot always speaks last and always asks for something, so every
response except the farewell carries a question or an input directive.

Response phrasing is conditioned on the caller-supplied affect scores: a
negative sentiment label or stress above the configured threshold selects
the empathetic variant of the phase's template. Temperature accepts three
invalid readings before recording "no reading" and moving on, which keeps
every session bounded: no input sequence needs more than a dozen turns.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from . import screening
from .config import DEFAULT_VIDEOS, PlatformConfig
from .empathy import EmpathyScores
from .errors import ConflictError, InvalidStateError, ValidationError
from .nlu import IntentFrame, Utterance
from .numbers import parse_number
from .screening import BreathTestResult, HealthRecord, TemperatureClass
from .templates import RenderedPrompt, TemplateLibrary

SESSIONS_COLLECTION = "sessions"
SUMMARIES_COLLECTION = "summaries"

TEMPERATURE_MAX_RETRIES = 3

ACTIVITY_KINDS = ("exercise", "yoga", "meditation")


class Phase(str, Enum):
    INTRO = "intro"
    FUTURE_PLANS = "future_plans"
    MOOD = "mood"
    TEMPERATURE = "temperature"
    BREATH = "breath"
    GRATITUDE = "gratitude"
    ACTIVITY_OFFER = "activity_offer"
    ACTIVITY_RUNNING = "activity_running"
    FEEDBACK = "feedback"
    END = "end"


# Directives the web console reacts to.
DIRECTIVE_NONE = "none"
DIRECTIVE_SHOW_ACTIVITY = "show_activity"
DIRECTIVE_SHOW_HOTLINE = "show_hotline"
DIRECTIVE_END_SESSION = "end_session"
DIRECTIVE_REQUEST_NUMBER = "request_number"
DIRECTIVE_REQUEST_COUNT = "request_count"

# Expected user intents per phase; this inventory is our own construction
# for the coaching flow. Phases missing here take free-form input.
EXPECTED_INTENTS: dict[Phase, frozenset[str]] = {
    Phase.INTRO: frozenset({"self_intro", "greeting"}),
    Phase.FUTURE_PLANS: frozenset({"future_plan"}),
    Phase.MOOD: frozenset({"mood_report"}),
    Phase.TEMPERATURE: frozenset(),
    Phase.BREATH: frozenset({"affirm", "deny"}),
    Phase.GRATITUDE: frozenset({"grateful_family", "grateful_generic"}),
    Phase.ACTIVITY_OFFER: frozenset({"affirm", "deny"}),
    Phase.ACTIVITY_RUNNING: frozenset({"resume"}),
    Phase.FEEDBACK: frozenset({"feedback_report"}),
}


@dataclass
class Turn:
    speaker: str  # "user" | "bot"
    text: str
    frame: IntentFrame | None = None
    scores: EmpathyScores | None = None

    def to_doc(self) -> dict:
        return {
            "speaker": self.speaker,
            "text": self.text,
            "frame": None if self.frame is None else {
                "intent": self.frame.intent,
                "slots": dict(self.frame.slots),
                "confidence": self.frame.confidence,
                "matched_rule": self.frame.matched_rule,
            },
            "scores": None if self.scores is None else self.scores.to_dict(),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Turn":
        frame = doc.get("frame")
        scores = doc.get("scores")
        return cls(
            speaker=doc["speaker"],
            text=doc["text"],
            frame=None if frame is None else IntentFrame(**frame),
            scores=None if scores is None else EmpathyScores.from_dict(scores),
        )


@dataclass
class BotResponse:
    text: str
    directive: str = DIRECTIVE_NONE
    directive_args: dict[str, Any] = field(default_factory=dict)
    variant: str = "neutral"
    template_key: str = ""
    empathy_echo: EmpathyScores | None = None

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "directive": self.directive,
            "directive_args": dict(self.directive_args),
            "variant": self.variant,
            "template_key": self.template_key,
            "empathy_echo": None if self.empathy_echo is None else self.empathy_echo.to_dict(),
        }


@dataclass
class SessionState:
    user: str
    day: int
    language: str = "en"
    phase: Phase = Phase.INTRO
    turn_history: list[Turn] = field(default_factory=list)
    facts: dict[str, Any] = field(default_factory=dict)
    retry_count: int = 0
    awaiting_breath_followup: str | None = None
    pending_activity: dict[str, Any] | None = None
    closed: bool = False

    def user_turns(self) -> list[Turn]:
        return [t for t in self.turn_history if t.speaker == "user"]

    def to_doc(self) -> dict:
        return {
            "user": self.user,
            "day": self.day,
            "language": self.language,
            "phase": self.phase.value,
            "turn_history": [t.to_doc() for t in self.turn_history],
            "facts": self.facts,
            "retry_count": self.retry_count,
            "awaiting_breath_followup": self.awaiting_breath_followup,
            "pending_activity": self.pending_activity,
            "closed": self.closed,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SessionState":
        return cls(
            user=doc["user"],
            day=doc["day"],
            language=doc["language"],
            phase=Phase(doc["phase"]),
            turn_history=[Turn.from_doc(t) for t in doc["turn_history"]],
            facts=doc["facts"],
            retry_count=doc["retry_count"],
            awaiting_breath_followup=doc.get("awaiting_breath_followup"),
            pending_activity=doc.get("pending_activity"),
            closed=doc.get("closed", False),
        )


@dataclass(frozen=True)
class ActivityRecommendation:
    kind: str
    video: str
    day: int

    def __post_init__(self):
        if self.kind not in ACTIVITY_KINDS:
            raise ValidationError(f"unknown activity kind: {self.kind!r}")
        if self.day < 1:
            raise ValidationError("day must be >= 1")


@dataclass
class ActivityPreferences:
    per_day: dict[int, tuple[str, str]] = field(default_factory=dict)  # day -> (kind, video)
    kinds: list[str] = field(default_factory=list)

    @classmethod
    def from_doc(cls, doc: dict | None) -> "ActivityPreferences":
        doc = doc or {}
        per_day = {
            int(day): (entry["kind"], entry["video"])
            for day, entry in (doc.get("per_day") or {}).items()
        }
        return cls(per_day=per_day, kinds=list(doc.get("kinds") or []))


def recommend_activity(
    preferences: ActivityPreferences,
    day: int,
    videos: dict[str, str] | None = None,
) -> ActivityRecommendation:
    """The user's explicit pick for the day, else a round-robin over their
    preferred kinds (over all three kinds when they expressed none)."""
    if day < 1:
        raise ValidationError("day must be >= 1")
    videos = videos or DEFAULT_VIDEOS
    if day in preferences.per_day:
        kind, video = preferences.per_day[day]
        return ActivityRecommendation(kind=kind, video=video, day=day)
    pool = [k for k in preferences.kinds if k in ACTIVITY_KINDS] or list(ACTIVITY_KINDS)
    kind = pool[(day - 1) % len(pool)]
    return ActivityRecommendation(kind=kind, video=videos.get(kind, f"builtin:{kind}"), day=day)


def select_variant(scores: EmpathyScores | None, stress_threshold: float) -> str:
    """Empathetic phrasing on negative sentiment or high stress."""
    if scores is None:
        return "neutral"
    if scores.sentiment.label == "negative" or scores.stress.value > stress_threshold:
        return "empathetic"
    return "neutral"


@dataclass
class SessionSummary:
    user: str
    day: int
    turns: int
    scored_turns: int
    stress_mean: float | None
    sentiment_confidence_mean: float | None
    sentiment_positive_share: float | None
    emotion_mean: dict[str, float] | None
    escalated: bool
    health: HealthRecord

    def to_doc(self) -> dict:
        return {
            "user": self.user,
            "day": self.day,
            "turns": self.turns,
            "scored_turns": self.scored_turns,
            "stress_mean": self.stress_mean,
            "sentiment_confidence_mean": self.sentiment_confidence_mean,
            "sentiment_positive_share": self.sentiment_positive_share,
            "emotion_mean": self.emotion_mean,
            "escalated": self.escalated,
        }


class DialogueEngine:
    """Runs every live session; one logical writer per user."""

    def __init__(self, store, config: PlatformConfig, templates: TemplateLibrary):
        self.store = store
        self.config = config
        self.templates = templates
        self._open: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def _lock_for(self, user: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(user, threading.Lock())

    def open_session(self, user: str) -> SessionState | None:
        return self._open.get(user)

    def _profile(self, user: str) -> dict:
        doc = self.store.get("users", user)
        return doc.body if doc else {}

    def _persist(self, state: SessionState) -> None:
        self.store.put(SESSIONS_COLLECTION, f"{state.user}:{state.day:04d}", state.to_doc())

    def _prompt(
        self, state: SessionState, prompt: str, variant: str, **fmt
    ) -> RenderedPrompt:
        return self.templates.render(state.language, prompt, variant, state.day, **fmt)

    # ------------------------------------------------------------- lifecycle

    def start_session(self, user: str, day: int, language: str | None = None) -> tuple[SessionState, BotResponse]:
        if day < 1:
            raise ValidationError("day must be >= 1")
        with self._lock_for(user):
            if user in self._open:
                raise ConflictError(f"user {user!r} already has an open session")
            profile = self._profile(user)
            language = language or profile.get("language", "en")
            phase = Phase.INTRO if day == 1 else Phase.FUTURE_PLANS
            state = SessionState(user=user, day=day, language=language, phase=phase)
            prompt = self._prompt(state, phase.value, "neutral")
            response = BotResponse(
                text=prompt.text,
                variant=prompt.variant,
                template_key=prompt.template_key,
            )
            state.turn_history.append(Turn("bot", response.text))
            self._open[user] = state
            self._persist(state)
            return state, response

    def advance(
        self,
        state: SessionState,
        user_text: str,
        frame: IntentFrame,
        scores: EmpathyScores | None,
    ) -> tuple[SessionState, BotResponse]:
        with self._lock_for(state.user):
            if state.phase is Phase.END:
                raise InvalidStateError("session already ended")
            state.turn_history.append(Turn("user", user_text, frame=frame, scores=scores))
            variant = select_variant(scores, self.config.stress_threshold)
            response = self._dispatch(state, user_text, frame, variant)
            response.empathy_echo = scores
            state.turn_history.append(Turn("bot", response.text))
            self._persist(state)
            return state, response

    def close_session(self, state: SessionState) -> SessionSummary:
        with self._lock_for(state.user):
            if state.phase is not Phase.END:
                raise InvalidStateError("cannot close a session before it reaches the end")
            if state.closed:
                raise InvalidStateError("session already closed")
            summary = self._summarize(state)
            state.closed = True
            self._persist(state)
            self.store.put(
                SUMMARIES_COLLECTION, f"{state.user}:{state.day:04d}", summary.to_doc()
            )
            if self._open.get(state.user) is state:
                del self._open[state.user]
            return summary

    # ------------------------------------------------------------ transitions

    def _dispatch(self, state: SessionState, text: str, frame: IntentFrame, variant: str) -> BotResponse:
        phase = state.phase
        if phase in (Phase.INTRO, Phase.FUTURE_PLANS):
            return self._enter_mood(state, variant)
        if phase is Phase.MOOD:
            state.facts["mood"] = frame.slots.get("feeling") or text
            return self._enter_temperature(state, variant)
        if phase is Phase.TEMPERATURE:
            return self._handle_temperature(state, text, variant)
        if phase is Phase.BREATH:
            return self._handle_breath(state, text, frame, variant)
        if phase is Phase.GRATITUDE:
            state.facts["gratitude_object"] = frame.slots.get("object") or text
            return self._enter_activity_offer(state, variant)
        if phase is Phase.ACTIVITY_OFFER:
            return self._handle_activity_offer(state, frame, variant)
        if phase is Phase.ACTIVITY_RUNNING:
            return self._enter_feedback(state, variant)
        if phase is Phase.FEEDBACK:
            state.facts["feedback"] = text
            return self._enter_end(state, variant)
        raise InvalidStateError(f"no transition out of phase {phase}")

    def _enter_mood(self, state: SessionState, variant: str) -> BotResponse:
        state.phase = Phase.MOOD
        prompt = self._prompt(state, "mood", variant)
        return BotResponse(text=prompt.text, variant=prompt.variant, template_key=prompt.template_key)

    def _enter_temperature(self, state: SessionState, variant: str) -> BotResponse:
        state.phase = Phase.TEMPERATURE
        prompt = self._prompt(state, "temperature", variant)
        return BotResponse(
            text=prompt.text,
            directive=DIRECTIVE_REQUEST_NUMBER,
            variant=prompt.variant,
            template_key=prompt.template_key,
        )

    def _handle_temperature(self, state: SessionState, text: str, variant: str) -> BotResponse:
        reading = parse_number(text, state.language)
        temp_class = (
            screening.classify_temperature(reading)
            if reading is not None
            else TemperatureClass.INVALID
        )
        if temp_class is TemperatureClass.INVALID:
            state.retry_count += 1
            if state.retry_count < TEMPERATURE_MAX_RETRIES:
                prompt = self._prompt(state, "temperature_retry", variant)
                return BotResponse(
                    text=prompt.text,
                    directive=DIRECTIVE_REQUEST_NUMBER,
                    variant=prompt.variant,
                    template_key=prompt.template_key,
                )
            # third strike: record "no reading" and move on
            state.facts["temperature"] = {"celsius": None, "class": TemperatureClass.INVALID.value, "gave_up": True}
        else:
            state.facts["temperature"] = {"celsius": reading, "class": temp_class.value}
        state.phase = Phase.BREATH
        prompt = self._prompt(state, "breath_count", variant)
        return BotResponse(
            text=prompt.text,
            directive=DIRECTIVE_REQUEST_COUNT,
            variant=prompt.variant,
            template_key=prompt.template_key,
        )

    def _handle_breath(self, state: SessionState, text: str, frame: IntentFrame, variant: str) -> BotResponse:
        if state.awaiting_breath_followup is None:
            if frame.intent == "deny":
                # user declines the test: no result, flagged
                state.facts["breath"] = {"declined": True}
                return self._enter_gratitude(state, variant)
            state.awaiting_breath_followup = text
            prompt = self._prompt(state, "breath_followup", variant)
            return BotResponse(text=prompt.text, variant=prompt.variant, template_key=prompt.template_key)
        count_utterance = Utterance(state.awaiting_breath_followup, state.language)
        result = screening.evaluate_breath(count_utterance, frame)
        state.awaiting_breath_followup = None
        state.facts["breath"] = {
            "max_count": result.max_count,
            "self_report_short": result.self_report_short,
            "unclear": result.unclear,
        }
        return self._enter_gratitude(state, variant)

    def _enter_gratitude(self, state: SessionState, variant: str) -> BotResponse:
        state.phase = Phase.GRATITUDE
        record = self._day_record(state)
        prompt = self._prompt(state, "gratitude", variant)
        if screening.needs_escalation(record):
            hotline = self._prompt(state, "hotline", variant, hotline=self.config.hotline)
            return BotResponse(
                text=f"{hotline.text} {prompt.text}",
                directive=DIRECTIVE_SHOW_HOTLINE,
                directive_args={"hotline": self.config.hotline},
                variant=prompt.variant,
                template_key=prompt.template_key,
            )
        return BotResponse(text=prompt.text, variant=prompt.variant, template_key=prompt.template_key)

    def _enter_activity_offer(self, state: SessionState, variant: str) -> BotResponse:
        state.phase = Phase.ACTIVITY_OFFER
        profile = self._profile(state.user)
        preferences = ActivityPreferences.from_doc(profile.get("activity_preferences"))
        rec = recommend_activity(preferences, state.day, self.config.activity_videos)
        state.pending_activity = {"kind": rec.kind, "video": rec.video}
        prompt = self._prompt(state, "activity_offer", variant, kind=self._kind_label(state, rec.kind))
        return BotResponse(text=prompt.text, variant=prompt.variant, template_key=prompt.template_key)

    def _handle_activity_offer(self, state: SessionState, frame: IntentFrame, variant: str) -> BotResponse:
        if frame.intent == "affirm" and state.pending_activity:
            state.phase = Phase.ACTIVITY_RUNNING
            activity = state.pending_activity
            state.facts["chosen_activity"] = dict(activity)
            prompt = self._prompt(
                state, "activity_start", variant, kind=self._kind_label(state, activity["kind"])
            )
            return BotResponse(
                text=prompt.text,
                directive=DIRECTIVE_SHOW_ACTIVITY,
                directive_args=dict(activity),
                variant=prompt.variant,
                template_key=prompt.template_key,
            )
        # declined (or unclear): skip straight to feedback
        return self._enter_feedback(state, variant)

    def _enter_feedback(self, state: SessionState, variant: str) -> BotResponse:
        state.phase = Phase.FEEDBACK
        prompt = self._prompt(state, "feedback", variant)
        return BotResponse(text=prompt.text, variant=prompt.variant, template_key=prompt.template_key)

    def _enter_end(self, state: SessionState, variant: str) -> BotResponse:
        state.phase = Phase.END
        prompt = self._prompt(state, "end", variant)
        return BotResponse(
            text=prompt.text,
            directive=DIRECTIVE_END_SESSION,
            variant=prompt.variant,
            template_key=prompt.template_key,
        )

    _KIND_LABELS_ZH = {"exercise": "运动", "yoga": "瑜伽", "meditation": "冥想"}

    def _kind_label(self, state: SessionState, kind: str) -> str:
        if state.language == "zh":
            return self._KIND_LABELS_ZH.get(kind, kind)
        return kind

    # -------------------------------------------------------------- summaries

    def _day_record(self, state: SessionState) -> HealthRecord:
        temp_fact = state.facts.get("temperature") or {}
        breath_fact = state.facts.get("breath")
        breath: BreathTestResult | None = None
        if isinstance(breath_fact, dict) and not breath_fact.get("declined"):
            breath = BreathTestResult(
                max_count=breath_fact["max_count"],
                self_report_short=breath_fact["self_report_short"],
                unclear=breath_fact.get("unclear", False),
            )
        temp_class = TemperatureClass(temp_fact["class"]) if temp_fact.get("class") else None
        return HealthRecord.build(
            day=state.day,
            temperature=temp_fact.get("celsius"),
            temp_class=temp_class,
            breath=breath,
        )

    def _summarize(self, state: SessionState) -> SessionSummary:
        scored = [t for t in state.user_turns() if t.scores is not None]
        stress_mean = confidence_mean = positive_share = None
        emotion_mean = None
        if scored:
            stress_mean = sum(t.scores.stress.value for t in scored) / len(scored)
            confidence_mean = sum(t.scores.sentiment.confidence for t in scored) / len(scored)
            positive_share = sum(
                1 for t in scored if t.scores.sentiment.label == "positive"
            ) / len(scored)
            class_set = scored[0].scores.emotion.class_set
            emotion_mean = {
                c: sum(t.scores.emotion.scores[c] for t in scored) / len(scored)
                for c in class_set
            }
        record = self._day_record(state)
        program_length = self._profile(state.user).get("program", {}).get(
            "length_days", self.config.program_length
        )
        screening.record_day(self.store, state.user, record, program_length)
        return SessionSummary(
            user=state.user,
            day=state.day,
            turns=len(state.turn_history),
            scored_turns=len(scored),
            stress_mean=stress_mean,
            sentiment_confidence_mean=confidence_mean,
            sentiment_positive_share=positive_share,
            emotion_mean=emotion_mean,
            escalated=record.escalated,
            health=record,
        )

"""HTTP + WebSocket gateway wiring every service together.

The turn pipeline is speech adapter -> intent classification -> affect
scoring -> dialogue advance, with no state added at this layer, so the
endpoint result equals the direct module composition. Each error class maps
to exactly one HTTP status.
"""

from __future__ import annotations

import asyncio
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from typing import Any

from fastapi import Depends, FastAPI, Header, Request, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .. import nlu
from ..chat import ChatServer, Notification, SimulatedMeetingProvider
from ..config import PlatformConfig
from ..dialogue import SESSIONS_COLLECTION, DialogueEngine, Phase
from ..empathy import EmpathyService
from ..errors import (
    AuthenticationError,
    ConflictError,
    ForbiddenError,
    InvalidStateError,
    NoraError,
    NotFoundError,
    ValidationError,
)
from ..store import open_store
from ..templates import TemplateLibrary
from .auth import TokenAuthority
from .speech import PassthroughSpeechAdapter

# most-derived classes first; the first isinstance hit wins
ERROR_STATUS: dict[type[NoraError], int] = {
    AuthenticationError: 401,
    ForbiddenError: 403,
    NotFoundError: 404,
    ConflictError: 409,
    ValidationError: 400,
}


def status_for(exc: NoraError) -> int:
    for klass in type(exc).__mro__:
        if klass in ERROR_STATUS:
            return ERROR_STATUS[klass]  # type: ignore[index]
    return 500


class WebSocketPushHub:
    """Bridges the sync chat server to per-connection asyncio queues."""

    def __init__(self):
        self._queues: dict[str, list[asyncio.Queue]] = {}
        self._loop: asyncio.AbstractEventLoop | None = None
        self._lock = threading.Lock()

    def bind_loop(self, loop: asyncio.AbstractEventLoop) -> None:
        self._loop = loop

    def register(self, user: str) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue()
        with self._lock:
            self._queues.setdefault(user, []).append(queue)
        return queue

    def unregister(self, user: str, queue: asyncio.Queue) -> None:
        with self._lock:
            queues = self._queues.get(user, [])
            if queue in queues:
                queues.remove(queue)
            if not queues:
                self._queues.pop(user, None)

    def deliver(self, notification: Notification) -> None:
        loop = self._loop
        if loop is None or loop.is_closed():
            return
        loop.call_soon_threadsafe(self._dispatch, notification)

    def _dispatch(self, notification: Notification) -> None:
        with self._lock:
            queues = list(self._queues.get(notification.recipient, []))
        for queue in queues:
            queue.put_nowait(notification)


# ------------------------------------------------------------- request bodies

class RegisterBody(BaseModel):
    user: str
    alias: str
    password: str
    language: str = "en"


class LoginBody(BaseModel):
    user: str
    password: str


class SessionStartBody(BaseModel):
    day: int


class TurnBody(BaseModel):
    text: str | None = None
    audio: str | None = None


class ProgramBody(BaseModel):
    name: str | None = None
    length_days: int | None = None


class ActivityPreferenceEntry(BaseModel):
    kind: str
    video: str


class ActivityPreferencesBody(BaseModel):
    per_day: dict[str, ActivityPreferenceEntry] | None = None
    kinds: list[str] | None = None


class ProfileBody(BaseModel):
    language: str | None = None
    program: ProgramBody | None = None
    activity_preferences: ActivityPreferencesBody | None = None


class InterestsBody(BaseModel):
    topics: list[str]


class ContactBody(BaseModel):
    alias: str


class DirectBody(BaseModel):
    to: str
    body: str


class TopicPostBody(BaseModel):
    body: str


class ReportBody(BaseModel):
    conversation: str
    message_id: int
    reason: str


@dataclass
class Components:
    config: PlatformConfig
    store: Any
    auth: TokenAuthority
    engine: DialogueEngine
    chat: ChatServer
    empathy: EmpathyService
    rulesets: dict[str, list]
    hub: WebSocketPushHub
    speech: PassthroughSpeechAdapter = field(default_factory=PassthroughSpeechAdapter)


def build_components(config: PlatformConfig, store=None, meeting_provider=None) -> Components:
    store = store if store is not None else open_store(config)
    hub = WebSocketPushHub()
    return Components(
        config=config,
        store=store,
        auth=TokenAuthority(store, config),
        engine=DialogueEngine(store, config, TemplateLibrary.load(config.templates_path)),
        chat=ChatServer(
            store,
            hub,
            meeting_provider or SimulatedMeetingProvider(),
            config.topic_catalog,
        ),
        empathy=EmpathyService.from_config(config),
        rulesets={
            lang: nlu.load_language_ruleset(config.rules_path, lang) for lang in ("en", "zh")
        },
        hub=hub,
    )


def create_app(config: PlatformConfig | None = None, store=None, meeting_provider=None) -> FastAPI:
    config = config or PlatformConfig()
    parts = build_components(config, store=store, meeting_provider=meeting_provider)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        parts.hub.bind_loop(asyncio.get_running_loop())
        yield
        parts.store.close()

    app = FastAPI(title="nora", lifespan=lifespan)
    app.state.parts = parts
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(NoraError)
    async def handle_platform_error(request: Request, exc: NoraError):
        return JSONResponse(status_code=status_for(exc), content={"error": str(exc)})

    def current_user(authorization: str | None = Header(default=None)) -> str:
        token = None
        if authorization and authorization.lower().startswith("bearer "):
            token = authorization[7:].strip()
        return parts.auth.authenticate(token)

    def profile_of(user: str) -> dict:
        doc = parts.store.get("users", user)
        if doc is None:
            raise NotFoundError(f"unknown user: {user!r}")
        return doc.body

    def public_profile(body: dict) -> dict:
        view = {k: v for k, v in body.items() if k != "auth"}
        return view

    # ------------------------------------------------------------------ misc

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    # ------------------------------------------------------------------ auth

    @app.post("/api/auth/register")
    def register(body: RegisterBody) -> dict:
        token = parts.auth.register(body.user, body.alias, body.password, body.language)
        return {"token": token.token, "user": token.user, "expires_at": token.expires_at}

    @app.post("/api/auth/login")
    def login(body: LoginBody) -> dict:
        token = parts.auth.login(body.user, body.password)
        return {"token": token.token, "user": token.user, "expires_at": token.expires_at}

    # --------------------------------------------------------------- sessions

    @app.post("/api/session/start")
    def session_start(body: SessionStartBody, user: str = Depends(current_user)) -> dict:
        program = profile_of(user).get("program", {})
        length = program.get("length_days", config.program_length)
        if not 1 <= body.day <= length:
            raise ValidationError(f"day must lie in [1, {length}]")
        state, response = parts.engine.start_session(user, body.day)
        return {
            "session": {"user": user, "day": state.day, "phase": state.phase.value,
                        "language": state.language},
            "response": response.to_dict(),
        }

    def _run_turn(user: str, text: str, source: str) -> dict:
        state = parts.engine.open_session(user)
        if state is None:
            raise InvalidStateError("no open session; call /api/session/start first")
        utterance = nlu.Utterance(text, language=state.language, source=source)
        frame = nlu.classify(utterance, parts.rulesets[state.language])
        scores = parts.empathy.score_turn(text, state.language)
        state, response = parts.engine.advance(state, text, frame, scores)
        payload = {
            "response": response.to_dict(),
            "scores": scores.to_dict(),
            "frame": {"intent": frame.intent, "slots": dict(frame.slots),
                      "confidence": frame.confidence, "matched_rule": frame.matched_rule},
            "session": {"day": state.day, "phase": state.phase.value},
        }
        if state.phase is Phase.END:
            summary = parts.engine.close_session(state)
            payload["summary"] = summary.to_doc()
        return payload

    @app.post("/api/session/turn")
    def session_turn(body: TurnBody, user: str = Depends(current_user)) -> dict:
        if body.text is None and body.audio is None:
            raise ValidationError("provide text or audio")
        if body.text is not None:
            return _run_turn(user, body.text, "typed")
        state = parts.engine.open_session(user)
        language = state.language if state else profile_of(user).get("language", "en")
        text = parts.speech.transcribe(body.audio or "", language)
        return _run_turn(user, text, "speech-adapter")

    @app.post("/api/session/resume")
    def session_resume(user: str = Depends(current_user)) -> dict:
        state = parts.engine.open_session(user)
        if state is None:
            raise InvalidStateError("no open session")
        if state.phase is not Phase.ACTIVITY_RUNNING:
            raise InvalidStateError("nothing to resume: no activity is running")
        resume_text = "continue" if state.language == "en" else "继续"
        return _run_turn(user, resume_text, "typed")

    def _session_view(state) -> dict:
        record = parts.engine._day_record(state)
        # the hotline is announced when the breath check resolves; until then
        # a reload must not show more than the live console did
        escalation_announced = record.escalated and "breath" in state.facts
        return {
            "user": state.user,
            "day": state.day,
            "phase": state.phase.value,
            "language": state.language,
            "closed": state.closed,
            "turns": [
                {"speaker": t.speaker, "text": t.text,
                 "scores": t.scores.to_dict() if t.scores else None}
                for t in state.turn_history
            ],
            "activity": state.facts.get("chosen_activity"),
            "escalated": record.escalated,
            "hotline": config.hotline if escalation_announced else None,
        }

    @app.get("/api/session")
    def session_read(user: str = Depends(current_user)) -> dict:
        """Current (or latest) session, so a reload can rebuild the console."""
        state = parts.engine.open_session(user)
        if state is None:
            docs = parts.store.query(SESSIONS_COLLECTION, user=user)
            if not docs:
                return {"open": False, "session": None}
            latest = max(docs, key=lambda d: d.body["day"])
            from ..dialogue import SessionState

            state = SessionState.from_doc(latest.body)
            return {"open": False, "session": _session_view(state)}
        return {"open": True, "session": _session_view(state)}

    @app.get("/api/meta")
    def meta(user: str = Depends(current_user)) -> dict:
        return {
            "topics": list(config.topic_catalog),
            "activity_kinds": ["exercise", "yoga", "meditation"],
            "languages": ["en", "zh"],
            "emotion_classes": list(config.emotion_classes),
            "program_default_days": config.program_length,
        }

    @app.get("/api/progress")
    def progress(user: str = Depends(current_user)) -> dict:
        from .. import screening as _screening

        records = {r.day: r for r in _screening.history(parts.store, user)}
        summaries = {
            doc.body["day"]: doc.body
            for doc in parts.store.query("summaries", user=user)
        }
        days = []
        for day in sorted(set(records) | set(summaries)):
            entry: dict[str, Any] = {"day": day}
            record = records.get(day)
            if record is not None:
                entry.update({
                    "temperature": record.temperature,
                    "temp_class": record.temp_class.value if record.temp_class else None,
                    "breath_count": record.breath.max_count if record.breath else None,
                    "short_of_breath": record.breath.self_report_short if record.breath else None,
                    "escalated": record.escalated,
                })
            summary = summaries.get(day)
            if summary is not None:
                entry.update({
                    "stress_mean": summary.get("stress_mean"),
                    "sentiment_confidence_mean": summary.get("sentiment_confidence_mean"),
                    "sentiment_positive_share": summary.get("sentiment_positive_share"),
                    "emotion_mean": summary.get("emotion_mean"),
                })
            days.append(entry)
        return {"user": user, "days": days}

    # ---------------------------------------------------------------- profile

    @app.get("/api/profile")
    def get_profile(user: str = Depends(current_user)) -> dict:
        return public_profile(profile_of(user))

    @app.put("/api/profile")
    def put_profile(body: ProfileBody, user: str = Depends(current_user)) -> dict:
        if body.language is not None and body.language not in ("en", "zh"):
            raise ValidationError("language must be en or zh")
        while True:
            doc = parts.store.get("users", user)
            if doc is None:
                raise NotFoundError(f"unknown user: {user!r}")
            profile = doc.body
            if body.language is not None:
                profile["language"] = body.language
            if body.program is not None:
                program = profile.get("program", {})
                if body.program.name is not None:
                    program["name"] = body.program.name
                if body.program.length_days is not None:
                    if body.program.length_days < 1:
                        raise ValidationError("program length must be >= 1")
                    program["length_days"] = body.program.length_days
                profile["program"] = program
            if body.activity_preferences is not None:
                prefs = profile.get("activity_preferences", {"per_day": {}, "kinds": []})
                if body.activity_preferences.per_day is not None:
                    per_day = {}
                    for day, entry in body.activity_preferences.per_day.items():
                        if int(day) < 1:
                            raise ValidationError("preference day must be >= 1")
                        if entry.kind not in ("exercise", "yoga", "meditation"):
                            raise ValidationError(f"unknown activity kind: {entry.kind!r}")
                        per_day[str(int(day))] = {"kind": entry.kind, "video": entry.video}
                    prefs["per_day"] = per_day
                if body.activity_preferences.kinds is not None:
                    bad = [k for k in body.activity_preferences.kinds
                           if k not in ("exercise", "yoga", "meditation")]
                    if bad:
                        raise ValidationError(f"unknown activity kinds: {bad}")
                    prefs["kinds"] = list(body.activity_preferences.kinds)
                profile["activity_preferences"] = prefs
            try:
                parts.store.compare_and_put("users", user, doc.version, profile)
                return public_profile(profile)
            except ConflictError:
                continue

    @app.put("/api/profile/interests")
    def put_interests(body: InterestsBody, user: str = Depends(current_user)) -> dict:
        return parts.chat.set_interests(user, body.topics)

    # ------------------------------------------------------------------- chat

    @app.get("/api/chat/contacts")
    def get_contacts(user: str = Depends(current_user)) -> dict:
        return {"contacts": parts.chat.contacts(user)}

    @app.post("/api/chat/contacts")
    def post_contact(body: ContactBody, user: str = Depends(current_user)) -> dict:
        return parts.chat.add_friend(user, body.alias)

    @app.post("/api/chat/direct")
    def post_direct(body: DirectBody, user: str = Depends(current_user)) -> dict:
        message_id = parts.chat.send_direct(user, body.to, body.body)
        from ..chat import ConversationRef

        return {"id": message_id, "conversation": ConversationRef.direct(user, body.to).key}

    @app.get("/api/chat/sync")
    def chat_sync(conversation: str, last_seen: int = 0, user: str = Depends(current_user)) -> dict:
        messages, cursor = parts.chat.sync(user, conversation, last_seen)
        return {
            "messages": messages,
            "cursor": {"conversation": cursor.conversation, "last_seen": cursor.last_seen},
        }

    @app.post("/api/chat/topic/{topic_id}")
    def post_topic(topic_id: str, body: TopicPostBody, user: str = Depends(current_user)) -> dict:
        message_id = parts.chat.post_topic(user, topic_id, body.body)
        return {"id": message_id, "conversation": f"topic:{topic_id}"}

    @app.post("/api/chat/report")
    def post_report(body: ReportBody, user: str = Depends(current_user)) -> dict:
        record = parts.chat.report_message(user, body.conversation, body.message_id, body.reason)
        return {
            "reporter": record.reporter,
            "conversation": record.conversation,
            "message_id": record.message_id,
            "reason": record.reason,
            "created_at": record.created_at,
        }

    @app.post("/api/chat/meeting/{topic_id}")
    def post_meeting(topic_id: str, user: str = Depends(current_user)) -> dict:
        return {"topic": topic_id, "join_url": parts.chat.get_or_create_meeting(topic_id)}

    # -------------------------------------------------------------- websocket

    @app.websocket("/ws")
    async def websocket_notifications(websocket: WebSocket):
        token = websocket.query_params.get("token")
        try:
            user = parts.auth.authenticate(token)
        except AuthenticationError:
            await websocket.close(code=1008)
            return
        await websocket.accept()
        queue = parts.hub.register(user)
        try:
            while True:
                notification = await queue.get()
                await websocket.send_json(notification.to_dict())
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            parts.hub.unregister(user, queue)

    return app

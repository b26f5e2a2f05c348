"""Scripted simulations driving the platform end to end, in process.

Two harnesses:

* a multi-day coaching program (every user runs every day's session through
  the real classify -> score -> advance pipeline), checking one health
  record and one summary per user-day, day-dependent openings, prompt
  rotation, bounded termination, and hotline propagation;

* a chat swarm over a lossy, duplicating notification channel, checking
  that cursor syncs still materialize every conversation exactly once, that
  fan-out matches an independently tracked subscriber shadow, and that
  topic deliveries stay pseudonymous.

Both return machine-checkable reports; the CLI prints them as JSON.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field

from . import nlu, screening
from .chat import ChatServer, ConversationRef, Notification, SimulatedMeetingProvider
from .config import PlatformConfig
from .dialogue import DIRECTIVE_SHOW_HOTLINE, DialogueEngine, Phase
from .empathy import EmpathyService
from .errors import ForbiddenError
from .store import MemoryStore
from .templates import TemplateLibrary


@dataclass
class Check:
    name: str
    passed: bool
    details: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "details": self.details}


def _report(section: str, checks: list[Check], **extra) -> dict:
    return {
        "section": section,
        "checks": [c.to_dict() for c in checks],
        "violations": sum(1 for c in checks if not c.passed),
        **extra,
    }


# ---------------------------------------------------------------- program run

_EN_MOODS = [
    "I feel happy and calm today",
    "I feel sad and lonely",
    "I am feeling overwhelmed and anxious",
    "I feel fine I guess",
    "I feel great and hopeful",
]
_ZH_MOODS = ["我很开心", "我觉得难过孤独", "我有点焦虑压力很大", "还好", "我感觉很幸福"]

_EN_GRATITUDE = [
    "I am grateful for my parents",
    "grateful because of my friends",
    "thankful for the doctors",
    "I am grateful for warm food",
]
_ZH_GRATITUDE = ["感谢我的父母", "感恩我的朋友", "感谢医生", "感谢热腾腾的饭菜"]


@dataclass
class _SessionPlan:
    temperature_answers: list[str]
    declines_breath: bool
    short_of_breath: bool
    accepts_activity: bool
    mood: str
    gratitude: str
    expects_high_temp: bool


def _plan_session(rng: random.Random, language: str) -> _SessionPlan:
    roll = rng.random()
    if roll < 0.70:
        temps = [f"{rng.uniform(36.0, 37.4):.1f}"]
        high = False
    elif roll < 0.85:
        temps = [f"{rng.uniform(38.1, 39.8):.1f}"]
        high = True
    elif roll < 0.95:
        temps = [f"{rng.uniform(44.0, 60.0):.0f}", f"{rng.uniform(36.2, 37.2):.1f}"]
        high = False
    else:
        temps = ["45", "no idea" if language == "en" else "不知道", "52"]
        high = False  # three strikes: recorded as no reading
    declines = rng.random() < 0.05
    return _SessionPlan(
        temperature_answers=temps,
        declines_breath=declines,
        short_of_breath=rng.random() < 0.2,
        accepts_activity=rng.random() < 0.6,
        mood=rng.choice(_EN_MOODS if language == "en" else _ZH_MOODS),
        gratitude=rng.choice(_EN_GRATITUDE if language == "en" else _ZH_GRATITUDE),
        expects_high_temp=high,
    )


def _scripted_answer(state, plan: _SessionPlan) -> str:
    en = state.language == "en"
    phase = state.phase
    if phase is Phase.INTRO:
        return "my name is alex" if en else "我叫小李"
    if phase is Phase.FUTURE_PLANS:
        return "I want to travel to the sea" if en else "我想去海边"
    if phase is Phase.MOOD:
        return plan.mood
    if phase is Phase.TEMPERATURE:
        if plan.temperature_answers:
            return plan.temperature_answers.pop(0)
        return "36.8"
    if phase is Phase.BREATH:
        if state.awaiting_breath_followup is None:
            if plan.declines_breath:
                return "no" if en else "不要"
            return "one two three four five six seven" if en else "1 2 3 4 5 6 7"
        if plan.short_of_breath:
            return "yes" if en else "是的"
        return "no" if en else "不"
    if phase is Phase.GRATITUDE:
        return plan.gratitude
    if phase is Phase.ACTIVITY_OFFER:
        if plan.accepts_activity:
            return "yes please" if en else "好的"
        return "not today" if en else "不想"
    if phase is Phase.ACTIVITY_RUNNING:
        return "continue" if en else "继续"
    if phase is Phase.FEEDBACK:
        return "it was helpful" if en else "很好"
    raise AssertionError(f"no scripted answer for phase {phase}")


def run_program_simulation(days: int, users: int, seed: int = 7) -> dict:
    config = PlatformConfig(program_length=days)
    store = MemoryStore()
    engine = DialogueEngine(store, config, TemplateLibrary.load(config.templates_path))
    empathy = EmpathyService.from_config(config)
    rulesets = {
        lang: nlu.load_language_ruleset(config.rules_path, lang) for lang in ("en", "zh")
    }
    rng = random.Random(seed)

    user_ids = [f"sim-user-{i}" for i in range(1, users + 1)]
    for i, user in enumerate(user_ids):
        language = "en" if i % 2 == 0 else "zh"
        store.put("users", user, {
            "user": user,
            "alias": f"sim{i + 1}",
            "language": language,
            "program": {"name": config.program_name, "length_days": days},
            "interests": [],
            "contacts": [],
            "activity_preferences": (
                {"per_day": {"3": {"kind": "yoga", "video": "custom:yoga-relax"}}, "kinds": []}
                if i == 0 else {"per_day": {}, "kinds": []}
            ),
        })
        store.put("aliases", f"sim{i + 1}", {"user": user})

    openings: dict[str, dict[int, str]] = {u: {} for u in user_ids}
    opening_phase: dict[str, dict[int, str]] = {u: {} for u in user_ids}
    hotline_mismatches: list[str] = []
    over_long: list[str] = []
    sessions_run = 0

    for day in range(1, days + 1):
        for user in user_ids:
            language = store.get("users", user).body["language"]
            plan = _plan_session(rng, language)
            state, response = engine.start_session(user, day)
            openings[user][day] = response.text
            opening_phase[user][day] = state.phase.value
            hotline_seen = False
            user_turns = 0
            while state.phase is not Phase.END and user_turns < 30:
                text = _scripted_answer(state, plan)
                utterance = nlu.Utterance(text, language=language)
                frame = nlu.classify(utterance, rulesets[language])
                scores = empathy.score_turn(text, language)
                state, response = engine.advance(state, text, frame, scores)
                user_turns += 1
                if response.directive == DIRECTIVE_SHOW_HOTLINE:
                    hotline_seen = True
            if user_turns > 25:
                over_long.append(f"{user} day {day}: {user_turns} turns")
            summary = engine.close_session(state)
            sessions_run += 1
            if summary.escalated != hotline_seen:
                hotline_mismatches.append(
                    f"{user} day {day}: escalated={summary.escalated} hotline={hotline_seen}"
                )

    checks = []
    record_days = {
        user: [r.day for r in screening.history(store, user)] for user in user_ids
    }
    expected_days = list(range(1, days + 1))
    checks.append(Check(
        "one_health_record_per_user_day",
        all(record_days[u] == expected_days for u in user_ids),
        json.dumps({u: len(record_days[u]) for u in user_ids}),
    ))
    summary_days = {
        user: sorted(doc.body["day"] for doc in store.query("summaries", user=user))
        for user in user_ids
    }
    checks.append(Check(
        "one_summary_per_user_day",
        all(summary_days[u] == expected_days for u in user_ids),
        json.dumps({u: len(summary_days[u]) for u in user_ids}),
    ))
    checks.append(Check(
        "day_one_uses_intro",
        all(opening_phase[u][1] == Phase.INTRO.value for u in user_ids),
    ))
    checks.append(Check(
        "later_days_use_future_plans",
        all(
            opening_phase[u][d] == Phase.FUTURE_PLANS.value
            for u in user_ids for d in range(2, days + 1)
        ),
    ))
    repeated = [
        f"{u} day {d}->{d + 1}"
        for u in user_ids
        for d in range(1, days)
        if openings[u][d] == openings[u][d + 1]
    ]
    checks.append(Check(
        "no_identical_opening_on_consecutive_days", not repeated, "; ".join(repeated)
    ))
    checks.append(Check(
        "hotline_shown_iff_escalated", not hotline_mismatches, "; ".join(hotline_mismatches)
    ))
    checks.append(Check("sessions_terminate_within_25_turns", not over_long, "; ".join(over_long)))

    return _report("program", checks, days=days, users=users, sessions=sessions_run)


# ------------------------------------------------------------------- chat run

class LossyPushChannel:
    """At-least-once-at-best channel: drops some deliveries, repeats others,
    and records every attempted notification for the fan-out oracle."""

    def __init__(self, rng: random.Random, drop_rate: float = 0.2, dup_rate: float = 0.1):
        self.rng = rng
        self.drop_rate = drop_rate
        self.dup_rate = dup_rate
        self.attempts: list[tuple[str, str, int]] = []
        self.inboxes: dict[str, list[Notification]] = {}

    def deliver(self, notification: Notification) -> None:
        self.attempts.append(
            (notification.recipient, notification.conversation, notification.hint)
        )
        if self.rng.random() < self.drop_rate:
            return
        inbox = self.inboxes.setdefault(notification.recipient, [])
        inbox.append(notification)
        if self.rng.random() < self.dup_rate:
            inbox.append(notification)


@dataclass
class ChatClient:
    user: str
    server: ChatServer
    logs: dict[str, list[dict]] = field(default_factory=dict)
    cursors: dict[str, int] = field(default_factory=dict)
    ordering_violations: list[str] = field(default_factory=list)

    def on_notification(self, notification: Notification) -> None:
        if notification.hint <= self.cursors.get(notification.conversation, 0):
            return  # stale or duplicate: already materialized
        self.sync_conversation(notification.conversation)

    def sync_conversation(self, conversation: str) -> None:
        last = self.cursors.get(conversation, 0)
        try:
            messages, cursor = self.server.sync(self.user, conversation, last)
        except ForbiddenError:
            # no longer a member (unsubscribed since the notification)
            self.logs.pop(conversation, None)
            self.cursors.pop(conversation, None)
            return
        log = self.logs.setdefault(conversation, [])
        for message in messages:
            if message["id"] <= last:
                self.ordering_violations.append(
                    f"{self.user}/{conversation}: id {message['id']} after cursor {last}"
                )
            last = message["id"]
            log.append(message)
        self.cursors[conversation] = cursor.last_seen


def run_chat_simulation(
    users: int = 5,
    topics: int = 3,
    messages: int = 500,
    drop_rate: float = 0.2,
    seed: int = 11,
) -> dict:
    rng = random.Random(seed)
    config = PlatformConfig()
    catalog = list(config.topic_catalog[:topics])
    while len(catalog) < topics:
        catalog.append(f"topic-{len(catalog) + 1}")
    store = MemoryStore()
    channel = LossyPushChannel(rng, drop_rate=drop_rate)
    server = ChatServer(store, channel, SimulatedMeetingProvider(), catalog)

    user_ids = [f"chat-user-{i}" for i in range(1, users + 1)]
    for i, user in enumerate(user_ids):
        store.put("users", user, {
            "user": user, "alias": f"chatter{i + 1}", "language": "en",
            "interests": [], "contacts": [],
        })
        store.put("aliases", f"chatter{i + 1}", {"user": user})
    for i, a in enumerate(user_ids):
        for b in user_ids[i + 1:]:
            server.add_friend(a, store.get("users", b).body["alias"])

    clients = {u: ChatClient(u, server) for u in user_ids}
    shadow_interests: dict[str, set[str]] = {u: set() for u in user_ids}
    expected_attempts: list[tuple[str, str, int]] = []
    direct_pairs: set[tuple[str, str]] = set()

    def apply_interests(user: str, wanted: set[str]) -> None:
        server.set_interests(user, sorted(wanted))
        shadow_interests[user] = set(wanted)

    for user in user_ids:
        apply_interests(user, {t for t in catalog if rng.random() < 0.5})

    def pump(user: str) -> None:
        inbox = channel.inboxes.get(user, [])
        while inbox:
            clients[user].on_notification(inbox.pop(0))

    sent = 0
    while sent < messages:
        roll = rng.random()
        if roll < 0.10:
            apply_interests(rng.choice(user_ids), {t for t in catalog if rng.random() < 0.5})
        elif roll < 0.30:
            pump(rng.choice(user_ids))
        elif roll < 0.65:
            sender, receiver = rng.sample(user_ids, 2)
            ref = ConversationRef.direct(sender, receiver)
            message_id = server.send_direct(sender, receiver, f"direct message {sent}")
            expected_attempts.append((receiver, ref.key, message_id))
            direct_pairs.add(tuple(sorted((sender, receiver))))
            sent += 1
        else:
            topic = rng.choice(catalog)
            subscribed = sorted(u for u in user_ids if topic in shadow_interests[u])
            if not subscribed:
                volunteer = rng.choice(user_ids)
                apply_interests(volunteer, shadow_interests[volunteer] | {topic})
                subscribed = [volunteer]
            sender = rng.choice(subscribed)
            message_id = server.post_topic(sender, topic, f"topic message {sent}")
            ref_key = ConversationRef.topic(topic).key
            expected_attempts.extend(
                (other, ref_key, message_id) for other in subscribed if other != sender
            )
            sent += 1

    for user in user_ids:
        pump(user)
    for user, client in clients.items():
        belongs = [
            ConversationRef.direct(a, b).key
            for (a, b) in direct_pairs if user in (a, b)
        ] + [ConversationRef.topic(t).key for t in sorted(shadow_interests[user])]
        for conversation in belongs:
            client.sync_conversation(conversation)

    checks = []
    mismatches = []
    for user, client in clients.items():
        belongs = [
            ConversationRef.direct(a, b).key
            for (a, b) in direct_pairs if user in (a, b)
        ] + [ConversationRef.topic(t).key for t in sorted(shadow_interests[user])]
        for conversation in belongs:
            server_view = [
                (m["id"], m["body"]) for m in server.server_log(conversation)
            ]
            client_view = [
                (m["id"], m["body"]) for m in client.logs.get(conversation, [])
            ]
            if server_view != client_view:
                mismatches.append(
                    f"{user}/{conversation}: client {len(client_view)} vs server {len(server_view)}"
                )
    checks.append(Check("client_logs_equal_server_logs", not mismatches, "; ".join(mismatches[:5])))

    fanout_ok = Counter(expected_attempts) == Counter(channel.attempts)
    if not fanout_ok:
        delta = Counter(expected_attempts)
        delta.subtract(Counter(channel.attempts))
        detail = json.dumps([(k, v) for k, v in delta.items() if v][:5], default=str)
    else:
        detail = ""
    checks.append(Check("fanout_matches_subscriber_oracle", fanout_ok, detail))

    ordering = [v for c in clients.values() for v in c.ordering_violations]
    checks.append(Check("zero_ordering_violations", not ordering, "; ".join(ordering[:5])))

    leaks = []
    for client in clients.values():
        for conversation, log in client.logs.items():
            if not conversation.startswith("topic:"):
                continue
            for message in log:
                payload = json.dumps(message)
                for user in user_ids:
                    alias = f"chatter{user_ids.index(user) + 1}"
                    if user in payload or alias in payload:
                        leaks.append(f"{conversation}#{message['id']} leaks {user}")
    checks.append(Check("topic_messages_stay_pseudonymous", not leaks, "; ".join(leaks[:5])))

    return _report(
        "chat", checks,
        users=users, topics=topics, messages=messages, drop_rate=drop_rate,
        notifications_attempted=len(channel.attempts),
    )


# ------------------------------------------------------------------ full runs

def run_full_simulation(days: int, users: int, seed: int = 7, script: dict | None = None) -> dict:
    script = script or {}
    program = run_program_simulation(days=days, users=users, seed=script.get("seed", seed))
    chat_settings = script.get("chat", {})
    chat = None
    chat_users = chat_settings.get("users", max(users, 2))
    if chat_users >= 2:
        chat = run_chat_simulation(
            users=chat_users,
            topics=chat_settings.get("topics", 3),
            messages=chat_settings.get("messages", 120),
            drop_rate=chat_settings.get("drop_rate", 0.2),
            seed=chat_settings.get("seed", seed + 1),
        )
    sections = [program] + ([chat] if chat else [])
    return {
        "program": program,
        "chat": chat,
        "violations": sum(s["violations"] for s in sections),
    }

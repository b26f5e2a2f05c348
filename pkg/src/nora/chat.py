"""User-to-user messaging: direct chats, anonymous topic threads, reports,
and shared meeting credentials.

Delivery follows notify-then-sync: a stored message produces a lightweight
notification (conversation + latest id, never the body); clients fetch
bodies with a cursor-based sync call. The cursor makes materialization
exactly-once no matter how often a notification is duplicated or dropped —
a later sync always catches up.

Message ids are per-conversation sequence numbers and the only ordering
authority; timestamps are display-only. Appends to one conversation are
serialized by a per-conversation lock plus compare-and-set on the log
document, so ids never collide. Topic posts are delivered pseudonymously:
a stable per-(user, topic) handle replaces the sender account.
"""

from __future__ import annotations

import hashlib
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, Protocol

from .errors import (
    ConflictError,
    ForbiddenError,
    NotFoundError,
    ValidationError,
)

CONVERSATIONS = "conversations"
TOPICS = "topics"
MEETINGS = "meetings"
REPORTS = "reports"
USERS = "users"
ALIASES = "aliases"


# ------------------------------------------------------------- conversation refs

@dataclass(frozen=True)
class ConversationRef:
    kind: str  # "direct" | "topic"
    key: str

    @classmethod
    def direct(cls, a: str, b: str) -> "ConversationRef":
        lo, hi = sorted((a, b))
        return cls("direct", f"direct:{lo}|{hi}")

    @classmethod
    def topic(cls, topic_id: str) -> "ConversationRef":
        return cls("topic", f"topic:{topic_id}")

    @classmethod
    def parse(cls, encoded: str) -> "ConversationRef":
        kind, _, rest = encoded.partition(":")
        if kind == "direct" and "|" in rest:
            return cls("direct", encoded)
        if kind == "topic" and rest:
            return cls("topic", encoded)
        raise ValidationError(f"bad conversation reference: {encoded!r}")

    @property
    def members(self) -> tuple[str, str]:
        if self.kind != "direct":
            raise ValidationError("only direct conversations have a member pair")
        lo, hi = self.key.split(":", 1)[1].split("|", 1)
        return lo, hi

    @property
    def topic_id(self) -> str:
        if self.kind != "topic":
            raise ValidationError("not a topic conversation")
        return self.key.split(":", 1)[1]


@dataclass(frozen=True)
class Notification:
    recipient: str
    conversation: str  # encoded ConversationRef
    hint: int  # latest message id; bodies only travel via sync

    def to_dict(self) -> dict:
        return {"recipient": self.recipient, "conversation": self.conversation, "hint": self.hint}


@dataclass
class SyncCursor:
    user: str
    conversation: str
    last_seen: int = 0


@dataclass(frozen=True)
class ReportRecord:
    reporter: str
    conversation: str
    message_id: int
    reason: str
    created_at: float


# ------------------------------------------------------------------- providers

class PushChannel(Protocol):
    def deliver(self, notification: Notification) -> None: ...


class MeetingProvider(Protocol):
    def create_meeting(self, topic_id: str) -> dict: ...


class NullPushChannel:
    def deliver(self, notification: Notification) -> None:
        pass


class SimulatedMeetingProvider:
    """In-process stand-in for a conferencing API; counts create calls."""

    def __init__(self, fail_times: int = 0):
        self.create_calls = 0
        self._fail_times = fail_times
        self._lock = threading.Lock()

    def create_meeting(self, topic_id: str) -> dict:
        with self._lock:
            self.create_calls += 1
            if self._fail_times > 0:
                self._fail_times -= 1
                raise ConflictError("simulated provider outage")
            token = hashlib.sha256(f"meeting:{topic_id}".encode()).hexdigest()[:10]
            return {
                "meeting_id": f"m-{token}",
                "join_url": f"https://meet.invalid/j/{token}",
                "recurring": True,
                "fixed_time": False,
            }


def pseudonym(user: str, topic_id: str) -> str:
    """Stable anonymous handle for a user inside one topic thread.

    Uppercase hex keeps it disjoint from account ids and aliases, which are
    lowercase by construction."""
    digest = hashlib.sha256(f"{user}|{topic_id}".encode()).hexdigest()[:6].upper()
    return f"Guest-{digest}"


# ----------------------------------------------------------------- chat server

class ChatServer:
    def __init__(self, store, push: PushChannel, meetings: MeetingProvider,
                 topic_catalog: Iterable[str]):
        self.store = store
        self.push = push
        self.meetings = meetings
        self.topic_catalog = tuple(topic_catalog)
        self._conv_locks: dict[str, threading.Lock] = {}
        self._meeting_locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()
        for topic_id in self.topic_catalog:
            if self.store.get(TOPICS, topic_id) is None:
                try:
                    self.store.compare_and_put(TOPICS, topic_id, 0,
                                               {"name": topic_id, "subscribers": []})
                except ConflictError:
                    pass

    def _lock(self, table: dict[str, threading.Lock], key: str) -> threading.Lock:
        with self._guard:
            return table.setdefault(key, threading.Lock())

    def _user(self, user: str) -> dict:
        doc = self.store.get(USERS, user)
        if doc is None:
            raise NotFoundError(f"unknown user: {user!r}")
        return doc.body

    # ------------------------------------------------------------- contacts

    def add_friend(self, user: str, alias: str) -> dict:
        """Symmetric friendship: each side lands in the other's contacts."""
        self._user(user)
        alias_doc = self.store.get(ALIASES, alias)
        if alias_doc is None:
            raise NotFoundError(f"no user with alias {alias!r}")
        other = alias_doc.body["user"]
        if other == user:
            raise ValidationError("cannot add yourself as a friend")
        for a, b in ((user, other), (other, user)):
            while True:
                doc = self.store.get(USERS, a)
                body = doc.body
                contacts = set(body.get("contacts", []))
                if b in contacts:
                    break
                contacts.add(b)
                body["contacts"] = sorted(contacts)
                try:
                    self.store.compare_and_put(USERS, a, doc.version, body)
                    break
                except ConflictError:
                    continue
        other_body = self._user(other)
        return {"user": other, "alias": alias, "language": other_body.get("language", "en")}

    def contacts(self, user: str) -> list[dict]:
        body = self._user(user)
        out = []
        for contact in body.get("contacts", []):
            contact_body = self._user(contact)
            out.append({"user": contact, "alias": contact_body.get("alias", contact)})
        return out

    # ------------------------------------------------------------- messaging

    def _append_message(self, ref: ConversationRef, sender: str, body: str,
                        extra: dict | None = None) -> int:
        with self._lock(self._conv_locks, ref.key):
            while True:
                doc = self.store.get(CONVERSATIONS, ref.key)
                if doc is None:
                    version = 0
                    conv = {
                        "kind": ref.kind,
                        "members": list(ref.members) if ref.kind == "direct" else None,
                        "topic": ref.topic_id if ref.kind == "topic" else None,
                        "messages": [],
                        "next_id": 1,
                        "flags": {},
                    }
                else:
                    version, conv = doc.version, doc.body
                message_id = conv["next_id"]
                message = {
                    "id": message_id,
                    "sender": sender,
                    "body": body,
                    "sent_at": time.time(),
                }
                if extra:
                    message.update(extra)
                conv["messages"].append(message)
                conv["next_id"] = message_id + 1
                try:
                    self.store.compare_and_put(CONVERSATIONS, ref.key, version, conv)
                    return message_id
                except ConflictError:
                    continue

    def send_direct(self, sender: str, receiver: str, body: str) -> int:
        """Store the message durably, then notify the receiver."""
        sender_body = self._user(sender)
        self._user(receiver)
        if receiver not in sender_body.get("contacts", []):
            raise ForbiddenError(f"{receiver!r} is not in your contacts")
        if not body:
            raise ValidationError("message body is empty")
        ref = ConversationRef.direct(sender, receiver)
        message_id = self._append_message(ref, sender, body)
        self.push.deliver(Notification(recipient=receiver, conversation=ref.key, hint=message_id))
        return message_id

    def _subscribers(self, topic_id: str) -> list[str]:
        doc = self.store.get(TOPICS, topic_id)
        if doc is None:
            raise NotFoundError(f"unknown topic: {topic_id!r}")
        return list(doc.body.get("subscribers", []))

    def post_topic(self, user: str, topic_id: str, body: str) -> int:
        """Anonymous post; fan-out uses the subscriber set at post time."""
        self._user(user)
        subscribers = self._subscribers(topic_id)
        if user not in subscribers:
            raise ForbiddenError(f"not subscribed to topic {topic_id!r}")
        if not body:
            raise ValidationError("message body is empty")
        ref = ConversationRef.topic(topic_id)
        message_id = self._append_message(ref, user, body)
        for recipient in self._subscribers(topic_id):
            if recipient != user:
                self.push.deliver(
                    Notification(recipient=recipient, conversation=ref.key, hint=message_id)
                )
        return message_id

    def _can_read(self, user: str, ref: ConversationRef) -> bool:
        if ref.kind == "direct":
            return user in ref.members
        return user in self._subscribers(ref.topic_id)

    def _wire_message(self, message: dict, ref: ConversationRef) -> dict:
        wire = {
            "id": message["id"],
            "conversation": ref.key,
            "sender": message["sender"],
            "body": message["body"],
            "sent_at": message["sent_at"],
        }
        if ref.kind == "topic":
            wire["sender"] = pseudonym(message["sender"], ref.topic_id)
        return wire

    def sync(self, user: str, conversation: str | ConversationRef,
             cursor: SyncCursor | int = 0) -> tuple[list[dict], SyncCursor]:
        """Messages newer than the cursor, in id order, plus the new cursor."""
        ref = conversation if isinstance(conversation, ConversationRef) else ConversationRef.parse(conversation)
        last_seen = cursor.last_seen if isinstance(cursor, SyncCursor) else int(cursor)
        self._user(user)
        if not self._can_read(user, ref):
            raise ForbiddenError(f"{user!r} is not a member of {ref.key}")
        doc = self.store.get(CONVERSATIONS, ref.key)
        messages = doc.body["messages"] if doc else []
        fresh = [self._wire_message(m, ref) for m in messages if m["id"] > last_seen]
        new_last = fresh[-1]["id"] if fresh else last_seen
        return fresh, SyncCursor(user=user, conversation=ref.key, last_seen=new_last)

    # ----------------------------------------------------------- topic threads

    def set_interests(self, user: str, topics: Iterable[str]) -> dict:
        """Subscribe to exactly the given set; removals stop fan-out at once."""
        wanted = set(topics)
        unknown = wanted - set(self.topic_catalog)
        if unknown:
            raise ValidationError(f"unknown topics: {sorted(unknown)}")
        while True:
            doc = self.store.get(USERS, user)
            if doc is None:
                raise NotFoundError(f"unknown user: {user!r}")
            body = doc.body
            current = set(body.get("interests", []))
            added, removed = wanted - current, current - wanted
            body["interests"] = sorted(wanted)
            try:
                self.store.compare_and_put(USERS, user, doc.version, body)
                break
            except ConflictError:
                continue
        for topic_id in sorted(added | removed):
            while True:
                tdoc = self.store.get(TOPICS, topic_id)
                tbody = tdoc.body
                subs = set(tbody.get("subscribers", []))
                if topic_id in added:
                    subs.add(user)
                else:
                    subs.discard(user)
                tbody["subscribers"] = sorted(subs)
                try:
                    self.store.compare_and_put(TOPICS, topic_id, tdoc.version, tbody)
                    break
                except ConflictError:
                    continue
        return {"subscribed": sorted(added), "unsubscribed": sorted(removed)}

    def interests(self, user: str) -> list[str]:
        return list(self._user(user).get("interests", []))

    # -------------------------------------------------------------- reporting

    def report_message(self, user: str, conversation: str, message_id: int, reason: str) -> ReportRecord:
        """Idempotent per (reporter, message); the message gets flagged."""
        ref = ConversationRef.parse(conversation)
        self._user(user)
        if not self._can_read(user, ref):
            raise NotFoundError("no such message")  # do not reveal foreign conversations
        doc = self.store.get(CONVERSATIONS, ref.key)
        messages = doc.body["messages"] if doc else []
        if not any(m["id"] == message_id for m in messages):
            raise NotFoundError("no such message")
        key = f"{ref.key}#{message_id}#{user}"
        existing = self.store.get(REPORTS, key)
        if existing is not None:
            return ReportRecord(**existing.body)
        record = ReportRecord(
            reporter=user,
            conversation=ref.key,
            message_id=message_id,
            reason=reason,
            created_at=time.time(),
        )
        self.store.put(REPORTS, key, record.__dict__)
        with self._lock(self._conv_locks, ref.key):
            while True:
                cdoc = self.store.get(CONVERSATIONS, ref.key)
                cbody = cdoc.body
                cbody.setdefault("flags", {})[str(message_id)] = True
                try:
                    self.store.compare_and_put(CONVERSATIONS, ref.key, cdoc.version, cbody)
                    break
                except ConflictError:
                    continue
        return record

    # --------------------------------------------------------------- meetings

    def get_or_create_meeting(self, topic_id: str) -> str:
        """One provider create per topic, ever; later calls read the stored
        credentials. A failed create stores nothing, so the next call retries."""
        if topic_id not in self.topic_catalog:
            raise NotFoundError(f"unknown topic: {topic_id!r}")
        with self._lock(self._meeting_locks, topic_id):
            doc = self.store.get(MEETINGS, topic_id)
            if doc is not None:
                return doc.body["join_url"]
            credentials = self.meetings.create_meeting(topic_id)
            self.store.put(MEETINGS, topic_id, {
                "topic": topic_id,
                "join_url": credentials["join_url"],
                "meeting_id": credentials["meeting_id"],
            })
            return credentials["join_url"]

    # ------------------------------------------------------------- inspection

    def server_log(self, conversation: str) -> list[dict]:
        """Raw stored log (test/verification accessor)."""
        doc = self.store.get(CONVERSATIONS, conversation)
        return doc.body["messages"] if doc else []

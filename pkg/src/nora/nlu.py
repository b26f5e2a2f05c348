"""Rule-based intent classification and slot filling for English and Mandarin.

A ruleset is an ordered list of prioritized rules; each rule carries one or
more patterns. A pattern without placeholders is a keyword set: every
whitespace-separated keyword must occur in the utterance (as a whole token
for en, as a contiguous character run for zh). A pattern with ``{name}``
placeholders is a template: its literal segments must appear left to right,
and each placeholder captures the text between them.

Template matching is deterministic ("leftmost-longest"): among all valid
assignments, the winner has the smallest placeholder start positions, then
the largest lengths, compared placeholder by placeholder. Concretely,
inner literal segments anchor at their earliest feasible position, a
leading placeholder starts at the first token, and the final capture runs
as far right as it can (a trailing placeholder to the end of the text, a
closing literal segment to its last occurrence).

Confidence is fixed by pattern kind: 1.0 for keyword matches, 0.8 for
template matches, 0.0 for the fallback frame.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

from .errors import NotFoundError, RulesetParseError, ValidationError
from .textutil import LANGUAGES, Token, span_text, tokenize

FALLBACK_INTENT = "fallback"

CONFIDENCE_KEYWORDS = 1.0
CONFIDENCE_TEMPLATE = 0.8

_PLACEHOLDER = re.compile(r"\{([^{}]*)\}")
_PLACEHOLDER_NAME = re.compile(r"[a-z_][a-z0-9_]*\Z")

# determiners/possessives stripped from the front of a slot value
_SLOT_PREFIXES = {
    "en": ("my", "our", "your", "his", "her", "their", "its", "the", "a", "an", "some"),
    "zh": ("我的", "我们的", "我們的", "你的", "您的", "他的", "她的", "它的"),
}


@dataclass(frozen=True)
class Utterance:
    text: str
    language: str = "en"
    source: str = "typed"  # "typed" | "speech-adapter"

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError("utterance text is empty")
        if self.language not in LANGUAGES:
            raise ValidationError(f"unsupported language: {self.language!r}")
        if self.source not in ("typed", "speech-adapter"):
            raise ValidationError(f"unknown utterance source: {self.source!r}")


@dataclass(frozen=True)
class IntentRule:
    intent: str
    language: str
    patterns: tuple[str, ...]
    priority: int = 0
    rule_id: str = ""

    def __post_init__(self):
        if not self.intent:
            raise ValidationError("rule intent must be non-empty")
        if self.language not in LANGUAGES:
            raise ValidationError(f"rule language must be one of {LANGUAGES}")
        if self.priority < 0:
            raise ValidationError("rule priority must be >= 0")
        if not self.patterns:
            raise ValidationError(f"rule {self.intent!r} has no patterns")
        for pattern in self.patterns:
            _validate_pattern(pattern, self.intent)
        if not self.rule_id:
            object.__setattr__(self, "rule_id", self.intent)


@dataclass(frozen=True)
class IntentFrame:
    intent: str
    slots: dict[str, str] = field(default_factory=dict)
    confidence: float = 0.0
    matched_rule: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError("confidence must lie in [0, 1]")
        if self.matched_rule is None and (self.intent != FALLBACK_INTENT or self.slots):
            raise ValidationError("a frame without a matched rule must be the empty fallback")


FALLBACK_FRAME = IntentFrame(intent=FALLBACK_INTENT, slots={}, confidence=0.0, matched_rule=None)


def _validate_pattern(pattern: str, intent: str) -> None:
    if not pattern.strip():
        raise ValidationError(f"rule {intent!r} has an empty pattern")
    if pattern.count("{") != pattern.count("}"):
        raise ValidationError(f"rule {intent!r}: unbalanced braces in {pattern!r}")
    matches = list(_PLACEHOLDER.finditer(pattern))
    names = [m.group(1) for m in matches]
    for name in names:
        if not _PLACEHOLDER_NAME.match(name):
            raise ValidationError(f"rule {intent!r}: bad placeholder name {name!r}")
    if len(names) != len(set(names)):
        raise ValidationError(f"rule {intent!r}: duplicate placeholder in {pattern!r}")
    for left, right in zip(matches, matches[1:]):
        if not re.search(r"\w", pattern[left.end() : right.start()]):
            raise ValidationError(
                f"rule {intent!r}: adjacent placeholders in {pattern!r} are ambiguous"
            )


def _pattern_elements(pattern: str, language: str) -> list[tuple[str, object]]:
    """Split a pattern into ("lit", tokens) and ("slot", name) elements."""
    elements: list[tuple[str, object]] = []
    pos = 0
    for match in _PLACEHOLDER.finditer(pattern):
        literal = pattern[pos : match.start()]
        toks = [t.text for t in tokenize(literal, language)]
        if toks:
            elements.append(("lit", toks))
        elements.append(("slot", match.group(1)))
        pos = match.end()
    toks = [t.text for t in tokenize(pattern[pos:], language)]
    if toks:
        elements.append(("lit", toks))
    return elements


def _find_segment(tokens: list[Token], segment: list[str], start: int, last_occurrence: bool = False) -> int:
    """Index >= start where segment occurs contiguously, else -1.

    Leftmost by default; rightmost when last_occurrence is set."""
    last = len(tokens) - len(segment)
    indices = range(last, start - 1, -1) if last_occurrence else range(start, last + 1)
    for i in indices:
        if all(tokens[i + j].text == segment[j] for j in range(len(segment))):
            return i
    return -1


def _match_template(tokens: list[Token], elements: list[tuple[str, object]]) -> dict[str, tuple[int, int]] | None:
    """Bind placeholders to token index ranges [first, last], or None.

    Implements the leftmost-longest selection: inner literal segments anchor
    at their earliest feasible position (placeholder starts minimal); the
    final element — a trailing placeholder, or a closing literal segment —
    stretches the last capture as far right as possible (lengths maximal
    given those starts)."""
    bindings: dict[str, tuple[int, int]] = {}
    cursor = 0
    pending_slot: str | None = None
    for index, (kind, value) in enumerate(elements):
        if kind == "slot":
            pending_slot = str(value)
            continue
        segment = list(value)  # type: ignore[arg-type]
        min_pos = cursor + 1 if pending_slot is not None else cursor
        closing = index == len(elements) - 1 and pending_slot is not None
        pos = _find_segment(tokens, segment, min_pos, last_occurrence=closing)
        if pos < 0:
            return None
        if pending_slot is not None:
            bindings[pending_slot] = (cursor, pos - 1)
            pending_slot = None
        cursor = pos + len(segment)
    if pending_slot is not None:
        if cursor >= len(tokens):
            return None
        bindings[pending_slot] = (cursor, len(tokens) - 1)
    return bindings


def _match_keywords(tokens: list[Token], pattern: str, language: str) -> bool:
    """Keyword-set pattern: every whitespace-separated keyword must occur.

    A multi-word keyword chunk must appear contiguously; distinct chunks can
    sit anywhere in the utterance.
    """
    keywords = [
        [t.text for t in tokenize(chunk, language)] for chunk in pattern.split()
    ]
    keywords = [kw for kw in keywords if kw]
    if not keywords:
        return False
    if language == "zh":
        stream = "".join(t.text for t in tokens)
        return all("".join(kw) in stream for kw in keywords)
    return all(_find_segment(tokens, kw, 0) >= 0 for kw in keywords)


def _pattern_matches(u: Utterance, tokens: list[Token], pattern: str) -> tuple[bool, dict[str, str], float]:
    if not _PLACEHOLDER.search(pattern):
        if _match_keywords(tokens, pattern, u.language):
            return True, {}, CONFIDENCE_KEYWORDS
        return False, {}, 0.0
    bound = _match_template(tokens, _pattern_elements(pattern, u.language))
    if bound is None:
        return False, {}, 0.0
    slots = {
        name: span_text(u.text, tokens, first, last)
        for name, (first, last) in bound.items()
    }
    return True, slots, CONFIDENCE_TEMPLATE


def normalize_slot(value: str, language: str) -> str:
    """Drop a leading determiner/possessive; lowercase English values."""
    if language == "zh":
        stripped = value.strip()
        for prefix in _SLOT_PREFIXES["zh"]:
            if stripped.startswith(prefix) and len(stripped) > len(prefix):
                return stripped[len(prefix):]
        return stripped
    words = value.strip().lower().split()
    while len(words) > 1 and words[0] in _SLOT_PREFIXES["en"]:
        words = words[1:]
    return " ".join(words)


def extract_slots(u: Utterance, rule: IntentRule) -> dict[str, str]:
    """Raw (un-normalized) slot bindings for the first matching pattern."""
    tokens = tokenize(u.text, u.language)
    for pattern in rule.patterns:
        matched, slots, _ = _pattern_matches(u, tokens, pattern)
        if matched:
            return slots
    raise NotFoundError(f"rule {rule.rule_id!r} does not match the utterance")


def classify(u: Utterance, ruleset: Iterable[IntentRule]) -> IntentFrame:
    """Highest-priority matching rule wins; ties fall to ruleset order."""
    if not u.text.strip():
        raise ValidationError("utterance text is empty")
    tokens = tokenize(u.text, u.language)
    best: tuple[int, int, IntentFrame] | None = None  # (priority, -order, frame)
    for order, rule in enumerate(ruleset):
        if rule.language != u.language:
            continue
        if best is not None and rule.priority < best[0]:
            continue
        for pattern in rule.patterns:
            matched, slots, confidence = _pattern_matches(u, tokens, pattern)
            if not matched:
                continue
            frame = IntentFrame(
                intent=rule.intent,
                slots={k: normalize_slot(v, u.language) for k, v in slots.items()},
                confidence=confidence,
                matched_rule=rule.rule_id,
            )
            if best is None or (rule.priority, -order) > (best[0], best[1]):
                best = (rule.priority, -order, frame)
            break
    return best[2] if best else FALLBACK_FRAME


def load_ruleset(source: str | Path | IO[str]) -> list[IntentRule]:
    """Parse a ruleset document: JSON Lines, one rule per line.

    Lines that are blank or start with ``#`` are skipped. Rules come back
    sorted by priority descending (stable, so file order breaks ties).
    """
    if hasattr(source, "read"):
        text = source.read()  # type: ignore[union-attr]
        origin = "<stream>"
    else:
        path = Path(source)  # type: ignore[arg-type]
        text = path.read_text(encoding="utf-8")
        origin = str(path)
    rules: list[IntentRule] = []
    seen: set[tuple[str, str]] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            record = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise RulesetParseError(f"{origin}: invalid JSON ({exc.msg})", lineno) from exc
        if not isinstance(record, dict):
            raise RulesetParseError(f"{origin}: rule record must be an object", lineno)
        missing = {"intent", "lang", "priority", "patterns"} - set(record)
        if missing:
            raise RulesetParseError(f"{origin}: missing fields {sorted(missing)}", lineno)
        try:
            rule = IntentRule(
                intent=str(record["intent"]),
                language=str(record["lang"]),
                patterns=tuple(str(p) for p in record["patterns"]),
                priority=int(record["priority"]),
                rule_id=str(record.get("id", "")) or f"{record['intent']}@{lineno}",
            )
        except ValidationError:
            raise
        except (TypeError, ValueError) as exc:
            raise RulesetParseError(f"{origin}: {exc}", lineno) from exc
        for pattern in rule.patterns:
            pair = (rule.intent, pattern)
            if pair in seen:
                raise ValidationError(
                    f"{origin}: duplicate intent/pattern pair {pair!r} (line {lineno})"
                )
            seen.add(pair)
        rules.append(rule)
    return sorted(rules, key=lambda r: -r.priority)


def load_language_ruleset(rules_dir: str | Path, language: str) -> list[IntentRule]:
    return load_ruleset(Path(rules_dir) / f"{language}.rules")

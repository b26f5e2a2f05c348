"""Tokenization shared by the NLU and affect scorers.

English is matched on lowercased word tokens; Mandarin on individual
characters (no whitespace segmentation). Tokens keep their character
offsets into the original string so slot values can be cut from the raw
text rather than re-joined from tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

LANGUAGES = ("en", "zh")

_WORD = re.compile(r"\w+", re.UNICODE)
_CHAR = re.compile(r"\w", re.UNICODE)


@dataclass(frozen=True)
class Token:
    text: str  # lowercased form used for matching
    start: int
    end: int


def tokenize(text: str, language: str) -> list[Token]:
    if language == "zh":
        return [Token(m.group(0), m.start(), m.end()) for m in _CHAR.finditer(text)]
    return [Token(m.group(0).lower(), m.start(), m.end()) for m in _WORD.finditer(text)]


def span_text(text: str, tokens: list[Token], first: int, last: int) -> str:
    """Raw substring covering tokens[first..last] inclusive."""
    return text[tokens[first].start : tokens[last].end]

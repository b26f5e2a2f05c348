"""Number extraction from user turns.

Temperature turns need the first decimal number in free text; breath-count
turns need every number mentioned so the highest count can be kept. Digits
work for both languages, Mandarin numerals for zh, and spelled-out English
words (zero through one hundred) for en, because users count out loud in
words ("one two three ...").
"""

from __future__ import annotations

import re

from .textutil import tokenize

_ASCII_NUMBER = re.compile(r"\d+(?:\.\d+)?")

# translate full-width digits and separators to ASCII before matching
_FULLWIDTH = {ord(f): ord(a) for f, a in zip("０１２３４５６７８９．", "0123456789.")}

_ZH_DIGITS = {
    "零": 0, "一": 1, "二": 2, "两": 2, "三": 3, "四": 4,
    "五": 5, "六": 6, "七": 7, "八": 8, "九": 9,
}
_ZH_UNITS = {"十": 10, "百": 100, "千": 1000}
_ZH_POINT = {"点", "點"}
_ZH_CHARS = set(_ZH_DIGITS) | set(_ZH_UNITS) | _ZH_POINT

_EN_UNITS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9,
}
_EN_TEENS = {
    "ten": 10, "eleven": 11, "twelve": 12, "thirteen": 13, "fourteen": 14,
    "fifteen": 15, "sixteen": 16, "seventeen": 17, "eighteen": 18, "nineteen": 19,
}
_EN_TENS = {
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50,
    "sixty": 60, "seventy": 70, "eighty": 80, "ninety": 90,
}


def convert_mandarin(run: str) -> float | None:
    """Convert one contiguous Mandarin-numeral string, or None if malformed."""
    if not run or any(ch not in _ZH_CHARS for ch in run):
        return None
    whole, point, frac = run, None, ""
    for p in _ZH_POINT:
        if p in run:
            whole, _, frac = run.partition(p)
            point = p
            break
    if point is not None and (not frac or any(ch not in _ZH_DIGITS for ch in frac)):
        return None

    total = 0
    pending = -1  # -1 = no digit waiting for a unit
    if whole == "" and point is not None:
        pass  # "点五" style: integer part zero
    else:
        if not whole:
            return None
        for ch in whole:
            if ch in _ZH_DIGITS:
                if pending >= 0 and _ZH_DIGITS[ch] != 0 and pending != 0:
                    return None  # two non-zero digits without a unit: 三七 is not a numeral
                pending = _ZH_DIGITS[ch] if pending <= 0 else pending
            else:
                unit = _ZH_UNITS[ch]
                total += (pending if pending > 0 else 1) * unit
                pending = -1
        if pending > 0:
            total += pending
        elif pending == 0 and total == 0:
            total = 0  # bare 零

    value = float(total)
    if frac:
        value += sum(_ZH_DIGITS[ch] * 10 ** -(i + 1) for i, ch in enumerate(frac))
    return value


def _mandarin_candidates(text: str) -> list[tuple[int, float]]:
    out = []
    i = 0
    while i < len(text):
        if text[i] in _ZH_CHARS:
            j = i
            while j < len(text) and text[j] in _ZH_CHARS:
                j += 1
            value = convert_mandarin(text[i:j])
            if value is not None:
                out.append((i, value))
            i = j
        else:
            i += 1
    return out


def _english_word_candidates(text: str) -> list[tuple[int, float]]:
    tokens = tokenize(text, "en")
    out = []
    i = 0
    while i < len(tokens):
        word = tokens[i].text
        start = tokens[i].start
        if word in _EN_TEENS:
            out.append((start, float(_EN_TEENS[word])))
            i += 1
        elif word in _EN_TENS:
            value = _EN_TENS[word]
            i += 1
            if i < len(tokens) and tokens[i].text in _EN_UNITS and _EN_UNITS[tokens[i].text] > 0:
                value += _EN_UNITS[tokens[i].text]
                i += 1
            out.append((start, float(value)))
        elif word in _EN_UNITS:
            value = _EN_UNITS[word]
            i += 1
            if i < len(tokens) and tokens[i].text == "hundred":
                value *= 100
                i += 1
            out.append((start, float(value)))
        else:
            i += 1
    return out


def _candidates(text: str, language: str, spelled_english: bool) -> list[tuple[int, float]]:
    text = text.translate(_FULLWIDTH)
    found = [(m.start(), float(m.group(0))) for m in _ASCII_NUMBER.finditer(text)]
    if language == "zh":
        found.extend(_mandarin_candidates(text))
    elif spelled_english:
        found.extend(_english_word_candidates(text))
    found.sort(key=lambda pair: pair[0])
    return found


def parse_number(text: str, language: str = "en") -> float | None:
    """First decimal number in the text, or None when there is none.

    Digits count for both languages, Mandarin numerals for zh. Spelled-out
    English words are deliberately not considered here; use
    parse_all_numbers for count readouts.
    """
    found = _candidates(text, language, spelled_english=False)
    return found[0][1] if found else None


def parse_all_numbers(text: str, language: str = "en") -> list[float]:
    """Every number in the text, in order of appearance, words included."""
    return [value for _, value in _candidates(text, language, spelled_english=True)]

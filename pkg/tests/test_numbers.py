from __future__ import annotations

import pytest

from nora.numbers import convert_mandarin, parse_all_numbers, parse_number

# Independent table-driven Mandarin numeral generator (the oracle): built
# digit-by-digit from its own tables, before and apart from the parser.
_DIGITS = ["零", "一", "二", "三", "四", "五", "六", "七", "八", "九"]


def mandarin_numeral(n: int) -> str:
    if not 0 <= n <= 100:
        raise ValueError("oracle covers 0..100")
    if n == 0:
        return "零"
    if n == 100:
        return "一百"
    tens, units = divmod(n, 10)
    if tens == 0:
        return _DIGITS[units]
    text = "十" if tens == 1 else _DIGITS[tens] + "十"
    if units:
        text += _DIGITS[units]
    return text


def test_mandarin_converter_agrees_with_exhaustive_oracle():
    for n in range(0, 101):
        assert convert_mandarin(mandarin_numeral(n)) == float(n), mandarin_numeral(n)


def test_mandarin_decimals():
    assert convert_mandarin("三十六点八") == pytest.approx(36.8)
    assert convert_mandarin("十点五") == pytest.approx(10.5)
    assert convert_mandarin("三十七") == 37.0


def test_mandarin_rejects_non_numerals():
    assert convert_mandarin("你好") is None
    assert convert_mandarin("") is None
    assert convert_mandarin("点") is None
    assert convert_mandarin("三七") is None  # two digits without a unit


def test_parse_number_digits():
    assert parse_number("36.8 degrees") == pytest.approx(36.8)
    assert parse_number("it is 38 today") == 38.0
    assert parse_number("no idea") is None


def test_parse_number_prefers_first_occurrence():
    assert parse_number("between 32 and 43") == 32.0


def test_parse_number_mandarin_only_for_zh():
    assert parse_number("三十七", "zh") == 37.0
    assert parse_number("三十七度", "zh") == 37.0
    assert parse_number("三十七", "en") is None


def test_parse_number_fullwidth_digits():
    assert parse_number("３６.８", "zh") == pytest.approx(36.8)


def test_parse_number_ignores_english_words():
    # spelled-out words are only for count readouts
    assert parse_number("thirty six") is None


def test_parse_all_numbers_english_counting():
    assert parse_all_numbers("one two three four five") == [1.0, 2.0, 3.0, 4.0, 5.0]
    assert parse_all_numbers("one, two, three... twenty one!") == [1.0, 2.0, 3.0, 21.0]
    assert parse_all_numbers("I got to fifteen") == [15.0]
    assert parse_all_numbers("one hundred") == [100.0]


def test_parse_all_numbers_mixed_digits():
    assert parse_all_numbers("1 2 3 10") == [1.0, 2.0, 3.0, 10.0]


def test_parse_all_numbers_mandarin_counting():
    assert parse_all_numbers("一 二 三 四 五", "zh") == [1.0, 2.0, 3.0, 4.0, 5.0]
    assert parse_all_numbers("数到二十一", "zh") == [21.0]


def test_parse_all_numbers_empty():
    assert parse_all_numbers("nothing here") == []

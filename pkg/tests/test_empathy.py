from __future__ import annotations

import math
import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nora.empathy import (
    AudioFeatures,
    EmotionDistribution,
    EmpathyScores,
    FusionWeights,
    Lexicon,
    SentimentScore,
    StressScore,
    fuse_emotions,
    score_emotion_audio,
    score_emotion_text,
    score_sentiment,
    score_stress,
)
from nora.errors import IncompatibleDistributions, ValidationError

CLASSES = ("happy", "sad", "angry", "neutral")


# ---------------------------------------------------------------------------
# Counting oracles, written against the lexicon file contents directly.
# English: plain token-membership loop. Mandarin: explicit position scan that
# always prefers the longest entry (the scorer itself uses a regex
# alternation, a different mechanism).
# ---------------------------------------------------------------------------

def oracle_hits_en(text: str, entries: dict[str, str]) -> dict[str, int]:
    hits: dict[str, int] = {}
    for token in re.findall(r"\w+", text.lower()):
        if token in entries:
            hits[entries[token]] = hits.get(entries[token], 0) + 1
    return hits


def oracle_hits_zh(text: str, entries: dict[str, str]) -> dict[str, int]:
    stream = "".join(re.findall(r"\w", text))
    ordered = sorted(entries, key=len, reverse=True)
    hits: dict[str, int] = {}
    i = 0
    while i < len(stream):
        for entry in ordered:
            if stream.startswith(entry, i):
                hits[entries[entry]] = hits.get(entries[entry], 0) + 1
                i += len(entry)
                break
        else:
            i += 1
    return hits


def oracle_sentiment(text: str, lexicon: Lexicon) -> tuple[str, float]:
    oracle = oracle_hits_zh if lexicon.language == "zh" else oracle_hits_en
    hits = oracle(text, lexicon.entries)
    p, n = hits.get("positive", 0), hits.get("negative", 0)
    if p + n == 0:
        return "positive", 0.5
    return ("positive" if p >= n else "negative"), max(p, n) / (p + n)


def oracle_emotion(text: str, lexicon: Lexicon, classes=CLASSES) -> dict[str, float]:
    oracle = oracle_hits_zh if lexicon.language == "zh" else oracle_hits_en
    hits = oracle(text, lexicon.entries)
    raw = {c: hits.get(c, 0) + 1.0 for c in classes}
    total = sum(raw.values())
    return {c: raw[c] / total for c in classes}


def oracle_stress(text: str, lexicon: Lexicon) -> float:
    oracle = oracle_hits_zh if lexicon.language == "zh" else oracle_hits_en
    if lexicon.language == "zh":
        tokens = re.findall(r"\w", text)
    else:
        tokens = re.findall(r"\w+", text.lower())
    if not tokens:
        return 0.0
    return min(1.0, sum(oracle(text, lexicon.entries).values()) / len(tokens))


def random_text(rng: random.Random, lexicon: Lexicon, language: str) -> str:
    vocab = list(lexicon.entries) + ["blorp", "qqq", "zzz", "xylophone", "742"]
    if language == "zh":
        return "".join(rng.choice(vocab) for _ in range(rng.randint(1, 12)))
    return " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 12)))


# ------------------------------------------------------------------ sentiment

def test_sentiment_positive_example(empathy_service):
    score = empathy_service.score_sentiment("I love this program, wonderful")
    assert score == SentimentScore("positive", 1.0)


def test_sentiment_negative_example(empathy_service):
    score = empathy_service.score_sentiment("terrible awful day")
    assert score.label == "negative"
    assert score.confidence == 1.0


def test_sentiment_no_evidence_is_positive_half(empathy_service):
    score = empathy_service.score_sentiment("zxcvb qwerty")
    assert score == SentimentScore("positive", 0.5)


def test_sentiment_empty_text_invalid(empathy_service):
    with pytest.raises(ValidationError):
        empathy_service.score_sentiment("   ")


def test_sentiment_tie_breaks_positive(empathy_service):
    score = empathy_service.score_sentiment("happy but tired")  # one hit each side
    assert score.label == "positive"
    assert score.confidence == 0.5


@pytest.mark.parametrize("language", ["en", "zh"])
def test_sentiment_agrees_with_oracle_on_random_texts(empathy_service, language):
    rng = random.Random(99)
    lexicon = empathy_service.sentiment_lexicons[language]
    for _ in range(300):
        text = random_text(rng, lexicon, language)
        expected_label, expected_conf = oracle_sentiment(text, lexicon)
        got = score_sentiment(text, lexicon)
        assert (got.label, got.confidence) == (expected_label, pytest.approx(expected_conf)), text


# -------------------------------------------------------------------- emotion

def test_emotion_no_keywords_uniform(empathy_service):
    dist = empathy_service.score_emotion_text("zxcvb qwerty unrelated")
    assert dist.scores == pytest.approx({c: 0.25 for c in CLASSES})


def test_emotion_happy_keywords_argmax(empathy_service):
    dist = empathy_service.score_emotion_text("happy happy joy smile")
    assert dist.argmax() == "happy"
    lexicon = empathy_service.emotion_lexicons["en"]
    assert dist.scores == pytest.approx(oracle_emotion("happy happy joy smile", lexicon))


@pytest.mark.parametrize("language", ["en", "zh"])
def test_emotion_agrees_with_oracle_on_random_texts(empathy_service, language):
    rng = random.Random(7_341)
    lexicon = empathy_service.emotion_lexicons[language]
    for _ in range(300):
        text = random_text(rng, lexicon, language)
        assert score_emotion_text(text, lexicon, CLASSES).scores == pytest.approx(
            oracle_emotion(text, lexicon)
        ), text


def test_emotion_audio_all_zero_uniform():
    features = AudioFeatures(stats=(0.0,) * 8, duration=2.0)
    dist = score_emotion_audio(features, CLASSES)
    assert dist.scores == pytest.approx({c: 0.25 for c in CLASSES})


def test_emotion_audio_nonzero_is_valid_distribution():
    features = AudioFeatures(stats=(0.8, 0.3, 1.2, 0.1, 190.0, 25.0, 240.0, 120.0), duration=3.5)
    dist = score_emotion_audio(features, CLASSES)
    assert sum(dist.scores.values()) == pytest.approx(1.0, abs=1e-9)
    assert all(0 <= v <= 1 for v in dist.scores.values())


def test_emotion_audio_deterministic():
    features = AudioFeatures(stats=(0.8, 0.3, 1.2, 0.1, 190.0, 25.0, 240.0, 120.0), duration=3.5)
    assert score_emotion_audio(features, CLASSES) == score_emotion_audio(features, CLASSES)


def test_audio_features_reject_nonfinite():
    with pytest.raises(ValidationError):
        AudioFeatures(stats=(float("nan"),) * 8, duration=1.0)
    with pytest.raises(ValidationError):
        AudioFeatures(stats=(float("inf"), 0, 0, 0, 0, 0, 0, 0), duration=1.0)
    with pytest.raises(ValidationError):
        AudioFeatures(stats=(0.0,) * 8, duration=0.0)
    with pytest.raises(ValidationError):
        AudioFeatures(stats=(0.0,) * 3, duration=1.0)


# --------------------------------------------------------------------- fusion

def _dist(pairs: dict[str, float]) -> EmotionDistribution:
    return EmotionDistribution(scores=dict(pairs), class_set=tuple(pairs))


def test_fusion_forced_arithmetic():
    d_text = _dist({"pos": 0.6, "neg": 0.4})
    d_audio = _dist({"pos": 0.2, "neg": 0.8})
    fused = fuse_emotions(d_text, d_audio, FusionWeights(0.5, 0.5))
    assert fused.scores == pytest.approx({"pos": 0.4, "neg": 0.6})


def test_fusion_identity_at_text_only():
    d_text = _dist({"pos": 0.7, "neg": 0.3})
    d_audio = _dist({"pos": 0.1, "neg": 0.9})
    fused = fuse_emotions(d_text, d_audio, FusionWeights(1.0, 0.0))
    assert fused.scores == d_text.scores


def test_fusion_mismatched_class_sets():
    with pytest.raises(IncompatibleDistributions):
        fuse_emotions(_dist({"a": 1.0}), _dist({"b": 1.0}), FusionWeights(0.5, 0.5))


def _random_distribution(rng: random.Random, classes=CLASSES) -> EmotionDistribution:
    raw = [rng.random() + 1e-9 for _ in classes]
    total = sum(raw)
    scores = {c: v / total for c, v in zip(classes, raw)}
    scores[classes[-1]] += 1.0 - sum(scores.values())
    return EmotionDistribution(scores=scores, class_set=classes)


def test_fusion_linearity_against_perclass_loop_oracle():
    rng = random.Random(5)
    for _ in range(1000):
        d1, d2 = _random_distribution(rng), _random_distribution(rng)
        w_text = rng.random()
        w = FusionWeights(w_text, 1.0 - w_text)
        fused = fuse_emotions(d1, d2, w)
        for c in CLASSES:  # independent per-class loop
            assert abs(fused.scores[c] - (w.w_text * d1.scores[c] + w.w_audio * d2.scores[c])) <= 1e-9
        assert abs(sum(fused.scores.values()) - 1.0) <= 1e-9  # normalization closure
        mirrored = fuse_emotions(d2, d1, FusionWeights(w.w_audio, w.w_text))
        for c in CLASSES:  # symmetry
            assert abs(fused.scores[c] - mirrored.scores[c]) <= 1e-12


def test_fusion_weights_validation():
    with pytest.raises(ValidationError):
        FusionWeights(0.7, 0.7)
    with pytest.raises(ValidationError):
        FusionWeights(-0.1, 1.1)


def test_distribution_validation():
    with pytest.raises(ValidationError):
        EmotionDistribution(scores={"a": 0.4, "b": 0.4}, class_set=("a", "b"))
    with pytest.raises(ValidationError):
        EmotionDistribution(scores={"a": 1.0}, class_set=("a", "b"))


# --------------------------------------------------------------------- stress

def test_stress_empty_is_zero(empathy_service):
    assert empathy_service.score_stress("") == StressScore(0.0)


def test_stress_single_keyword_is_one(empathy_service):
    assert empathy_service.score_stress("overwhelmed") == StressScore(1.0)


def test_stress_pinned_ratio(empathy_service):
    score = empathy_service.score_stress("I feel overwhelmed and anxious today")
    assert score.value == pytest.approx(2 / 6)


def test_stress_zh(empathy_service):
    score = empathy_service.score_stress("压力好大", "zh")
    assert score.value == pytest.approx(1 / 4)


@pytest.mark.parametrize("language", ["en", "zh"])
def test_stress_agrees_with_oracle_on_random_texts(empathy_service, language):
    rng = random.Random(48)
    lexicon = empathy_service.stress_lexicons[language]
    for _ in range(300):
        text = random_text(rng, lexicon, language)
        assert score_stress(text, lexicon).value == pytest.approx(oracle_stress(text, lexicon))


# ----------------------------------------------------------------- score_turn

def test_score_turn_without_audio_equals_text_distribution(empathy_service):
    text = "I feel happy and calm"
    scores = empathy_service.score_turn(text)
    assert scores.emotion.scores == pytest.approx(
        empathy_service.score_emotion_text(text).scores
    )
    assert scores.sentiment == empathy_service.score_sentiment(text)
    assert scores.stress == empathy_service.score_stress(text)


def test_score_turn_with_audio_uses_configured_weights(empathy_service):
    text = "I feel happy"
    features = AudioFeatures(stats=(0.9, 0.2, 1.0, 0.2, 100.0, 10.0, 130.0, 80.0), duration=2.0)
    scores = empathy_service.score_turn(text, audio=features)
    expected = fuse_emotions(
        empathy_service.score_emotion_text(text),
        empathy_service.score_emotion_audio(features),
        empathy_service.weights,
    )
    assert scores.emotion.scores == pytest.approx(expected.scores)


def test_empathy_scores_roundtrip(empathy_service):
    scores = empathy_service.score_turn("I feel sad")
    assert EmpathyScores.from_dict(scores.to_dict()) == scores


# -------------------------------------------------------- range safety (fuzz)

@settings(max_examples=300, deadline=None)
@given(text=st.text(max_size=120))
def test_range_safety_under_unicode_fuzz(empathy_service, text):
    for language in ("en", "zh"):
        stress = empathy_service.score_stress(text, language)
        assert 0.0 <= stress.value <= 1.0
        emotion = empathy_service.score_emotion_text(text, language)
        assert abs(sum(emotion.scores.values()) - 1.0) <= 1e-9
        assert all(0.0 <= v <= 1.0 for v in emotion.scores.values())
        if text.strip():
            sentiment = empathy_service.score_sentiment(text, language)
            assert 0.5 <= sentiment.confidence <= 1.0


# --------------------------------------------------- scorer interface plug-in

class UniformScorers:
    """Trivial alternative implementation of the scorer interfaces."""

    def score_sentiment(self, text: str) -> SentimentScore:
        return SentimentScore("positive", 0.5)

    def score_emotion_text(self, text: str) -> EmotionDistribution:
        return EmotionDistribution.uniform(CLASSES)

    def score_stress(self, text: str) -> StressScore:
        return StressScore(0.0)


class LexiconScorers:
    def __init__(self, service):
        self.service = service

    def score_sentiment(self, text: str) -> SentimentScore:
        return self.service.score_sentiment(text)

    def score_emotion_text(self, text: str) -> EmotionDistribution:
        return self.service.score_emotion_text(text)

    def score_stress(self, text: str) -> StressScore:
        return self.service.score_stress(text)


@pytest.fixture(params=["lexicon", "uniform"])
def scorer_implementation(request, empathy_service):
    return LexiconScorers(empathy_service) if request.param == "lexicon" else UniformScorers()


def test_any_scorer_implementation_passes_generic_suite(scorer_implementation):
    """The same property suite holds for every interface implementation."""
    rng = random.Random(13)
    words = ["happy", "sad", "blorp", "anxious", "love", "terrible", "zzz"]
    for _ in range(100):
        text = " ".join(rng.choice(words) for _ in range(rng.randint(1, 8)))
        sentiment = scorer_implementation.score_sentiment(text)
        assert sentiment.label in ("positive", "negative")
        assert 0.5 <= sentiment.confidence <= 1.0
        emotion = scorer_implementation.score_emotion_text(text)
        assert abs(sum(emotion.scores.values()) - 1.0) <= 1e-9
        assert tuple(emotion.scores.keys()) == tuple(emotion.class_set)
        stress = scorer_implementation.score_stress(text)
        assert 0.0 <= stress.value <= 1.0
        assert not math.isnan(stress.value)

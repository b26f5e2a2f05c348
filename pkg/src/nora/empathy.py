"""Affect scoring: sentiment, emotion distribution, and stress per turn.

The scorers here are deterministic lexicon baselines behind small
interfaces, so any model with the same output contract can be swapped in
without touching consumers. English texts are scored over word tokens;
Mandarin over the character stream with longest-entry-first matching, so
不好 counts as one negative hit rather than a positive 好.

Text and audio emotion distributions are combined classwise by a weighted
average; with no audio channel the text distribution passes through
unchanged (weights (1, 0)).
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

from .errors import IncompatibleDistributions, ValidationError
from .textutil import tokenize

SUM_TOLERANCE = 1e-9

AUDIO_STATS_LEN = 8  # energy mean/std/max/min, pitch mean/std/max/min


# ---------------------------------------------------------------- score types

@dataclass(frozen=True)
class SentimentScore:
    label: str  # "positive" | "negative"
    confidence: float

    def __post_init__(self):
        if self.label not in ("positive", "negative"):
            raise ValidationError(f"bad sentiment label: {self.label!r}")
        if not 0.5 <= self.confidence <= 1.0:
            raise ValidationError("sentiment confidence is the winning mass, in [0.5, 1]")


@dataclass(frozen=True)
class EmotionDistribution:
    scores: dict[str, float]
    class_set: tuple[str, ...]

    def __post_init__(self):
        if tuple(self.scores.keys()) != tuple(self.class_set):
            raise ValidationError("distribution keys must equal the class set, in order")
        if any(not 0.0 <= v <= 1.0 for v in self.scores.values()):
            raise ValidationError("every class score must lie in [0, 1]")
        if abs(sum(self.scores.values()) - 1.0) > SUM_TOLERANCE:
            raise ValidationError("class scores must sum to 1")

    def argmax(self) -> str:
        return max(self.class_set, key=lambda c: self.scores[c])

    @classmethod
    def uniform(cls, class_set: Sequence[str]) -> "EmotionDistribution":
        share = 1.0 / len(class_set)
        scores = {c: share for c in class_set}
        # absorb float drift into the last class so the sum is exact
        last = class_set[-1]
        scores[last] += 1.0 - sum(scores.values())
        return cls(scores=scores, class_set=tuple(class_set))

    @classmethod
    def from_weights(cls, weights: dict[str, float], class_set: Sequence[str]) -> "EmotionDistribution":
        total = sum(weights[c] for c in class_set)
        if total <= 0:
            return cls.uniform(class_set)
        scores = {c: weights[c] / total for c in class_set}
        last = tuple(class_set)[-1]
        scores[last] += 1.0 - sum(scores.values())
        return cls(scores=scores, class_set=tuple(class_set))


@dataclass(frozen=True)
class StressScore:
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValidationError("stress must lie in [0, 1]")


@dataclass(frozen=True)
class FusionWeights:
    w_text: float
    w_audio: float

    def __post_init__(self):
        if self.w_text < 0 or self.w_audio < 0:
            raise ValidationError("fusion weights must be non-negative")
        if abs(self.w_text + self.w_audio - 1.0) > 1e-12:
            raise ValidationError("fusion weights must sum to 1")


TEXT_ONLY = FusionWeights(1.0, 0.0)


@dataclass(frozen=True)
class AudioFeatures:
    """Summary statistics for one recording; stands in for raw audio."""

    stats: tuple[float, ...]
    duration: float

    def __post_init__(self):
        if len(self.stats) != AUDIO_STATS_LEN:
            raise ValidationError(f"expected {AUDIO_STATS_LEN} summary statistics")
        if any(not math.isfinite(v) for v in self.stats):
            raise ValidationError("audio features must be finite")
        if not math.isfinite(self.duration) or self.duration <= 0:
            raise ValidationError("duration must be a positive finite number")


@dataclass(frozen=True)
class EmpathyScores:
    sentiment: SentimentScore
    emotion: EmotionDistribution
    stress: StressScore

    def to_dict(self) -> dict:
        return {
            "sentiment": {"label": self.sentiment.label, "confidence": self.sentiment.confidence},
            "emotion": dict(self.emotion.scores),
            "stress": self.stress.value,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "EmpathyScores":
        emotion = raw["emotion"]
        return cls(
            sentiment=SentimentScore(**raw["sentiment"]),
            emotion=EmotionDistribution(scores=dict(emotion), class_set=tuple(emotion)),
            stress=StressScore(raw["stress"]),
        )


# ------------------------------------------------------------------- lexicons

class Lexicon:
    """token -> class map for one language, loaded from a tab-separated file."""

    def __init__(self, entries: dict[str, str], language: str):
        self.language = language
        self.entries = dict(entries)
        if language == "zh" and self.entries:
            # longest-first alternation: the regex engine tries alternatives in
            # order, so at each position the longest lexicon entry wins and
            # matched characters are consumed (finditer is non-overlapping)
            ordered = sorted(self.entries, key=len, reverse=True)
            self._scan = re.compile("|".join(re.escape(e) for e in ordered))
        else:
            self._scan = None

    @classmethod
    def load(cls, path: str | Path, language: str) -> "Lexicon":
        entries: dict[str, str] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValidationError(f"{path}: line {lineno}: expected token<TAB>class")
            entries[parts[0]] = parts[1]
        return cls(entries, language)

    def class_hits(self, text: str) -> Counter:
        """Hit count per class."""
        hits: Counter = Counter()
        if self.language == "zh":
            if self._scan is not None:
                stream = "".join(t.text for t in tokenize(text, "zh"))
                for match in self._scan.finditer(stream):
                    hits[self.entries[match.group(0)]] += 1
        else:
            for token in tokenize(text, "en"):
                cls_name = self.entries.get(token.text)
                if cls_name is not None:
                    hits[cls_name] += 1
        return hits

    def total_hits(self, text: str) -> int:
        return sum(self.class_hits(text).values())


# ------------------------------------------------------------------ interfaces

class SentimentScorer(Protocol):
    def score_sentiment(self, text: str) -> SentimentScore: ...


class TextEmotionScorer(Protocol):
    def score_emotion_text(self, text: str) -> EmotionDistribution: ...


class AudioEmotionScorer(Protocol):
    def score_emotion_audio(self, features: AudioFeatures) -> EmotionDistribution: ...


class StressScorer(Protocol):
    def score_stress(self, text: str) -> StressScore: ...


# ------------------------------------------------------------------ operations

def score_sentiment(text: str, lexicon: Lexicon) -> SentimentScore:
    """Positive iff positive hits >= negative hits; the tie is positive.

    Confidence is the winning side's share of all hits, or 0.5 with no
    evidence at all.
    """
    if not text.strip():
        raise ValidationError("cannot score sentiment of empty text")
    hits = lexicon.class_hits(text)
    p, n = hits.get("positive", 0), hits.get("negative", 0)
    if p + n == 0:
        return SentimentScore("positive", 0.5)
    label = "positive" if p >= n else "negative"
    return SentimentScore(label, max(p, n) / (p + n))


def score_emotion_text(text: str, lexicon: Lexicon, class_set: Sequence[str]) -> EmotionDistribution:
    """Keyword counts per class, add-one smoothed and renormalized."""
    hits = lexicon.class_hits(text)
    weights = {c: hits.get(c, 0) + 1.0 for c in class_set}
    return EmotionDistribution.from_weights(weights, class_set)


def score_emotion_audio(features: AudioFeatures, class_set: Sequence[str]) -> EmotionDistribution:
    """Heuristic mapping from energy/pitch statistics to class affinities.

    Arousal follows energy, brightness follows pitch: loud+bright leans
    happy, loud+dark leans angry, quiet+dark leans sad, quiet+bright leans
    neutral. Classes outside those four get only the smoothing mass. An
    all-zero vector carries no evidence and yields the uniform distribution.
    """
    if all(v == 0.0 for v in features.stats):
        return EmotionDistribution.uniform(class_set)
    e_mean, e_std = features.stats[0], features.stats[1]
    p_mean = features.stats[4]
    arousal = 1.0 - math.exp(-(abs(e_mean) + abs(e_std)))
    brightness = 1.0 / (1.0 + math.exp(-(p_mean - 150.0) / 50.0))
    affinity = {
        "happy": arousal * brightness,
        "angry": arousal * (1.0 - brightness),
        "sad": (1.0 - arousal) * (1.0 - brightness),
        "neutral": (1.0 - arousal) * brightness,
    }
    weights = {c: affinity.get(c, 0.0) + 0.25 for c in class_set}
    return EmotionDistribution.from_weights(weights, class_set)


def fuse_emotions(
    d_text: EmotionDistribution, d_audio: EmotionDistribution, w: FusionWeights
) -> EmotionDistribution:
    """Classwise weighted average of the two channel distributions."""
    if tuple(d_text.class_set) != tuple(d_audio.class_set):
        raise IncompatibleDistributions(
            f"class sets differ: {d_text.class_set} vs {d_audio.class_set}"
        )
    scores = {
        c: w.w_text * d_text.scores[c] + w.w_audio * d_audio.scores[c]
        for c in d_text.class_set
    }
    return EmotionDistribution(scores=scores, class_set=tuple(d_text.class_set))


def score_stress(text: str, lexicon: Lexicon) -> StressScore:
    """Stress-keyword hits over total tokens, clamped to [0, 1]."""
    tokens = tokenize(text, lexicon.language)
    if not tokens:
        return StressScore(0.0)
    ratio = lexicon.total_hits(text) / len(tokens)
    return StressScore(min(1.0, max(0.0, ratio)))


# --------------------------------------------------------------------- service

@dataclass
class EmpathyService:
    """Per-language scorer bundle with the configured fusion weights."""

    sentiment_lexicons: dict[str, Lexicon]
    emotion_lexicons: dict[str, Lexicon]
    stress_lexicons: dict[str, Lexicon]
    class_set: tuple[str, ...]
    weights: FusionWeights = field(default_factory=lambda: FusionWeights(0.5, 0.5))

    @classmethod
    def from_config(cls, config) -> "EmpathyService":
        root = config.lexicons_path
        return cls(
            sentiment_lexicons={l: Lexicon.load(root / f"sentiment.{l}", l) for l in ("en", "zh")},
            emotion_lexicons={l: Lexicon.load(root / f"emotion.{l}", l) for l in ("en", "zh")},
            stress_lexicons={l: Lexicon.load(root / f"stress.{l}", l) for l in ("en", "zh")},
            class_set=tuple(config.emotion_classes),
            weights=FusionWeights(*config.fusion_weights),
        )

    def score_sentiment(self, text: str, language: str = "en") -> SentimentScore:
        return score_sentiment(text, self.sentiment_lexicons[language])

    def score_emotion_text(self, text: str, language: str = "en") -> EmotionDistribution:
        return score_emotion_text(text, self.emotion_lexicons[language], self.class_set)

    def score_emotion_audio(self, features: AudioFeatures) -> EmotionDistribution:
        return score_emotion_audio(features, self.class_set)

    def score_stress(self, text: str, language: str = "en") -> StressScore:
        return score_stress(text, self.stress_lexicons[language])

    def score_turn(
        self, text: str, language: str = "en", audio: AudioFeatures | None = None
    ) -> EmpathyScores:
        """Bundle of the three scores for one utterance.

        Without an audio channel the fusion collapses to the text
        distribution exactly (weights (1, 0))."""
        d_text = self.score_emotion_text(text, language)
        if audio is None:
            emotion = fuse_emotions(d_text, EmotionDistribution.uniform(self.class_set), TEXT_ONLY)
        else:
            emotion = fuse_emotions(d_text, self.score_emotion_audio(audio), self.weights)
        return EmpathyScores(
            sentiment=self.score_sentiment(text, language),
            emotion=emotion,
            stress=self.score_stress(text, language),
        )

"""Platform configuration: one JSON document drives every service."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError

ASSET_ROOT = Path(__file__).parent

DEFAULT_TOPICS = ("movies", "cooking", "music")
DEFAULT_EMOTIONS = ("happy", "sad", "angry", "neutral")
DEFAULT_VIDEOS = {
    "exercise": "builtin:exercise-01",
    "yoga": "builtin:yoga-01",
    "meditation": "builtin:meditation-01",
}


@dataclass
class PlatformConfig:
    port: int = 8080
    data_dir: str | None = None  # None -> in-memory store
    hotline: str = "+1-800-555-0199"
    topic_catalog: tuple[str, ...] = DEFAULT_TOPICS
    emotion_classes: tuple[str, ...] = DEFAULT_EMOTIONS
    fusion_weights: tuple[float, float] = (0.5, 0.5)  # (text, audio)
    stress_threshold: float = 0.5
    program_name: str = "quarantine-14"
    program_length: int = 14
    token_ttl_seconds: int = 86400
    activity_videos: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_VIDEOS))
    rules_dir: str | None = None      # None -> packaged rules/
    lexicons_dir: str | None = None   # None -> packaged lexicons/
    templates_dir: str | None = None  # None -> packaged templates/

    def __post_init__(self):
        if self.program_length < 1:
            raise ValidationError("program length must be >= 1")
        if self.stress_threshold < 0 or self.stress_threshold > 1:
            raise ValidationError("stress threshold must lie in [0, 1]")
        w_text, w_audio = self.fusion_weights
        if w_text < 0 or w_audio < 0 or abs(w_text + w_audio - 1.0) > 1e-12:
            raise ValidationError("fusion weights must be non-negative and sum to 1")
        if len(self.emotion_classes) < 2:
            raise ValidationError("need at least two emotion classes")

    @property
    def rules_path(self) -> Path:
        return Path(self.rules_dir) if self.rules_dir else ASSET_ROOT / "rules"

    @property
    def lexicons_path(self) -> Path:
        return Path(self.lexicons_dir) if self.lexicons_dir else ASSET_ROOT / "lexicons"

    @property
    def templates_path(self) -> Path:
        return Path(self.templates_dir) if self.templates_dir else ASSET_ROOT / "templates"

    @classmethod
    def from_file(cls, path: str | Path) -> "PlatformConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "PlatformConfig":
        kwargs = {}
        plain = {
            "port", "data_dir", "hotline", "stress_threshold", "token_ttl_seconds",
            "rules_dir", "lexicons_dir", "templates_dir",
        }
        for key, value in raw.items():
            if key in plain:
                kwargs[key] = value
            elif key == "topic_catalog":
                kwargs[key] = tuple(value)
            elif key == "emotion_classes":
                kwargs[key] = tuple(value)
            elif key == "fusion_weights":
                if isinstance(value, dict):
                    kwargs[key] = (float(value["text"]), float(value["audio"]))
                else:
                    kwargs[key] = (float(value[0]), float(value[1]))
            elif key == "program":
                kwargs["program_name"] = value.get("name", "quarantine-14")
                kwargs["program_length"] = int(value.get("length_days", 14))
            elif key == "activity_videos":
                kwargs[key] = dict(value)
            else:
                raise ValidationError(f"unknown config key: {key}")
        return cls(**kwargs)

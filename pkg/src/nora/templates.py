"""Localized bot response templates.

One TOML file per language maps prompt key -> variant -> rotation list.
The rotation index is derived from the session day so openings change from
day to day; the variant is either "neutral" or "empathetic".
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

VARIANTS = ("neutral", "empathetic")

PROMPT_KEYS = (
    "intro", "future_plans", "mood", "temperature", "temperature_retry",
    "breath_count", "breath_followup", "hotline", "gratitude",
    "activity_offer", "activity_start", "feedback", "end",
)


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    template_key: str  # "<prompt>.<variant>.<rotation-index>"
    variant: str


class TemplateLibrary:
    def __init__(self, tables: dict[str, dict[str, dict[str, list[str]]]]):
        self._tables = tables
        for language, table in tables.items():
            missing = [k for k in PROMPT_KEYS if k not in table]
            if missing:
                raise ValidationError(f"{language} templates missing prompts: {missing}")
            for key, variants in table.items():
                if "neutral" not in variants or not variants["neutral"]:
                    raise ValidationError(f"{language}/{key}: needs at least one neutral entry")

    @classmethod
    def load(cls, templates_dir: str | Path, languages: tuple[str, ...] = ("en", "zh")) -> "TemplateLibrary":
        tables = {}
        for language in languages:
            path = Path(templates_dir) / f"{language}.toml"
            with open(path, "rb") as fh:
                tables[language] = tomllib.load(fh)
        return cls(tables)

    def render(self, language: str, prompt: str, variant: str, day: int, **fmt) -> RenderedPrompt:
        try:
            table = self._tables[language][prompt]
        except KeyError:
            raise ValidationError(f"no template for {language}/{prompt}") from None
        choices = table.get(variant) or table["neutral"]
        variant_used = variant if table.get(variant) else "neutral"
        index = (day - 1) % len(choices)
        try:
            text = choices[index].format(**fmt)
        except (KeyError, IndexError) as exc:
            raise ValidationError(f"template {language}/{prompt} needs argument {exc}") from exc
        return RenderedPrompt(
            text=text,
            template_key=f"{prompt}.{variant_used}.{index}",
            variant=variant_used,
        )

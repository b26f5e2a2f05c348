from __future__ import annotations

import pytest

from nora import nlu
from nora.config import PlatformConfig
from nora.dialogue import DialogueEngine
from nora.empathy import EmpathyService
from nora.store import FileStore, MemoryStore
from nora.templates import TemplateLibrary


@pytest.fixture(scope="session")
def config() -> PlatformConfig:
    return PlatformConfig()


@pytest.fixture(scope="session")
def empathy_service(config) -> EmpathyService:
    return EmpathyService.from_config(config)


@pytest.fixture(scope="session")
def rulesets(config) -> dict[str, list[nlu.IntentRule]]:
    return {
        lang: nlu.load_language_ruleset(config.rules_path, lang) for lang in ("en", "zh")
    }


@pytest.fixture(scope="session")
def template_library(config) -> TemplateLibrary:
    return TemplateLibrary.load(config.templates_path)


@pytest.fixture(params=["memory", "file"])
def any_store(request, tmp_path):
    """Both store implementations behind the identical contract."""
    if request.param == "memory":
        store = MemoryStore()
    else:
        store = FileStore(tmp_path / "data")
    yield store
    store.close()


@pytest.fixture
def store():
    return MemoryStore()


def seed_profile(store, user: str, alias: str | None = None, language: str = "en",
                 length_days: int = 14, preferences: dict | None = None) -> None:
    store.put("users", user, {
        "user": user,
        "alias": alias or user,
        "language": language,
        "program": {"name": "quarantine-14", "length_days": length_days},
        "interests": [],
        "contacts": [],
        "activity_preferences": preferences or {"per_day": {}, "kinds": []},
    })
    store.put("aliases", alias or user, {"user": user})


@pytest.fixture
def engine(store, config, template_library) -> DialogueEngine:
    seed_profile(store, "alice", "ally")
    seed_profile(store, "zhang", "xiaozhang", language="zh")
    return DialogueEngine(store, config, template_library)

from __future__ import annotations

import json
import socket
import subprocess
import sys
import time
import urllib.request

import pytest

from nora.cli import main
from nora.config import PlatformConfig
from nora.errors import ValidationError


def test_score_outputs_all_three_scores(capsys):
    assert main(["score", "--text", "I feel overwhelmed and anxious today"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["sentiment"]["label"] in ("positive", "negative")
    assert payload["stress"] == pytest.approx(2 / 6)
    assert abs(sum(payload["emotion"].values()) - 1.0) < 1e-9


def test_score_zh(capsys):
    assert main(["score", "--text", "压力好大", "--lang", "zh"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["stress"] == pytest.approx(0.25)


def test_score_empty_text_is_validation_error(capsys):
    assert main(["score", "--text", "   "]) == 2
    assert "error" in capsys.readouterr().err


def test_simulate_small_run_reports_no_violations(capsys):
    assert main(["simulate", "--days", "2", "--users", "2", "--seed", "3"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["violations"] == 0
    assert report["program"]["sessions"] == 4
    names = {c["name"] for c in report["program"]["checks"]}
    assert "one_health_record_per_user_day" in names
    assert "no_identical_opening_on_consecutive_days" in names


def test_simulate_script_overrides_chat_settings(tmp_path, capsys):
    script = tmp_path / "script.json"
    script.write_text(json.dumps({
        "chat": {"users": 3, "topics": 2, "messages": 40, "drop_rate": 0.5},
    }))
    assert main(["simulate", "--days", "1", "--users", "1", "--script", str(script)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["chat"]["messages"] == 40
    assert report["chat"]["drop_rate"] == 0.5


def test_simulate_rejects_bad_args(capsys):
    assert main(["simulate", "--days", "0"]) == 2


# --------------------------------------------------------------------- config

def test_config_from_file_roundtrip(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({
        "port": 9001,
        "hotline": "+852-1234",
        "topic_catalog": ["movies", "chess"],
        "fusion_weights": {"text": 0.7, "audio": 0.3},
        "program": {"name": "hotel-21", "length_days": 21},
    }))
    config = PlatformConfig.from_file(path)
    assert config.port == 9001
    assert config.hotline == "+852-1234"
    assert config.topic_catalog == ("movies", "chess")
    assert config.fusion_weights == (0.7, 0.3)
    assert config.program_length == 21


def test_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"tsop": 1}))
    with pytest.raises(ValidationError):
        PlatformConfig.from_file(path)


def test_config_rejects_bad_weights():
    with pytest.raises(ValidationError):
        PlatformConfig(fusion_weights=(0.8, 0.8))


def test_config_rejects_malformed_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{ nope")
    with pytest.raises(ValidationError):
        PlatformConfig.from_file(path)


# ---------------------------------------------------------------------- serve

def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_serve_answers_health_check(tmp_path):
    port = _free_port()
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"port": port, "data_dir": str(tmp_path / "data")}))
    process = subprocess.Popen(
        [sys.executable, "-m", "nora.cli", "serve", "--config", str(config)],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
    )
    try:
        deadline = time.time() + 15
        last_error = None
        while time.time() < deadline:
            try:
                with urllib.request.urlopen(f"http://127.0.0.1:{port}/api/health", timeout=1) as resp:
                    assert json.loads(resp.read()) == {"status": "ok"}
                    break
            except Exception as exc:  # noqa: BLE001 - retry until the server is up
                last_error = exc
                time.sleep(0.25)
        else:
            pytest.fail(f"server never came up: {last_error}")
    finally:
        process.terminate()
        process.wait(timeout=10)

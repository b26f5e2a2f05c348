"""Speech adapter seam.

Real speech recognition/synthesis engines are out of scope; the shipped
adapter is a passthrough that treats the "audio blob" as base64-encoded
UTF-8 text, which keeps the audio input path of the gateway exercisable
end to end.
"""

from __future__ import annotations

import base64
import binascii
from typing import Protocol

from ..errors import ValidationError


class SpeechAdapter(Protocol):
    def transcribe(self, audio_blob: str, language: str) -> str: ...
    def synthesize(self, text: str, language: str) -> str: ...


class PassthroughSpeechAdapter:
    def transcribe(self, audio_blob: str, language: str) -> str:
        try:
            return base64.b64decode(audio_blob.encode("ascii"), validate=True).decode("utf-8")
        except (binascii.Error, UnicodeDecodeError, ValueError) as exc:
            raise ValidationError(f"audio blob is not base64 text: {exc}") from exc

    def synthesize(self, text: str, language: str) -> str:
        return base64.b64encode(text.encode("utf-8")).decode("ascii")

from .app import create_app
from .auth import TokenAuthority
from .speech import PassthroughSpeechAdapter, SpeechAdapter

__all__ = ["create_app", "TokenAuthority", "SpeechAdapter", "PassthroughSpeechAdapter"]
